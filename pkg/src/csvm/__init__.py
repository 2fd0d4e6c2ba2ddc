"""CSVM: delimiter-separated tables with a trailing metadata block."""
from .core import (
    Document,
    Kind,
    ParseOptions,
    ShortRowPolicy,
    dump_document,
    make_document,
    parse_document,
    read_document,
    serialize_document,
    validate_document,
    write_document,
)
from .errors import CsvmError, CsvmWarning
from .ops import Combiner, QuerySpec, intersect, lookup_fill, query_columns, query_row, union

__version__ = "0.1.0"

__all__ = [
    "Combiner", "CsvmError", "CsvmWarning", "Document", "Kind", "ParseOptions", "QuerySpec",
    "ShortRowPolicy", "dump_document", "intersect", "lookup_fill", "make_document",
    "parse_document", "query_columns", "query_row", "read_document", "serialize_document",
    "union", "validate_document", "write_document",
]
