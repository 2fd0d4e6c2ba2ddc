"""Converters between CSVM and the formats found around it in practice."""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field

from .core import (
    DEFAULT_TYPE,
    DEFAULT_WIDTH,
    Document,
    Kind,
    ParseOptions,
    make_document,
    parse_document,
    serialize_document,
)
from .errors import (
    BlockLongerThanData,
    CountMismatch,
    CsvmWarning,
    ForeignKeyToUndeclaredTable,
    MalformedRow,
    MissingColumn,
    NonNumericCell,
    OddTokenCount,
)
from .ops import add_columns, get_column_indices


def format_number(value: float) -> str:
    """Shortest round-trip decimal text; integral values print without '.0'."""
    value = float(value)
    if math.isfinite(value) and value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _to_float(cell, where):
    try:
        return float(cell)
    except ValueError:
        raise NonNumericCell(f"{where}: {cell!r} is not a number") from None


# --- plain CSV -------------------------------------------------------------

def from_plain_csv(text, delimiter: str = "\t", empty_marker: str = "-") -> Document:
    """Ingest metadata-less CSV, synthesizing headers C0..Cn-1."""
    doc = parse_document(text, ParseOptions(delimiter=delimiter, empty_marker=empty_marker))
    if doc.kind is Kind.CSVM:
        return doc
    n = doc.column_count
    return make_document([f"C{i}" for i in range(n)], doc.data, source=doc.source)


def to_plain_csv(doc: Document, delimiter: str = "\t", empty_marker: str = "-") -> str:
    """Data block only; metadata and annotations are discarded."""
    bare = Document(kind=Kind.CSV, data=doc.data)
    return serialize_document(bare, ParseOptions(delimiter=delimiter, empty_marker=empty_marker))


# --- spectrophotometer X/Y pairs ------------------------------------------

def from_xy_pairs(text: str, source: str = "") -> Document:
    """Flatten ``X Y X Y ...`` rows into a two-column (X, Y) document.

    Pairs are read row-major, left to right.  Header, dashed separator and
    ``...`` elision lines are skipped.
    """
    tokens = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if all(p in ("X", "Y") for p in parts):
            continue
        if set(line.strip()) <= {"-"} or line.strip() == "...":
            continue
        tokens.extend(parts)
    if len(tokens) % 2:
        raise OddTokenCount(f"{len(tokens)} numeric tokens cannot form (x, y) pairs")
    rows = [(tokens[i], tokens[i + 1]) for i in range(0, len(tokens), 2)]
    xs = [_to_float(x, f"pair {i}") for i, (x, _) in enumerate(rows)]
    for i, (_, y) in enumerate(rows):
        _to_float(y, f"pair {i}")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        warnings.warn("NonMonotoneX: x values are not strictly increasing", CsvmWarning,
                      stacklevel=2)
    return make_document(("X", "Y"), rows, col_types=("NUMERIC", "NUMERIC"), source=source)


# --- two-column solver files ----------------------------------------------

def _dotted(key, value):
    return f"# {key} {'.' * max(1, 9 - len(key))} {value}"


def to_solver_two_column(series: Document, header_x: str | None = None,
                         header_y: str | None = None, source_label: str = "") -> str:
    if series.column_count != 2:
        raise ValueError(f"solver files hold exactly two columns, got {series.column_count}")
    hx = header_x if header_x is not None else (series.headers[0] if series.headers else "X")
    hy = header_y if header_y is not None else (series.headers[1] if series.headers else "Y")
    lines = [str(series.data_r)]
    for r, (x, y) in enumerate(series.data):
        xs = format_number(_to_float(x, f"row {r} x"))
        ys = format_number(_to_float(y, f"row {r} y"))
        lines.append(f"{xs:<9} {ys}")
    lines.append("")
    lines.append(_dotted("LPZ file", source_label))
    lines.append(_dotted("Npts", series.data_r))
    lines.append(_dotted("Colx no", 0))
    lines.append(_dotted("Header x", hx))
    lines.append(_dotted("Coly no", 1))
    lines.append(_dotted("Header y", hy))
    return "\n".join(lines) + "\n"


_TRAILER = re.compile(r"^#\s*(.*?)\s+\.+(?:\s(.*))?$")


def parse_solver_two_column(text: str):
    """Inverse of :func:`to_solver_two_column`.

    Returns ``(document, trailer)`` where trailer is a list of (key, value).
    """
    lines = text.splitlines()
    pos = 0
    while pos < len(lines) and not lines[pos].strip():
        pos += 1
    if pos == len(lines):
        raise CountMismatch("missing point-count line")
    try:
        declared = int(lines[pos].strip())
    except ValueError:
        raise CountMismatch(f"first line {lines[pos]!r} is not a point count") from None
    rows = []
    trailer = []
    for line in lines[pos + 1:]:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = _TRAILER.match(stripped)
            if m:
                trailer.append((m.group(1), m.group(2) or ""))
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise MalformedRow(f"expected two values, got {len(parts)}: {line!r}")
        rows.append(tuple(parts))
    if len(rows) != declared:
        raise CountMismatch(f"declared {declared} points, found {len(rows)}")
    keys = dict(trailer)
    doc = make_document((keys.get("Header x", "X"), keys.get("Header y", "Y")), rows,
                        col_types=("NUMERIC", "NUMERIC"), title=keys.get("LPZ file", ""))
    return doc, trailer


# --- JavaScript tables ----------------------------------------------------

def _js_string(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _js_array(values) -> str:
    return "new Array (" + ", ".join(_js_string(v) for v in values) + ")"


def to_javascript_table(doc: Document, flags=None, getf=None) -> str:
    """Emit a JavaScript data file declaring the table as string arrays."""
    flags = list(doc.headers) if flags is None else list(flags)
    getf = list(flags) if getf is None else list(getf)
    out = [
        f"var flags_array = {_js_array(flags)};",
        f"var flags_n={len(flags)};",
        f"var getf_array = {_js_array(getf)};",
        f"var getf_n={len(getf)};",
        f"var data_c={doc.column_count};",
        "",
        "var data_array = new Array();",
        "var data_r=0;",
    ]
    for row in doc.data:
        out.append(f"data_array[data_r++] = {_js_array(row)};")
    return "\n".join(out) + "\n"


# --- KEY/VALUE blocks -----------------------------------------------------

@dataclass(frozen=True)
class KeyValueBlock:
    entries: tuple = ()
    terminated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((k, v) for k, v in self.entries))

    def get(self, key, default=None):
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def get_all(self, key) -> list[str]:
        return [v for k, v in self.entries if k == key]


def extract_kv_block(doc: Document, key_header: str = "KEY", value_header: str = "VALUE",
                     empty_marker: str = "-") -> KeyValueBlock:
    """Read (key, value) pairs from the top of the KEY/VALUE columns.

    Reading stops at ``END`` (terminated) or at the first empty key.
    """
    kidx = get_column_indices(doc, key_header)
    vidx = get_column_indices(doc, value_header)
    if not kidx or not vidx:
        missing = key_header if not kidx else value_header
        raise MissingColumn(f"column {missing!r} not found")
    k, v = kidx[0], vidx[0]
    entries = []
    for row in doc.data:
        key = row[k]
        if key == "END":
            return KeyValueBlock(entries, True)
        if key in ("", empty_marker):
            break
        entries.append((key, row[v]))
    return KeyValueBlock(entries, False)


def append_kv_columns(doc: Document, block: KeyValueBlock, key_header: str = "KEY",
                      value_header: str = "VALUE", empty_marker: str = "-",
                      types=(DEFAULT_TYPE, "NUMERIC"), widths=(DEFAULT_WIDTH, DEFAULT_WIDTH)
                      ) -> Document:
    cells = list(block.entries)
    if block.terminated:
        cells.append(("END", empty_marker))
    if len(cells) > doc.data_r:
        raise BlockLongerThanData(f"block needs {len(cells)} rows, document has {doc.data_r}")
    cells += [(empty_marker, empty_marker)] * (doc.data_r - len(cells))
    widened = add_columns(doc, [key_header, value_header], list(types), list(widths),
                          empty_marker)
    rows = [row[:-2] + kv for row, kv in zip(widened.data, cells)]
    return widened.replace(data=rows)


# --- database schema tables ------------------------------------------------

@dataclass(frozen=True)
class DbInfo:
    host: str
    user: str
    password: str
    name: str


@dataclass(frozen=True)
class TableDef:
    name: str
    path: str
    key_index: int


@dataclass(frozen=True)
class ForeignKey:
    from_table: str
    from_col: int
    to_table: str
    to_col: int


@dataclass
class SchemaModel:
    db: DbInfo | None = None
    tables: list = field(default_factory=list)
    foreign_keys: list = field(default_factory=list)

    def table(self, name):
        return next((t for t in self.tables if t.name == name), None)


def _index(cell, r):
    try:
        value = int(cell)
    except ValueError:
        raise MalformedRow(f"row {r}: column index {cell!r} is not an integer") from None
    if value < 0:
        raise MalformedRow(f"row {r}: negative column index {value}")
    return value


def parse_db_schema(doc: Document) -> SchemaModel:
    """Read DB / TABLE / FOREIGN rows into a SchemaModel (order-independent)."""
    schema = SchemaModel()
    for r, row in enumerate(doc.data):
        keyword = row[0]
        need = {"DB": 5, "TABLE": 4, "FOREIGN": 5}.get(keyword)
        if need is None:
            warnings.warn(f"row {r}: unknown schema keyword {keyword!r} ignored",
                          CsvmWarning, stacklevel=2)
            continue
        if len(row) < need:
            raise MalformedRow(f"row {r}: {keyword} needs {need} cells, got {len(row)}")
        if keyword == "DB":
            schema.db = DbInfo(*row[1:5])
        elif keyword == "TABLE":
            schema.tables.append(TableDef(row[1], row[2], _index(row[3], r)))
        else:
            schema.foreign_keys.append(
                ForeignKey(row[1], _index(row[2], r), row[3], _index(row[4], r)))
    declared = {t.name for t in schema.tables}
    for fk in schema.foreign_keys:
        for name in (fk.from_table, fk.to_table):
            if name not in declared:
                raise ForeignKeyToUndeclaredTable(f"foreign key references {name!r}")
    return schema


# --- multi-valued cells ----------------------------------------------------

def split_multivalue_cell(cell: str, secondary_delimiter: str,
                          empty_marker: str = "-") -> list[str]:
    if not secondary_delimiter:
        raise ValueError("secondary delimiter must be non-empty")
    if cell in ("", empty_marker):
        return []
    return [part for part in cell.split(secondary_delimiter) if part != ""]
