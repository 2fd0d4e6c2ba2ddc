"""CSVM documents: data model, parser, serializer and diagnostic dump.

A CSVM file is a delimiter-separated data block plus ``#KEYWORD`` rows
carrying the table title, column names, column types, column widths and a
free meta string.  The parser never interprets cells: every value comes back
as the string found between two delimiters.
"""
from __future__ import annotations

import dataclasses
import enum
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CsvmWarning, InvariantViolation, MalformedRow, ParseError

KEYWORDS = ("TITLE", "HEADER", "TYPE", "WIDTH", "META")
DEFAULT_TYPE = "TEXT"
DEFAULT_WIDTH = 50

_DIGITS = re.compile(r"[0-9]+")


class Kind(str, enum.Enum):
    CSV = "CSV"
    CSVM = "CSVM"


class ShortRowPolicy(str, enum.Enum):
    PAD_WITH_EMPTY_MARKER = "pad"
    ERROR = "error"


@dataclass(frozen=True)
class ParseOptions:
    delimiter: str = "\t"
    empty_marker: str = "-"
    keep_annotations: bool = False
    short_row_policy: ShortRowPolicy = ShortRowPolicy.PAD_WITH_EMPTY_MARKER

    def __post_init__(self):
        d = self.delimiter
        if len(d) != 1:
            raise ValueError(f"delimiter must be a single character, got {d!r}")
        if d == "#" or d in "\r\n":
            raise ValueError(f"illegal delimiter {d!r}")
        if not self.empty_marker or d in self.empty_marker:
            raise ValueError("empty_marker must be non-empty and free of the delimiter")
        if any(c in self.empty_marker for c in "\r\n") or self.empty_marker.startswith("#"):
            raise ValueError(f"illegal empty_marker {self.empty_marker!r}")
        object.__setattr__(self, "short_row_policy", ShortRowPolicy(self.short_row_policy))


def _tuple(values):
    return tuple(values) if values is not None else ()


@dataclass(frozen=True)
class Document:
    """In-memory CSVM table.

    ``data`` is a tuple of rows, each a tuple of cell strings.  ``annotations``
    holds retained comment rows as ``(position, text)`` where position is the
    number of data rows preceding the comment.  ``width_errors`` lists
    ``(index, token)`` for #WIDTH tokens that were not integers.

    ``source`` is a provenance label and does not take part in equality.
    """

    source: str = field(default="", compare=False)
    kind: Kind = Kind.CSV
    title: str = ""
    headers: tuple = ()
    col_types: tuple = ()
    widths: tuple = ()
    meta: str = ""
    data: tuple = ()
    annotations: tuple = ()
    width_errors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        for name in ("headers", "col_types", "widths", "width_errors"):
            object.__setattr__(self, name, _tuple(getattr(self, name)))
        object.__setattr__(self, "data", tuple(tuple(row) for row in self.data))
        object.__setattr__(
            self, "annotations", tuple((int(p), t) for p, t in self.annotations)
        )

    # Counts mirror the classic csvm_ptr fields; they are derived, never stored.
    @property
    def column_count(self) -> int:
        if self.headers:
            return len(self.headers)
        return max((len(r) for r in self.data), default=0)

    @property
    def title_n(self) -> int:
        return 1 if self.kind is Kind.CSVM else 0

    @property
    def header_n(self) -> int:
        return len(self.headers)

    @property
    def type_n(self) -> int:
        return len(self.col_types)

    @property
    def width_n(self) -> int:
        return len(self.widths)

    @property
    def data_r(self) -> int:
        return len(self.data)

    @property
    def data_c(self) -> int:
        return self.column_count

    def column(self, index: int) -> list[str]:
        return [row[index] for row in self.data]

    def replace(self, **changes) -> "Document":
        return dataclasses.replace(self, **changes)


def make_document(headers, rows=(), col_types=None, widths=None, title="", meta="",
                  source="") -> Document:
    """Build a CSVM-kind document, defaulting types to TEXT and widths to 50."""
    headers = tuple(headers)
    n = len(headers)
    col_types = tuple(col_types) if col_types is not None else (DEFAULT_TYPE,) * n
    widths = tuple(int(w) for w in widths) if widths is not None else (DEFAULT_WIDTH,) * n
    return Document(source=source, kind=Kind.CSVM, title=title, headers=headers,
                    col_types=col_types, widths=widths, meta=meta, data=rows)


def _match_keyword(line: str, delimiter: str):
    for kw in KEYWORDS:
        tag = "#" + kw
        if line == tag:
            return kw, ""
        if line.startswith(tag + delimiter):
            return kw, line[len(tag) + 1:]
    return None, None


def _fit_length(values, n, default, what):
    values = list(values)
    if len(values) > n:
        warnings.warn(f"#{what} has {len(values)} entries for {n} columns; truncated",
                      CsvmWarning, stacklevel=3)
        return values[:n]
    return values + [default] * (n - len(values))


def parse_document(text, options: ParseOptions | None = None, source: str = "") -> Document:
    """Parse CSVM (or plain delimiter-separated) text into a Document."""
    opts = options or ParseOptions()
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc}") from None
    delim = opts.delimiter
    marker = opts.empty_marker

    meta_rows: dict[str, str] = {}
    rows: list[tuple[int, list[str]]] = []
    annotations: list[tuple[int, str]] = []

    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if not line:
            continue
        if line.startswith("#"):
            kw, rest = _match_keyword(line, delim)
            if kw is not None:
                if kw in meta_rows:
                    warnings.warn(f"line {lineno}: duplicate #{kw} row, last one wins",
                                  CsvmWarning, stacklevel=2)
                meta_rows[kw] = rest
            elif opts.keep_annotations:
                annotations.append((len(rows), line))
            continue
        rows.append((lineno, line.split(delim)))

    if not meta_rows:
        n = max((len(cells) for _, cells in rows), default=0)
        return Document(source=source, kind=Kind.CSV,
                        data=_shape_rows(rows, n, marker, opts, header_defined=False),
                        annotations=annotations)

    def split_list(kw):
        rest = meta_rows.get(kw)
        if rest is None or rest == "":
            return []
        return rest.split(delim)

    headers = split_list("HEADER")
    types = split_list("TYPE")
    width_tokens = split_list("WIDTH")
    header_defined = "HEADER" in meta_rows
    if header_defined:
        n = len(headers)
    elif rows:
        n = max(len(cells) for _, cells in rows)
    else:
        n = max(len(types), len(width_tokens))
    if not header_defined:
        headers = [marker] * n

    types = _fit_length(types, n, DEFAULT_TYPE, "TYPE")
    width_tokens = _fit_length(width_tokens, n, str(DEFAULT_WIDTH), "WIDTH")
    widths = []
    width_errors = []
    for i, tok in enumerate(width_tokens):
        if _DIGITS.fullmatch(tok):
            widths.append(int(tok))
        else:
            width_errors.append((i, tok))
            widths.append(DEFAULT_WIDTH)

    return Document(
        source=source,
        kind=Kind.CSVM,
        title=meta_rows.get("TITLE", ""),
        headers=headers,
        col_types=types,
        widths=widths,
        meta=meta_rows.get("META", ""),
        data=_shape_rows(rows, n, marker, opts, header_defined),
        annotations=annotations,
        width_errors=width_errors,
    )


def _shape_rows(rows, n, marker, opts, header_defined):
    shaped = []
    for lineno, cells in rows:
        if len(cells) > n:
            raise MalformedRow(f"{len(cells)} cells but the header defines {n} columns",
                               line=lineno)
        if len(cells) < n:
            if opts.short_row_policy is ShortRowPolicy.ERROR:
                raise MalformedRow(f"{len(cells)} cells, expected {n}", line=lineno)
            cells = cells + [marker] * (n - len(cells))
        shaped.append(tuple(cells))
    return shaped


def validate_document(doc: Document, delimiter: str | None = None) -> list[str]:
    """Return a description of every invariant the document breaks."""
    problems = []

    def bad_text(value):
        if "\n" in value or "\r" in value:
            return "line break"
        if delimiter is not None and delimiter in value:
            return "delimiter"
        return None

    if doc.kind is Kind.CSV:
        for name in ("title", "meta", "headers", "col_types", "widths"):
            if getattr(doc, name):
                problems.append(f"kind CSV: {name} must be empty")
        n = doc.column_count
    else:
        n = len(doc.headers)
        lengths = (len(doc.headers), len(doc.col_types), len(doc.widths))
        if len(set(lengths)) != 1:
            problems.append("metadata length mismatch: headers=%d types=%d widths=%d" % lengths)
        for name in ("title", "meta"):
            if "\n" in getattr(doc, name) or "\r" in getattr(doc, name):
                problems.append(f"{name} contains a line break")
        for name in ("headers", "col_types"):
            for i, value in enumerate(getattr(doc, name)):
                if not isinstance(value, str):
                    problems.append(f"{name}[{i}] is not text")
                elif bad_text(value):
                    problems.append(f"{name}[{i}] contains a {bad_text(value)}")
        for i, w in enumerate(doc.widths):
            if not isinstance(w, int) or isinstance(w, bool) or w < 0:
                problems.append(f"widths[{i}] is not a non-negative integer: {w!r}")
    for i, tok in doc.width_errors:
        problems.append(f"widths[{i}]: unparsable #WIDTH token {tok!r}")

    for r, row in enumerate(doc.data):
        if len(row) != n:
            problems.append(f"row {r}: {len(row)} cells, expected {n}")
        if not row:
            problems.append(f"row {r}: empty row")
            continue
        for c, cell in enumerate(row):
            if not isinstance(cell, str):
                problems.append(f"row {r} col {c}: cell is not text")
            elif bad_text(cell):
                problems.append(f"row {r} col {c}: cell contains a {bad_text(cell)}")
        if isinstance(row[0], str) and row[0].startswith("#"):
            problems.append(f"row {r}: first cell starts with '#'")

    for p, text in doc.annotations:
        if not 0 <= p <= len(doc.data):
            problems.append(f"annotation at position {p} outside 0..{len(doc.data)}")
        if not text.startswith("#") or "\n" in text or "\r" in text:
            problems.append(f"annotation {text!r} is not a single '#' line")
        elif delimiter is not None and _match_keyword(text, delimiter)[0]:
            problems.append(f"annotation {text!r} collides with a metadata keyword")
    return problems


def serialize_document(doc: Document, options: ParseOptions | None = None) -> str:
    """Render a Document as CSVM text (data block, then metadata block)."""
    opts = options or ParseOptions()
    problems = validate_document(doc, opts.delimiter)
    if problems:
        raise InvariantViolation(problems)
    d, marker = opts.delimiter, opts.empty_marker

    def join(values):
        return d.join(v if v != "" else marker for v in values)

    lines = []
    notes = sorted(doc.annotations, key=lambda a: a[0])
    k = 0
    for i, row in enumerate(doc.data):
        while k < len(notes) and notes[k][0] <= i:
            lines.append(notes[k][1])
            k += 1
        lines.append(join(row))
    lines.extend(text for _, text in notes[k:])

    if doc.kind is Kind.CSVM:
        lines.append(f"#TITLE{d}{doc.title}")
        lines.append(f"#HEADER{d}{join(doc.headers)}")
        lines.append(f"#TYPE{d}{join(doc.col_types)}")
        lines.append(f"#WIDTH{d}{d.join(str(w) for w in doc.widths)}")
        lines.append(f"#META{d}{doc.meta}")
    return "".join(line + "\n" for line in lines)


def _labelled(key, value):
    return f"{key} {value}" if value != "" else key


def dump_document(doc: Document) -> str:
    """Human-readable listing in the classic ``csvm_ptr_dump`` layout."""
    out = [
        "DUMP: CSVM info {",
        _labelled("SOURCE", doc.source),
        f"CSV {doc.kind.value}",
        f"META [{doc.meta}]",
        f"TITLE_N {doc.title_n}",
        _labelled("TITLE", doc.title),
        f"HEADER_N {doc.header_n}",
        f"TYPE_N {doc.type_n}",
        f"WIDTH_N {doc.width_n}",
    ]
    for i, header in enumerate(doc.headers):
        width = doc.widths[i] if i < len(doc.widths) else DEFAULT_WIDTH
        ctype = doc.col_types[i] if i < len(doc.col_types) else DEFAULT_TYPE
        out.append(f"{i} {width} {ctype} {{{header}}}")
    out.append(f"DATA_R {doc.data_r}")
    out.append(f"DATA_C {doc.data_c}")
    out.append(f"{doc.data_r} {doc.data_c}")
    for i, row in enumerate(doc.data):
        out.append(f"{i} " + "".join(f"[{cell}]" for cell in row))
    out.append("}")
    out.append("done")
    return "\n".join(out) + "\n"


def clear_document(doc: Document | None = None) -> Document:
    return Document()


def read_document(path, options: ParseOptions | None = None) -> Document:
    raw = Path(path).read_bytes()
    return parse_document(raw, options, source=str(path))


def write_document(path, doc: Document, options: ParseOptions | None = None) -> None:
    Path(path).write_text(serialize_document(doc, options), encoding="utf-8", newline="")
