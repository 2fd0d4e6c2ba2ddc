"""Table algebra and queries over Documents.

Everything here is a pure function: inputs are never mutated and a new
Document is returned.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

from .core import DEFAULT_TYPE, DEFAULT_WIDTH, Document, Kind
from .errors import (
    AmbiguousColumn,
    CsvmWarning,
    DuplicateHeaderWithinOneInput,
    IndexOutOfRange,
    LengthMismatch,
    MissingColumn,
)


class Combiner(str, enum.Enum):
    AND = "and"
    OR = "or"


@dataclass(frozen=True)
class QuerySpec:
    terms: tuple
    combiner: Combiner = Combiner.OR
    strict: bool = True
    negate: bool = False

    def __post_init__(self):
        terms = (self.terms,) if isinstance(self.terms, str) else tuple(self.terms)
        if not terms:
            raise ValueError("a query needs at least one term")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "combiner", Combiner(self.combiner))

    @classmethod
    def from_string(cls, terms: str, separator: str = " ", **kw) -> "QuerySpec":
        """Split a packed term string the way the classic ``*_eqs`` helpers do."""
        return cls(tuple(t for t in terms.split(separator) if t), **kw)


def _term_hits(cells, term, strict, negate):
    hits = []
    for i, cell in enumerate(cells):
        # strict compares the whole cell, ignoring surrounding blanks
        ok = cell.strip() == term if strict else term in cell
        if ok != negate:
            hits.append(i)
    return hits


def _combine(cells, spec: QuerySpec):
    per_term = [_term_hits(cells, t, spec.strict, spec.negate) for t in spec.terms]
    if spec.combiner is Combiner.AND:
        common = set(per_term[0]).intersection(*per_term[1:])
        return sorted(common)
    seen, out = set(), []
    for hits in per_term:
        for i in hits:
            if i not in seen:
                seen.add(i)
                out.append(i)
    return out


def query_columns(data, spec: QuerySpec, col: int) -> list[int]:
    """Row indices whose cell in column ``col`` matches ``spec``.

    OR results are term-major: hits for the first term (ascending), then new
    hits for the second term, and so on.  AND results are ascending.
    """
    cells = []
    for r, row in enumerate(data):
        if not 0 <= col < len(row):
            raise IndexOutOfRange(f"column {col} out of range for row {r} of width {len(row)}")
        cells.append(row[col])
    return _combine(cells, spec)


def query_row(row, spec: QuerySpec) -> list[int]:
    """Column indices of ``row`` matching ``spec`` (same rules as query_columns)."""
    return _combine(list(row), spec)


def get_column_indices(doc: Document, name: str) -> list[int]:
    return [i for i, h in enumerate(doc.headers) if h == name]


def get_column(doc: Document, pattern: str, strict: bool = True):
    """Return ``(match_count, cells of the first matching column)``."""
    if strict:
        matches = [i for i, h in enumerate(doc.headers) if h == pattern]
    else:
        matches = [i for i, h in enumerate(doc.headers) if pattern in h]
    if not matches:
        return 0, []
    return len(matches), doc.column(matches[0])


def add_columns(doc: Document, names, types, widths, fill: str = "") -> Document:
    names, types, widths = list(names), list(types), list(widths)
    if not len(names) == len(types) == len(widths):
        raise LengthMismatch(
            f"names/types/widths lengths differ: {len(names)}/{len(types)}/{len(widths)}")
    if not names:
        return doc
    base = doc
    if doc.kind is Kind.CSV:
        n = doc.column_count
        base = doc.replace(kind=Kind.CSVM, headers=("",) * n,
                           col_types=(DEFAULT_TYPE,) * n, widths=(DEFAULT_WIDTH,) * n)
    return base.replace(
        headers=base.headers + tuple(names),
        col_types=base.col_types + tuple(types),
        widths=base.widths + tuple(int(w) for w in widths),
        data=[row + (fill,) * len(names) for row in base.data],
    )


def rename_column(doc: Document, index: int, new_name: str) -> Document:
    if not 0 <= index < len(doc.headers):
        raise IndexOutOfRange(f"column {index} out of range (have {len(doc.headers)} headers)")
    headers = list(doc.headers)
    headers[index] = new_name
    return doc.replace(headers=headers)


def _columns(doc: Document):
    """(name, type, width) per column; CSV-kind columns are unnamed."""
    if doc.kind is Kind.CSV:
        return [("", DEFAULT_TYPE, DEFAULT_WIDTH)] * doc.column_count
    return list(zip(doc.headers, doc.col_types, doc.widths))


def _is_pending(name, empty_marker):
    return name == "" or name == empty_marker


def _name_index(doc: Document, empty_marker: str, which: str) -> dict[str, int]:
    index = {}
    for i, (name, _, _) in enumerate(_columns(doc)):
        if _is_pending(name, empty_marker):
            continue
        if name in index:
            raise DuplicateHeaderWithinOneInput(
                f"header {name!r} appears more than once in {which} input")
        index[name] = i
    return index


def _project(doc, mapping, width, empty_marker):
    rows = []
    for row in doc.data:
        out = [empty_marker] * width
        for src, dst in mapping:
            out[dst] = row[src]
        rows.append(tuple(out))
    return rows


def union(a: Document, b: Document, empty_marker: str = "-") -> Document:
    """All rows of ``a`` then all rows of ``b`` over the union of their columns.

    Columns are matched by exact header name; pending (empty-marker) headers
    never match.  Absent cells become ``empty_marker``.
    """
    a_names = _name_index(a, empty_marker, "first")
    _name_index(b, empty_marker, "second")
    cols = _columns(a)
    a_map = [(i, i) for i in range(len(cols))]
    b_map = []
    for j, (name, ctype, width) in enumerate(_columns(b)):
        if not _is_pending(name, empty_marker) and name in a_names:
            dst = a_names[name]
            if (ctype, width) != cols[dst][1:]:
                warnings.warn(f"column {name!r}: type/width differ between inputs, "
                              f"keeping {cols[dst][1:]}", CsvmWarning, stacklevel=2)
            b_map.append((j, dst))
        else:
            b_map.append((j, len(cols)))
            cols.append((name, ctype, width))
    rows = _project(a, a_map, len(cols), empty_marker) + \
        _project(b, b_map, len(cols), empty_marker)
    return Document(
        kind=Kind.CSVM,
        title=a.title,
        meta=a.meta,
        headers=[c[0] for c in cols],
        col_types=[c[1] for c in cols],
        widths=[c[2] for c in cols],
        data=rows,
    )


def intersect(a: Document, b: Document, empty_marker: str = "-") -> Document | None:
    """Rows of both inputs projected onto their shared columns, or None."""
    _name_index(a, empty_marker, "first")
    b_names = _name_index(b, empty_marker, "second")
    a_cols = _columns(a)
    shared = [i for i, (name, _, _) in enumerate(a_cols)
              if not _is_pending(name, empty_marker) and name in b_names]
    if not shared:
        return None
    a_map = [(src, dst) for dst, src in enumerate(shared)]
    b_map = [(b_names[a_cols[src][0]], dst) for dst, src in enumerate(shared)]
    rows = _project(a, a_map, len(shared), empty_marker) + \
        _project(b, b_map, len(shared), empty_marker)
    return Document(
        kind=Kind.CSVM,
        title=a.title,
        meta=a.meta,
        headers=[a_cols[i][0] for i in shared],
        col_types=[a_cols[i][1] for i in shared],
        widths=[a_cols[i][2] for i in shared],
        data=rows,
    )


def _require_column(doc, name, which):
    idx = get_column_indices(doc, name)
    if not idx:
        raise MissingColumn(f"column {name!r} not found in {which}")
    return idx[0]


def lookup_fill(target: Document, source: Document, key_header: str, value_header: str,
                dest_header: str):
    """Copy ``value_header`` cells from ``source`` into ``target[dest_header]``.

    Rows are joined on ``key_header``; the first source row with a given key
    wins.  Returns ``(document, added_count, not_found_keys)``.
    """
    t_key = _require_column(target, key_header, "target")
    t_dest = _require_column(target, dest_header, "target")
    s_key = _require_column(source, key_header, "source")
    s_val = _require_column(source, value_header, "source")

    first_hit: dict[str, int] = {}
    duplicates = set()
    for r, row in enumerate(source.data):
        key = row[s_key]
        if key in first_hit:
            duplicates.add(key)
        else:
            first_hit[key] = r
    if duplicates:
        warnings.warn(f"DuplicateKey: {len(duplicates)} keys repeat in the source "
                      f"{key_header!r} column; first occurrence used", CsvmWarning,
                      stacklevel=2)

    added = 0
    not_found = []
    rows = []
    for row in target.data:
        key = row[t_key]
        hit = first_hit.get(key)
        if hit is None:
            not_found.append(key)
            rows.append(row)
            continue
        new = list(row)
        new[t_dest] = source.data[hit][s_val]
        rows.append(tuple(new))
        added += 1
    return target.replace(data=rows), added, not_found


def split_series(doc: Document, time_header: str, empty_marker: str = "-") -> list[Document]:
    """One ``[time, series]`` document per non-time column.

    Rows whose series cell is the empty marker are dropped from that series.
    """
    idx = get_column_indices(doc, time_header)
    if not idx:
        raise MissingColumn(f"time column {time_header!r} not found")
    if len(idx) > 1:
        raise AmbiguousColumn(f"time column {time_header!r} appears {len(idx)} times")
    t = idx[0]
    others = [i for i in range(len(doc.headers)) if i != t]
    if not others:
        raise MissingColumn("no series column besides the time column")
    out = []
    for i in others:
        rows = [(row[t], row[i]) for row in doc.data if row[i] != empty_marker]
        out.append(Document(
            source=doc.source,
            kind=Kind.CSVM,
            title=doc.title,
            headers=(doc.headers[t], doc.headers[i]),
            col_types=(doc.col_types[t], doc.col_types[i]),
            widths=(doc.widths[t], doc.widths[i]),
            meta=doc.meta,
            data=rows,
        ))
    return out
