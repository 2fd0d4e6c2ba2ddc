"""Query cases from a reference console session, as (label, target, column, spec, expected)."""
from csvm.ops import Combiner, QuerySpec

MATRIX = [["PDB", "3.24", "AB4"], ["- ", "1.0", "46"], ["PDB", "1.01", "4"]]
ROW0 = MATRIX[0]

AND, OR = Combiner.AND, Combiner.OR


def spec(terms, combiner=OR, strict=True, negate=False):
    if isinstance(terms, str):
        return QuerySpec.from_string(terms, " ", combiner=combiner, strict=strict, negate=negate)
    return QuerySpec(tuple(terms), combiner=combiner, strict=strict, negate=negate)


# (label, target, column or None, QuerySpec, expected indices)
QUERY_CASES = [
    ("col_eq strict", "col", 2, spec(["4"]), [2]),
    ("col_eq inc", "col", 2, spec(["4"], strict=False), [0, 1, 2]),
    ("col_eqs strict/and", "col", 0, spec("PDB -", AND), []),
    ("col_eqs strict/or", "col", 0, spec("PDB -", OR), [0, 2, 1]),
    ("col_eqs strict/and 4 46", "col", 2, spec("4 46", AND), []),
    ("col_eqsv strict/or", "col", 2, spec(["4", "46"], OR), [2, 1]),
    ("col_eqsv inc/or", "col", 2, spec(["4", "46"], OR, strict=False), [0, 1, 2]),
    ("col_not_eq strict", "col", 2, spec(["4"], negate=True), [0, 1]),
    ("col_not_eq inc", "col", 0, spec(["4"], strict=False, negate=True), [0, 1, 2]),
    ("col_not_eqs inc/or", "col", 0, spec("4 LIG", OR, strict=False, negate=True), [0, 1, 2]),
    ("col_not_eqs inc/and", "col", 2, spec("B 6", AND, strict=False, negate=True), [2]),
    ("row_eq strict", "row", None, spec(["4"]), []),
    ("row_eq inc", "row", None, spec(["4"], strict=False), [1, 2]),
    ("row_eqsv inc/or", "row", None, spec(["4", "PDB"], OR, strict=False), [1, 2, 0]),
    ("row_not_eq strict", "row", None, spec(["PDB"], negate=True), [1, 2]),
    ("row_not_eqs inc/and", "row", None, spec("B 4", AND, strict=False, negate=True), []),
    ("row_not_eqs inc/or", "row", None, spec("B 4", OR, strict=False, negate=True), [1, 0]),
    ("row_not_eqs inc/or LIG -", "row", None, spec("LIG -", OR, strict=False, negate=True),
     [0, 1, 2]),
]
