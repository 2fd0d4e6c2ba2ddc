import numpy as np
import pytest

from csvm.cli import EXIT_EMPTY, EXIT_OK, EXIT_USAGE, main, parse_delimiter
from csvm.convert import extract_kv_block, format_number
from csvm.core import make_document, parse_document, serialize_document, write_document
from csvm.kinetics import eval_progress

from conftest import FIXTURES
from synthetic import TRUE


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def fx(name):
    return FIXTURES / name


def test_parse_delimiter_names():
    assert parse_delimiter("tab") == "\t"
    assert parse_delimiter("comma") == ","
    assert parse_delimiter(";") == ";"


# --- dump / convert --------------------------------------------------------------

def test_dump_annotated(capsys):
    code, out, _ = run(capsys, "dump", fx("annotated_records.csvm"))
    assert code == EXIT_OK
    assert "DATA_R 79" in out


def test_dump_empty_file(capsys, tmp_path):
    empty = tmp_path / "empty.csvm"
    empty.write_text("")
    code, out, _ = run(capsys, "dump", empty)
    assert code == EXIT_OK
    assert "DATA_R 0" in out


def test_dump_missing_file(capsys, tmp_path):
    code, out, err = run(capsys, "dump", tmp_path / "absent.csvm")
    assert code == EXIT_USAGE
    assert out == ""
    assert err.startswith("csvm dump:")


def test_dump_non_utf8(capsys, tmp_path):
    bad = tmp_path / "bad.csvm"
    bad.write_bytes(b"\xff\xfe")
    assert run(capsys, "dump", bad)[0] == EXIT_USAGE


def test_convert_xy(capsys):
    code, out, _ = run(capsys, "convert", fx("spectro_xy.txt"), "--from", "xy")
    assert code == EXIT_OK
    doc = parse_document(out)
    assert doc.headers == ("X", "Y")
    assert doc.data[0] == ("0.000", "0.1112")


def test_convert_identity_is_byte_stable(capsys, tmp_path):
    path = tmp_path / "canon.csvm"
    write_document(path, parse_document(fx("fit_result.csvm").read_text()))
    code, out, _ = run(capsys, "convert", path)
    assert code == EXIT_OK
    assert out == path.read_text()


def test_convert_identity_keeps_annotations(capsys):
    path = fx("enzyme_model.csvm")
    _, out, _ = run(capsys, "convert", path, "--keep-annotations")
    assert "# Theoric KM of 10.10-3 M" in out
    assert parse_document(out) == parse_document(path.read_text())


def test_convert_unsupported_pair(capsys):
    with pytest.raises(SystemExit) as info:
        main(["convert", str(fx("test1.csvm")), "--to", "xy"])
    assert info.value.code == EXIT_USAGE


def test_convert_solver_needs_two_columns(capsys):
    code, _, err = run(capsys, "convert", fx("db_schema.csvm"), "--to", "solver")
    assert code == EXIT_USAGE
    assert "split" in err


def test_convert_solver_golden(capsys):
    code, out, _ = run(capsys, "convert", fx("solver_input.csvm"), "--to", "solver",
                       "--label", "lpz\\0234-1.lpz")
    assert code == EXIT_OK
    assert out == fx("golden_solver.txt").read_text()


def test_convert_js_to_file(capsys, tmp_path):
    dest = tmp_path / "out.js"
    code, out, _ = run(capsys, "convert", fx("js_input.csvm"), "--to", "js", "-o", dest)
    assert code == EXIT_OK
    assert out == ""
    assert dest.read_text() == fx("golden_js.txt").read_text()


# --- query -----------------------------------------------------------------------

def test_query_or_ordering(capsys):
    code, out, _ = run(capsys, "query", fx("query_matrix.tsv"), "--col", 0, "--terms", "PDB",
                       "-", "--or")
    assert (code, out) == (EXIT_OK, "0 2 1\n")


def test_query_row_inc(capsys):
    _, out, _ = run(capsys, "query", fx("query_matrix.tsv"), "--row", 0, "--terms", "4", "PDB",
                    "--inc")
    assert out == "1 2 0\n"


def test_query_packed_terms(capsys):
    _, out, _ = run(capsys, "query", fx("query_matrix.tsv"), "--col", 2, "--terms", "4 46",
                    "--separator", " ")
    assert out == "2 1\n"


def test_query_negated(capsys):
    _, out, _ = run(capsys, "query", fx("query_matrix.tsv"), "--col", 2, "--terms", "4", "--not")
    assert out == "0 1\n"


def test_query_no_match(capsys):
    code, out, _ = run(capsys, "query", fx("query_matrix.tsv"), "--col", 0, "--terms", "zzz")
    assert (code, out) == (EXIT_OK, "")


@pytest.mark.parametrize("where", [("--col", 7), ("--row", 9)])
def test_query_bad_index(capsys, where):
    code, out, _ = run(capsys, "query", fx("query_matrix.tsv"), *where, "--terms", "x")
    assert (code, out) == (EXIT_USAGE, "")


# --- union / intersect / merge ------------------------------------------------------

def test_union(capsys):
    code, out, _ = run(capsys, "union", fx("test1.csvm"), fx("test2.csvm"))
    assert code == EXIT_OK
    doc = parse_document(out)
    assert doc.headers == ("ID", "NAME", "MASS", "CODE")
    assert doc.data_r == 3


def test_union_with_empty(capsys, tmp_path):
    empty = tmp_path / "e.csvm"
    empty.write_text("")
    _, out, _ = run(capsys, "union", fx("test1.csvm"), empty)
    assert parse_document(out) == parse_document(fx("test1.csvm").read_text())


def test_intersect_no_data(capsys):
    code, out, err = run(capsys, "intersect", fx("test1.csvm"), fx("test2.csvm"))
    assert code == EXIT_EMPTY
    assert out == ""
    assert "No data found" in err


def test_intersect_shared(capsys):
    code, out, _ = run(capsys, "intersect", fx("test1.csvm"), fx("test1.csvm"))
    assert code == EXIT_OK
    assert parse_document(out).headers == ("ID", "NAME")


def test_merge_summary(capsys):
    code, out, err = run(capsys, "merge", fx("hetnam_smiles.csvm"), fx("cc_to_pdb.csvm"),
                         "--key", "HETNAME", "--value", "INPDB", "--dest", "INPDB", "--add-dest")
    assert code == EXIT_OK
    assert "added 3 / not found 1" in err
    assert parse_document(out).column(3) == ["2wbp 2wbq", "-", "2wd1", "2cfi"]


def test_merge_empty_source(capsys, tmp_path):
    empty = tmp_path / "src.csvm"
    write_document(empty, make_document(["HETNAME", "INPDB"]))
    _, _, err = run(capsys, "merge", fx("hetnam_smiles.csvm"), empty, "--key", "HETNAME",
                    "--value", "INPDB", "--dest", "INPDB", "--add-dest")
    assert "added 0 / not found 4" in err


def test_merge_missing_column(capsys):
    code, _, err = run(capsys, "merge", fx("hetnam_smiles.csvm"), fx("cc_to_pdb.csvm"),
                       "--key", "HETNAME", "--value", "INPDB", "--dest", "NOPE")
    assert code == EXIT_USAGE
    assert "NOPE" in err


# --- split / catalog -----------------------------------------------------------------

def test_split_multiseries(capsys, tmp_path):
    code, out, _ = run(capsys, "split", fx("kinetics_multiseries.csvm"), "--time-col", "Time (s)",
                       "--outdir", tmp_path)
    assert code == EXIT_OK
    written = sorted(tmp_path.glob("*.csvm"))
    assert len(written) == 14
    assert len(out.splitlines()) == 14
    first = parse_document(written[0].read_text())
    assert first.headers == ("Time (s)", "A1")


def test_split_two_columns(capsys, tmp_path):
    code, out, _ = run(capsys, "split", fx("solver_input.csvm"), "--time-col", "Time",
                       "--outdir", tmp_path)
    assert code == EXIT_OK
    assert len(out.splitlines()) == 1


def test_split_missing_time_column(capsys, tmp_path):
    code, _, _ = run(capsys, "split", fx("test1.csvm"), "--time-col", "t", "--outdir", tmp_path)
    assert code == EXIT_USAGE


def test_catalog(capsys, tmp_path):
    (tmp_path / "b.py").write_text("x")
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "a.txt").write_text("x")
    _, first, _ = run(capsys, "catalog", tmp_path)
    code, second, _ = run(capsys, "catalog", tmp_path)
    assert code == EXIT_OK
    assert first == second
    doc = parse_document(first)
    assert doc.headers == ("DIR", "FILE", "-")
    assert doc.column(1) == ["b.py", "a.txt"]
    _, flat, _ = run(capsys, "catalog", tmp_path, "--no-recursive")
    assert parse_document(flat).data_r == 1


def test_catalog_empty_and_missing(capsys, tmp_path):
    _, out, _ = run(capsys, "catalog", tmp_path)
    assert parse_document(out).data_r == 0
    assert run(capsys, "catalog", tmp_path / "nope")[0] == EXIT_USAGE


# --- kinetics --------------------------------------------------------------------------

def write_curve(path, n=60, sigma=0.0):
    t = np.linspace(0, 20, n)
    p = eval_progress(TRUE, t)
    if sigma:
        p = p + np.random.default_rng(3).normal(0, sigma, n)
    rows = [(format_number(a), format_number(b)) for a, b in zip(t, p)]
    write_document(path, make_document(["Time", "P"], rows, title="curve A"))


def fit_to(capsys, tmp_path, name, **kw):
    src = tmp_path / f"{name}.csvm"
    write_curve(src, **kw)
    out = tmp_path / f"{name}_fit.csvm"
    code, _, err = run(capsys, "fit", src, "-o", out)
    assert code == EXIT_OK, err
    return out


def test_fit_noiseless(capsys, tmp_path):
    out = fit_to(capsys, tmp_path, "c1")
    block = extract_kv_block(parse_document(out.read_text()))
    sols = [float(v) for k, v in block.entries if k == "PSOL"]
    np.testing.assert_allclose(sols, TRUE.as_array(), rtol=1e-6)
    assert block.get("LFILE") == "curve A"


def test_fit_noisy(capsys, tmp_path):
    out = fit_to(capsys, tmp_path, "c2", n=500, sigma=0.01)
    block = extract_kv_block(parse_document(out.read_text()))
    sols = [float(v) for k, v in block.entries if k == "PSOL"]
    np.testing.assert_allclose(sols, TRUE.as_array(), rtol=0.02)


def test_fit_with_named_columns_and_init(capsys, tmp_path):
    src = tmp_path / "c.csvm"
    write_curve(src)
    code, out, _ = run(capsys, "fit", src, "--x", "Time", "--y", "P", "--init", "1,5,1",
                       "--label", "L")
    assert code == EXIT_OK
    assert extract_kv_block(parse_document(out)).get("LFILE") == "L"


def test_fit_too_few_points(capsys, tmp_path):
    src = tmp_path / "short.csvm"
    write_document(src, make_document(["t", "p"], [("0", "0"), ("1", "1")]))
    code, out, err = run(capsys, "fit", src)
    assert code == EXIT_USAGE
    assert out == ""
    assert "3 points" in err


def test_fit_bad_init(capsys, tmp_path):
    with pytest.raises(SystemExit):
        main(["fit", str(fx("solver_input.csvm")), "--init", "1,2"])


def test_aggregate(capsys, tmp_path):
    a = fit_to(capsys, tmp_path, "a")
    b = fit_to(capsys, tmp_path, "b")
    code, out, _ = run(capsys, "aggregate", a, b)
    assert code == EXIT_OK
    doc = parse_document(out)
    assert doc.data_r == 2
    assert doc.title == "Results"


def test_aggregate_no_files(capsys):
    code, out, _ = run(capsys, "aggregate")
    assert code == EXIT_OK
    doc = parse_document(out)
    assert doc.data_r == 0
    assert doc.headers[0] == "LFILE"


def test_aggregate_rejects_non_fit(capsys):
    code, _, err = run(capsys, "aggregate", fx("test1.csvm"))
    assert code == EXIT_USAGE
    assert "input 0" in err


def test_simulate_columns(capsys, tmp_path):
    dest = tmp_path / "traj.csvm"
    code, _, _ = run(capsys, "simulate", fx("enzyme_model.csvm"), "--dt", "1e-4",
                     "--every", "100", "--out", dest)
    assert code == EXIT_OK
    doc = parse_document(dest.read_text())
    assert doc.headers == ("t", "S", "P", "ES", "E", "Cm", "Etotal")
    assert doc.data_r == 101


def test_simulate_zero_rate_model(capsys, tmp_path):
    model = tmp_path / "m.csvm"
    rows = [("TIME", "0", "1", "0", "0.1"), ("SPEC", "A", "2"), ("RATE", "k", "0"),
            ("PATH", "A", "- <k>.A")]
    write_document(model, make_document(["KEY", "A", "B", "C", "D"],
                                        [r + ("-",) * (5 - len(r)) for r in rows]))
    _, out, _ = run(capsys, "simulate", model)
    assert set(parse_document(out).column(1)) == {"2"}


def test_simulate_bad_expression_reports_row(capsys, tmp_path):
    model = tmp_path / "bad.csvm"
    text = fx("enzyme_model.csvm").read_text().replace("<k2>.ES\t", "<k2>ES\t", 1)
    model.write_text(text)
    code, _, err = run(capsys, "simulate", model)
    assert code == EXIT_USAGE
    # data row index: ALGO is row 0, the dP/dt PATH row is row 10
    assert "row 10" in err


def test_simulate_default_step_is_rejected(capsys):
    code, out, err = run(capsys, "simulate", fx("enzyme_model.csvm"))
    assert code == EXIT_USAGE
    assert out == ""
    assert "too large" in err


def test_warnings_go_to_stderr(capsys, tmp_path):
    a = tmp_path / "a.csvm"
    b = tmp_path / "b.csvm"
    write_document(a, make_document(["x"], [("1",)], col_types=["TEXT"]))
    write_document(b, make_document(["x"], [("2",)], col_types=["NUMERIC"]))
    code, out, err = run(capsys, "union", a, b)
    assert code == EXIT_OK
    assert err.startswith("warning:")
    assert serialize_document(parse_document(out)) == out
