"""``csvm`` command line: one binary, one subcommand per workflow.

Exit status: 0 on success, 2 for usage or input errors, 3 when the result
is empty ("No data found").  Data goes to stdout (or ``-o``), diagnostics to
stderr.
"""
from __future__ import annotations

import argparse
import os
import re
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

from . import convert
from .catalog import scan_directory
from .core import (
    Document,
    ParseOptions,
    dump_document,
    parse_document,
    read_document,
    serialize_document,
)
from .errors import CsvmError
from .kinetics.ode import integrate_rk4, parse_ode_model
from .kinetics.progress import (
    ProgressCurve,
    SlowBindingParams,
    aggregate_results,
    fit_progress,
    fit_result_to_document,
)
from .ops import (
    Combiner,
    QuerySpec,
    add_columns,
    get_column_indices,
    intersect,
    lookup_fill,
    query_columns,
    query_row,
    split_series,
    union,
)

EXIT_OK, EXIT_USAGE, EXIT_EMPTY = 0, 2, 3

FROM_FORMATS = ("csvm", "csv", "xy", "solver")
TO_FORMATS = ("csvm", "csv", "solver", "js")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CliConfig:
    delimiter: str = "\t"
    empty_marker: str = "-"
    keep_annotations: bool = False
    output: str | None = None

    def __post_init__(self):
        self.parse_options()  # validates delimiter / marker

    def parse_options(self) -> ParseOptions:
        return ParseOptions(delimiter=self.delimiter, empty_marker=self.empty_marker,
                            keep_annotations=self.keep_annotations)


def parse_delimiter(text: str) -> str:
    """Accept a literal character or the names ``tab``, ``\\t``, ``comma``, ``space``."""
    named = {"tab": "\t", "\\t": "\t", "comma": ",", "space": " ",
             "semicolon": ";", "pipe": "|"}
    value = named.get(text.lower(), text)
    if len(value) != 1:
        raise argparse.ArgumentTypeError(f"delimiter must be one character, got {text!r}")
    return value


def _config(args) -> CliConfig:
    return CliConfig(args.delimiter, args.empty_marker, args.keep_annotations, args.output)


def _read(path, cfg: CliConfig) -> Document:
    return read_document(path, cfg.parse_options())


def _emit(text: str, cfg: CliConfig):
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _emit_doc(doc: Document, cfg: CliConfig):
    _emit(serialize_document(doc, cfg.parse_options()), cfg)


# --- commands ----------------------------------------------------------------

def cmd_dump(args, cfg):
    sys.stdout.write(dump_document(_read(args.file, cfg)))
    return EXIT_OK


def _load_as(fmt, path, cfg):
    text = Path(path).read_bytes()
    if fmt == "csvm":
        return parse_document(text, cfg.parse_options(), source=str(path))
    decoded = text.decode("utf-8")
    if fmt == "csv":
        return convert.from_plain_csv(decoded, cfg.delimiter, cfg.empty_marker)
    if fmt == "xy":
        return convert.from_xy_pairs(decoded, source=str(path))
    doc, _ = convert.parse_solver_two_column(decoded)
    return doc


def cmd_convert(args, cfg):
    doc = _load_as(args.from_, args.file, cfg)
    if args.to == "csvm":
        _emit_doc(doc, cfg)
    elif args.to == "csv":
        _emit(convert.to_plain_csv(doc, cfg.delimiter, cfg.empty_marker), cfg)
    elif args.to == "solver":
        if doc.column_count != 2:
            raise UsageError(f"solver output needs exactly 2 columns, input has "
                             f"{doc.column_count}; run 'split' first")
        _emit(convert.to_solver_two_column(doc, source_label=args.label or str(args.file)), cfg)
    else:
        _emit(convert.to_javascript_table(doc), cfg)
    return EXIT_OK


def cmd_query(args, cfg):
    doc = _read(args.file, cfg)
    terms = []
    for t in args.terms:
        terms.extend([x for x in t.split(args.separator) if x] if args.separator else [t])
    spec = QuerySpec(tuple(terms), combiner=args.combiner, strict=args.strict,
                     negate=args.negate)
    if args.row is not None:
        if not 0 <= args.row < doc.data_r:
            raise UsageError(f"row {args.row} out of range (document has {doc.data_r} rows)")
        hits = query_row(doc.data[args.row], spec)
    else:
        hits = query_columns(doc.data, spec, args.col)
    if hits:
        sys.stdout.write(" ".join(str(i) for i in hits) + "\n")
    return EXIT_OK


def cmd_union(args, cfg):
    _emit_doc(union(_read(args.a, cfg), _read(args.b, cfg), cfg.empty_marker), cfg)
    return EXIT_OK


def cmd_intersect(args, cfg):
    result = intersect(_read(args.a, cfg), _read(args.b, cfg), cfg.empty_marker)
    if result is None:
        print("No data found", file=sys.stderr)
        return EXIT_EMPTY
    _emit_doc(result, cfg)
    return EXIT_OK


def cmd_merge(args, cfg):
    target = _read(args.target, cfg)
    source = _read(args.source, cfg)
    if args.add_dest and not get_column_indices(target, args.dest):
        target = add_columns(target, [args.dest], ["TEXT"], [10], cfg.empty_marker)
    merged, added, not_found = lookup_fill(target, source, args.key, args.value, args.dest)
    _emit_doc(merged, cfg)
    print(f"added {added} / not found {len(not_found)}", file=sys.stderr)
    return EXIT_OK


def _safe_name(text):
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text).strip("_") or "col"


def cmd_split(args, cfg):
    doc = _read(args.file, cfg)
    series = split_series(doc, args.time_col, cfg.empty_marker)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.file).stem
    for i, part in enumerate(series, start=1):
        path = outdir / f"{stem}_{i:02d}_{_safe_name(part.headers[1])}.csvm"
        path.write_text(serialize_document(part, cfg.parse_options()), encoding="utf-8",
                        newline="")
        print(path)
    return EXIT_OK


def cmd_catalog(args, cfg):
    doc = scan_directory(args.root, recursive=args.recursive, extension_filter=args.ext,
                         posix_paths=args.posix_paths, delimiter=cfg.delimiter,
                         empty_marker=cfg.empty_marker)
    _emit_doc(doc, cfg)
    return EXIT_OK


def _parse_init(text):
    try:
        k, v0, vst = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--init expects k,v0,vst, got {text!r}") from None
    return SlowBindingParams(k, v0, vst)


def _column(doc, spec, default):
    if spec is None:
        return default
    if spec.isdigit():
        return int(spec)
    idx = get_column_indices(doc, spec)
    if not idx:
        raise UsageError(f"column {spec!r} not found")
    return idx[0]


def cmd_fit(args, cfg):
    doc = _read(args.file, cfg)
    x, y = _column(doc, args.x, 0), _column(doc, args.y, 1)
    if max(x, y) >= doc.column_count:
        raise UsageError(f"need at least {max(x, y) + 1} columns, input has {doc.column_count}")
    curve = ProgressCurve.from_document(doc, x, y, cfg.empty_marker)
    fit = fit_progress(curve, args.init)
    label = args.label or doc.title or str(args.file)
    _emit_doc(fit_result_to_document(curve, fit, label, args.model, empty_marker=cfg.empty_marker),
              cfg)
    return EXIT_OK


def cmd_aggregate(args, cfg):
    docs = [_read(f, cfg) for f in args.files]
    _emit_doc(aggregate_results(docs, title=args.title, empty_marker=cfg.empty_marker), cfg)
    return EXIT_OK


def cmd_simulate(args, cfg):
    model = parse_ode_model(_read(args.model_file, cfg), cfg.empty_marker)
    doc = integrate_rk4(model, dt=args.dt, record_every=args.every)
    _emit_doc(doc, cfg)
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--delimiter", type=parse_delimiter,
                        default=parse_delimiter(os.environ.get("CSVM_DELIMITER", "tab")),
                        help="column delimiter (default TAB, or $CSVM_DELIMITER)")
    common.add_argument("--empty-marker", default="-", help="empty-cell token (default '-')")
    common.add_argument("--keep-annotations", action="store_true",
                        help="retain '#' comment rows when re-writing documents")
    common.add_argument("-o", "--output", help="write the result here instead of stdout")

    parser = argparse.ArgumentParser(prog="csvm", description="CSVM table toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("dump", cmd_dump, "print the document structure")
    p.add_argument("file")

    p = add("convert", cmd_convert, "convert between CSVM and neighbouring formats")
    p.add_argument("file")
    p.add_argument("--from", dest="from_", choices=FROM_FORMATS, default="csvm")
    p.add_argument("--to", choices=TO_FORMATS, default="csvm")
    p.add_argument("--label", help="source label written into solver trailers")

    p = add("query", cmd_query, "indices of rows (or columns) matching terms")
    p.add_argument("file")
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--col", type=int, help="search this column; prints row indices")
    where.add_argument("--row", type=int, help="search this row; prints column indices")
    p.add_argument("--terms", nargs="+", required=True)
    p.add_argument("--separator", default=None,
                   help="also split each term on this string (packed term lists)")
    comb = p.add_mutually_exclusive_group()
    comb.add_argument("--or", dest="combiner", action="store_const", const=Combiner.OR)
    comb.add_argument("--and", dest="combiner", action="store_const", const=Combiner.AND)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", default=True,
                      help="whole-cell match (default)")
    mode.add_argument("--inc", dest="strict", action="store_false", help="substring match")
    p.add_argument("--not", dest="negate", action="store_true", help="invert each term")
    p.set_defaults(combiner=Combiner.OR)

    for name, func in (("union", cmd_union), ("intersect", cmd_intersect)):
        p = add(name, func, f"{name} of two tables, columns matched by header")
        p.add_argument("a")
        p.add_argument("b")

    p = add("merge", cmd_merge, "fill a column of TARGET from SOURCE by key lookup")
    p.add_argument("target")
    p.add_argument("source")
    p.add_argument("--key", required=True)
    p.add_argument("--value", required=True)
    p.add_argument("--dest", required=True)
    p.add_argument("--add-dest", action="store_true",
                   help="append the destination column to TARGET when absent")

    p = add("split", cmd_split, "one two-column CSVM per series")
    p.add_argument("file")
    p.add_argument("--time-col", required=True)
    p.add_argument("--outdir", required=True)

    p = add("catalog", cmd_catalog, "catalog the files under a directory")
    p.add_argument("root")
    p.add_argument("--recursive", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--posix-paths", action="store_true")
    p.add_argument("--ext", help="only files with this extension")

    p = add("fit", cmd_fit, "fit the slow-binding progress curve")
    p.add_argument("file")
    p.add_argument("--init", type=_parse_init, help="start values k,v0,vst")
    p.add_argument("--x", help="time column (name or index, default 0)")
    p.add_argument("--y", help="product column (name or index, default 1)")
    p.add_argument("--label", help="LFILE value (default: title or path)")
    p.add_argument("--model", default="Slow binding", help="PROG value")

    p = add("aggregate", cmd_aggregate, "collect fit results into one table")
    p.add_argument("files", nargs="*")
    p.add_argument("--title", default="Results")

    p = add("simulate", cmd_simulate, "integrate an ODE model table with RK4")
    p.add_argument("model_file")
    p.add_argument("--dt", type=float, help="override the model's step")
    p.add_argument("--every", type=int, default=1, help="record every N-th step")
    p.add_argument("--out", dest="output", help="same as -o")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    def show(message, category, filename, lineno, file=None, line=None):
        print(f"warning: {message}", file=sys.stderr)

    with warnings.catch_warnings():
        warnings.showwarning = show
        try:
            cfg = _config(args)
            return args.func(args, cfg)
        except (CsvmError, UsageError, OSError, ValueError, UnicodeDecodeError) as exc:
            print(f"csvm {args.command}: {exc}", file=sys.stderr)
            return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
