"""ODE models stored as CSVM key/value tables, integrated with classic RK4.

Row keywords (first column):

    ALGO  <tag>
    TIME  <t0> <t_end> <slot> <dt>
    SPEC  <name> <initial concentration> ... <comment>
    RATE  <name> <value> ... <comment>
    PATH  <species> <rate expression>            d[species]/dt
    MONI  <name> <species sum> ... <comment>

A rate expression is a signed sum of terms ``<rate>.A.B``: the rate constant
in angle brackets times the listed species.  Blanks inside the brackets are
ignored, so ``<k -1>`` names the constant ``k-1``.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass

import numpy as np

from ..convert import format_number
from ..core import Document, make_document
from ..errors import (
    CsvmWarning,
    MalformedExpression,
    ModelError,
    NegativeConcentration,
    NonFiniteState,
    UnknownRateInExpression,
    UnknownSpecies,
    UnknownSpeciesInPath,
)

_TOKEN = re.compile(r"\s*(?:(<[^<>]*>)|([A-Za-z_][A-Za-z0-9_]*)|([+\-.]))")


@dataclass(frozen=True)
class Term:
    sign: int
    rate: str | None
    species: tuple


def parse_expression(text: str, allow_bare: bool = False, empty_marker: str = "-") -> tuple:
    """Parse ``[+|-] <rate>.X.Y (+|- <rate>.X ...)*`` into Terms.

    With ``allow_bare`` a term may omit the rate (monitor sums like ``S+P``).
    """
    if text.strip() in ("", empty_marker):
        return ()
    tokens = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        m = _TOKEN.match(stripped, pos)
        if not m or m.end() == pos:
            raise MalformedExpression(f"unexpected character at {pos} in {text!r}")
        rate, ident, op = m.groups()
        if rate is not None:
            tokens.append(("rate", re.sub(r"\s+", "", rate[1:-1])))
        elif ident is not None:
            tokens.append(("id", ident))
        else:
            tokens.append(("op", op))
        pos = m.end()

    terms = []
    i = 0

    def peek():
        return tokens[i] if i < len(tokens) else (None, None)

    while True:
        sign = 1
        kind, value = peek()
        if kind == "op" and value in "+-":
            sign = -1 if value == "-" else 1
            i += 1
        elif terms:
            raise MalformedExpression(f"expected '+' or '-' between terms in {text!r}")
        kind, value = peek()
        rate = None
        species = []
        if kind == "rate":
            if not value:
                raise MalformedExpression(f"empty rate name in {text!r}")
            rate = value
            i += 1
        elif kind == "id" and allow_bare:
            species.append(value)
            i += 1
        else:
            raise MalformedExpression(f"expected a term in {text!r}")
        while peek() == ("op", "."):
            i += 1
            kind, value = peek()
            if kind != "id":
                raise MalformedExpression(f"expected a species name after '.' in {text!r}")
            species.append(value)
            i += 1
        terms.append(Term(sign, rate, tuple(species)))
        if i == len(tokens):
            return tuple(terms)


def eval_terms(terms, state, rates=None) -> float:
    rates = rates or {}
    total = 0.0
    for term in terms:
        value = float(term.sign)
        if term.rate is not None:
            value *= rates[term.rate]
        for name in term.species:
            value *= state[name]
        total += value
    return total


def eval_monitor(expr, state) -> float:
    """Evaluate a species sum (text or parsed terms) on a ``{name: value}`` state."""
    terms = parse_expression(expr, allow_bare=True) if isinstance(expr, str) else expr
    for term in terms:
        for name in term.species:
            if name not in state:
                raise UnknownSpecies(f"species {name!r} is not in the state")
    return eval_terms(terms, state)


@dataclass(frozen=True)
class Species:
    name: str
    initial: float
    comment: str = ""


@dataclass(frozen=True)
class Rate:
    name: str
    value: float
    comment: str = ""


@dataclass(frozen=True)
class Path:
    species: str
    expression: str
    terms: tuple


@dataclass(frozen=True)
class Monitor:
    name: str
    expression: str
    terms: tuple
    comment: str = ""


@dataclass(frozen=True)
class OdeModel:
    algo: str
    t0: float
    t_end: float
    atol_slot: float
    dt: float
    species: tuple
    rates: tuple
    paths: tuple
    monitors: tuple = ()

    @property
    def species_names(self):
        return [s.name for s in self.species]

    @property
    def rate_values(self):
        return {r.name: r.value for r in self.rates}

    def initial_state(self):
        return {s.name: s.initial for s in self.species}


def _number(cell, row, what):
    try:
        value = float(cell)
    except ValueError:
        raise ModelError(f"{what} {cell!r} is not a number", row=row) from None
    if not math.isfinite(value):
        raise ModelError(f"{what} {cell!r} is not finite", row=row)
    return value


def _comment(row, start, empty_marker):
    return " ".join(c for c in row[start:] if c not in ("", empty_marker))


def parse_ode_model(doc: Document, empty_marker: str = "-") -> OdeModel:
    algo = "rk4"
    time_row = None
    species, rates, raw_paths, raw_monitors = [], [], [], []
    for r, row in enumerate(doc.data):
        key = row[0]
        cells = list(row) + [empty_marker] * max(0, 6 - len(row))
        if key == "ALGO":
            algo = cells[1]
        elif key == "TIME":
            time_row = (r, [_number(c, r, "TIME value") for c in cells[1:5]])
        elif key == "SPEC":
            species.append(Species(cells[1], _number(cells[2], r, "concentration"),
                                   _comment(cells, 3, empty_marker)))
        elif key == "RATE":
            rates.append(Rate(re.sub(r"\s+", "", cells[1]), _number(cells[2], r, "rate"),
                              _comment(cells, 3, empty_marker)))
        elif key == "PATH":
            raw_paths.append((r, cells[1], cells[2]))
        elif key == "MONI":
            raw_monitors.append((r, cells[1], cells[2], _comment(cells, 3, empty_marker)))
        else:
            warnings.warn(f"row {r}: unknown model keyword {key!r} ignored", CsvmWarning,
                          stacklevel=2)
    if time_row is None:
        raise ModelError("no TIME row")
    r, (t0, t_end, slot, dt) = time_row
    if not dt > 0:
        raise ModelError(f"time step must be positive, got {dt}", row=r)
    if not t_end > t0:
        raise ModelError(f"end time {t_end} is not after start time {t0}", row=r)

    names = {s.name for s in species}
    rate_names = {x.name for x in rates}
    if len(names) != len(species):
        raise ModelError("a species is declared twice")
    paths, seen = [], set()
    for r, target, expr in raw_paths:
        if target not in names:
            raise UnknownSpeciesInPath(f"PATH for undeclared species {target!r}", row=r)
        if target in seen:
            raise ModelError(f"second PATH for species {target!r}", row=r)
        seen.add(target)
        try:
            terms = parse_expression(expr, empty_marker=empty_marker)
        except MalformedExpression as exc:
            raise MalformedExpression(str(exc), row=r) from None
        for term in terms:
            if term.rate not in rate_names:
                raise UnknownRateInExpression(f"rate {term.rate!r} is not declared", row=r)
            for s in term.species:
                if s not in names:
                    raise UnknownSpeciesInPath(f"species {s!r} is not declared", row=r)
        paths.append(Path(target, expr, terms))
    monitors = []
    for r, name, expr, comment in raw_monitors:
        try:
            terms = parse_expression(expr, allow_bare=True, empty_marker=empty_marker)
        except MalformedExpression as exc:
            raise MalformedExpression(str(exc), row=r) from None
        for term in terms:
            if term.rate is not None and term.rate not in rate_names:
                raise UnknownRateInExpression(f"rate {term.rate!r} is not declared", row=r)
            for s in term.species:
                if s not in names:
                    raise UnknownSpecies(f"monitor uses undeclared species {s!r}", row=r)
        monitors.append(Monitor(name, expr, terms, comment))
    return OdeModel(algo, t0, t_end, slot, dt, tuple(species), tuple(rates),
                    tuple(paths), tuple(monitors))


def _compile(model: OdeModel):
    index = {name: i for i, name in enumerate(model.species_names)}
    rates = model.rate_values
    flat = []
    for path in model.paths:
        target = index[path.species]
        for term in path.terms:
            flat.append((target, term.sign * rates[term.rate],
                         tuple(index[s] for s in term.species)))
    n = len(index)

    def rhs(y):
        d = [0.0] * n
        for target, coef, idx in flat:
            v = coef
            for j in idx:
                v *= y[j]
            d[target] += v
        return d

    return rhs


def _steps(t0, t_end, dt):
    span = t_end - t0
    n = round(span / dt)
    if n >= 1 and abs(n * dt - span) <= 1e-9 * span:
        return n, dt, dt
    n = math.ceil(span / dt)
    return n, dt, span - (n - 1) * dt


def _check_state(model, y, t, dt, neg_tol):
    if not all(math.isfinite(v) for v in y):
        raise NonFiniteState(f"state became non-finite at t={t:g} (dt={dt:g})")
    low = min(y, default=0.0)
    if low < -neg_tol:
        name = model.species_names[y.index(low)]
        raise NegativeConcentration(
            f"[{name}] = {low:.3g} at t={t:g}: step dt={dt:g} is too large for this system")


def rk4_trajectory(model: OdeModel, dt: float | None = None, record_every: int = 1,
                   neg_tol: float | None = None, guard: bool = True):
    """Fixed-step RK4 from t0 to t_end.

    Returns ``(times, states)`` with one row per recorded step (the initial
    state included).  A concentration below ``-neg_tol`` means the step is
    too large for the system and raises NegativeConcentration.  With
    ``guard=False`` nothing is checked and the raw iterates come back, which
    is only useful for studying an unstable step size.
    """
    dt = model.dt if dt is None else float(dt)
    if not dt > 0:
        raise ValueError("dt must be positive")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if model.algo.lower() != "rk4":
        warnings.warn(f"model asks for {model.algo!r}; integrating with rk4", CsvmWarning,
                      stacklevel=2)
    rhs = _compile(model)
    y = [s.initial for s in model.species]
    if neg_tol is None:
        neg_tol = 1e-6 * (max((abs(v) for v in y), default=0.0) or 1.0)
    n_steps, h, last_h = _steps(model.t0, model.t_end, dt)

    times, states = [model.t0], [list(y)]
    m = len(y)
    for step in range(1, n_steps + 1):
        hh = h if step < n_steps else last_h
        k1 = rhs(y)
        k2 = rhs([y[i] + 0.5 * hh * k1[i] for i in range(m)])
        k3 = rhs([y[i] + 0.5 * hh * k2[i] for i in range(m)])
        k4 = rhs([y[i] + hh * k3[i] for i in range(m)])
        y = [y[i] + hh / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(m)]
        t = model.t0 + step * h if step < n_steps else model.t_end
        if guard:
            _check_state(model, y, t, dt, neg_tol)
        if step % record_every == 0 or step == n_steps:
            times.append(t)
            states.append(list(y))
    return np.array(times), np.array(states, dtype=float).reshape(len(times), m)


def integrate_rk4(model: OdeModel, dt: float | None = None, record_every: int = 1,
                  title: str = "RK4 trajectory") -> Document:
    """Trajectory table: ``t``, one column per species, one per monitor."""
    times, states = rk4_trajectory(model, dt=dt, record_every=record_every)
    names = model.species_names
    rows = []
    for t, y in zip(times, states):
        state = dict(zip(names, y))
        values = [t, *y] + [eval_terms(mon.terms, state, model.rate_values)
                            for mon in model.monitors]
        rows.append(tuple(format_number(v) for v in values))
    headers = ["t", *names, *(mon.name for mon in model.monitors)]
    step = model.dt if dt is None else dt
    return make_document(headers, rows, col_types=["NUMERIC"] * len(headers), title=title,
                         meta=f"{model.algo} dt={format_number(step)}")
