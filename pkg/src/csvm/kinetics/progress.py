"""Slow-binding progress curves: model, least-squares fit, result tables.

The integrated rate law is

    P(t) = v_st * t + (v0 - v_st) * (1 - exp(-k t)) / k

with apparent first-order constant ``k``, initial velocity ``v0`` and
steady-state velocity ``v_st``.  The same closed form serves the
``P = v_max t + (V0 - v_max)(1 - exp(-k_off t)) / k_off`` reading by renaming
``k -> k_off`` and ``v_st -> v_max``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..convert import KeyValueBlock, append_kv_columns, extract_kv_block, format_number
from ..core import DEFAULT_WIDTH, Document, Kind, make_document
from ..errors import (
    CsvmError,
    DegenerateCurve,
    InsufficientPoints,
    MalformedResult,
    NonConvergence,
    NonPositiveSlope,
    SingularDesign,
)

PARAM_NAMES = ("k", "Vo", "Vs")
FITTER_TAG = "LM QB BUILD"
VERSION_TAG = "v:(1.0)"


@dataclass(frozen=True)
class SlowBindingParams:
    k: float
    v0: float
    v_st: float

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k >= 0):
            raise ValueError(f"rate constant must be finite and non-negative, got {self.k}")

    def as_array(self):
        return np.array([self.k, self.v0, self.v_st], dtype=float)


@dataclass(frozen=True)
class ProgressCurve:
    t: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise ValueError("t and p must be 1-D arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time values must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_document(cls, doc: Document, x: int = 0, y: int = 1,
                      empty_marker: str = "-") -> "ProgressCurve":
        ts, ps = [], []
        for row in doc.data:
            if row[y] == empty_marker or row[x] == empty_marker:
                continue
            ts.append(float(row[x]))
            ps.append(float(row[y]))
        return cls(np.array(ts), np.array(ps))


def _transient(k, t):
    """(1 - exp(-k t)) / k and its derivative in k."""
    if k == 0.0:
        return t.copy(), -0.5 * t**2
    kt = k * t
    if np.max(np.abs(kt)) < 1e-4:
        g = t * (1 - kt / 2 + kt**2 / 6)
        dg = t**2 * (-0.5 + kt / 3 - kt**2 / 8)
        return g, dg
    e = np.exp(-kt)
    g = -np.expm1(-kt) / k
    return g, (t * e - g) / k


def eval_progress(params: SlowBindingParams, t):
    tt = np.asarray(t, dtype=float)
    g, _ = _transient(params.k, np.atleast_1d(tt))
    out = params.v_st * np.atleast_1d(tt) + (params.v0 - params.v_st) * g
    return float(out[0]) if tt.ndim == 0 else out


def _model_and_jacobian(x, t):
    k, v0, vs = x
    g, dg = _transient(k, t)
    model = vs * t + (v0 - vs) * g
    jac = np.column_stack(((v0 - vs) * dg, g, t - g))
    return model, jac


def levenberg_marquardt(fun, x0, max_iter=500, xtol=1e-14, ftol=1e-16, feasible=None):
    """Minimize ``||r(x)||^2`` where ``fun(x) -> (r, J)``.

    Marquardt diagonal scaling with Nielsen's damping update.  ``feasible``
    rejects trial points (counted like a failed step).  Returns
    ``(x, r, J, n_iter)``; raises NonConvergence past ``max_iter``.
    """
    x = np.asarray(x0, dtype=float).copy()
    r, J = fun(x)
    sse = float(r @ r)
    A = J.T @ J
    mu = 1e-3 * max(float(np.max(np.diag(A))), 1e-300)
    nu = 2.0
    for it in range(1, max_iter + 1):
        if sse == 0.0:
            return x, r, J, it
        g = J.T @ r
        scale = np.maximum(np.diag(A), 1e-300)
        try:
            delta = np.linalg.solve(A + mu * np.diag(scale), -g)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2
            continue
        if np.linalg.norm(delta) <= xtol * (np.linalg.norm(x) + xtol):
            return x, r, J, it
        trial = x + delta
        rho = -1.0
        if feasible is None or feasible(trial):
            r_new, J_new = fun(trial)
            sse_new = float(r_new @ r_new)
            predicted = -(2.0 * float(delta @ g) + float(delta @ A @ delta))
            if predicted > 0 and np.isfinite(sse_new):
                rho = (sse - sse_new) / predicted
        if rho > 0:
            gain = sse - sse_new
            x, r, J, sse = trial, r_new, J_new, sse_new
            A = J.T @ J
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            if gain <= ftol * (sse + gain):
                return x, r, J, it
        else:
            mu *= nu
            nu *= 2.0
            if mu > 1e30 * max(float(np.max(scale)), 1.0):
                # no descent direction left: we sit at a stationary point
                return x, r, J, it
    raise NonConvergence(f"no convergence after {max_iter} iterations")


@dataclass(frozen=True)
class ParamEstimate:
    name: str
    solution: float
    conf_min: float
    conf_max: float


@dataclass(frozen=True)
class FitResult:
    params: SlowBindingParams
    estimates: tuple
    f_value: float
    et: float
    quality: int
    residuals: np.ndarray = field(repr=False)
    fitted: np.ndarray = field(repr=False)
    n_iter: int = 0


def guess_params(curve: ProgressCurve) -> SlowBindingParams:
    """Rough start values: early slope, late slope, k from the span."""
    t, p = curve.t, curve.p
    m = max(3, len(t) // 10)
    v0 = float(np.polyfit(t[:m], p[:m], 1)[0])
    v_st = float(np.polyfit(t[-m:], p[-m:], 1)[0])
    span = float(t[-1] - t[0]) or 1.0
    return SlowBindingParams(k=5.0 / span, v0=v0, v_st=v_st)


def fit_progress(curve: ProgressCurve, init: SlowBindingParams | None = None,
                 max_iter: int = 500) -> FitResult:
    """Least-squares fit of (k, v0, v_st) to a progress curve.

    Bounds are solution +/- the linearized one-sigma half-width
    ``sqrt(s2 * inv(J'J)_ii)``, ``s2 = SSE / (n - 3)``.
    """
    n = len(curve)
    if n < 3:
        raise DegenerateCurve(f"need at least 3 points, got {n}")
    if np.ptp(curve.p) == 0:
        raise DegenerateCurve("progress values have zero variance")
    if init is None:
        init = guess_params(curve)
    x0 = init.as_array()
    if not np.all(np.isfinite(x0)) or x0[0] <= 0:
        raise ValueError(f"bad initial parameters {init}")

    def fun(x):
        model, jac = _model_and_jacobian(x, curve.t)
        return model - curve.p, jac

    x, r, J, n_iter = levenberg_marquardt(fun, x0, max_iter=max_iter,
                                          feasible=lambda x: x[0] > 0)
    sse = float(r @ r)
    dof = n - 3
    s2 = sse / dof if dof > 0 else 0.0
    et = math.sqrt(s2)
    try:
        cov = s2 * np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = s2 * np.linalg.pinv(J.T @ J)
    half = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    estimates = tuple(ParamEstimate(name, float(v), float(v - h), float(v + h))
                      for name, v, h in zip(PARAM_NAMES, x, half))
    mean_abs = float(np.mean(np.abs(curve.p)))
    # heuristic goodness score in [0, 1000]; not a standard statistic
    quality = int(min(1000, max(0, round(1000 * (1 - et / mean_abs))))) if mean_abs else 0
    fitted = curve.p + r
    return FitResult(
        params=SlowBindingParams(float(x[0]), float(x[1]), float(x[2])),
        estimates=estimates,
        f_value=sse,
        et=et,
        quality=quality,
        residuals=curve.p - fitted,
        fitted=fitted,
        n_iter=n_iter,
    )


# --- result tables ---------------------------------------------------------

RESULT_HEADERS = ("X0", "Y0", "Y0 calc", "RES", "KEY", "VALUE")
AGGREGATE_BASE = ("LFILE", "PROG", "NPTS", "NPAR", "NVAL", "F", "ET")
PARAM_KEYS = ("PNUM", "PNAME", "PSOL", "PMIN", "PMAX")


def result_block(curve: ProgressCurve, fit: FitResult, source_label: str,
                 model_name: str) -> KeyValueBlock:
    entries = [
        ("LFILE", source_label),
        ("PROG", model_name),
        ("VER", VERSION_TAG),
        ("NPTS", str(len(curve))),
        ("NPAR", str(len(fit.estimates))),
        ("NVAL", "1"),
        ("F", format_number(fit.f_value)),
        ("ET", format_number(fit.et)),
    ]
    for i, est in enumerate(fit.estimates, start=1):
        entries += [
            ("PNUM", str(i)),
            ("PNAME", est.name),
            ("PSOL", format_number(est.solution)),
            ("PMIN", format_number(est.conf_min)),
            ("PMAX", format_number(est.conf_max)),
        ]
    entries += [("CNUM", "1"), ("CNAME", "Quality"), ("CVAL", str(fit.quality))]
    return KeyValueBlock(entries, terminated=True)


def fit_result_to_document(curve: ProgressCurve, fit: FitResult, source_label: str,
                           model_name: str, fitter_tag: str = FITTER_TAG,
                           empty_marker: str = "-") -> Document:
    """Data, fitted values, residuals and the KEY/VALUE summary in one table.

    When the curve is shorter than the summary block, the extra rows carry
    the empty marker in the four numeric columns.
    """
    rows = [
        (format_number(t), format_number(p), format_number(c), format_number(res))
        for t, p, c, res in zip(curve.t, curve.p, fit.fitted, fit.residuals)
    ]
    block = result_block(curve, fit, source_label, model_name)
    need = len(block.entries) + 1
    rows += [(empty_marker,) * 4] * max(0, need - len(rows))
    base = make_document(RESULT_HEADERS[:4], rows, col_types=("NUMERIC",) * 4,
                         title=f"/ {model_name}", meta=f"CSVM Result / {fitter_tag}")
    return append_kv_columns(base, block, empty_marker=empty_marker,
                             types=("TEXT", "NUMERIC"))


def parameter_groups(block: KeyValueBlock) -> list[dict]:
    """Split the repeating PNUM..PMAX entries into one dict per parameter."""
    groups = []
    for key, value in block.entries:
        if key == "PNUM":
            groups.append({"PNUM": value})
        elif key in PARAM_KEYS and groups:
            groups[-1][key] = value
    return groups


def parameter_solution(block: KeyValueBlock, pnum: int = 1) -> float:
    for g in parameter_groups(block):
        if g.get("PNUM") == str(pnum):
            return float(g["PSOL"])
    raise KeyError(f"no parameter with PNUM={pnum}")


def aggregate_results(docs, title: str = "Results", empty_marker: str = "-") -> Document:
    """One row per fit-result document: run statistics plus parameter groups."""
    rows = []
    width = 0
    for i, doc in enumerate(docs):
        try:
            block = extract_kv_block(doc, empty_marker=empty_marker)
        except CsvmError as exc:
            raise MalformedResult(f"input {i}: {exc}") from None
        missing = [k for k in AGGREGATE_BASE if block.get(k) is None]
        if missing or not block.terminated:
            what = f"missing keys {missing}" if missing else "no END key"
            raise MalformedResult(f"input {i} ({doc.source or 'unnamed'}): {what}")
        groups = parameter_groups(block)
        row = [block.get(k) for k in AGGREGATE_BASE]
        for g in groups:
            row += [g.get(k, empty_marker) for k in PARAM_KEYS]
        width = max(width, len(groups))
        rows.append(row)
    n = len(AGGREGATE_BASE) + width * len(PARAM_KEYS)
    rows = [tuple(r + [empty_marker] * (n - len(r))) for r in rows]
    headers = AGGREGATE_BASE + PARAM_KEYS * width
    return Document(kind=Kind.CSVM, title=title, headers=headers,
                    col_types=("UNDEF",) * n, widths=(DEFAULT_WIDTH,) * n, data=rows)


# --- secondary layer -------------------------------------------------------

def fit_k_vs_inhibitor(points, s_conc: float, km: float):
    """Straight line k = k_off + k_on * [I] / (1 + [S]/K_M); returns (k_on, k_off)."""
    points = list(points)
    if len(points) < 2:
        raise InsufficientPoints(f"need at least 2 points, got {len(points)}")
    if km <= 0 or s_conc < 0:
        raise ValueError("need K_M > 0 and [S] >= 0")
    conc = np.array([p[0] for p in points], dtype=float)
    k = np.array([p[1] for p in points], dtype=float)
    x = conc / (1.0 + s_conc / km)
    xm, km_ = x.mean(), k.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise SingularDesign("all inhibitor concentrations are equal")
    slope = float(np.sum((x - xm) * (k - km_))) / sxx
    return slope, float(km_ - slope * xm)


def fit_ki_star(points) -> float:
    """K_I* from V_max/v0 = 1 + [I]/K_I*, slope fitted through the origin."""
    points = list(points)
    if len(points) < 2:
        raise InsufficientPoints(f"need at least 2 points, got {len(points)}")
    conc = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float) - 1.0
    sxx = float(conc @ conc)
    if sxx == 0.0:
        raise SingularDesign("every point sits at [I] = 0")
    slope = float(conc @ y) / sxx
    if slope <= 0:
        raise NonPositiveSlope(f"slope {slope} gives no positive K_I*")
    return 1.0 / slope
