"""RK4 step-size study on the enzyme model table.

For each step the script integrates the model without the negativity guard
and reports the worst relative drift of the two conserved pools, S+P+ES and
E+ES.  It also prints the stiffest eigenvalue of the Jacobian at t=0, since
h*lambda must stay inside the RK4 stability interval (about -2.785) for the
iterates to stay bounded.
"""
import argparse
import time

import numpy as np

from csvm.core import read_document
from csvm.kinetics import parse_ode_model, rk4_trajectory
from csvm.kinetics.ode import eval_terms

RK4_LIMIT = -2.785


def rhs(model, y):
    state = dict(zip(model.species_names, y))
    d = dict.fromkeys(model.species_names, 0.0)
    for path in model.paths:
        d[path.species] = eval_terms(path.terms, state, model.rate_values)
    return np.array(list(d.values()))


def jacobian(model, y, h=1e-12):
    n = len(y)
    J = np.empty((n, n))
    for j in range(n):
        d = np.zeros(n)
        d[j] = h * max(1.0, abs(y[j]))
        J[:, j] = (rhs(model, y + d) - rhs(model, y - d)) / (2 * d[j])
    return J


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("model", nargs="?", default="tests/fixtures/enzyme_model.csvm")
    ap.add_argument("--steps", type=float, nargs="+",
                    default=[1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 1e-4])
    args = ap.parse_args(argv)
    model = parse_ode_model(read_document(args.model))
    names = model.species_names
    y0 = np.array([s.initial for s in model.species])
    lam = np.linalg.eigvals(jacobian(model, y0)).real.min()
    s0 = y0[names.index("S")] + y0[names.index("P")] + y0[names.index("ES")]
    e0 = y0[names.index("E")] + y0[names.index("ES")]
    print(f"stiffest eigenvalue at t=0: {lam:.4g} s^-1; "
          f"RK4 needs dt < {RK4_LIMIT / lam:.4g} s")
    print(f"{'dt':>8} {'h*lambda':>9} {'S+P+ES drift':>13} {'E+ES drift':>11} {'fails at':>11} "
          f"{'time (s)':>8}")
    for dt in args.steps:
        start = time.perf_counter()
        with np.errstate(all="ignore"):
            _, y = rk4_trajectory(model, dt=dt, guard=False)
            mass = np.abs(y[:, names.index("S")] + y[:, names.index("P")]
                          + y[:, names.index("ES")] - s0) / s0
            enz = np.abs(y[:, names.index("E")] + y[:, names.index("ES")] - e0) / e0
        elapsed = time.perf_counter() - start
        # overflowed iterates turn into nan; count them as unbounded drift
        mass, enz = np.nan_to_num(mass, nan=np.inf), np.nan_to_num(enz, nan=np.inf)
        bad = np.flatnonzero((mass > 1e-9) | (enz > 1e-9))
        first = f"step {bad[0]}" if bad.size else "-"
        print(f"{dt:8.0e} {dt * lam:9.3g} {mass.max():13.3g} {enz.max():11.3g} "
              f"{first:>11} {elapsed:8.2f}")


if __name__ == "__main__":
    main()
