"""Algebraic existence, nonexistence and uniqueness tests, plus a JSON report.

Every verdict is a pure function of the margins stored next to it.
``lambda1`` is always the discrete principal eigenvalue of the grid in use.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from .coexist import picard_solve, solve_coexistence
from .eigen import dirichlet_lambda1
from .errors import RatioDegeneracyError
from .growth import partial_bounds
from .lingrid import ScalarField

RATIO_FLOOR = 1e-14
REPORT_KEYS = ("lambda1", "existence", "nonexistence", "uniqueness_2sp", "uniqueness_Nsp", "grid", "sampling")


def _value(expr, point):
    return float(expr(*point))


def check_existence(grid, model, lambda1=None):
    """Per species ``g_i(c with 0 in slot i) - lambda1``; exists when every margin is positive."""
    lam = dirichlet_lambda1(grid) if lambda1 is None else lambda1
    rows = []
    for i, g in enumerate(model.rates):
        point = list(model.capacities)
        point[i] = 0.0
        value = _value(g, point)
        rows.append({"species": model.species_name(i), "value": value, "margin": value - lam,
                     "verdict": value - lam > 0})
    return {"margins": rows, "verdict": all(r["verdict"] for r in rows)}


def check_nonexistence(grid, model, lambda1=None):
    """Per species ``lambda1 - g_i(0, .., 0)``; certified when some margin is nonnegative."""
    lam = dirichlet_lambda1(grid) if lambda1 is None else lambda1
    origin = [0.0] * model.n_species
    rows = []
    for i, g in enumerate(model.rates):
        value = _value(g, origin)
        rows.append({"species": model.species_name(i), "value": value, "margin": lam - value,
                     "verdict": lam - value >= 0})
    return {"margins": rows, "verdict": any(r["verdict"] for r in rows)}


def _values(f):
    return f.values if isinstance(f, ScalarField) else np.asarray(f)


def theta_ratio(num, den, grid=None):
    """``sup num/den`` over interior nodes; raises if ``den`` nearly vanishes."""
    num, den = _values(num), _values(den)
    k = int(np.argmin(den))
    if den[k] < RATIO_FLOOR:
        raise RatioDegeneracyError(
            f"ratio denominator {den[k]:.3e} < {RATIO_FLOOR:g} at node {k}; refine the grid")
    return float(np.max(num / den))


def check_uniqueness_2sp(grid, model, pair):
    """Two-species sufficient condition for a unique coexistence state.

    ``lhs = 4 inf(-g_u) inf(-h_v)`` and
    ``rhs = R1 a^2 + R2 b^2 + 2 a b`` with ``a = sup(-g_v)``, ``b = sup(-h_u)``.
    Using the magnitudes keeps the test sufficient when the cross partials
    vary; ``rhs_literal`` uses ``sup g_v`` and ``sup h_u`` as printed.
    """
    if model.n_species != 2:
        return None
    g_u, g_v = partial_bounds(model, 0, 0), partial_bounds(model, 0, 1)
    h_u, h_v = partial_bounds(model, 1, 0), partial_bounds(model, 1, 1)
    r1 = theta_ratio(pair.uppers[0], pair.lowers[1])
    r2 = theta_ratio(pair.uppers[1], pair.lowers[0])
    lhs = 4.0 * (-g_u[1]) * (-h_v[1])
    a, b = -g_v[0], -h_u[0]
    rhs = r1 * a * a + r2 * b * b + 2.0 * a * b
    a_lit, b_lit = g_v[1], h_u[1]
    rhs_literal = r1 * a_lit ** 2 + r2 * b_lit ** 2 + 2.0 * a_lit * b_lit
    return {"lhs": lhs, "rhs": rhs, "rhs_literal": rhs_literal, "R1": r1, "R2": r2,
            "sup_neg_g_v": a, "sup_neg_h_u": b, "margin": lhs - rhs, "verdict": lhs >= rhs}


def coupling_constant(pair):
    """``K = sup over i != j and interior nodes of upper_j / lower_i``."""
    n = len(pair.uppers)
    return max(theta_ratio(pair.uppers[j], pair.lowers[i])
               for i in range(n) for j in range(n) if i != j)


def check_uniqueness_Nsp(grid, model, pair):
    """N-species condition: ``2 inf(-d_i g_i) > sum_{j!=i} (sup(-d_j g_i) + K sup(-d_i g_j))``."""
    n = model.n_species
    k_const = coupling_constant(pair) if n > 1 else 0.0
    rows = []
    for i in range(n):
        lhs = 2.0 * -partial_bounds(model, i, i)[1]
        rhs = sum(-partial_bounds(model, i, j)[0] + k_const * -partial_bounds(model, j, i)[0]
                  for j in range(n) if j != i)
        rows.append({"species": model.species_name(i), "lhs": lhs, "rhs": rhs,
                     "margin": lhs - rhs, "verdict": lhs > rhs})
    return {"K": k_const, "species": rows, "verdict": all(r["verdict"] for r in rows)}


def perturbed_starts(pair, count=3, seed=0):
    """Deterministic starts strictly inside the sector, away from its midpoint."""
    rng = np.random.default_rng(seed)
    starts = []
    for _ in range(count):
        start = []
        for lo, up in zip(pair.lowers, pair.uppers):
            w = rng.uniform(0.05, 0.95, size=lo.values.size)
            start.append(lo.values + w * (up.values - lo.values))
        starts.append(start)
    return starts


@dataclass(frozen=True)
class UniquenessWitness:
    gap: float
    sector_gap: float
    start_gaps: tuple
    tol: float
    solution: object = field(repr=False, default=None)

    @property
    def unique(self):
        return self.gap <= 10.0 * self.tol


def verify_uniqueness_empirically(grid, model, pair, tol=1e-8, starts=3, seed=0, result=None):
    """Largest sup distance among the maximal, minimal and perturbed-start solutions."""
    if result is None:
        result = solve_coexistence(grid, model, pair, tol=tol)
    sols = [[f.values for f in result.maximal], [f.values for f in result.minimal]]
    for start in perturbed_starts(pair, starts, seed):
        fields, _ = picard_solve(grid, model, start, tol=tol)
        sols.append([f.values for f in fields])
    ref = [f.values for f in result.fields]
    start_gaps = tuple(max(float(np.max(np.abs(a - b))) for a, b in zip(s, ref)) for s in sols[2:])
    gap = 0.0
    for p in range(len(sols)):
        for q in range(p + 1, len(sols)):
            gap = max(gap, max(float(np.max(np.abs(a - b))) for a, b in zip(sols[p], sols[q])))
    return UniquenessWitness(gap, result.maximal_minimal_gap, start_gaps, tol, result)


@dataclass(frozen=True)
class CriterionReport:
    lambda1: float
    existence: list
    nonexistence: list
    uniqueness_2sp: dict
    uniqueness_Nsp: dict
    grid: dict
    sampling: dict
    existence_verdict: bool
    nonexistence_verdict: bool

    def to_dict(self):
        return {
            "lambda1": self.lambda1,
            "existence": self.existence,
            "nonexistence": self.nonexistence,
            "uniqueness_2sp": self.uniqueness_2sp,
            "uniqueness_Nsp": self.uniqueness_Nsp,
            "grid": self.grid,
            "sampling": self.sampling,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def evaluate_criteria(grid, model, pair=None, tol=1e-8, build=None):
    """Full report.  Uniqueness is only evaluated when existence holds.

    ``build(grid, model, tol)`` constructs the pair on demand (defaults to
    :func:`competition.coexist.build_pair`).  Uniqueness entries carry a
    ``status`` of ``"evaluated"``, ``"skipped"`` or ``"error"``.
    """
    lam = dirichlet_lambda1(grid)
    ex = check_existence(grid, model, lam)
    nx = check_nonexistence(grid, model, lam)
    u2 = {"status": "skipped", "reason": "existence criterion fails"}
    un = dict(u2)
    if model.n_species != 2:
        u2 = {"status": "skipped", "reason": "requires exactly two species"}
    if ex["verdict"]:
        if pair is None:
            if build is None:
                from .coexist import build_pair as build
            pair = build(grid, model, tol)
        for key, fn in (("2sp", check_uniqueness_2sp), ("Nsp", check_uniqueness_Nsp)):
            if key == "2sp" and model.n_species != 2:
                continue
            try:
                out = {"status": "evaluated", **fn(grid, model, pair)}
            except RatioDegeneracyError as exc:
                out = {"status": "error", "reason": str(exc)}
            if key == "2sp":
                u2 = out
            else:
                un = out
    v = model.validation
    sampling = {"method": v.method, "resolution": v.resolution, "samples": v.samples, "scope": v.scope}
    return CriterionReport(lam, ex["margins"], nx["margins"], u2, un, grid.to_dict(), sampling,
                           ex["verdict"], nx["verdict"])
