"""Validated growth models for competitive systems.

A model holds N growth rates ``g_i(u_1, .., u_N)``, their symbolic partials,
carrying capacities ``c_i`` and sampled bounds of every partial over the
capacity box ``prod [0, c_i]``.
"""
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import CompetitionError
from .expr import Expr, differentiate, evaluate, parse, restrict

U_CAP = 1e12
CAPACITY_TOL = 1e-10
DEFAULT_RESOLUTION = 101
LHS_SAMPLES = 100_000


class UnboundedGrowthError(CompetitionError):
    """No sign change of the isolated growth rate below ``U_CAP``."""


class GrowthValidationError(CompetitionError):
    def __init__(self, violations):
        self.violations = list(violations)
        first = self.violations[0]
        super().__init__(
            f"{first.condition} violated for species {first.species}"
            + (f" w.r.t. u{first.wrt + 1}" if first.wrt is not None else "")
            + f" at {tuple(round(float(x), 6) for x in first.point)}: value {first.value:.6g}"
            + (f" (+{len(self.violations) - 1} more)" if len(self.violations) > 1 else "")
        )


@dataclass(frozen=True)
class Violation:
    condition: str  # "monotonicity" or "logistic"
    species: int
    wrt: int | None
    point: tuple
    value: float


@dataclass(frozen=True)
class Validation:
    monotone: bool
    logistic: bool
    violations: tuple
    resolution: int
    method: str
    samples: int
    scope: str = "capacity box"

    @property
    def valid(self):
        return self.monotone and self.logistic


@dataclass(frozen=True, eq=False)
class GrowthModel:
    rates: tuple
    partials: tuple  # partials[i][j] = d g_i / d u_j
    capacities: tuple
    partial_inf: np.ndarray = field(repr=False)
    partial_sup: np.ndarray = field(repr=False)
    validation: Validation
    names: tuple = ()

    @property
    def n_species(self):
        return len(self.rates)

    @property
    def box(self):
        return tuple((0.0, c) for c in self.capacities)

    def rate(self, i, fields):
        """``g_i`` evaluated on a tuple of arrays or floats."""
        return evaluate(self.rates[i], tuple(fields))

    def section(self, i, fixed):
        """One-variable ``s -> g_i(fixed, s in slot i)``."""
        return restrict(self.rates[i], i, fixed)

    def species_name(self, i):
        return self.names[i] if self.names else f"u{i + 1}"


def _isolated(expr, i):
    return restrict(expr, i, [0.0] * expr.num_vars)


def carrying_capacity(expr, i=0):
    """Smallest ``c`` with ``g_i(0,..,s,..,0) <= 0`` for ``s >= c``.

    Bracketing by doubling, then bisection.  Returns 0.0 when ``g_i(0) <= 0``.
    """
    f = _isolated(expr, i) if expr.num_vars > 1 else expr
    if f(0.0) <= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        lo, hi = hi, 2.0 * hi
        if hi > U_CAP:
            raise UnboundedGrowthError(
                f"growth rate of species {i} stays positive up to {U_CAP:g}; no carrying capacity")
    while hi - lo > CAPACITY_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def box_samples(capacities, resolution=DEFAULT_RESOLUTION, seed=0):
    """Sample points of ``prod [0, c_i]`` as a tuple of flat arrays.

    Tensor grid for up to 3 axes; Latin hypercube plus all corners above that.
    """
    n = len(capacities)
    if n <= 3:
        axes = [np.linspace(0.0, c, resolution) for c in capacities]
        mesh = np.meshgrid(*axes, indexing="ij")
        return tuple(m.ravel() for m in mesh), "tensor"
    unit = qmc.LatinHypercube(d=n, seed=seed).random(LHS_SAMPLES)
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
    pts = np.vstack([unit, corners]) * np.asarray(capacities)
    return tuple(pts[:, k] for k in range(n)), "latin-hypercube"


def _point(samples, k):
    return tuple(float(s[k]) for s in samples)


def build(rates, names=(), resolution=DEFAULT_RESOLUTION, strict=True):
    """Assemble and validate a model from N growth-rate expressions.

    With ``strict`` a violated monotonicity or logistic condition raises
    GrowthValidationError; otherwise violations are recorded on the model.
    """
    rates = tuple(rates)
    n = len(rates)
    if n < 1:
        raise ValueError("need at least one species")
    for k, r in enumerate(rates):
        if not isinstance(r, Expr) or r.num_vars != n:
            raise ValueError(f"rate {k} must be an expression in {n} variables")
    partials = tuple(tuple(differentiate(r, j) for j in range(n)) for r in rates)
    capacities = tuple(carrying_capacity(r, i) for i, r in enumerate(rates))

    samples, method = box_samples(capacities, resolution)
    count = samples[0].size
    lo = np.empty((n, n))
    hi = np.empty((n, n))
    violations = []
    for i in range(n):
        for j in range(n):
            vals = evaluate(partials[i][j], samples)
            lo[i, j] = vals.min()
            hi[i, j] = vals.max()
            bad = np.flatnonzero(vals >= 0)
            if bad.size:
                k = bad[np.argmax(vals[bad])]
                violations.append(Violation("monotonicity", i, j, _point(samples, k), float(vals[k])))
    monotone = not violations

    for i, r in enumerate(rates):
        c = capacities[i]
        if c == 0.0:
            continue
        f = _isolated(r, i)
        s = np.linspace(c, 2.0 * c, resolution)
        vals = evaluate(f, (s,))
        bad = np.flatnonzero(vals > 0)
        if bad.size:
            k = bad[np.argmax(vals[bad])]
            pt = [0.0] * n
            pt[i] = float(s[k])
            violations.append(Violation("logistic", i, None, tuple(pt), float(vals[k])))
    logistic = all(v.condition != "logistic" for v in violations)

    validation = Validation(monotone, logistic, tuple(violations), resolution, method, count)
    if strict and violations:
        raise GrowthValidationError(violations)
    lo.flags.writeable = False
    hi.flags.writeable = False
    return GrowthModel(rates, partials, capacities, lo, hi, validation, tuple(names))


def from_text(texts, names=(), params=None, **kwargs):
    """Parse growth-rate strings and build the model."""
    n = len(texts)
    return build([parse(t, n, params) for t in texts], names=names, **kwargs)


def partial_bounds(model, i, j):
    """``(inf, sup)`` of ``d g_i / d u_j`` over the sampled capacity box."""
    return float(model.partial_inf[i, j]), float(model.partial_sup[i, j])


def rate_sup_abs(model, i):
    """``sup |g_i|`` over the sampled capacity box."""
    samples, _ = box_samples(model.capacities, model.validation.resolution)
    return float(np.max(np.abs(evaluate(model.rates[i], samples))))


def reaction_slope_bound(model, i):
    """``sup |d(s g_i)/ds|`` over the sampled box, ``s = u_i``."""
    samples, _ = box_samples(model.capacities, model.validation.resolution)
    slope = evaluate(model.rates[i], samples) + samples[i] * evaluate(model.partials[i][i], samples)
    return float(np.max(np.abs(slope)))
