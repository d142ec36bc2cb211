"""Upper/lower pairs and coexistence states of N-species competitive systems.

The upper field of species i is the logistic solution with every competitor
absent, the lower field the logistic solution with every competitor at its
carrying capacity.  The coupled solver runs the interleaved monotone
iteration from :mod:`competition.logistic` inside that sector.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .growth import rate_sup_abs, reaction_slope_bound
from .lingrid import ScalarField, cg_array, laplacian_array
from .logistic import monotone_iterate, require_theta, solve_logistic, system_residual


@dataclass(frozen=True)
class CoexistencePair:
    uppers: tuple
    lowers: tuple
    upper_solves: tuple = ()  # LogisticResult per species (None if substituted)
    lower_solves: tuple = ()
    substituted: tuple = ()  # species whose bounds fell back to capacity / zero

    @property
    def grid(self):
        return self.uppers[0].grid


def build_pair(grid, model, tol=1e-8, force=False, **solve_kwargs):
    """Logistic upper/lower fields for every species.

    Without ``force`` a missing logistic solution raises NonexistenceError.
    With ``force`` the upper bound falls back to the constant capacity and
    the lower bound to zero, which still bracket every nonnegative state.
    """
    n = model.n_species
    zeros = [0.0] * n
    uppers, lowers, up_solves, lo_solves, substituted = [], [], [], [], []
    for i in range(n):
        f_up = model.section(i, zeros)
        f_lo = model.section(i, model.capacities)
        if force:
            up = solve_logistic(grid, f_up, tol=tol, **solve_kwargs)
            lo = solve_logistic(grid, f_lo, tol=tol, **solve_kwargs) if up.exists else None
        else:
            up = require_theta(grid, f_up, tol=tol, **solve_kwargs)
            lo = require_theta(grid, f_lo, tol=tol, **solve_kwargs)
        if up.exists:
            uppers.append(up.upper)
        else:
            uppers.append(ScalarField.constant(grid, model.capacities[i]))
            substituted.append(i)
        if lo is not None and lo.exists:
            lowers.append(lo.lower)
        else:
            lowers.append(ScalarField.zeros(grid))
            if i not in substituted:
                substituted.append(i)
        up_solves.append(up if up.exists else None)
        lo_solves.append(lo if lo is not None and lo.exists else None)
    return CoexistencePair(tuple(uppers), tuple(lowers), tuple(up_solves), tuple(lo_solves),
                           tuple(substituted))


@dataclass(frozen=True)
class InequalityCheck:
    species: int
    kind: str  # "upper" or "lower"
    margin: float  # >= 0 passes
    worst_node: int
    worst_value: float
    slack: float

    @property
    def ok(self):
        return self.margin >= 0


@dataclass(frozen=True)
class PairReport:
    checks: tuple
    ordered: tuple  # lowers <= uppers per species

    @property
    def ok(self):
        return all(c.ok for c in self.checks) and all(self.ordered)

    def failures(self):
        return [c for c in self.checks if not c.ok]


def _rate(model):
    return lambda i, fields: model.rate(i, fields)


def verify_pair(grid, model, pair, tol=1e-8):
    """Check the discrete upper/lower inequalities node by node.

    Upper: ``lap U_i + U_i g_i(U_i, competitors at lowers) <= slack``.
    Lower: ``lap L_i + L_i g_i(L_i, competitors at uppers) >= -slack``.
    ``slack = 10 tol (1 + sup_box |g_i|)``.
    """
    n = model.n_species
    up = [f.values for f in pair.uppers]
    lo = [f.values for f in pair.lowers]
    checks = []
    for i in range(n):
        slack = 10.0 * tol * (1.0 + rate_sup_abs(model, i))
        args = list(lo)
        args[i] = up[i]
        r = laplacian_array(grid, up[i]) + up[i] * model.rate(i, args)
        k = int(np.argmax(r))
        checks.append(InequalityCheck(i, "upper", slack - float(r[k]), k, float(r[k]), slack))
        args = list(up)
        args[i] = lo[i]
        r = laplacian_array(grid, lo[i]) + lo[i] * model.rate(i, args)
        k = int(np.argmin(r))
        checks.append(InequalityCheck(i, "lower", float(r[k]) + slack, k, float(r[k]), slack))
    ordered = tuple(bool(np.all(lo[i] <= up[i])) for i in range(n))
    return PairReport(tuple(checks), ordered)


@dataclass(frozen=True)
class SpeciesSandwich:
    species: int
    lower_ok: bool
    upper_ok: bool
    strict_lower: bool
    strict_upper: bool
    lower_margin: float  # min(u - lower) over all nodes
    upper_margin: float  # min(upper - u) over all nodes

    @property
    def ok(self):
        return self.lower_ok and self.upper_ok

    @property
    def strict(self):
        return self.strict_lower and self.strict_upper


@dataclass(frozen=True)
class SandwichCertificate:
    species: tuple
    slack: float

    @property
    def ok(self):
        return all(s.ok for s in self.species)

    @property
    def strict(self):
        return all(s.strict for s in self.species)

    def as_list(self):
        return [s.ok for s in self.species]


def verify_sandwich(fields, pair, tol=1e-8):
    """``lower - slack <= u <= upper + slack`` everywhere, strict on the core.

    The core is every node at least two spacings from the boundary.
    """
    slack = 10.0 * tol
    core = pair.grid.core_mask(1)
    out = []
    for i, (u, lo, up) in enumerate(zip(fields, pair.lowers, pair.uppers)):
        u = u.values if isinstance(u, ScalarField) else np.asarray(u)
        below = u - lo.values
        above = up.values - u
        out.append(SpeciesSandwich(
            i,
            bool(below.min() >= -slack),
            bool(above.min() >= -slack),
            bool(np.all(below[core] > 0)),
            bool(np.all(above[core] > 0)),
            float(below.min()),
            float(above.min()),
        ))
    return SandwichCertificate(tuple(out), slack)


@dataclass(frozen=True)
class CoexistenceResult:
    fields: tuple  # midpoint of maximal and minimal limits
    residuals: tuple  # sup |lap u_i + u_i g_i(u)| of `fields`
    iterations: int
    sandwich: SandwichCertificate
    maximal_minimal_gap: float
    unique_in_sector: bool
    maximal: tuple  # limit of the decreasing sequence
    minimal: tuple  # limit of the increasing sequence
    residuals_maximal: tuple  # species i of `maximal` against competitors in `minimal`
    residuals_minimal: tuple
    shifts: tuple
    max_violation: float

    @property
    def sandwich_certificate(self):
        return self.sandwich.as_list()

    def extreme_solutions(self):
        """For two species, the states ``(max u, min v)`` and ``(min u, max v)``."""
        if len(self.fields) != 2:
            raise ValueError("extreme solutions are defined for two species")
        return (self.maximal[0], self.minimal[1]), (self.minimal[0], self.maximal[1])


def coupling_shifts(model):
    """``M_i = sup_box |d(s g_i)/ds| + 1``."""
    return tuple(reaction_slope_bound(model, i) + 1.0 for i in range(model.n_species))


def solve_coexistence(grid, model, pair, tol=1e-8, inner_tol=None, max_iter=200_000, callback=None):
    """Coexistence state between ``pair.lowers`` and ``pair.uppers``.

    Returns the midpoint of the maximal and minimal solutions in the sector;
    ``unique_in_sector`` is False when their gap stays above ``tol``.
    """
    if inner_tol is None:
        inner_tol = 1e-2 * tol
    shifts = coupling_shifts(model)
    run = monotone_iterate(
        grid, _rate(model), shifts,
        [f.values for f in pair.uppers], [f.values for f in pair.lowers],
        tol, inner_tol, max_iter, callback=callback,
    )
    mid = [ScalarField(grid, a) for a in run.mid]
    residuals = run.residual_mid if run.residual_mid is not None else system_residual(grid, _rate(model), run.mid)
    return CoexistenceResult(
        fields=tuple(mid),
        residuals=tuple(residuals),
        iterations=run.iterations,
        sandwich=verify_sandwich(mid, pair, tol),
        maximal_minimal_gap=run.gap,
        unique_in_sector=run.converged_gap,
        maximal=tuple(ScalarField(grid, a) for a in run.upper),
        minimal=tuple(ScalarField(grid, a) for a in run.lower),
        residuals_maximal=tuple(run.residual_upper),
        residuals_minimal=tuple(run.residual_lower),
        shifts=shifts,
        max_violation=run.max_violation,
    )


@dataclass(frozen=True)
class DecayResult:
    species: int
    sup_norm: float
    iterations: int
    decayed: bool


def decay_check(grid, model, i, threshold=1e-6, max_iter=200_000):
    """Iterate species i alone from its capacity and report how far it decays.

    Only meaningful when ``g_i(0, .., 0) <= lambda1``; the decreasing
    sequence then tends to zero.
    """
    c = model.capacities[i]
    if c == 0.0:
        return DecayResult(i, 0.0, 0, True)
    f = model.section(i, [0.0] * model.n_species)
    shift = reaction_slope_bound(model, i) + 1.0

    def rate(_, fields):
        return f(fields[0])

    try:
        run = monotone_iterate(grid, rate, [shift], [np.full(grid.size, c)], [np.zeros(grid.size)],
                               threshold, 1e-10, max_iter)
        sup = float(run.upper[0].max())
        its = run.iterations
    except ConvergenceError as exc:
        if exc.partial is None:
            raise
        sup = float(exc.partial[0][0].max())
        its = exc.iterations
    return DecayResult(i, sup, its, sup <= threshold)


def picard_solve(grid, model, start, tol=1e-8, inner_tol=None, max_iter=200_000):
    """Plain shifted fixed-point iteration from an arbitrary start.

    For a start inside the sector the iterates stay between the interleaved
    monotone sequences, so they reach the unique state whenever the maximal
    and minimal solutions coincide.
    """
    if inner_tol is None:
        inner_tol = 1e-2 * tol
    shifts = coupling_shifts(model)
    u = [np.array(f.values if isinstance(f, ScalarField) else f, dtype=np.float64) for f in start]
    n = len(u)
    prev_step = None
    rho = 1.0
    for k in range(max_iter):
        fields = tuple(u)
        r = [laplacian_array(grid, u[i]) + u[i] * model.rate(i, fields) for i in range(n)]
        res = max(float(np.max(np.abs(ri))) for ri in r)
        deltas = [cg_array(grid, shifts[i], r[i], tol=inner_tol) for i in range(n)]
        step = max(float(np.max(np.abs(d))) for d in deltas)
        u = [a + d for a, d in zip(u, deltas)]
        if prev_step:
            rho = step / prev_step
        prev_step = step
        if res <= tol and (step == 0.0 or (rho < 1.0 and step * rho / (1.0 - rho) <= 0.1 * tol)):
            return tuple(ScalarField(grid, a) for a in u), k + 1
    raise ConvergenceError(f"fixed-point iteration did not converge in {max_iter} steps", iterations=max_iter)
