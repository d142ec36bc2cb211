"""Scalar logistic problem ``lap u + u f(u) = 0``, ``u = 0`` on the boundary.

Also hosts the shifted monotone iteration shared with the coupled solver in
:mod:`competition.coexist`.
"""
from dataclasses import dataclass

import numpy as np

from .eigen import dirichlet_eigenpair
from .errors import ConvergenceError, CriterionMarginError, MonotonicityError, NonexistenceError
from .expr import Expr, differentiate, evaluate
from .growth import DEFAULT_RESOLUTION, carrying_capacity
from .lingrid import ScalarField, cg_array, laplacian_array

ROUNDOFF_SLACK = 1e-12
EPSILON_FLOOR = 1e-12


@dataclass
class MonotoneRun:
    """Limits of the interleaved upper/lower sequences."""

    upper: list
    lower: list
    iterations: int
    gap: float
    residual_upper: list
    residual_lower: list
    residual_mid: list | None
    converged_gap: bool
    max_violation: float  # worst wrong-way move or crossing seen (0 if none)
    max_crossing: float  # worst lower > upper seen (0 if none)

    @property
    def mid(self):
        return [0.5 * (a + b) for a, b in zip(self.upper, self.lower)]


def system_residual(grid, rate, fields):
    """``sup |lap u_i + u_i g_i(u)|`` per species for one tuple of fields."""
    fields = tuple(fields)
    return [float(np.max(np.abs(laplacian_array(grid, u) + u * rate(i, fields))))
            for i, u in enumerate(fields)]


def _with(fields, i, own):
    out = list(fields)
    out[i] = own
    return tuple(out)


def _sup(residuals):
    return [float(np.max(np.abs(r))) for r in residuals]


def monotone_iterate(grid, rate, shifts, upper0, lower0, tol, inner_tol=1e-10,
                     max_iter=200_000, callback=None):
    """Interleaved shifted monotone iteration for a competitive system.

    ``rate(i, fields)`` returns ``g_i`` on a tuple of N arrays.  Species i of
    the upper tuple is updated with competitors at their lower values and
    vice versa, Jacobi-style from the previous snapshot::

        (-lap + M_i) u_new = M_i u + u g_i(..)

    solved in increment form.  Upper iterates must not increase and lower
    iterates must not decrease beyond round-off; otherwise MonotonicityError.
    Stops once the upper/lower gap is at most ``tol`` with the midpoint
    residual at most ``tol``, or when both sequences have stagnated to
    ``tol`` (then the limits may differ and are both returned).

    The limits form a quasi-solution: the reported ``residual_upper`` is that
    of each upper species with competitors at the lower limit, and vice
    versa.  For two species ``(upper_0, lower_1)`` and ``(lower_0, upper_1)``
    are therefore genuine solutions.
    """
    n = len(upper0)
    up = [np.array(a, dtype=np.float64) for a in upper0]
    lo = [np.array(a, dtype=np.float64) for a in lower0]
    shifts = [float(m) for m in shifts]

    def residuals(own, other):
        return [laplacian_array(grid, own[i]) + own[i] * rate(i, _with(other, i, own[i]))
                for i in range(n)]

    r_up = residuals(up, lo)
    r_lo = residuals(lo, up)
    # wrong-signed defect of the starting pair widens the slack it propagates
    slack = [ROUNDOFF_SLACK + 2.0 * max(0.0, float(r_up[i].max()), float(-r_lo[i].min())) / shifts[i]
             for i in range(n)]
    d_up = [None] * n
    d_lo = [None] * n
    prev_rn_up = [None] * n
    prev_rn_lo = [None] * n
    max_violation = 0.0
    max_crossing = 0.0
    prev_step = None
    rho = 1.0
    step = np.inf

    for k in range(max_iter + 1):
        gap = max(float(np.max(np.abs(a - b))) for a, b in zip(up, lo))
        scale = max(1.0, max(float(np.max(np.abs(a))) for a in up))
        if gap <= tol:
            mid = [0.5 * (a + b) for a, b in zip(up, lo)]
            res_mid = system_residual(grid, rate, mid)
            if max(res_mid) <= tol:
                return MonotoneRun(up, lo, k, gap, _sup(r_up), _sup(r_lo), res_mid, True,
                                   max_violation, max_crossing)
        stalled = step <= 1e-15 * scale
        settled = rho < 1.0 and step * rho / (1.0 - rho) <= 0.1 * tol
        if k > 2 and (stalled or settled) and gap > tol:
            res_u, res_l = _sup(r_up), _sup(r_lo)
            if max(res_u) <= tol and max(res_l) <= tol:
                return MonotoneRun(up, lo, k, gap, res_u, res_l, None, False,
                                   max_violation, max_crossing)
            if stalled:
                raise ConvergenceError(
                    f"monotone iteration stalled with residual {max(res_u + res_l):.3e} > {tol:g}",
                    iterations=k)
        if k == max_iter:
            break

        new_up, new_lo = [], []
        step = 0.0
        for i in range(n):
            for r, store, prev, sign, out, base in (
                (r_up[i], d_up, prev_rn_up, 1.0, new_up, up[i]),
                (r_lo[i], d_lo, prev_rn_lo, -1.0, new_lo, lo[i]),
            ):
                rn = float(np.linalg.norm(r))
                x0 = None
                if store[i] is not None and prev[i]:
                    x0 = store[i] * (rn / prev[i])
                delta = cg_array(grid, shifts[i], r, tol=inner_tol, x0=x0)
                store[i] = delta
                prev[i] = rn
                wrong = float((sign * delta).max()) if delta.size else 0.0
                if wrong > 0.0:
                    max_violation = max(max_violation, wrong)
                    if wrong > slack[i]:
                        kind = "upper" if sign > 0 else "lower"
                        raise MonotonicityError(
                            f"{kind} sequence of species {i} moved the wrong way by {wrong:.3e} "
                            f"at iteration {k + 1} (shift {shifts[i]:g})")
                step = max(step, float(np.max(np.abs(delta))))
                out.append(base + delta)
        up, lo = new_up, new_lo
        for i in range(n):
            crossing = float((lo[i] - up[i]).max())
            if crossing > 0.0:
                max_crossing = max(max_crossing, crossing)
                max_violation = max(max_violation, crossing)
                if crossing > slack[i]:
                    raise MonotonicityError(
                        f"lower iterate of species {i} exceeds upper by {crossing:.3e} at iteration {k + 1}")
        if prev_step is not None and prev_step > 0:
            rho = step / prev_step
        prev_step = step
        r_up = residuals(up, lo)
        r_lo = residuals(lo, up)
        if callback is not None:
            callback(k + 1, up, lo)

    raise ConvergenceError(
        f"monotone iteration did not converge in {max_iter} steps (gap {gap:.3e}, step {step:.3e})",
        iterations=max_iter, partial=(up, lo))


@dataclass(frozen=True)
class LogisticResult:
    exists: bool
    theta: ScalarField | None
    f0: float
    lambda1: float
    residual: float
    iterations: int
    capacity: float
    upper: ScalarField | None = None  # limit of the decreasing sequence
    lower: ScalarField | None = None  # limit of the increasing sequence
    shift: float | None = None
    epsilon: float | None = None
    max_violation: float = 0.0

    @property
    def margin(self):
        return self.f0 - self.lambda1


def _as_callable(f):
    if isinstance(f, Expr):
        return lambda s: evaluate(f, (s,))
    return f


def pick_epsilon(f, phi, lambda1, floor=EPSILON_FLOOR):
    """Largest ``eps`` in ``1, 1/2, 1/4, ..`` with ``f(eps * phi) > lambda1`` at every node.

    ``phi`` is the max-normalized principal eigenfunction (array or field).
    """
    fn = _as_callable(f)
    phi = phi.values if isinstance(phi, ScalarField) else np.asarray(phi)
    eps = 1.0
    while eps >= floor:
        if np.all(fn(eps * phi) > lambda1):
            return eps
        eps *= 0.5
    raise CriterionMarginError(
        f"no eps >= {floor:g} with f(eps*phi1) > lambda1 = {lambda1:.10g}; margin too small to certify")


def logistic_shift(f, capacity, resolution=DEFAULT_RESOLUTION):
    """``sup |f(s) + s f'(s)| + 1`` over sampled ``[0, capacity]``."""
    s = np.linspace(0.0, capacity, resolution)
    slope = evaluate(f, (s,)) + s * evaluate(differentiate(f, 0), (s,))
    return float(np.max(np.abs(slope))) + 1.0


def solve_logistic(grid, f, tol=1e-8, inner_tol=None, max_iter=200_000,
                   resolution=DEFAULT_RESOLUTION, callback=None):
    """Positive solution of ``lap u + u f(u) = 0`` or a nonexistence verdict.

    ``f`` is a decreasing one-variable expression.  Existence is decided by
    ``f(0) > lambda1`` with the discrete lambda1 of ``grid``.  The solution is
    the common limit of the decreasing sequence from the capacity and the
    increasing sequence from ``eps * phi1``.
    """
    if not isinstance(f, Expr) or f.num_vars != 1:
        raise ValueError("f must be a one-variable expression")
    if inner_tol is None:
        inner_tol = 1e-2 * tol
    eig = dirichlet_eigenpair(grid)
    lam = eig.lambda1
    f0 = float(f(0.0))
    cap = carrying_capacity(f)
    if f0 <= lam:
        return LogisticResult(False, None, f0, lam, float("nan"), 0, cap)

    shift = logistic_shift(f, cap, resolution)
    eps = pick_epsilon(f, eig.phi1, lam)
    upper0 = [np.full(grid.size, cap)]
    lower0 = [eps * eig.phi1.values]

    def rate(i, fields):
        return evaluate(f, (fields[0],))

    run = monotone_iterate(grid, rate, [shift], upper0, lower0, tol, inner_tol, max_iter,
                           callback=callback)
    if not run.converged_gap:
        raise ConvergenceError(
            f"logistic upper and lower limits differ by {run.gap:.3e} > {tol:g}", iterations=run.iterations)
    theta = run.mid[0]
    return LogisticResult(
        True, ScalarField(grid, theta), f0, lam, run.residual_mid[0], run.iterations, cap,
        upper=ScalarField(grid, run.upper[0]), lower=ScalarField(grid, run.lower[0]),
        shift=shift, epsilon=eps, max_violation=run.max_violation,
    )


def require_theta(grid, f, **kwargs):
    """Like :func:`solve_logistic` but raises NonexistenceError when no solution exists."""
    res = solve_logistic(grid, f, **kwargs)
    if not res.exists:
        raise NonexistenceError(
            f"f(0) = {res.f0:.10g} <= lambda1 = {res.lambda1:.10g}: no positive solution",
            margin=res.margin)
    return res
