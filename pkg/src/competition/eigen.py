"""Principal Dirichlet eigenpair of ``-lap + q`` by shifted inverse iteration."""
import functools
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .lingrid import Grid, ScalarField, cg_array, laplacian_array

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class EigenResult:
    lambda1: float
    phi1: ScalarField  # positive, max-normalized to 1
    residual: float  # ||(-lap + q) phi - lambda phi||_2 / ||phi||_2
    iterations: int


def _apply(grid, q, x):
    return -laplacian_array(grid, x) + q * x


def _rayleigh(grid, q, x):
    return float(x @ _apply(grid, q, x)) / float(x @ x)


def rayleigh_quotient(grid, q, phi):
    """Discrete ``(|grad phi|^2 + q phi^2) / phi^2`` as ``<(-lap+q)phi, phi>/<phi, phi>``."""
    x = phi.values
    if not np.any(x):
        raise ValueError("Rayleigh quotient of the zero field")
    return _rayleigh(grid, _potential(grid, q), x)


def _potential(grid, q):
    if q is None:
        return np.zeros(grid.size)
    if isinstance(q, ScalarField):
        return q.values
    return np.broadcast_to(np.asarray(q, dtype=np.float64), (grid.size,)).copy()


def principal_eigenpair(grid, q=None, tol=DEFAULT_TOL, max_iter=500, inner_tol=None):
    """Smallest eigenvalue of ``-lap_h + q`` with a positive eigenfunction.

    Inverse iteration on ``-lap_h + q - sigma`` with ``sigma = min(q) - 1``,
    which keeps every inner system SPD.  Stops when the eigenvalue stagnates
    to ``tol * (1 + |lambda|)`` and the residual is at most ``tol * ||phi||``.
    """
    q = _potential(grid, q)
    sigma = float(q.min()) - 1.0
    shifted = q - sigma
    if inner_tol is None:
        inner_tol = min(1e-10, 1e-2 * tol)

    x = np.ones(grid.size)
    x /= np.linalg.norm(x)
    lam = _rayleigh(grid, q, x)
    for it in range(1, max_iter + 1):
        y = cg_array(grid, shifted, x, tol=inner_tol, x0=x / max(lam - sigma, 1e-300))
        x = y / np.linalg.norm(y)
        lam_new = _rayleigh(grid, q, x)
        res = float(np.linalg.norm(_apply(grid, q, x) - lam_new * x))
        done = abs(lam_new - lam) <= tol * (1.0 + abs(lam)) and res <= tol
        lam = lam_new
        if done:
            break
    else:
        raise ConvergenceError(
            f"inverse iteration did not converge in {max_iter} steps (residual {res:.3e})",
            iterations=max_iter)

    if x.sum() < 0:
        x = -x
    phi = x / x.max()
    if np.any(phi <= 0):
        raise ConvergenceError("principal eigenvector is not strictly positive", iterations=it)
    return EigenResult(lam, ScalarField(grid, phi), res, it)


@functools.lru_cache(maxsize=64)
def dirichlet_eigenpair(grid: Grid, tol=DEFAULT_TOL):
    """Cached principal eigenpair of ``-lap_h`` (``q == 0``)."""
    return principal_eigenpair(grid, None, tol)


def dirichlet_lambda1(grid, tol=DEFAULT_TOL):
    return dirichlet_eigenpair(grid, tol).lambda1
