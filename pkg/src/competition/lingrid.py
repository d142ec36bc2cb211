"""Rectangular grids, fields on interior nodes, and the Dirichlet Laplacian.

Boundary nodes are never stored; they are implicit zero ghosts.  Fields are
kept as flat C-ordered float64 arrays (x-major in 2D).
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConvergenceError


@dataclass(frozen=True)
class Grid:
    """Uniform grid of interior nodes on ``(0, L1) [x (0, L2)]``."""

    lengths: tuple
    interior_counts: tuple

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        counts = tuple(int(v) for v in np.atleast_1d(self.interior_counts))
        if len(lengths) not in (1, 2) or len(lengths) != len(counts):
            raise ValueError("grid must be 1D or 2D with one length and count per axis")
        if any(not np.isfinite(v) or v <= 0 for v in lengths):
            raise ValueError(f"lengths must be positive, got {lengths}")
        if any(n < 3 for n in counts):
            raise ValueError(f"interior counts must be >= 3, got {counts}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "interior_counts", counts)

    @classmethod
    def unit_interval(cls, n):
        return cls((1.0,), (n,))

    @classmethod
    def unit_square(cls, n, m=None):
        return cls((1.0, 1.0), (n, n if m is None else m))

    @property
    def dimension(self):
        return len(self.lengths)

    @property
    def spacings(self):
        return tuple(L / (n + 1) for L, n in zip(self.lengths, self.interior_counts))

    @property
    def shape(self):
        return self.interior_counts

    @property
    def size(self):
        return int(np.prod(self.interior_counts))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacings))

    @property
    def stencil(self):
        """``(nx, ny, 1/hx^2, 1/hy^2)`` as consumed by the kernels."""
        hs = self.spacings
        nx = self.interior_counts[0]
        if self.dimension == 1:
            return nx, 1, 1.0 / hs[0] ** 2, 0.0
        return nx, self.interior_counts[1], 1.0 / hs[0] ** 2, 1.0 / hs[1] ** 2

    def axes(self):
        """Interior node coordinates along each axis."""
        return tuple(h * np.arange(1, n + 1) for h, n in zip(self.spacings, self.interior_counts))

    def coordinates(self):
        """Flat coordinate arrays, one per axis, matching field ordering."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return tuple(m.ravel() for m in mesh)

    def core_mask(self, layers=1):
        """Nodes at least ``layers + 1`` spacings away from the boundary on every axis."""
        masks = []
        for n in self.interior_counts:
            idx = np.arange(n)
            masks.append((idx >= layers) & (idx <= n - 1 - layers))
        mesh = np.meshgrid(*masks, indexing="ij")
        return np.logical_and.reduce([m.ravel() for m in mesh])

    def sample(self, fn):
        """Field from a function of the coordinate arrays."""
        return ScalarField(self, np.asarray(fn(*self.coordinates()), dtype=np.float64))

    def to_dict(self):
        return {
            "dim": self.dimension,
            "lengths": list(self.lengths),
            "interior_counts": list(self.interior_counts),
            "spacings": list(self.spacings),
        }


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Values on the interior nodes of a grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).ravel()
        if values.size != self.grid.size:
            raise ValueError(f"field has {values.size} values, grid has {self.grid.size} nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full(grid.size, float(c)))

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def as_array(self):
        """Values reshaped to the grid shape."""
        return self.values.reshape(self.grid.shape)

    def inner(self, other):
        """Discrete L2 inner product (cell-volume weighted)."""
        return float(self.values @ self._coerce(other)) * self.grid.cell_volume

    def norms(self):
        return norms(self)


@dataclass(frozen=True)
class LinearOperator:
    """``-lap_h + shift + potential`` with zero Dirichlet data.

    ``potential`` is an optional nonnegative per-node diagonal.
    """

    grid: Grid
    shift: float = 0.0
    potential: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.shift >= 0:
            raise ValueError(f"shift must be >= 0, got {self.shift}")
        if self.potential is not None:
            pot = np.array(self.potential, dtype=np.float64).ravel()
            if pot.size != self.grid.size or np.any(pot < 0) or not np.all(np.isfinite(pot)):
                raise ValueError("potential must be a finite nonnegative per-node array")
            pot.flags.writeable = False
            object.__setattr__(self, "potential", pot)

    def diagonal_term(self):
        d = np.full(self.grid.size, float(self.shift))
        if self.potential is not None:
            d += self.potential
        return d

    def matvec(self, x):
        nx, ny, cx, cy = self.grid.stencil
        return kernels.apply_operator(np.ascontiguousarray(x, dtype=np.float64),
                                      self.diagonal_term(), nx, ny, cx, cy)

    def __call__(self, f):
        return ScalarField(self.grid, self.matvec(f.values))


def laplacian_array(grid, values):
    nx, ny, cx, cy = grid.stencil
    return kernels.laplacian(np.ascontiguousarray(values, dtype=np.float64), nx, ny, cx, cy)


def apply_laplacian(f):
    """Discrete Laplacian with zero ghost values."""
    return ScalarField(f.grid, laplacian_array(f.grid, f.values))


def cg_array(grid, diag, rhs, tol=1e-10, x0=None, maxiter=None):
    """Array-level SPD solve of ``(-lap_h + diag) x = rhs``.

    Raises ConvergenceError when the relative residual does not reach ``tol``.
    """
    nx, ny, cx, cy = grid.stencil
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    if x0 is None:
        x0 = np.zeros_like(rhs)
    if maxiter is None:
        maxiter = 10 * grid.size
    diag = np.ascontiguousarray(np.broadcast_to(diag, rhs.shape), dtype=np.float64)
    x, it, relres, ok = kernels.cg(diag, rhs, np.ascontiguousarray(x0, dtype=np.float64),
                                   nx, ny, cx, cy, float(tol), int(maxiter))
    if not ok:
        raise ConvergenceError(
            f"CG did not reach relative residual {tol:g} in {it} iterations (got {relres:.3e})",
            iterations=it,
        )
    return x


def solve_spd(op, rhs, tol=1e-10, x0=None, maxiter=None):
    """Solve ``op w = rhs`` by preconditioned conjugate gradients (see :mod:`competition.kernels`).

    On return ``||op w - rhs||_2 <= tol * ||rhs||_2``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if rhs.grid != op.grid:
        raise ValueError("rhs and operator live on different grids")
    start = None if x0 is None else x0.values
    w = cg_array(op.grid, op.diagonal_term(), rhs.values, tol=tol, x0=start, maxiter=maxiter)
    return ScalarField(op.grid, w)


def norms(f):
    """``(sup_norm, l2_norm)`` with the l2 norm weighted by cell volume."""
    v = f.values
    sup = float(np.max(np.abs(v))) if v.size else 0.0
    return sup, float(np.sqrt(v @ v * f.grid.cell_volume))
