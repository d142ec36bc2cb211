# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels.

Fields are flat C-ordered arrays of ``nx * ny`` interior values; a 1D grid is
``ny == 1`` with ``cy == 0``.  Boundary ghosts are zero.
"""
import numpy as np

from libc.math cimport sqrt

# row-sum compensation weight of the modified incomplete Cholesky factor
DEF MIC_OMEGA = 0.97


cdef void _apply(const double[::1] u, const double[::1] d, double[::1] out,
                 Py_ssize_t nx, Py_ssize_t ny, double cx, double cy) noexcept nogil:
    # out = (-lap + diag(d)) u
    cdef Py_ssize_t i, j, b
    cdef double c0 = 2.0 * cx + 2.0 * cy
    for i in range(nx):
        b = i * ny
        for j in range(ny):
            out[b + j] = (c0 + d[b + j]) * u[b + j]
        if i > 0:
            for j in range(ny):
                out[b + j] -= cx * u[b + j - ny]
        if i < nx - 1:
            for j in range(ny):
                out[b + j] -= cx * u[b + j + ny]
        for j in range(1, ny):
            out[b + j] -= cy * u[b + j - 1]
        for j in range(ny - 1):
            out[b + j] -= cy * u[b + j + 1]


cdef double _dot(const double[::1] a, const double[::1] b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0
    for k in range(n):
        s += a[k] * b[k]
    return s


cdef void _ic_factor(const double[::1] d, double[::1] pinv, Py_ssize_t nx, Py_ssize_t ny,
                     double cx, double cy, double omega) noexcept nogil:
    # reciprocal pivots of (D+E) D^-1 (D+E^T); omega=0 is IC(0), omega>0 lumps dropped fill
    cdef Py_ssize_t i, j, k
    cdef double c0 = 2.0 * cx + 2.0 * cy, p, up, right
    for i in range(nx):
        up = omega * cx if i < nx - 1 else 0.0
        for j in range(ny):
            k = i * ny + j
            p = c0 + d[k]
            if j > 0:
                p -= cy * (cy + up) * pinv[k - 1]
            if i > 0:
                right = omega * cy if j < ny - 1 else 0.0
                p -= cx * (cx + right) * pinv[k - ny]
            pinv[k] = 1.0 / p


cdef void _ic_solve(const double[::1] pinv, const double[::1] r, double[::1] z,
                    Py_ssize_t nx, Py_ssize_t ny, double cx, double cy) noexcept nogil:
    cdef Py_ssize_t i, j, b
    for i in range(nx):
        b = i * ny
        if i > 0:
            for j in range(ny):
                z[b + j] = r[b + j] + cx * z[b + j - ny]
        else:
            for j in range(ny):
                z[b + j] = r[b + j]
        z[b] *= pinv[b]
        for j in range(1, ny):
            z[b + j] = (z[b + j] + cy * z[b + j - 1]) * pinv[b + j]
    for i in range(nx - 1, -1, -1):
        b = i * ny
        if i < nx - 1:
            for j in range(ny):
                z[b + j] += cx * z[b + j + ny] * pinv[b + j]
        for j in range(ny - 2, -1, -1):
            z[b + j] += cy * z[b + j + 1] * pinv[b + j]


def laplacian(const double[::1] u, Py_ssize_t nx, Py_ssize_t ny, double cx, double cy):
    """Return the discrete Laplacian of ``u`` (zero Dirichlet ghosts)."""
    cdef Py_ssize_t n = nx * ny, k
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] zero = np.zeros(n, dtype=np.float64)
    with nogil:
        _apply(u, zero, o, nx, ny, cx, cy)
        for k in range(n):
            o[k] = -o[k]
    return out


def apply_operator(const double[::1] u, const double[::1] d,
                   Py_ssize_t nx, Py_ssize_t ny, double cx, double cy):
    """Return ``(-lap + diag(d)) u``."""
    out = np.empty(nx * ny, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        _apply(u, d, o, nx, ny, cx, cy)
    return out


def cg(const double[::1] d, const double[::1] rhs, const double[::1] x0,
       Py_ssize_t nx, Py_ssize_t ny, double cx, double cy,
       double tol, Py_ssize_t maxiter, str precond="mic0"):
    """Preconditioned CG for ``(-lap + diag(d)) x = rhs``.

    ``precond``: ``"mic0"`` (modified incomplete Cholesky), ``"ic0"``, or
    ``"jacobi"``.  Both Cholesky variants are exact in 1D.
    Returns ``(x, iterations, relative_residual, converged)``.
    """
    if precond not in ("mic0", "ic0", "jacobi"):
        raise ValueError(f"unknown preconditioner {precond!r}")
    cdef Py_ssize_t n = nx * ny, k, it = 0
    x_arr = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] x = x_arr
    cdef double[::1] r = np.empty(n, dtype=np.float64)
    cdef double[::1] z = np.empty(n, dtype=np.float64)
    cdef double[::1] p = np.empty(n, dtype=np.float64)
    cdef double[::1] q = np.empty(n, dtype=np.float64)
    cdef double[::1] pinv = np.empty(n, dtype=np.float64)
    cdef bint jacobi = precond == "jacobi"
    cdef double omega = MIC_OMEGA if precond == "mic0" else 0.0
    cdef double c0 = 2.0 * cx + 2.0 * cy
    cdef double bnorm, rnorm, rz, rz_new, alpha, beta, pq

    with nogil:
        if jacobi:
            for k in range(n):
                pinv[k] = 1.0 / (c0 + d[k])
        else:
            _ic_factor(d, pinv, nx, ny, cx, cy, omega)
        bnorm = sqrt(_dot(rhs, rhs, n))
        if bnorm == 0.0:
            for k in range(n):
                x[k] = 0.0
            rnorm = 0.0
        else:
            _apply(x, d, q, nx, ny, cx, cy)
            for k in range(n):
                r[k] = rhs[k] - q[k]
            rnorm = sqrt(_dot(r, r, n))
            if rnorm > tol * bnorm:
                if jacobi:
                    for k in range(n):
                        z[k] = pinv[k] * r[k]
                else:
                    _ic_solve(pinv, r, z, nx, ny, cx, cy)
                for k in range(n):
                    p[k] = z[k]
                rz = _dot(r, z, n)
                while it < maxiter:
                    _apply(p, d, q, nx, ny, cx, cy)
                    pq = _dot(p, q, n)
                    if pq <= 0.0:
                        break
                    alpha = rz / pq
                    for k in range(n):
                        x[k] += alpha * p[k]
                        r[k] -= alpha * q[k]
                    it += 1
                    rnorm = sqrt(_dot(r, r, n))
                    if rnorm <= tol * bnorm:
                        break
                    if jacobi:
                        for k in range(n):
                            z[k] = pinv[k] * r[k]
                    else:
                        _ic_solve(pinv, r, z, nx, ny, cx, cy)
                    rz_new = _dot(r, z, n)
                    beta = rz_new / rz
                    rz = rz_new
                    for k in range(n):
                        p[k] = z[k] + beta * p[k]
    relres = rnorm / bnorm if bnorm > 0.0 else 0.0
    return x_arr, it, relres, relres <= tol
