"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and semantics; used when the extension is not built or when
``COMPETITION_PURE_PYTHON=1`` is set.
"""
import numpy as np


def _apply_into(u, d, out, nx, ny, cx, cy):
    u2 = u.reshape(nx, ny)
    o2 = out.reshape(nx, ny)
    np.multiply(u2, 2.0 * cx + 2.0 * cy, out=o2)
    if nx > 1:
        o2[1:, :] -= cx * u2[:-1, :]
        o2[:-1, :] -= cx * u2[1:, :]
    if ny > 1:
        o2[:, 1:] -= cy * u2[:, :-1]
        o2[:, :-1] -= cy * u2[:, 1:]
    out += d * u
    return out


def laplacian(u, nx, ny, cx, cy):
    u = np.ascontiguousarray(u, dtype=np.float64)
    out = np.empty_like(u)
    _apply_into(u, np.zeros_like(u), out, nx, ny, cx, cy)
    return -out


def apply_operator(u, d, nx, ny, cx, cy):
    u = np.ascontiguousarray(u, dtype=np.float64)
    out = np.empty_like(u)
    return _apply_into(u, np.asarray(d, dtype=np.float64), out, nx, ny, cx, cy)


def cg(d, rhs, x0, nx, ny, cx, cy, tol, maxiter, precond="jacobi"):
    # only Jacobi here: triangular IC(0) sweeps are sequential and hopeless in numpy
    d = np.asarray(d, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    x = np.array(x0, dtype=np.float64, copy=True)
    bnorm = float(np.sqrt(rhs @ rhs))
    if bnorm == 0.0:
        x[:] = 0.0
        return x, 0, 0.0, True
    dinv = 1.0 / (2.0 * cx + 2.0 * cy + d)
    q = np.empty_like(x)
    _apply_into(x, d, q, nx, ny, cx, cy)
    r = rhs - q
    rnorm = float(np.sqrt(r @ r))
    if rnorm <= tol * bnorm:
        return x, 0, rnorm / bnorm, True
    z = dinv * r
    p = z.copy()
    rz = float(r @ z)
    it = 0
    converged = False
    while it < maxiter:
        _apply_into(p, d, q, nx, ny, cx, cy)
        pq = float(p @ q)
        if pq <= 0.0:
            break
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        it += 1
        rnorm = float(np.sqrt(r @ r))
        if rnorm <= tol * bnorm:
            converged = True
            break
        np.multiply(dinv, r, out=z)
        rz_new = float(r @ z)
        p *= rz_new / rz
        p += z
        rz = rz_new
    return x, it, rnorm / bnorm, converged
