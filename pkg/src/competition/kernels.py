"""Kernel backend selection.

The compiled extension is used when importable; otherwise the numpy fallback.
Set ``COMPETITION_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

COMPILED_AVAILABLE = _compiled is not None

_backend = None
BACKEND = None


def use_backend(name):
    """Switch the active backend (``"cython"`` or ``"python"``)."""
    global _backend, BACKEND
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available; build the extension")
        _backend = _compiled
    elif name == "python":
        _backend = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def laplacian(u, nx, ny, cx, cy):
    return _backend.laplacian(u, nx, ny, cx, cy)


def apply_operator(u, d, nx, ny, cx, cy):
    return _backend.apply_operator(u, d, nx, ny, cx, cy)


def cg(d, rhs, x0, nx, ny, cx, cy, tol, maxiter, precond=None):
    """Preconditioned CG; ``precond`` defaults to the backend's best choice."""
    if precond is None:
        precond = DEFAULT_PRECOND[BACKEND]
    return _backend.cg(d, rhs, x0, nx, ny, cx, cy, tol, maxiter, precond)


DEFAULT_PRECOND = {"cython": "mic0", "python": "jacobi"}


if os.environ.get("COMPETITION_PURE_PYTHON", "") not in ("", "0") or not COMPILED_AVAILABLE:
    use_backend("python")
else:
    use_backend("cython")
