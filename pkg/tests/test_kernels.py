"""The compiled kernels and the numpy fallback must agree."""
import numpy as np
import pytest

from competition import kernels, _pykernels
from competition.eigen import principal_eigenpair
from competition.expr import parse
from competition.lingrid import Grid
from competition.logistic import solve_logistic

compiled = pytest.mark.skipif(not kernels.COMPILED_AVAILABLE, reason="extension not built")


@pytest.fixture
def python_backend():
    previous = kernels.BACKEND
    kernels.use_backend("python")
    yield
    kernels.use_backend(previous)


STENCILS = [(40, 1, 1681.0, 0.0), (12, 9, 169.0, 100.0)]


@compiled
@pytest.mark.parametrize("nx,ny,cx,cy", STENCILS)
def test_stencil_agrees(nx, ny, cx, cy):
    from competition import _kernels
    rng = np.random.default_rng(4)
    u = rng.standard_normal(nx * ny)
    d = rng.uniform(0, 3, nx * ny)
    assert np.allclose(_kernels.laplacian(u, nx, ny, cx, cy), _pykernels.laplacian(u, nx, ny, cx, cy),
                       rtol=1e-14, atol=1e-9)
    assert np.allclose(_kernels.apply_operator(u, d, nx, ny, cx, cy),
                       _pykernels.apply_operator(u, d, nx, ny, cx, cy), rtol=1e-14, atol=1e-9)


@compiled
@pytest.mark.parametrize("nx,ny,cx,cy", STENCILS)
@pytest.mark.parametrize("precond", ["mic0", "ic0", "jacobi"])
def test_cg_agrees(nx, ny, cx, cy, precond):
    from competition import _kernels
    rng = np.random.default_rng(5)
    n = nx * ny
    d = rng.uniform(0, 3, n)
    b = rng.standard_normal(n)
    x1, it1, r1, ok1 = _kernels.cg(d, b, np.zeros(n), nx, ny, cx, cy, 1e-12, 10 * n, precond)
    x2, it2, r2, ok2 = _pykernels.cg(d, b, np.zeros(n), nx, ny, cx, cy, 1e-12, 10 * n)
    assert ok1 and ok2 and r1 <= 1e-12
    assert np.max(np.abs(x1 - x2)) <= 1e-9 * np.max(np.abs(x2))


@compiled
def test_cholesky_preconditioner_is_exact_in_1d():
    from competition import _kernels
    n = 200
    b = np.random.default_rng(6).standard_normal(n)
    for precond in ("mic0", "ic0"):
        _, it, relres, ok = _kernels.cg(np.full(n, 2.0), b, np.zeros(n), n, 1, 201.0**2, 0.0, 1e-12, 50, precond)
        assert ok and it == 1


@compiled
def test_unknown_preconditioner():
    from competition import _kernels
    with pytest.raises(ValueError):
        _kernels.cg(np.ones(9), np.ones(9), np.zeros(9), 3, 3, 1.0, 1.0, 1e-8, 10, "ilu")


def test_backend_switch_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


@compiled
def test_solvers_agree_across_backends(python_backend):
    g = Grid.unit_interval(60)
    f = parse("12 - u", 1)
    py_eig = principal_eigenpair(g, q=1.5)
    py_log = solve_logistic(g, f)
    kernels.use_backend("cython")
    c_eig = principal_eigenpair(g, q=1.5)
    c_log = solve_logistic(g, f)
    assert abs(py_eig.lambda1 - c_eig.lambda1) <= 1e-10
    assert np.max(np.abs(py_log.theta.values - c_log.theta.values)) <= 1e-8


def test_environment_forces_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, COMPETITION_PURE_PYTHON="1")
    code = ("from competition import kernels; from competition.eigen import dirichlet_lambda1; "
            "from competition.lingrid import Grid; print(kernels.BACKEND, dirichlet_lambda1(Grid.unit_interval(50)))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
    assert out[0] == "python"
    assert float(out[1]) == pytest.approx(4 * 51**2 * np.sin(np.pi / 102) ** 2, rel=1e-10)
