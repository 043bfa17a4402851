import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cqsim import _kernels

py = _kernels.get_backend("python")
try:
    cy = _kernels.get_backend("cython")
except ImportError:  # pragma: no cover - extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def test_backend_selection():
    assert _kernels.BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")


def test_pure_python_env_forces_fallback():
    env = dict(os.environ, CQSIM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import cqsim._kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def run_em(mod, x1s, x2s, incs, dcoef, r2):
    P, S = incs.shape[0], len(x1s)
    o1, o2, oe = np.empty((P, S)), np.empty((P, S)), np.empty((P, S), np.uint8)
    with np.errstate(over="ignore", invalid="ignore"):
        mod.em_paths(x1s, x2s, incs, dcoef, 1e-3, 2 ** -0.5, r2, o1, o2, oe)
    return o1, o2, oe


@needs_ext
@given(st.integers(0, 1000), st.sampled_from([[0.0, 1.0], [0.0, 1.0, 0.0, 0.2], [0.3, -1.0, 0.5]]),
       st.floats(1.0, 100.0))
def test_em_paths_bitwise(seed, dcoef, radius):
    rng = np.random.default_rng(seed)
    incs = rng.standard_normal((17, 200)) * 0.05
    x1s = np.array([-2.0, 0.0, 1.5])
    x2s = np.array([0.0, 0.5, -1.0])
    d = np.array(dcoef)
    a = run_em(py, x1s, x2s, incs, d, radius ** 2)
    b = run_em(cy, x1s, x2s, incs, d, radius ** 2)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


@needs_ext
@given(st.integers(0, 1000), st.floats(0.3, 2.0))
def test_pair_rk4_bitwise(seed, hbar):
    rng = np.random.default_rng(seed)
    n = 64
    x = np.linspace(-3, 3, n)
    dx = x[1] - x[0]
    sp = x + 0.2 * x ** 3
    u = [rng.standard_normal(n) for _ in range(2)]
    a = [v.copy() for v in u]
    b = [v.copy() for v in u]
    dt = 0.2 * dx * dx / hbar
    py.pair_rk4(a[0], a[1], sp, dx, hbar, dt, 25)
    cy.pair_rk4(b[0], b[1], sp, dx, hbar, dt, 25)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@needs_ext
def test_cayley_backends_agree():
    # the fallback uses a sparse LU solve, the extension a Thomas sweep: agreement to rounding
    n = 400
    x = np.linspace(-8, 8, n)
    v = 0.5 * x ** 2 - 0.5
    psi0 = (np.exp(-(x - 1) ** 2) * (1 + 0.5j * x)).astype(complex)
    a, b = psi0.copy(), psi0.copy()
    py.CayleyStepper(v, x[1] - x[0], 1.0, 1e-3).run(a, 300)
    cy.CayleyStepper(v, x[1] - x[0], 1.0, 1e-3).run(b, 300)
    assert np.abs(a - b).max() < 1e-12
    assert a[0] == 0 and a[-1] == 0 and b[0] == 0 and b[-1] == 0


@pytest.mark.parametrize("mod", [py] + ([cy] if cy is not None else []), ids=lambda m: m.__name__)
def test_cayley_norm_conserving(mod):
    n = 300
    x = np.linspace(-6, 6, n)
    psi = (np.exp(-x ** 2) * np.exp(2j * x)).astype(complex)
    psi[0] = psi[-1] = 0
    n0 = np.sum(np.abs(psi) ** 2)
    mod.CayleyStepper(0.3 * x ** 4, x[1] - x[0], 0.7, 5e-3).run(psi, 200)
    assert np.sum(np.abs(psi) ** 2) == pytest.approx(n0, rel=1e-12)
