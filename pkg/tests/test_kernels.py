"""Backend parity: the compiled kernels must match the numpy fallback."""

import numpy as np
import pytest

from tumorbayes.kernels import _numpy

_core = pytest.importorskip("tumorbayes.kernels._core")

RNG = np.random.default_rng(2024)


def _rand_state_2d(ny=9, nx=7):
    rho = RNG.uniform(0, 1.1, (ny, nx))
    rho[rho < 0.15] = 0.0  # vacuum patches
    ux = np.zeros((ny, nx + 1))
    uy = np.zeros((ny + 1, nx))
    ux[:, 1:-1] = RNG.normal(0, 1, (ny, nx - 1))
    uy[1:-1, :] = RNG.normal(0, 1, (ny - 1, nx))
    h = RNG.uniform(-0.5, 2.0, (ny, nx))
    return rho, ux, uy, h


def test_pow_floor_vacuum_conventions():
    for mod in (_numpy, _core):
        rho = np.array([0.0, 1e-301, 1e-200, 0.5, 2.0])
        out0 = mod.pow_floor(rho, 0.0)       # m = 2: rho^0 with 0^0 := 0
        assert list(out0) == [0.0, 0.0, 1.0, 1.0, 1.0]
        out = mod.pow_floor(rho, 39.0)
        assert out[0] == 0.0 and out[1] == 0.0
        assert np.isclose(out[3], 0.5**39)


@pytest.mark.parametrize("m", [2.0, 3.5, 40.0])
def test_velocity_1d_parity(m):
    rho = RNG.uniform(0, 1.2, 31)
    a = _numpy.velocity_1d(rho, m, 0.05)
    b = _core.velocity_1d(rho, m, 0.05)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-300)


@pytest.mark.parametrize("m", [2.0, 7.0, 80.0])
def test_velocity_2d_parity(m):
    rho, *_ = _rand_state_2d()
    ax, ay = _numpy.velocity_2d(rho, m, 0.1, 0.2)
    bx, by = _core.velocity_2d(rho, m, 0.1, 0.2)
    np.testing.assert_allclose(ax, bx, rtol=1e-13, atol=1e-300)
    np.testing.assert_allclose(ay, by, rtol=1e-13, atol=1e-300)


def test_transport_1d_parity():
    rho = RNG.uniform(0, 1.0, 25)
    u = np.zeros(26)
    u[1:-1] = RNG.normal(0, 1, 24)
    h = RNG.uniform(0, 2, 25)
    a, ca, na = _numpy.transport_1d(rho, u, h, 0.004, 0.04)
    b, cb, nb = _core.transport_1d(rho, u, h, 0.004, 0.04)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-16)
    assert np.isclose(ca, cb) and na == nb


def test_transport_2d_parity():
    rho, ux, uy, h = _rand_state_2d()
    a, ca, na = _numpy.transport_2d(rho, ux, uy, h, 0.004, 0.1, 0.2)
    b, cb, nb = _core.transport_2d(rho, ux, uy, h, 0.004, 0.1, 0.2)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-16)
    assert np.isclose(ca, cb) and na == nb


def test_prediction_matvec_2d_parity():
    rho, ux, uy, _ = _rand_state_2d()
    ny, nx = rho.shape
    w = _numpy.pow_floor(rho, 5.0)
    rho_xf = 0.5 * (rho[:, :-1] + rho[:, 1:])
    rho_yf = 0.5 * (rho[:-1, :] + rho[1:, :])
    args = (rho_xf, rho_yf, w, 0.15, 0.1, 0.2,
            np.ascontiguousarray(ux[:, 1:-1]), np.ascontiguousarray(uy[1:-1, :]))
    outs = []
    for mod in (_numpy, _core):
        ox = np.empty((ny, nx - 1))
        oy = np.empty((ny - 1, nx))
        mod.prediction_matvec_2d(*args, ox, oy, np.empty((ny, nx)))
        outs.append((ox, oy))
    np.testing.assert_allclose(outs[0][0], outs[1][0], rtol=1e-13)
    np.testing.assert_allclose(outs[0][1], outs[1][1], rtol=1e-13)


def test_prediction_bicgstab_2d_agreement():
    rho, ux, uy, _ = _rand_state_2d(8, 8)
    ny, nx = rho.shape
    w = _numpy.pow_floor(rho, 3.0)
    rho_xf = 0.5 * (rho[:, :-1] + rho[:, 1:])
    rho_yf = 0.5 * (rho[:-1, :] + rho[1:, :])
    b = RNG.normal(0, 1, ny * (nx - 1) + (ny - 1) * nx)
    x0 = np.zeros_like(b)
    xs = []
    for mod in (_numpy, _core):
        x, info, res = mod.prediction_bicgstab_2d(
            rho_xf, rho_yf, w, 0.2, 0.1, 0.1, x0, b, 1e-12, 500)
        assert info == 0
        assert res <= 1e-12 * max(1.0, np.linalg.norm(b))
        xs.append(x)
    np.testing.assert_allclose(xs[0], xs[1], rtol=0, atol=1e-10)


def test_solve_tridiagonal_parity():
    n = 40
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[1:] = RNG.normal(0, 0.2, n - 1)
    upper[:-1] = RNG.normal(0, 0.2, n - 1)
    diag = 1.5 + RNG.uniform(0, 1, n)
    rhs = RNG.normal(0, 1, n)
    a = _numpy.solve_tridiagonal(lower, diag, upper, rhs)
    b = _core.solve_tridiagonal(lower, diag, upper, rhs)
    np.testing.assert_allclose(a, b, rtol=1e-12)
    A = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
    np.testing.assert_allclose(A @ b, rhs, rtol=1e-10)


def test_backend_selection_reports_name():
    import tumorbayes.kernels as k

    assert k.BACKEND in ("cython", "numpy")
    assert _core.BACKEND_NAME == "cython"
    assert _numpy.BACKEND_NAME == "numpy"
