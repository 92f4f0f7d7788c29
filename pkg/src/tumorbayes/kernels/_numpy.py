"""Pure numpy implementations of the hot solver kernels.

Fallback backend used when the compiled extension is unavailable; the
compiled module in ``_core.pyx`` exposes the same functions.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

BACKEND_NAME = "numpy"

# Densities at or below this floor are treated as exact vacuum when
# raising to the powers m-1 and m-2 (0^p := 0, including p = 0).
VACUUM_FLOOR = 1e-300


def pow_floor(rho: np.ndarray, p: float) -> np.ndarray:
    """rho**p with vacuum cells pinned to zero (0**0 included)."""
    rho = np.asarray(rho)
    with np.errstate(divide="ignore"):
        out = np.where(rho > VACUUM_FLOOR, rho, 1.0) ** p
    return np.where(rho > VACUUM_FLOOR, out, 0.0)


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def velocity_1d(rho: np.ndarray, m: float, dx: float) -> np.ndarray:
    """u_{i+1/2} = -(m/(m-1)) (rho_{i+1}^{m-1} - rho_i^{m-1}) / dx, zero at the boundary."""
    q = pow_floor(rho, m - 1.0)
    u = np.zeros(rho.shape[0] + 1)
    u[1:-1] = -(m / (m - 1.0)) * (q[1:] - q[:-1]) / dx
    return u


def velocity_2d(rho: np.ndarray, m: float, dx: float, dy: float):
    q = pow_floor(rho, m - 1.0)
    ny, nx = rho.shape
    ux = np.zeros((ny, nx + 1))
    uy = np.zeros((ny + 1, nx))
    ux[:, 1:-1] = -(m / (m - 1.0)) * (q[:, 1:] - q[:, :-1]) / dx
    uy[1:-1, :] = -(m / (m - 1.0)) * (q[1:, :] - q[:-1, :]) / dy
    return ux, uy


def _slopes(rho: np.ndarray, dx: float, axis: int) -> np.ndarray:
    """Minmod-limited slopes per cell; boundary cells get slope zero."""
    d = np.diff(rho, axis=axis) / dx
    s = np.zeros_like(rho)
    inner = _minmod(np.take(d, range(d.shape[axis] - 1), axis=axis),
                    np.take(d, range(1, d.shape[axis]), axis=axis))
    sl = [slice(None)] * rho.ndim
    sl[axis] = slice(1, -1)
    s[tuple(sl)] = inner
    return s


def _face_flux(rho_l: np.ndarray, rho_r: np.ndarray, u: np.ndarray) -> np.ndarray:
    return 0.5 * (rho_l * u + rho_r * u - np.abs(u) * (rho_r - rho_l))


def transport_1d(rho: np.ndarray, u: np.ndarray, h: np.ndarray,
                 dt: float, dx: float):
    """One explicit-flux, implicit-growth transport update.

    Returns (rho_new, clamp_sum, n_clamped) where clamp_sum is the total
    cell-value magnitude clipped at zero.
    """
    n = rho.shape[0]
    s = _slopes(rho, dx, axis=0)
    rho_l = rho[:-1] + 0.5 * dx * s[:-1]
    rho_r = rho[1:] - 0.5 * dx * s[1:]
    flux = np.zeros(n + 1)
    flux[1:-1] = _face_flux(rho_l, rho_r, u[1:-1])
    rho_new = (rho - (dt / dx) * (flux[1:] - flux[:-1])) / (1.0 - dt * h)
    neg = np.minimum(rho_new, 0.0)
    clamp_sum = -float(neg.sum())
    n_clamped = int(np.count_nonzero(neg))
    return np.maximum(rho_new, 0.0), clamp_sum, n_clamped


def transport_2d(rho: np.ndarray, ux: np.ndarray, uy: np.ndarray,
                 h: np.ndarray, dt: float, dx: float, dy: float):
    ny, nx = rho.shape
    sx = _slopes(rho, dx, axis=1)
    sy = _slopes(rho, dy, axis=0)

    rho_l = rho[:, :-1] + 0.5 * dx * sx[:, :-1]
    rho_r = rho[:, 1:] - 0.5 * dx * sx[:, 1:]
    fx = np.zeros((ny, nx + 1))
    fx[:, 1:-1] = _face_flux(rho_l, rho_r, ux[:, 1:-1])

    rho_b = rho[:-1, :] + 0.5 * dy * sy[:-1, :]
    rho_t = rho[1:, :] - 0.5 * dy * sy[1:, :]
    fy = np.zeros((ny + 1, nx))
    fy[1:-1, :] = _face_flux(rho_b, rho_t, uy[1:-1, :])

    div = (fx[:, 1:] - fx[:, :-1]) / dx + (fy[1:, :] - fy[:-1, :]) / dy
    rho_new = (rho - dt * div) / (1.0 - dt * h)
    neg = np.minimum(rho_new, 0.0)
    clamp_sum = -float(neg.sum())
    n_clamped = int(np.count_nonzero(neg))
    return np.maximum(rho_new, 0.0), clamp_sum, n_clamped


def prediction_matvec_2d(rho_xf: np.ndarray, rho_yf: np.ndarray, w: np.ndarray,
                         mdt: float, dx: float, dy: float,
                         ux: np.ndarray, uy: np.ndarray,
                         out_ux: np.ndarray, out_uy: np.ndarray,
                         cell_scratch: np.ndarray) -> None:
    """Apply u - m*dt*grad(w * div(rho_f u)) on interior-face arrays.

    ``rho_xf``/``rho_yf`` hold interior-face densities, shapes
    (ny, nx-1) and (ny-1, nx); ``w`` holds rho^{m-2} per cell;
    ``cell_scratch`` is an (ny, nx) work array.
    """
    ny, nx = w.shape
    a = cell_scratch
    a[:] = 0.0
    rxu = rho_xf * ux
    ryu = rho_yf * uy
    a[:, :-1] += rxu / dx
    a[:, 1:] -= rxu / dx
    a[:-1, :] += ryu / dy
    a[1:, :] -= ryu / dy
    a *= w
    np.subtract(ux, (mdt / dx) * (a[:, 1:] - a[:, :-1]), out=out_ux)
    np.subtract(uy, (mdt / dy) * (a[1:, :] - a[:-1, :]), out=out_uy)


def prediction_diag_2d(rho_xf: np.ndarray, rho_yf: np.ndarray, w: np.ndarray,
                       mdt: float, dx: float, dy: float):
    """Diagonal of the prediction-step operator, for Jacobi preconditioning."""
    dxd = 1.0 + (mdt / dx**2) * (w[:, :-1] + w[:, 1:]) * rho_xf
    dyd = 1.0 + (mdt / dy**2) * (w[:-1, :] + w[1:, :]) * rho_yf
    return dxd, dyd


def prediction_bicgstab_2d(rho_xf: np.ndarray, rho_yf: np.ndarray, w: np.ndarray,
                           mdt: float, dx: float, dy: float,
                           x0: np.ndarray, b: np.ndarray,
                           tol: float, maxiter: int):
    """Jacobi-preconditioned BiCGSTAB on the packed 2D prediction system.

    Returns (x, info, residual_norm) with the same contract as the
    compiled backend; this version delegates to scipy.
    """
    from scipy.sparse.linalg import LinearOperator, bicgstab

    ny, nx = w.shape
    n_ux = ny * (nx - 1)
    n = n_ux + (ny - 1) * nx
    scratch = np.empty((ny, nx))

    def matvec(vec):
        vec = np.ascontiguousarray(vec, dtype=np.float64)
        out = np.empty(n)
        prediction_matvec_2d(rho_xf, rho_yf, w, mdt, dx, dy,
                             vec[:n_ux].reshape(ny, nx - 1),
                             vec[n_ux:].reshape(ny - 1, nx),
                             out[:n_ux].reshape(ny, nx - 1),
                             out[n_ux:].reshape(ny - 1, nx), scratch)
        return out

    dxd, dyd = prediction_diag_2d(rho_xf, rho_yf, w, mdt, dx, dy)
    diag = np.concatenate([dxd.ravel(), dyd.ravel()])
    A = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
    M = LinearOperator((n, n), matvec=lambda v: v / diag, dtype=np.float64)
    x, info = bicgstab(A, b, x0=x0, rtol=tol, atol=tol, maxiter=maxiter, M=M)
    residual = float(np.linalg.norm(b - matvec(x)))
    if residual <= tol * max(1.0, float(np.linalg.norm(b))):
        info = 0
    return x, info, residual


def solve_tridiagonal(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray,
                      rhs: np.ndarray) -> np.ndarray:
    """Direct solve of a tridiagonal system (lower[0] and upper[-1] unused)."""
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)
