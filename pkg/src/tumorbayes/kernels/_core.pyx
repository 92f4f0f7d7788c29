# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the forward-solver inner loop.

Mirrors the public functions of ``_numpy``; selected at import time by
``tumorbayes.kernels`` when the extension built successfully.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt

cnp.import_array()

BACKEND_NAME = "cython"

VACUUM_FLOOR = 1e-300

cdef double _FLOOR = 1e-300


cdef inline double _pow_floor(double r, double p) nogil:
    if r > _FLOOR:
        return pow(r, p)
    return 0.0


cdef inline double _minmod(double a, double b) nogil:
    if a > 0.0 and b > 0.0:
        return a if a < b else b
    if a < 0.0 and b < 0.0:
        return a if a > b else b
    return 0.0


def pow_floor(rho, double p):
    """rho**p with vacuum cells pinned to zero (0**0 included)."""
    cdef cnp.ndarray arr = np.ascontiguousarray(rho, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] src = arr.ravel()
    cdef double[::1] dst = out.ravel()
    cdef Py_ssize_t k
    for k in range(src.shape[0]):
        dst[k] = _pow_floor(src[k], p)
    return out


def velocity_1d(double[::1] rho, double m, double dx):
    cdef Py_ssize_t n = rho.shape[0]
    cdef cnp.ndarray out = np.zeros(n + 1)
    cdef double[::1] u = out
    cdef double c = -(m / (m - 1.0)) / dx
    cdef Py_ssize_t i
    for i in range(1, n):
        u[i] = c * (_pow_floor(rho[i], m - 1.0) - _pow_floor(rho[i - 1], m - 1.0))
    return out


def velocity_2d(double[:, ::1] rho, double m, double dx, double dy):
    cdef Py_ssize_t ny = rho.shape[0], nx = rho.shape[1]
    cdef cnp.ndarray outx = np.zeros((ny, nx + 1))
    cdef cnp.ndarray outy = np.zeros((ny + 1, nx))
    cdef double[:, ::1] ux = outx
    cdef double[:, ::1] uy = outy
    cdef double cx = -(m / (m - 1.0)) / dx
    cdef double cy = -(m / (m - 1.0)) / dy
    cdef Py_ssize_t i, j
    cdef double qc, qw
    for j in range(ny):
        qw = _pow_floor(rho[j, 0], m - 1.0)
        for i in range(1, nx):
            qc = _pow_floor(rho[j, i], m - 1.0)
            ux[j, i] = cx * (qc - qw)
            qw = qc
    for j in range(1, ny):
        for i in range(nx):
            uy[j, i] = cy * (_pow_floor(rho[j, i], m - 1.0)
                             - _pow_floor(rho[j - 1, i], m - 1.0))
    return outx, outy


def transport_1d(double[::1] rho, double[::1] u, double[::1] h,
                 double dt, double dx):
    cdef Py_ssize_t n = rho.shape[0]
    cdef cnp.ndarray out = np.empty(n)
    cdef double[::1] rn = out
    cdef cnp.ndarray flux_arr = np.zeros(n + 1)
    cdef double[::1] flux = flux_arr
    cdef Py_ssize_t i
    cdef double sl, sr, rl, rr, uu, val, clamp_sum = 0.0
    cdef long n_clamped = 0
    for i in range(1, n):
        sl = 0.0 if i - 1 == 0 else _minmod((rho[i - 1] - rho[i - 2]) / dx,
                                            (rho[i] - rho[i - 1]) / dx)
        sr = 0.0 if i == n - 1 else _minmod((rho[i] - rho[i - 1]) / dx,
                                            (rho[i + 1] - rho[i]) / dx)
        rl = rho[i - 1] + 0.5 * dx * sl
        rr = rho[i] - 0.5 * dx * sr
        uu = u[i]
        flux[i] = 0.5 * (rl * uu + rr * uu - fabs(uu) * (rr - rl))
    for i in range(n):
        val = (rho[i] - (dt / dx) * (flux[i + 1] - flux[i])) / (1.0 - dt * h[i])
        if val < 0.0:
            clamp_sum -= val
            n_clamped += 1
            val = 0.0
        rn[i] = val
    return out, clamp_sum, n_clamped


cdef inline double _slope_x(double[:, ::1] rho, Py_ssize_t j, Py_ssize_t i,
                            double dx, Py_ssize_t nx) nogil:
    if i == 0 or i == nx - 1:
        return 0.0
    return _minmod((rho[j, i] - rho[j, i - 1]) / dx,
                   (rho[j, i + 1] - rho[j, i]) / dx)


cdef inline double _slope_y(double[:, ::1] rho, Py_ssize_t j, Py_ssize_t i,
                            double dy, Py_ssize_t ny) nogil:
    if j == 0 or j == ny - 1:
        return 0.0
    return _minmod((rho[j, i] - rho[j - 1, i]) / dy,
                   (rho[j + 1, i] - rho[j, i]) / dy)


def transport_2d(double[:, ::1] rho, double[:, ::1] ux, double[:, ::1] uy,
                 double[:, ::1] h, double dt, double dx, double dy):
    cdef Py_ssize_t ny = rho.shape[0], nx = rho.shape[1]
    cdef cnp.ndarray out = np.empty((ny, nx))
    cdef double[:, ::1] rn = out
    cdef cnp.ndarray fx_arr = np.zeros((ny, nx + 1))
    cdef cnp.ndarray fy_arr = np.zeros((ny + 1, nx))
    cdef double[:, ::1] fx = fx_arr
    cdef double[:, ::1] fy = fy_arr
    cdef Py_ssize_t i, j
    cdef double rl, rr, uu, val, div, clamp_sum = 0.0
    cdef long n_clamped = 0
    for j in range(ny):
        for i in range(1, nx):
            rl = rho[j, i - 1] + 0.5 * dx * _slope_x(rho, j, i - 1, dx, nx)
            rr = rho[j, i] - 0.5 * dx * _slope_x(rho, j, i, dx, nx)
            uu = ux[j, i]
            fx[j, i] = 0.5 * (rl * uu + rr * uu - fabs(uu) * (rr - rl))
    for j in range(1, ny):
        for i in range(nx):
            rl = rho[j - 1, i] + 0.5 * dy * _slope_y(rho, j - 1, i, dy, ny)
            rr = rho[j, i] - 0.5 * dy * _slope_y(rho, j, i, dy, ny)
            uu = uy[j, i]
            fy[j, i] = 0.5 * (rl * uu + rr * uu - fabs(uu) * (rr - rl))
    for j in range(ny):
        for i in range(nx):
            div = (fx[j, i + 1] - fx[j, i]) / dx + (fy[j + 1, i] - fy[j, i]) / dy
            val = (rho[j, i] - dt * div) / (1.0 - dt * h[j, i])
            if val < 0.0:
                clamp_sum -= val
                n_clamped += 1
                val = 0.0
            rn[j, i] = val
    return out, clamp_sum, n_clamped


def prediction_matvec_2d(double[:, ::1] rho_xf, double[:, ::1] rho_yf,
                         double[:, ::1] w, double mdt, double dx, double dy,
                         double[:, ::1] ux, double[:, ::1] uy,
                         double[:, ::1] out_ux, double[:, ::1] out_uy,
                         double[:, ::1] cell_scratch):
    cdef Py_ssize_t ny = w.shape[0], nx = w.shape[1]
    cdef double[:, ::1] a = cell_scratch
    cdef Py_ssize_t i, j
    cdef double east, west, north, south
    for j in range(ny):
        for i in range(nx):
            east = rho_xf[j, i] * ux[j, i] if i < nx - 1 else 0.0
            west = rho_xf[j, i - 1] * ux[j, i - 1] if i > 0 else 0.0
            north = rho_yf[j, i] * uy[j, i] if j < ny - 1 else 0.0
            south = rho_yf[j - 1, i] * uy[j - 1, i] if j > 0 else 0.0
            a[j, i] = w[j, i] * ((east - west) / dx + (north - south) / dy)
    for j in range(ny):
        for i in range(nx - 1):
            out_ux[j, i] = ux[j, i] - (mdt / dx) * (a[j, i + 1] - a[j, i])
    for j in range(ny - 1):
        for i in range(nx):
            out_uy[j, i] = uy[j, i] - (mdt / dy) * (a[j + 1, i] - a[j, i])


def prediction_diag_2d(rho_xf, rho_yf, w, double mdt, double dx, double dy):
    dxd = 1.0 + (mdt / dx**2) * (np.asarray(w)[:, :-1] + np.asarray(w)[:, 1:]) * np.asarray(rho_xf)
    dyd = 1.0 + (mdt / dy**2) * (np.asarray(w)[:-1, :] + np.asarray(w)[1:, :]) * np.asarray(rho_yf)
    return dxd, dyd


cdef void _apply_2d(double[:, ::1] rho_xf, double[:, ::1] rho_yf,
                    double[:, ::1] w, double mdt, double dx, double dy,
                    double[::1] x, double[::1] out,
                    double[:, ::1] a) nogil:
    """Packed-vector form of prediction_matvec_2d (x-faces then y-faces)."""
    cdef Py_ssize_t ny = w.shape[0], nx = w.shape[1]
    cdef Py_ssize_t n_ux = ny * (nx - 1)
    cdef Py_ssize_t i, j
    cdef double east, west, north, south
    for j in range(ny):
        for i in range(nx):
            east = rho_xf[j, i] * x[j * (nx - 1) + i] if i < nx - 1 else 0.0
            west = rho_xf[j, i - 1] * x[j * (nx - 1) + i - 1] if i > 0 else 0.0
            north = rho_yf[j, i] * x[n_ux + j * nx + i] if j < ny - 1 else 0.0
            south = rho_yf[j - 1, i] * x[n_ux + (j - 1) * nx + i] if j > 0 else 0.0
            a[j, i] = w[j, i] * ((east - west) / dx + (north - south) / dy)
    for j in range(ny):
        for i in range(nx - 1):
            out[j * (nx - 1) + i] = x[j * (nx - 1) + i] - (mdt / dx) * (a[j, i + 1] - a[j, i])
    for j in range(ny - 1):
        for i in range(nx):
            out[n_ux + j * nx + i] = x[n_ux + j * nx + i] - (mdt / dy) * (a[j + 1, i] - a[j, i])


cdef double _dot(double[::1] a, double[::1] b) nogil:
    cdef double s = 0.0
    cdef Py_ssize_t k
    for k in range(a.shape[0]):
        s += a[k] * b[k]
    return s


def prediction_bicgstab_2d(double[:, ::1] rho_xf, double[:, ::1] rho_yf,
                           double[:, ::1] w, double mdt, double dx, double dy,
                           double[::1] x0, double[::1] b,
                           double tol, int maxiter):
    """Jacobi-preconditioned BiCGSTAB for the packed 2D prediction system.

    Returns (x, info, residual_norm); info 0 on convergence, >0 after
    maxiter, <0 on breakdown (caller falls back to another solver).
    """
    cdef Py_ssize_t ny = w.shape[0], nx = w.shape[1]
    cdef Py_ssize_t n = ny * (nx - 1) + (ny - 1) * nx
    cdef cnp.ndarray x_arr = np.array(x0, copy=True)
    cdef double[::1] x = x_arr
    cdef cnp.ndarray scratch = np.empty((ny, nx))
    cdef double[:, ::1] a = scratch

    cdef double[::1] inv_d = np.empty(n)
    cdef Py_ssize_t i, j, k
    for j in range(ny):
        for i in range(nx - 1):
            inv_d[j * (nx - 1) + i] = 1.0 / (
                1.0 + (mdt / (dx * dx)) * (w[j, i] + w[j, i + 1]) * rho_xf[j, i])
    for j in range(ny - 1):
        for i in range(nx):
            inv_d[ny * (nx - 1) + j * nx + i] = 1.0 / (
                1.0 + (mdt / (dy * dy)) * (w[j, i] + w[j + 1, i]) * rho_yf[j, i])

    cdef double[::1] r = np.empty(n)
    cdef double[::1] r_hat = np.empty(n)
    cdef double[::1] p = np.zeros(n)
    cdef double[::1] v = np.zeros(n)
    cdef double[::1] p_hat = np.empty(n)
    cdef double[::1] s = np.empty(n)
    cdef double[::1] s_hat = np.empty(n)
    cdef double[::1] t = np.empty(n)

    cdef double target, rho_k, rho_prev, alpha, omega, beta, tt, rnorm
    cdef int it, info

    _apply_2d(rho_xf, rho_yf, w, mdt, dx, dy, x, r, a)
    for k in range(n):
        r[k] = b[k] - r[k]
        r_hat[k] = r[k]
    target = sqrt(_dot(b, b))
    target = tol * (target if target > 1.0 else 1.0)
    rnorm = sqrt(_dot(r, r))
    if rnorm <= target:
        return x_arr, 0, rnorm

    rho_prev = 1.0
    alpha = 1.0
    omega = 1.0
    info = 1
    for it in range(maxiter):
        rho_k = _dot(r_hat, r)
        if rho_k == 0.0:
            info = -1
            break
        if it == 0:
            for k in range(n):
                p[k] = r[k]
        else:
            if omega == 0.0:
                info = -1
                break
            beta = (rho_k / rho_prev) * (alpha / omega)
            for k in range(n):
                p[k] = r[k] + beta * (p[k] - omega * v[k])
        for k in range(n):
            p_hat[k] = inv_d[k] * p[k]
        _apply_2d(rho_xf, rho_yf, w, mdt, dx, dy, p_hat, v, a)
        alpha = _dot(r_hat, v)
        if alpha == 0.0:
            info = -1
            break
        alpha = rho_k / alpha
        for k in range(n):
            s[k] = r[k] - alpha * v[k]
        if sqrt(_dot(s, s)) <= target:
            for k in range(n):
                x[k] += alpha * p_hat[k]
            info = 0
            break
        for k in range(n):
            s_hat[k] = inv_d[k] * s[k]
        _apply_2d(rho_xf, rho_yf, w, mdt, dx, dy, s_hat, t, a)
        tt = _dot(t, t)
        if tt == 0.0:
            info = -1
            break
        omega = _dot(t, s) / tt
        for k in range(n):
            x[k] += alpha * p_hat[k] + omega * s_hat[k]
            r[k] = s[k] - omega * t[k]
        if sqrt(_dot(r, r)) <= target:
            info = 0
            break
        rho_prev = rho_k

    _apply_2d(rho_xf, rho_yf, w, mdt, dx, dy, x, t, a)
    for k in range(n):
        t[k] = b[k] - t[k]
    rnorm = sqrt(_dot(t, t))
    if info != 0 and rnorm <= target:
        info = 0
    return x_arr, info, rnorm


def solve_tridiagonal(double[::1] lower, double[::1] diag, double[::1] upper,
                      double[::1] rhs):
    """Thomas algorithm; lower[0] and upper[-1] are ignored."""
    cdef Py_ssize_t n = diag.shape[0]
    cdef cnp.ndarray out = np.empty(n)
    cdef double[::1] x = out
    cdef cnp.ndarray cp_arr = np.empty(n)
    cdef cnp.ndarray dp_arr = np.empty(n)
    cdef double[::1] cp = cp_arr
    cdef double[::1] dp = dp_arr
    cdef Py_ssize_t i
    cdef double denom
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / denom if i < n - 1 else 0.0
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return out
