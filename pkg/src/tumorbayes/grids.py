"""Uniform cell-centered grids, staggered velocity storage, and initial data.

Scalars (density, growth rate) live at cell centers; velocity components
live at cell faces (Arakawa C staggering).  In 2D arrays are indexed
``[j, i]`` with ``j`` the y-index (row) and ``i`` the x-index (column).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Invalid grid construction parameters."""


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular mesh in 1 or 2 space dimensions.

    Attributes:
        dim: 1 or 2.
        bounds: ((a, b),) in 1D or ((ax, bx), (ay, by)) in 2D.
        n: cells per axis, (nx,) or (nx, ny).
    """

    dim: int
    bounds: tuple[tuple[float, float], ...]
    n: tuple[int, ...]

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple((b - a) / m for (a, b), m in zip(self.bounds, self.n))

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for h in self.dx:
            vol *= h
        return vol

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape of a cell-centered field ((ny, nx) in 2D)."""
        return tuple(reversed(self.n))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.n))

    def cell_centers(self, axis: int) -> np.ndarray:
        """1D array of cell-center coordinates along ``axis``."""
        (a, b), m = self.bounds[axis], self.n[axis]
        h = (b - a) / m
        return a + (np.arange(m) + 0.5) * h

    def face_coords(self, axis: int) -> np.ndarray:
        """1D array of face coordinates along ``axis`` (length n+1)."""
        (a, b), m = self.bounds[axis], self.n[axis]
        h = (b - a) / m
        return a + np.arange(m + 1) * h

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, each shaped like a cell field."""
        if self.dim == 1:
            return (self.cell_centers(0),)
        x, y = self.cell_centers(0), self.cell_centers(1)
        return np.meshgrid(x, y)  # X[j, i], Y[j, i]


def build_grid(dim: int,
               bounds: tuple[tuple[float, float], ...],
               n_per_axis: tuple[int, ...]) -> Grid:
    """Construct a uniform grid, validating sizes and bounds.

    Raises GridError for fewer than 4 cells per axis or degenerate bounds.
    """
    if dim not in (1, 2):
        raise GridError(f"dim must be 1 or 2, got {dim}")
    bounds = tuple((float(a), float(b)) for a, b in bounds)
    n_per_axis = tuple(int(m) for m in n_per_axis)
    if len(bounds) != dim or len(n_per_axis) != dim:
        raise GridError("bounds and n_per_axis must have one entry per axis")
    for (a, b) in bounds:
        if not b > a:
            raise GridError(f"degenerate bounds ({a}, {b})")
    for m in n_per_axis:
        if m < 4:
            raise GridError(f"need at least 4 cells per axis, got {m}")
    return Grid(dim=dim, bounds=bounds, n=n_per_axis)


@dataclass
class VelocityField:
    """Face-centered velocity components, zero on domain boundary faces.

    In 1D ``components = (u,)`` with ``u.shape == (nx+1,)``.
    In 2D ``components = (ux, uy)`` with ``ux.shape == (ny, nx+1)`` on
    x-faces and ``uy.shape == (ny+1, nx)`` on y-faces.
    """

    components: tuple[np.ndarray, ...]

    @classmethod
    def zeros(cls, grid: Grid) -> "VelocityField":
        if grid.dim == 1:
            return cls((np.zeros(grid.n[0] + 1),))
        nx, ny = grid.n
        return cls((np.zeros((ny, nx + 1)), np.zeros((ny + 1, nx))))

    def copy(self) -> "VelocityField":
        return VelocityField(tuple(c.copy() for c in self.components))

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(c))) for c in self.components)


def initial_density_flower(grid: Grid, center: tuple[float, float],
                           amplitude: float) -> np.ndarray:
    """Four-petal indicator initial data on a 2D grid.

    A cell center (x, y) is filled with ``amplitude`` when
    ``r - 0.5 - 0.5*sin(4*theta) < 0`` with (r, theta) the polar
    coordinates of (x - c1, y - c2); the angle uses the two-argument
    arctangent, which agrees with the principal-branch form because
    sin(4*(theta + pi)) = sin(4*theta).  Cells exactly at the center
    get ``amplitude``.
    """
    if grid.dim != 2:
        raise GridError("flower initial data requires a 2D grid")
    c1, c2 = center
    _check_center_inside(grid, center)
    X, Y = grid.meshgrid()
    rx, ry = X - c1, Y - c2
    r = np.hypot(rx, ry)
    theta = np.arctan2(ry, rx)
    inside = r - 0.5 - 0.5 * np.sin(4.0 * theta) < 0.0
    return np.where(inside, float(amplitude), 0.0)


def initial_density_disk(grid: Grid, radius_sq: float,
                         amplitude: float) -> np.ndarray:
    """Indicator of the disk x^2 + y^2 < radius_sq, times ``amplitude``."""
    if grid.dim != 2:
        raise GridError("disk initial data requires a 2D grid")
    X, Y = grid.meshgrid()
    return np.where(X * X + Y * Y < float(radius_sq), float(amplitude), 0.0)


def constant_density(grid: Grid, value: float) -> np.ndarray:
    return np.full(grid.shape, float(value))


def _check_center_inside(grid: Grid, center: tuple[float, float]) -> None:
    for c, (a, b) in zip(center, grid.bounds):
        if not (a < c < b):
            raise GridError(f"center coordinate {c} outside open domain ({a}, {b})")


def face_average(rho: np.ndarray, axis: int = -1) -> np.ndarray:
    """Arithmetic mean of adjacent cells on interior faces along ``axis``."""
    lo = np.take(rho, range(rho.shape[axis] - 1), axis=axis)
    hi = np.take(rho, range(1, rho.shape[axis]), axis=axis)
    return 0.5 * (lo + hi)


def minmod_slope(rho_left: float, rho_center: float, rho_right: float,
                 dx: float) -> float:
    """Minmod-limited slope from a three-cell stencil.

    Returns sign(a) * min(|a|, |b|) for the one-sided slopes
    a = (rho_c - rho_l)/dx, b = (rho_r - rho_c)/dx when they share a
    sign, and 0 otherwise (local extremum).
    """
    a = (rho_center - rho_left) / dx
    b = (rho_right - rho_center) / dx
    if a * b <= 0.0:
        return 0.0
    return float(np.sign(a) * min(abs(a), abs(b)))


def total_mass(grid: Grid, rho: np.ndarray) -> float:
    return float(np.sum(rho)) * grid.cell_volume


def level_set_radius(grid: Grid, rho: np.ndarray, level: float) -> float:
    """Equivalent radius sqrt(area / pi) of the region rho > level."""
    area = float(np.count_nonzero(rho > level)) * grid.cell_volume
    return float(np.sqrt(area / np.pi))


def save_density(path: str, grid: Grid, rho: np.ndarray, time: float) -> None:
    """Write a density snapshot as a whitespace-delimited text matrix.

    Rows are y-indices, columns x-indices.  A sidecar ``<path>.meta``
    carries bounds, cell counts and the simulation time stamp.
    """
    np.savetxt(path, np.atleast_2d(rho))
    lines = [f"dim = {grid.dim}"]
    for ax in range(grid.dim):
        a, b = grid.bounds[ax]
        lines.append(f"bounds{ax} = {a!r} {b!r}")
    lines.append("n = " + " ".join(str(m) for m in grid.n))
    lines.append(f"time = {time!r}")
    with open(path + ".meta", "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_density(path: str) -> tuple[Grid, np.ndarray, float]:
    """Read a snapshot written by :func:`save_density`."""
    meta: dict[str, str] = {}
    with open(path + ".meta") as fh:
        for line in fh:
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    dim = int(meta["dim"])
    bounds = tuple(
        tuple(float(v) for v in meta[f"bounds{ax}"].split()) for ax in range(dim)
    )
    n = tuple(int(v) for v in meta["n"].split())
    grid = build_grid(dim, bounds, n)
    rho = np.loadtxt(path)
    if dim == 1:
        rho = np.atleast_1d(rho)
    else:
        rho = np.atleast_2d(rho)
    return grid, rho.reshape(grid.shape), float(meta["time"])
