"""Observation functionals, Gaussian noise synthesis, and data files.

Observations are linear functionals of density snapshots: either the
raw cell values at each observation time (``full_grid``) or integrals
against Gaussian bump test functions evaluated by the midpoint rule on
the solver grid (``functionals``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grids import Grid
from .solver import ForwardSolution, SolverConfig, solve_forward


class ObservationError(ValueError):
    """Inconsistent observation setup (missing snapshot, length mismatch)."""


@dataclass(frozen=True)
class ObservationOperator:
    """Set of linear observation functionals at fixed times.

    ``times`` must be strictly increasing.  In ``functionals`` mode each
    center carries an unnormalized Gaussian bump
    exp(-|x - c|^2 / (2 bump_std^2)) integrated against the density.
    """

    mode: str
    times: tuple[float, ...]
    centers: tuple[tuple[float, ...], ...] = ()
    bump_std: float = 0.1

    def __post_init__(self):
        if self.mode not in ("full_grid", "functionals"):
            raise ObservationError(f"unknown observation mode {self.mode!r}")
        if len(self.times) == 0 or any(t <= 0 for t in self.times):
            raise ObservationError("observation times must be positive")
        if list(self.times) != sorted(set(self.times)):
            raise ObservationError("observation times must be strictly increasing")
        if self.mode == "functionals" and len(self.centers) == 0:
            raise ObservationError("functionals mode needs at least one center")

    @property
    def n_times(self) -> int:
        return len(self.times)

    def n_per_time(self, grid: Grid) -> int:
        if self.mode == "full_grid":
            return grid.n_cells
        return len(self.centers)

    def n_obs(self, grid: Grid) -> int:
        return self.n_times * self.n_per_time(grid)


@dataclass(frozen=True)
class NoiseModel:
    """Diagonal Gaussian observation noise with a reproducible seed.

    ``sigma`` is either a scalar standard deviation shared by every
    observation or a flat per-observation array.
    """

    sigma: float | tuple[float, ...]
    seed: int = 0

    def stds(self, n_obs: int) -> np.ndarray:
        s = np.broadcast_to(np.asarray(self.sigma, dtype=float).ravel(), (n_obs,)) \
            if np.ndim(self.sigma) == 0 or len(np.atleast_1d(self.sigma)) == 1 \
            else np.asarray(self.sigma, dtype=float)
        if s.shape != (n_obs,):
            raise ObservationError(
                f"noise sigma length {s.shape} does not match n_obs={n_obs}")
        if np.any(s <= 0):
            raise ObservationError("noise variances must be positive")
        return s.copy()


@dataclass
class ObservationVector:
    """Flat vector over (time index j, functional index k), flat = j*K + k."""

    values: np.ndarray
    n_times: int
    n_per_time: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.shape[0] != self.n_times * self.n_per_time:
            raise ObservationError("observation vector length mismatch")
        if not np.all(np.isfinite(self.values)):
            raise ObservationError("observation vector has non-finite entries")

    def get(self, j: int, k: int) -> float:
        return float(self.values[j * self.n_per_time + k])


@lru_cache(maxsize=32)
def _functional_weights(op: ObservationOperator, grid: Grid) -> np.ndarray:
    """(K, n_cells) quadrature weights xi_k(x_cell) * cell volume."""
    if grid.dim == 1:
        (x,) = grid.meshgrid()
        pts = x[:, None]
    else:
        X, Y = grid.meshgrid()
        pts = np.column_stack([X.ravel(), Y.ravel()])
    w = np.empty((len(op.centers), pts.shape[0]))
    for k, c in enumerate(op.centers):
        d2 = np.sum((pts - np.asarray(c)) ** 2, axis=1)
        w[k] = np.exp(-d2 / (2.0 * op.bump_std**2))
    return w * grid.cell_volume


def apply_observation(solution: ForwardSolution, op: ObservationOperator,
                      grid: Grid) -> ObservationVector:
    """Noise-free observation of a forward solution.

    The solution must carry one snapshot per observation time, in order
    (solve_forward called with the operator's times).
    """
    if len(solution.times) != op.n_times:
        raise ObservationError(
            f"solution has {len(solution.times)} snapshots, need {op.n_times}")
    for t_req, t_snap in zip(op.times, solution.times):
        if t_snap < t_req - 1e-12:
            raise ObservationError(f"snapshot at {t_snap} precedes requested {t_req}")
    k_per = op.n_per_time(grid)
    out = np.empty(op.n_times * k_per)
    if op.mode == "full_grid":
        for j, rho in enumerate(solution.densities):
            out[j * k_per:(j + 1) * k_per] = rho.ravel()
    else:
        w = _functional_weights(op, grid)
        for j, rho in enumerate(solution.densities):
            out[j * k_per:(j + 1) * k_per] = w @ rho.ravel()
    return ObservationVector(out, op.n_times, k_per)


def add_noise(y_clean: ObservationVector, noise: NoiseModel) -> ObservationVector:
    """y = y_clean + eta with eta ~ N(0, diag(sigma^2)); reproducible per seed."""
    stds = noise.stds(y_clean.values.shape[0])
    rng = np.random.default_rng(noise.seed)
    eta = stds * rng.standard_normal(y_clean.values.shape[0])
    return ObservationVector(y_clean.values + eta, y_clean.n_times,
                             y_clean.n_per_time)


def synthesize_data(rho0: np.ndarray, h: np.ndarray, grid: Grid,
                    solver_config: SolverConfig, op: ObservationOperator,
                    noise: NoiseModel) -> tuple[ObservationVector, ObservationVector]:
    """Solve forward at the true inputs and return (noisy, clean) data."""
    sol = solve_forward(grid, rho0, h, solver_config, list(op.times))
    clean = apply_observation(sol, op, grid)
    return add_noise(clean, noise), clean


def save_observations(path: str, op: ObservationOperator, vec: ObservationVector,
                      noise: NoiseModel, clean: ObservationVector | None = None) -> None:
    """Write a data file: one header line, then one 'j k value' line per entry.

    When ``clean`` is given, a noise-free twin is written with suffix
    ``.clean``.
    """
    stds = noise.stds(vec.values.shape[0])
    sigma_txt = (repr(float(stds[0])) if np.all(stds == stds[0])
                 else ",".join(repr(float(s)) for s in stds))
    header = f"{op.mode} {vec.n_times} {vec.n_per_time} {sigma_txt} {noise.seed}"
    _write_obs(path, header, vec)
    if clean is not None:
        _write_obs(path + ".clean", header, clean)


def _write_obs(path: str, header: str, vec: ObservationVector) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for j in range(vec.n_times):
            for k in range(vec.n_per_time):
                fh.write(f"{j} {k} {vec.get(j, k)!r}\n")


def load_observations(path: str) -> tuple[str, ObservationVector, np.ndarray, int]:
    """Read a data file; returns (mode, vector, per-observation stds, seed)."""
    with open(path) as fh:
        mode, j_txt, k_txt, sigma_txt, seed_txt = fh.readline().split()
        n_times, n_per, seed = int(j_txt), int(k_txt), int(seed_txt)
        values = np.empty(n_times * n_per)
        for line in fh:
            j, k, v = line.split()
            values[int(j) * n_per + int(k)] = float(v)
    sigmas = np.array([float(s) for s in sigma_txt.split(",")])
    if sigmas.shape[0] == 1:
        sigmas = np.full(n_times * n_per, sigmas[0])
    return mode, ObservationVector(values, n_times, n_per), sigmas, seed
