"""Data-misfit potential, unnormalized posterior, and Hellinger estimation.

The potential is Phi(u, y) = misfit(u, y) - offset(y) with
misfit = 0.5 |Gamma^{-1/2}(G(u) - y)|^2 and offset = 0.5 |Gamma^{-1/2} y|^2,
so Phi >= -offset always.  The Metropolis acceptance ratio only ever
needs the misfit (the offset is a data constant and cancels).
"""

from __future__ import annotations

import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .grids import Grid, constant_density, initial_density_disk, initial_density_flower
from .observe import ObservationOperator, apply_observation
from .priors import ModelParams, PriorSpec, evaluate_growth_field, log_prior_density, sample_prior
from .solver import SolverConfig, SolverError, solve_forward

CACHE_DIGITS = 15  # quantization: 16 significant digits per coordinate


class EstimatorError(RuntimeError):
    """Hellinger estimator breakdown (non-finite potentials)."""


@dataclass
class PotentialEvaluation:
    """One potential evaluation: Phi = misfit - offset, with timing."""

    phi: float
    misfit: float
    offset: float
    wall_time: float

    def __post_init__(self):
        if self.misfit < 0.0:
            raise ValueError(f"negative misfit {self.misfit}")
        # Lower bound of the potential: Phi >= -offset by construction.
        assert self.phi >= -self.offset - 1e-12 * max(1.0, self.offset)


@dataclass(frozen=True)
class InitialSpec:
    """Initial-density constructor: shape plus shape parameters.

    When the prior carries entries named "c1"/"c2" the center is taken
    from the sampled unknown instead of the fixed value here.
    """

    shape: str = "flower"
    amplitude: float = 0.9
    center: tuple[float, float] = (0.0, 0.0)
    radius_sq: float = 0.2
    value: float = 0.5

    def build(self, grid: Grid, center: tuple[float, float]) -> np.ndarray:
        if self.shape == "flower":
            return initial_density_flower(grid, center, self.amplitude)
        if self.shape == "disk":
            rho = initial_density_disk(grid, self.radius_sq, self.amplitude)
            if center != (0.0, 0.0):
                raise SolverError("disk initial data supports only a centered disk")
            return rho
        if self.shape == "constant":
            return constant_density(grid, self.value)
        raise SolverError(f"unknown initial shape {self.shape!r}")


@dataclass(frozen=True)
class PdeForwardMap:
    """G(u): materialize the unknown, run the solver, observe.

    Callable on a flat parameter vector; returns the clean observation
    values as a plain array.
    """

    grid: Grid
    solver: SolverConfig
    op: ObservationOperator
    prior: PriorSpec
    initial: InitialSpec = InitialSpec()

    def materialize(self, vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(rho0, h) for the given unknown vector."""
        u = ModelParams.from_vector(self.prior, vec)
        center = self.initial.center
        names = self.prior.param_names
        if "c1" in names and "c2" in names:
            center = (u.entry(self.prior, "c1"), u.entry(self.prior, "c2"))
        rho0 = self.initial.build(self.grid, center)
        h = evaluate_growth_field(self.prior, u, self.grid)
        return rho0, h

    def __call__(self, vec: np.ndarray) -> np.ndarray:
        rho0, h = self.materialize(vec)
        sol = solve_forward(self.grid, rho0, h, self.solver, list(self.op.times))
        return apply_observation(sol, self.op, self.grid).values


class Posterior:
    """Unnormalized posterior log-density with a misfit cache.

    ``forward`` maps a flat parameter vector to clean observation
    values; forward failures surface as -inf log-posterior so a sampler
    can treat them as rejections.
    """

    def __init__(self, forward, y: np.ndarray, sigmas: np.ndarray,
                 prior: PriorSpec, bounds=None, cache_size: int = 20000):
        self.forward = forward
        self.y = np.asarray(y, dtype=float).ravel()
        self.sigmas = np.broadcast_to(np.asarray(sigmas, dtype=float),
                                      self.y.shape).copy()
        if np.any(self.sigmas <= 0):
            raise ValueError("noise stds must be positive")
        self.prior = prior
        self.bounds = bounds if bounds is not None else getattr(
            getattr(forward, "grid", None), "bounds", None)
        self.offset = 0.5 * float(np.sum((self.y / self.sigmas) ** 2))
        self.cache_size = cache_size
        self._cache: OrderedDict[tuple, float] = OrderedDict()
        self._lock = threading.Lock()
        self.n_forward_calls = 0
        self.n_forward_failures = 0

    # The cache and its lock are per-process scratch state.
    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = OrderedDict()
        state["_lock"] = None
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    @staticmethod
    def _key(vec: np.ndarray) -> tuple:
        return tuple(f"{v:.{CACHE_DIGITS}e}" for v in np.asarray(vec).ravel())

    def misfit(self, vec: np.ndarray) -> float:
        """0.5 |Gamma^{-1/2}(G(u) - y)|^2; +inf if the forward solve fails."""
        key = self._key(vec)
        with self._lock:
            if key in self._cache:
                self._cache.move_to_end(key)
                return self._cache[key]
        try:
            g = self.forward(np.asarray(vec, dtype=float))
            value = 0.5 * float(np.sum(((g - self.y) / self.sigmas) ** 2))
        except SolverError:
            self.n_forward_failures += 1
            value = np.inf
        self.n_forward_calls += 1
        with self._lock:
            self._cache[key] = value
            if len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return value

    def potential(self, vec: np.ndarray) -> PotentialEvaluation:
        """Full potential evaluation Phi = misfit - offset with wall time."""
        t0 = time.perf_counter()
        mis = self.misfit(vec)
        return PotentialEvaluation(phi=mis - self.offset, misfit=mis,
                                   offset=self.offset,
                                   wall_time=time.perf_counter() - t0)

    def log_prior(self, vec: np.ndarray) -> float:
        return log_prior_density(self.prior, np.asarray(vec), bounds=self.bounds)

    def log_posterior(self, vec: np.ndarray) -> float:
        """log prior - misfit; -inf outside support without a forward solve."""
        lp = self.log_prior(vec)
        if lp == -np.inf:
            return -np.inf
        mis = self.misfit(vec)
        if not np.isfinite(mis):
            return -np.inf
        return lp - mis

    def sample_initial(self, rng: np.random.Generator) -> np.ndarray:
        return sample_prior(self.prior, rng, bounds=self.bounds).to_vector()


@dataclass
class HellingerReport:
    """Monte-Carlo Hellinger estimate between two tilted posteriors."""

    m1: float
    m2: float
    n: int
    z1: float
    z2: float
    log_z1: float
    log_z2: float
    d_h: float
    se: float

    def csv_row(self) -> str:
        return (f"{self.m1:g},{self.m2:g},{self.n},{self.z1!r},{self.z2!r},"
                f"{self.d_h!r},{self.se!r}")

    @staticmethod
    def csv_header() -> str:
        return "m1,m2,N,Z1,Z2,dH,SE"


def _affinity(phi1: np.ndarray, phi2: np.ndarray) -> float:
    """mean exp(-(phi1+phi2)/2) / sqrt(mean exp(-phi1) mean exp(-phi2)).

    Recentring each array by its minimum leaves the ratio unchanged and
    avoids underflow.
    """
    min1, min2 = float(np.min(phi1)), float(np.min(phi2))
    w1 = np.exp(-(phi1 - min1))
    w2 = np.exp(-(phi2 - min2))
    cross = np.exp(-0.5 * ((phi1 - min1) + (phi2 - min2)))
    return float(np.mean(cross) / np.sqrt(np.mean(w1) * np.mean(w2)))


def hellinger_estimate(phi1: np.ndarray, phi2: np.ndarray,
                       m1: float = 0.0, m2: float = 0.0,
                       n_bootstrap: int = 200, seed: int = 1234) -> HellingerReport:
    """Prior-sample estimate of the Hellinger distance between two posteriors.

    Both potential arrays must come from the same prior sample set
    (paired).  d_H^2 = max(0, 1 - affinity); the standard error comes
    from paired bootstrap resampling.
    """
    phi1 = np.asarray(phi1, dtype=float).ravel()
    phi2 = np.asarray(phi2, dtype=float).ravel()
    if phi1.shape != phi2.shape:
        raise ValueError("potential arrays must be paired (same prior samples)")
    n = phi1.shape[0]
    if n < 100:
        raise ValueError(f"need at least 100 prior samples, got {n}")
    if n_bootstrap < 200:
        raise ValueError("need at least 200 bootstrap resamples")
    if not (np.all(np.isfinite(phi1)) and np.all(np.isfinite(phi2))):
        raise EstimatorError(
            "non-finite potentials: all importance weights vanish even "
            "after recentring by the minimum potential")

    d_h = float(np.sqrt(max(0.0, 1.0 - _affinity(phi1, phi2))))

    rng = np.random.default_rng(seed)
    boots = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        idx = rng.integers(0, n, size=n)
        boots[b] = np.sqrt(max(0.0, 1.0 - _affinity(phi1[idx], phi2[idx])))
    se = float(np.std(boots, ddof=1))

    min1, min2 = float(np.min(phi1)), float(np.min(phi2))
    log_z1 = float(np.log(np.mean(np.exp(-(phi1 - min1))))) - min1
    log_z2 = float(np.log(np.mean(np.exp(-(phi2 - min2))))) - min2
    return HellingerReport(m1=m1, m2=m2, n=n,
                           z1=float(np.exp(log_z1)), z2=float(np.exp(log_z2)),
                           log_z1=log_z1, log_z2=log_z2, d_h=d_h, se=se)
