"""Priors over the unknowns: parametric block plus growth-field expansion.

The unknown u = (z, g) stacks a small parametric block z (named
entries such as a scalar growth rate "h" or an initial-data center
"c1", "c2") and coefficients g of a truncated basis expansion
h(x) = h0 + sum_i g_i phi_i(x) for the spatially varying growth rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grids import Grid

_LOG_2PI = float(np.log(2.0 * np.pi))


class PriorError(ValueError):
    """Invalid prior specification."""


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if not self.high > self.low:
            raise PriorError(f"uniform bounds ({self.low}, {self.high}) degenerate")

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.low, self.high))

    def logpdf(self, x: float) -> float:
        if self.low <= x <= self.high:
            return -float(np.log(self.high - self.low))
        return -np.inf

    @property
    def scale(self) -> float:
        return (self.high - self.low) / np.sqrt(12.0)


@dataclass(frozen=True)
class Normal:
    mu: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise PriorError(f"normal sd must be positive, got {self.sd}")

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.mu + self.sd * rng.standard_normal())

    def logpdf(self, x: float) -> float:
        z = (x - self.mu) / self.sd
        return -0.5 * z * z - float(np.log(self.sd)) - 0.5 * _LOG_2PI

    @property
    def scale(self) -> float:
        return self.sd


@dataclass(frozen=True)
class FieldPrior:
    """Truncated expansion of h(x) around baseline h0.

    ``basis`` is "sine" (Dirichlet eigenfunctions of the rectangle,
    L-infinity normalized, eigenvalue-sorted) or "test3" (the built-in
    three-function set sin(pi x), sin(pi y), cos(pi x) cos(pi y)).
    Coefficients are sampled g_i ~ N(0, coeff_sds[i]^2); when
    ``coeff_sds`` is empty the spectral weights gamma_i = lambda_i^{-s/2}
    are used as the standard deviations.
    """

    n_modes: int
    basis: str = "sine"
    h0: float = 0.0
    coeff_sds: tuple[float, ...] = ()
    s: float = 2.0

    def __post_init__(self):
        if self.n_modes < 1:
            raise PriorError("field prior needs n_modes >= 1")
        if self.basis not in ("sine", "test3"):
            raise PriorError(f"unknown basis {self.basis!r}")
        if self.basis == "test3" and self.n_modes > 3:
            raise PriorError("test3 basis has exactly 3 functions")
        if self.coeff_sds and len(self.coeff_sds) != self.n_modes:
            raise PriorError("coeff_sds length must equal n_modes")
        if any(c <= 0 for c in self.coeff_sds):
            raise PriorError("coeff_sds must be positive")
        if not self.coeff_sds and self.s <= 1.0:
            raise PriorError("spectral decay rule requires s > 1")


@dataclass(frozen=True)
class PriorSpec:
    """Product prior: independent parametric entries and field coefficients."""

    param_names: tuple[str, ...] = ()
    param_laws: tuple[Uniform | Normal, ...] = ()
    field: FieldPrior | None = None

    def __post_init__(self):
        if len(self.param_names) != len(self.param_laws):
            raise PriorError("one law per parametric entry required")
        if len(set(self.param_names)) != len(self.param_names):
            raise PriorError("duplicate parametric names")
        if self.field is None and not self.param_names:
            raise PriorError("empty prior: no parametric entries and no field")

    @property
    def n_field(self) -> int:
        return self.field.n_modes if self.field is not None else 0

    @property
    def dim(self) -> int:
        return len(self.param_names) + self.n_field

    @property
    def coord_names(self) -> tuple[str, ...]:
        return self.param_names + tuple(
            f"g{i + 1}" for i in range(self.n_field))

    def field_sds(self, bounds: tuple[tuple[float, float], ...]) -> np.ndarray:
        if self.field is None:
            return np.zeros(0)
        if self.field.coeff_sds:
            return np.asarray(self.field.coeff_sds, dtype=float)
        return basis_gammas(self.field, bounds)

    def coord_scales(self, bounds=None) -> np.ndarray:
        """Typical scale per coordinate (prior std); proposal defaults."""
        scales = [law.scale for law in self.param_laws]
        if self.field is not None:
            if self.field.coeff_sds:
                scales.extend(self.field.coeff_sds)
            else:
                scales.extend(basis_gammas(self.field, bounds))
        return np.asarray(scales, dtype=float)


@dataclass
class ModelParams:
    """A point in the unknown space: parametric block z, field block g."""

    z: np.ndarray
    g: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.atleast_1d(self.z), np.atleast_1d(self.g)])

    @classmethod
    def from_vector(cls, spec: PriorSpec, vec: np.ndarray) -> "ModelParams":
        vec = np.asarray(vec, dtype=float).ravel()
        if vec.shape[0] != spec.dim:
            raise PriorError(f"vector length {vec.shape[0]} != prior dim {spec.dim}")
        nz = len(spec.param_names)
        return cls(z=vec[:nz].copy(), g=vec[nz:].copy())

    def entry(self, spec: PriorSpec, name: str) -> float:
        return float(self.to_vector()[spec.coord_names.index(name)])


def sample_prior(spec: PriorSpec, rng: np.random.Generator,
                 bounds=None) -> ModelParams:
    """Independent draw from every block; g_i ~ N(0, c_i^2)."""
    z = np.array([law.sample(rng) for law in spec.param_laws])
    sds = spec.field_sds(bounds) if spec.field is not None else np.zeros(0)
    g = sds * rng.standard_normal(spec.n_field)
    return ModelParams(z=z, g=g)


def log_prior_density(spec: PriorSpec, u: ModelParams | np.ndarray,
                      bounds=None) -> float:
    """Sum of per-block log densities; -inf outside uniform supports."""
    if not isinstance(u, ModelParams):
        u = ModelParams.from_vector(spec, u)
    total = 0.0
    for law, x in zip(spec.param_laws, u.z):
        lp = law.logpdf(float(x))
        if lp == -np.inf:
            return -np.inf
        total += lp
    if spec.field is not None:
        sds = spec.field_sds(bounds)
        zscores = np.asarray(u.g) / sds
        total += float(np.sum(-0.5 * zscores**2 - np.log(sds) - 0.5 * _LOG_2PI))
    return total


def evaluate_growth_field(spec: PriorSpec, u: ModelParams | np.ndarray,
                          grid: Grid) -> np.ndarray:
    """Cell-centered h(x) for the given unknown.

    A parametric entry named "h" yields the constant field; otherwise
    h = h0 + sum_i g_i phi_i(x) from the field block.
    """
    if not isinstance(u, ModelParams):
        u = ModelParams.from_vector(spec, u)
    if "h" in spec.param_names:
        hbar = u.z[spec.param_names.index("h")]
        return np.full(grid.shape, float(hbar))
    if spec.field is None:
        raise PriorError("prior carries neither a scalar 'h' nor a field block")
    phi = basis_eval(spec.field, grid)
    return spec.field.h0 + np.tensordot(np.asarray(u.g), phi, axes=1)


def tensor_sine_basis(bounds: tuple[tuple[float, float], ...], n_modes: int,
                      s: float):
    """Dirichlet eigenpairs of -Laplace on a rectangle, sorted by eigenvalue.

    Returns (modes, lambdas, gammas): mode index tuples, eigenvalues
    lambda = pi^2 sum_d (k_d / L_d)^2, and spectral weights
    gamma_i = lambda_i^{-s/2}.  Eigenfunctions are products of
    sin(k pi (x - a) / L), already L-infinity normalized.
    """
    if s <= 1.0:
        raise PriorError("spectral decay requires s > 1")
    lengths = [b - a for a, b in bounds]
    if any(L <= 0 for L in lengths):
        raise PriorError("degenerate domain for sine basis")
    if len(bounds) == 1:
        candidates = [(k,) for k in range(1, n_modes + 1)]
    else:
        kmax = int(np.ceil(np.sqrt(n_modes))) + 2
        candidates = [(k, l) for k in range(1, kmax + 1) for l in range(1, kmax + 1)]
    lam = {mode: np.pi**2 * sum((k / L)**2 for k, L in zip(mode, lengths))
           for mode in candidates}
    modes = sorted(candidates, key=lambda mode: (lam[mode], mode))[:n_modes]
    lambdas = np.array([lam[mode] for mode in modes])
    gammas = lambdas ** (-s / 2.0)
    return modes, lambdas, gammas


@lru_cache(maxsize=32)
def basis_gammas(field: FieldPrior, bounds: tuple[tuple[float, float], ...]) -> np.ndarray:
    if field.basis == "test3":
        return np.array([1.0 / np.pi**2, 1.0 / np.pi**2,
                         1.0 / (2.0 * np.pi**2)])[: field.n_modes]
    _, _, gammas = tensor_sine_basis(bounds, field.n_modes, field.s)
    return gammas


@lru_cache(maxsize=32)
def basis_eval(field: FieldPrior, grid: Grid) -> np.ndarray:
    """Basis functions evaluated at cell centers, shape (n_modes, *grid.shape)."""
    if field.basis == "test3":
        if grid.dim != 2:
            raise PriorError("test3 basis is two-dimensional")
        X, Y = grid.meshgrid()
        funcs = [np.sin(np.pi * X), np.sin(np.pi * Y),
                 np.cos(np.pi * X) * np.cos(np.pi * Y)]
        return np.stack(funcs[: field.n_modes])
    modes, _, _ = tensor_sine_basis(grid.bounds, field.n_modes, field.s)
    coords = grid.meshgrid()
    out = np.ones((field.n_modes,) + grid.shape)
    for i, mode in enumerate(modes):
        for k, (a, b), c in zip(mode, grid.bounds, coords):
            out[i] *= np.sin(k * np.pi * (c - a) / (b - a))
    return out
