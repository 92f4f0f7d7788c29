"""Random-walk Metropolis-Hastings over the unknown parameter vector.

A chain proposes u' = u + diag(proposal_std) * xi with xi standard
normal, accepts with probability min(1, exp(dlogpost)), and discards a
burn-in fraction.  Ensembles run K independent chains with per-run
seeds derived as seed + run index; the K-run mean-squared-error
protocol compares per-run posterior means against the truth.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .grids import Grid
from .priors import PriorSpec, evaluate_growth_field


class McmcError(RuntimeError):
    """Chain setup failure (bad config, no finite starting point)."""


@dataclass(frozen=True)
class McmcConfig:
    """Sampler parameters; ``proposal_std`` is per-coordinate."""

    iterations: int
    proposal_std: tuple[float, ...]
    burn_in: float = 0.25
    seed: int = 0
    initial: tuple[float, ...] | None = None
    keep_full: bool = False

    def __post_init__(self):
        if self.iterations < 10:
            raise McmcError("need at least 10 iterations")
        if not 0.0 <= self.burn_in < 1.0:
            raise McmcError("burn-in fraction must be in [0, 1)")
        if any(s <= 0 for s in self.proposal_std):
            raise McmcError("proposal stds must be positive")

    @property
    def n_burn(self) -> int:
        return int(np.ceil(self.burn_in * self.iterations))

    @property
    def n_keep(self) -> int:
        return self.iterations - self.n_burn


@dataclass
class Chain:
    """Post-burn-in samples with acceptance bookkeeping."""

    samples: np.ndarray          # (n_keep, dim)
    log_posts: np.ndarray        # (n_keep,)
    accepted: np.ndarray         # (n_keep,) bool, per stored sample
    accept_count: int            # over all iterations incl. burn-in
    iterations: int
    seed: int
    full_log: np.ndarray | None = None

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.iterations

    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)


def mh_step(state: np.ndarray, log_post: float, proposal_std: np.ndarray,
            rng: np.random.Generator, log_posterior) -> tuple[np.ndarray, float, bool]:
    """One proposal/accept step; returns (state, log_post, accepted).

    Consumes exactly one noise vector and one uniform draw regardless of
    the outcome, so accept decisions are invariant under constant shifts
    of the log-posterior with a fixed seed.
    """
    prop = state + proposal_std * rng.standard_normal(state.shape[0])
    lp = float(log_posterior(prop))
    delta = lp - log_post
    u = rng.uniform()
    if delta >= 0.0 or (u > 0.0 and np.log(u) < delta):
        return prop, lp, True
    return state, log_post, False


def run_chain(config: McmcConfig, log_posterior, dim: int,
              sample_initial=None) -> Chain:
    """M sequential steps from the initial state, deterministic per seed.

    The initial state is either fixed by the config or drawn from
    ``sample_initial(rng)``; draws with -inf log-posterior are retried
    up to 100 times before failing.
    """
    rng = np.random.default_rng(config.seed)
    if config.initial is not None:
        state = np.asarray(config.initial, dtype=float)
        log_post = float(log_posterior(state))
        if not np.isfinite(log_post):
            raise McmcError("fixed initial state has -inf log-posterior")
    else:
        if sample_initial is None:
            raise McmcError("need either a fixed initial state or a prior sampler")
        log_post = -np.inf
        for _ in range(100):
            state = np.asarray(sample_initial(rng), dtype=float)
            log_post = float(log_posterior(state))
            if np.isfinite(log_post):
                break
        else:
            raise McmcError("no finite-log-posterior start in 100 prior draws")
    if state.shape[0] != dim:
        raise McmcError(f"state dim {state.shape[0]} != expected {dim}")

    prop_std = np.asarray(config.proposal_std, dtype=float)
    if prop_std.shape[0] == 1 and dim > 1:
        prop_std = np.full(dim, prop_std[0])

    n_keep = config.n_keep
    samples = np.empty((n_keep, dim))
    log_posts = np.empty(n_keep)
    accepted_flags = np.zeros(n_keep, dtype=bool)
    full = np.empty((config.iterations, dim)) if config.keep_full else None
    accept_count = 0
    kept = 0
    for it in range(config.iterations):
        state, log_post, accepted = mh_step(state, log_post, prop_std, rng,
                                            log_posterior)
        accept_count += int(accepted)
        if full is not None:
            full[it] = state
        if it >= config.n_burn:
            samples[kept] = state
            log_posts[kept] = log_post
            accepted_flags[kept] = accepted
            kept += 1
    chain = Chain(samples=samples, log_posts=log_posts, accepted=accepted_flags,
                  accept_count=accept_count, iterations=config.iterations,
                  seed=config.seed, full_log=full)
    if chain.acceptance_rate > 0.99:
        warnings.warn(
            f"acceptance rate {chain.acceptance_rate:.3f} ~ 1: proposal scale "
            "is degenerate (near-zero moves)", RuntimeWarning, stacklevel=2)
    return chain


@dataclass
class RunEnsemble:
    """K independent chains plus their per-run posterior means."""

    chains: list[Chain]

    @property
    def n_runs(self) -> int:
        return len(self.chains)

    @property
    def run_means(self) -> np.ndarray:
        return np.stack([c.mean() for c in self.chains])

    @property
    def ensemble_mean(self) -> np.ndarray:
        return self.run_means.mean(axis=0)

    @property
    def acceptance_rates(self) -> np.ndarray:
        return np.array([c.acceptance_rate for c in self.chains])


class _ChainTask:
    """Top-level picklable worker for process-pool ensembles."""

    def __init__(self, config: McmcConfig, target, dim: int):
        self.config = config
        self.target = target
        self.dim = dim

    def __call__(self, run_index: int) -> Chain:
        cfg = replace(self.config, seed=self.config.seed + run_index)
        return run_chain(cfg, self.target.log_posterior, self.dim,
                         sample_initial=self.target.sample_initial)


def run_ensemble(config: McmcConfig, target, dim: int, n_runs: int,
                 workers: int = 1) -> RunEnsemble:
    """K chains with seeds config.seed + 0..K-1; optionally in parallel.

    ``target`` provides ``log_posterior(vec)`` and ``sample_initial(rng)``
    (a Posterior works).  Results are identical for any worker count.
    """
    if n_runs < 1:
        raise McmcError("need at least one run")
    task = _ChainTask(config, target, dim)
    if workers <= 1 or n_runs == 1:
        chains = [task(k) for k in range(n_runs)]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, n_runs)) as pool:
            chains = list(pool.map(task, range(n_runs)))
    return RunEnsemble(chains=chains)


def posterior_mean(chain: Chain) -> np.ndarray:
    if chain.samples.shape[0] == 0:
        raise McmcError("empty chain")
    return chain.mean()


def mse_over_runs(ensemble: RunEnsemble, truth: np.ndarray) -> np.ndarray:
    """Per-coordinate MSE = (1/K) sum_k (mean_k - truth)^2."""
    truth = np.asarray(truth, dtype=float)
    diff = ensemble.run_means - truth
    return np.mean(diff**2, axis=0)


def mse_field_over_runs(ensemble: RunEnsemble, spec: PriorSpec, grid: Grid,
                        truth: np.ndarray) -> float:
    """Field-unknown MSE: mean over runs of ||h_mean_k(x) - h*(x)||_L2^2."""
    h_true = evaluate_growth_field(spec, np.asarray(truth, dtype=float), grid)
    total = 0.0
    for k in range(ensemble.n_runs):
        h_k = evaluate_growth_field(spec, ensemble.run_means[k], grid)
        total += float(np.sum((h_k - h_true) ** 2)) * grid.cell_volume
    return total / ensemble.n_runs
