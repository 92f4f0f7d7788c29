"""Config-driven experiment runner: data synthesis, inversion, reports.

Experiments are described by flat INI-style files (sections of
key = value lines, comma-separated lists).  The runner synthesizes data
from the configured truth, runs the K-chain ensemble per sweep cell,
and writes chains, histograms, summary tables, and (for field unknowns)
posterior-mean growth-rate grids under one output directory.
"""

from __future__ import annotations

import configparser
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .grids import Grid, build_grid, save_density
from .mcmc import Chain, McmcConfig, RunEnsemble, mse_field_over_runs, mse_over_runs, run_ensemble
from .observe import NoiseModel, ObservationOperator, ObservationVector, save_observations, synthesize_data
from .posterior import HellingerReport, InitialSpec, PdeForwardMap, Posterior, hellinger_estimate
from .priors import FieldPrior, ModelParams, Normal, PriorSpec, Uniform, log_prior_density, sample_prior
from .solver import SolverConfig, solve_forward


class ConfigError(ValueError):
    """Config parse or validation failure."""


_SECTION_KEYS = {
    "experiment": {"id"},
    "grid": {"bounds", "n"},
    "solver": {"m", "dt", "t_final", "lin_tol", "lin_maxiter"},
    "initial": {"shape", "amplitude", "center", "radius_sq", "value"},
    "observation": {"mode", "times", "sigma", "centers_i", "centers_j",
                    "centers", "bump_std"},
    "sweep": {"sigma", "m"},
    "mcmc": {"iterations", "runs", "paper_iterations", "paper_runs",
             "burn_in", "proposal_std", "seed", "workers"},
    "mconv": {"m_list", "samples"},
    "output": {"dir"},
}
_REQUIRED_SECTIONS = ("experiment", "grid", "solver", "initial", "truth",
                      "prior", "observation", "mcmc")
_REQUIRED_KEYS = {
    "experiment": ("id",),
    "grid": ("bounds", "n"),
    "solver": ("m", "dt", "t_final"),
    "initial": ("shape",),
    "observation": ("mode", "times", "sigma"),
    "mcmc": ("iterations", "runs", "seed"),
}
_FIELD_KEYS = {"field.n_modes", "field.basis", "field.h0", "field.c", "field.s"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (see the shipped *.cfg files)."""

    experiment_id: str
    grid: Grid
    solver: SolverConfig
    initial: InitialSpec
    prior: PriorSpec
    truth: np.ndarray
    op: ObservationOperator
    sigma: float
    sweep_kind: str | None        # "sigma" | "m" | None
    sweep_values: tuple[float, ...]
    mcmc_iterations: int
    mcmc_runs: int
    paper_iterations: int
    paper_runs: int
    burn_in: float
    proposal_std: tuple[float, ...]
    seed: int
    workers: int
    mconv_m_list: tuple[float, ...]
    mconv_samples: int
    out_dir: str
    raw_text: str


@dataclass
class ExperimentReport:
    """Sweep table rows plus run bookkeeping and the file manifest."""

    experiment_id: str
    sweep_kind: str | None
    rows: list[dict]
    runtime: float
    manifest: list[str]

    def table_path(self) -> str:
        for p in self.manifest:
            if p.endswith("summary.csv"):
                return p
        raise KeyError("no summary table in manifest")


def _get(parser: configparser.ConfigParser, section: str, key: str,
         errors: list[str], required: bool = False, default: str | None = None):
    if parser.has_option(section, key):
        return parser.get(section, key)
    if required:
        errors.append(f"missing required key '{section}.{key}'")
    return default


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip() != ""]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip() != ""]


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate an experiment config from its text.

    Unknown keys are errors; all semantic violations are collected and
    reported together.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    errors: list[str] = []
    for section in _REQUIRED_SECTIONS:
        if not parser.has_section(section):
            errors.append(f"missing required section [{section}]")
    if errors:
        raise ConfigError("; ".join(errors))

    for section in parser.sections():
        if section == "truth":
            continue  # keys validated against prior coordinates below
        if section == "prior":
            continue  # keys depend on the declared params list
        allowed = _SECTION_KEYS.get(section)
        if allowed is None:
            errors.append(f"unknown section [{section}]")
            continue
        for key in parser.options(section):
            if key not in allowed:
                errors.append(f"unknown key '{section}.{key}'")

    # grid
    grid = None
    bounds_txt = _get(parser, "grid", "bounds", errors, required=True)
    n_txt = _get(parser, "grid", "n", errors, required=True)
    if bounds_txt and n_txt:
        try:
            b = _floats(bounds_txt)
            n = _ints(n_txt)
            if len(b) != 2 * len(n):
                errors.append("grid.bounds must hold (a, b) per axis")
            else:
                bounds = tuple((b[2 * i], b[2 * i + 1]) for i in range(len(n)))
                grid = build_grid(len(n), bounds, tuple(n))
        except (ValueError, TypeError) as exc:
            errors.append(f"grid: {exc}")

    # solver
    solver = None
    m_txt = _get(parser, "solver", "m", errors, required=True)
    dt_txt = _get(parser, "solver", "dt", errors, required=True)
    tf_txt = _get(parser, "solver", "t_final", errors, required=True)
    if m_txt and dt_txt and tf_txt:
        try:
            solver = SolverConfig(
                m=float(m_txt), dt=float(dt_txt), t_final=float(tf_txt),
                lin_tol=float(_get(parser, "solver", "lin_tol", errors,
                                   default="1e-10")),
                lin_maxiter=int(_get(parser, "solver", "lin_maxiter", errors,
                                     default="500")))
            solver.validate()
        except (ValueError, RuntimeError) as exc:
            errors.append(f"solver: {exc}")
            solver = None

    # initial data
    initial = None
    shape = _get(parser, "initial", "shape", errors, required=True)
    if shape:
        try:
            center_txt = _get(parser, "initial", "center", errors, default="0, 0")
            c = _floats(center_txt)
            initial = InitialSpec(
                shape=shape,
                amplitude=float(_get(parser, "initial", "amplitude", errors,
                                     default="0.9")),
                center=(c[0], c[1]) if len(c) == 2 else (0.0, 0.0),
                radius_sq=float(_get(parser, "initial", "radius_sq", errors,
                                     default="0.2")),
                value=float(_get(parser, "initial", "value", errors,
                                 default="0.5")))
            if shape not in ("flower", "disk", "constant"):
                errors.append(f"initial.shape '{shape}' unknown")
        except (ValueError, IndexError) as exc:
            errors.append(f"initial: {exc}")

    # prior
    prior = _parse_prior(parser, errors)

    # truth, checked against the prior coordinates
    truth = None
    if prior is not None and parser.has_section("truth"):
        truth_vals = []
        for name in prior.coord_names:
            key = name if name in prior.param_names else None
            if key is not None:
                txt = _get(parser, "truth", key, errors, required=True)
                if txt is not None:
                    truth_vals.append(float(txt))
        if prior.field is not None:
            g_txt = _get(parser, "truth", "g", errors, required=True)
            if g_txt is not None:
                g = _floats(g_txt)
                if len(g) != prior.field.n_modes:
                    errors.append("truth.g length must equal field.n_modes")
                else:
                    truth_vals.extend(g)
        known = set(prior.param_names) | ({"g"} if prior.field else set())
        for key in parser.options("truth"):
            if key not in known:
                errors.append(f"unknown key 'truth.{key}'")
        if len(truth_vals) == prior.dim:
            truth = np.array(truth_vals)
            if log_prior_density(prior, truth,
                                 bounds=grid.bounds if grid else None) == -np.inf:
                errors.append("truth lies outside the prior support")

    # observation
    op = None
    sigma = None
    mode = _get(parser, "observation", "mode", errors, required=True)
    times_txt = _get(parser, "observation", "times", errors, required=True)
    sigma_txt = _get(parser, "observation", "sigma", errors, required=True)
    if mode and times_txt and sigma_txt:
        try:
            times = tuple(_floats(times_txt))
            sigma = float(sigma_txt)
            centers: tuple = ()
            if mode == "functionals":
                centers = _parse_centers(parser, grid, errors)
            op = ObservationOperator(
                mode=mode, times=times, centers=centers,
                bump_std=float(_get(parser, "observation", "bump_std", errors,
                                    default="0.1")))
            if solver is not None and any(t > solver.t_final + 1e-12 for t in times):
                errors.append("observation time exceeds solver.t_final")
            if sigma <= 0:
                errors.append("observation.sigma must be positive")
        except (ValueError, TypeError) as exc:
            errors.append(f"observation: {exc}")

    # sweep
    sweep_kind = None
    sweep_values: tuple[float, ...] = ()
    if parser.has_section("sweep"):
        has_sigma = parser.has_option("sweep", "sigma")
        has_m = parser.has_option("sweep", "m")
        if has_sigma == has_m:
            errors.append("[sweep] needs exactly one of 'sigma' or 'm'")
        elif has_sigma:
            sweep_kind, sweep_values = "sigma", tuple(_floats(parser.get("sweep", "sigma")))
        else:
            sweep_kind, sweep_values = "m", tuple(_floats(parser.get("sweep", "m")))
        if sweep_values and any(v <= 0 for v in sweep_values):
            errors.append("sweep values must be positive")

    # mcmc
    iters_txt = _get(parser, "mcmc", "iterations", errors, required=True)
    runs_txt = _get(parser, "mcmc", "runs", errors, required=True)
    seed_txt = _get(parser, "mcmc", "seed", errors, required=True)
    iterations = int(iters_txt) if iters_txt else 0
    runs = int(runs_txt) if runs_txt else 0
    seed = int(seed_txt) if seed_txt else 0
    paper_iterations = int(_get(parser, "mcmc", "paper_iterations", errors,
                                default=str(iterations)))
    paper_runs = int(_get(parser, "mcmc", "paper_runs", errors, default=str(runs)))
    burn_in = float(_get(parser, "mcmc", "burn_in", errors, default="0.25"))
    workers = int(_get(parser, "mcmc", "workers", errors, default="1"))
    prop_txt = _get(parser, "mcmc", "proposal_std", errors)
    proposal_std: tuple[float, ...] = ()
    if prior is not None and grid is not None:
        if prop_txt:
            vals = _floats(prop_txt)
            if len(vals) == 1:
                proposal_std = tuple(vals * prior.dim)
            elif len(vals) == prior.dim:
                proposal_std = tuple(vals)
            else:
                errors.append("mcmc.proposal_std must be scalar or one per coordinate")
        else:
            proposal_std = tuple(0.1 * prior.coord_scales(grid.bounds))
    if iterations and iterations < 10:
        errors.append("mcmc.iterations must be >= 10")
    if runs and runs < 1:
        errors.append("mcmc.runs must be >= 1")

    # mconv
    mconv_m = tuple(_floats(parser.get("mconv", "m_list"))) \
        if parser.has_option("mconv", "m_list") else ()
    mconv_samples = int(parser.get("mconv", "samples")) \
        if parser.has_option("mconv", "samples") else 500

    out_dir = _get(parser, "output", "dir", errors, default="runs") \
        if parser.has_section("output") else "runs"

    if errors:
        raise ConfigError("; ".join(errors))

    return ExperimentConfig(
        experiment_id=parser.get("experiment", "id"),
        grid=grid, solver=solver, initial=initial, prior=prior, truth=truth,
        op=op, sigma=sigma, sweep_kind=sweep_kind, sweep_values=sweep_values,
        mcmc_iterations=iterations, mcmc_runs=runs,
        paper_iterations=paper_iterations, paper_runs=paper_runs,
        burn_in=burn_in, proposal_std=proposal_std, seed=seed, workers=workers,
        mconv_m_list=mconv_m, mconv_samples=mconv_samples,
        out_dir=out_dir, raw_text=text)


def _parse_prior(parser: configparser.ConfigParser, errors: list[str]):
    if not parser.has_section("prior"):
        return None
    params_txt = parser.get("prior", "params", fallback="")
    names = tuple(p.strip() for p in params_txt.split(",") if p.strip())
    allowed = {"params"} | _FIELD_KEYS
    for name in names:
        allowed |= {f"{name}.law", f"{name}.low", f"{name}.high",
                    f"{name}.mu", f"{name}.sd"}
    for key in parser.options("prior"):
        if key not in allowed:
            errors.append(f"unknown key 'prior.{key}'")
    laws = []
    for name in names:
        law_kind = parser.get("prior", f"{name}.law", fallback=None)
        try:
            if law_kind == "uniform":
                laws.append(Uniform(low=parser.getfloat("prior", f"{name}.low"),
                                    high=parser.getfloat("prior", f"{name}.high")))
            elif law_kind == "normal":
                laws.append(Normal(mu=parser.getfloat("prior", f"{name}.mu"),
                                   sd=parser.getfloat("prior", f"{name}.sd")))
            else:
                errors.append(f"prior.{name}.law must be 'uniform' or 'normal'")
                return None
        except (configparser.Error, ValueError, TypeError) as exc:
            errors.append(f"prior.{name}: {exc}")
            return None
    fp = None
    if parser.has_option("prior", "field.n_modes"):
        try:
            c_txt = parser.get("prior", "field.c", fallback="")
            fp = FieldPrior(
                n_modes=parser.getint("prior", "field.n_modes"),
                basis=parser.get("prior", "field.basis", fallback="sine"),
                h0=parser.getfloat("prior", "field.h0", fallback=0.0),
                coeff_sds=tuple(_floats(c_txt)) if c_txt else (),
                s=parser.getfloat("prior", "field.s", fallback=2.0))
        except (configparser.Error, ValueError) as exc:
            errors.append(f"prior.field: {exc}")
            return None
    try:
        return PriorSpec(param_names=names, param_laws=tuple(laws), field=fp)
    except ValueError as exc:
        errors.append(f"prior: {exc}")
        return None


def _parse_centers(parser, grid, errors) -> tuple:
    """Functional centers: either explicit coordinates or cell indices."""
    if parser.has_option("observation", "centers"):
        c = _floats(parser.get("observation", "centers"))
        if len(c) % 2 != 0:
            errors.append("observation.centers needs (x, y) pairs")
            return ()
        return tuple((c[2 * i], c[2 * i + 1]) for i in range(len(c) // 2))
    has_i = parser.has_option("observation", "centers_i")
    has_j = parser.has_option("observation", "centers_j")
    if not (has_i and has_j):
        errors.append("functionals mode needs observation.centers or centers_i/centers_j")
        return ()
    ii = _ints(parser.get("observation", "centers_i"))
    jj = _ints(parser.get("observation", "centers_j"))
    if len(ii) != len(jj):
        errors.append("centers_i and centers_j must have equal length")
        return ()
    if grid is None:
        return ()
    xs, ys = grid.cell_centers(0), grid.cell_centers(1)
    try:
        return tuple((float(xs[i]), float(ys[j])) for i, j in zip(ii, jj))
    except IndexError:
        errors.append("functional center index outside the grid")
        return ()


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def builtin_config_path(name: str) -> str:
    """Path of a shipped config ('test1a', 'test2', ...)."""
    here = os.path.dirname(__file__)
    return os.path.join(here, "configs", f"{name}.cfg")


def resolve_config(spec_or_name: str) -> ExperimentConfig:
    """Accept either a filesystem path or a shipped config name."""
    if os.path.exists(spec_or_name):
        return load_config(spec_or_name)
    builtin = builtin_config_path(spec_or_name)
    if os.path.exists(builtin):
        return load_config(builtin)
    raise ConfigError(f"config '{spec_or_name}' not found (no file, no builtin)")


# ---------------------------------------------------------------------------
# experiment runner


def _sweep_cells(config: ExperimentConfig):
    """(label, solver config, sigma) per sweep cell."""
    if config.sweep_kind is None:
        return [(f"{config.experiment_id}", config.solver, config.sigma)]
    cells = []
    for v in config.sweep_values:
        if config.sweep_kind == "sigma":
            cells.append((f"sigma={v:g}", config.solver, v))
        else:
            cells.append((f"m={v:g}", replace(config.solver, m=v), config.sigma))
    return cells


def _write_chain_csv(path: str, chain: Chain, names, n_burn: int) -> None:
    with open(path, "w") as fh:
        fh.write("iter,logpost,accepted," + ",".join(names) + "\n")
        for row in range(chain.samples.shape[0]):
            vals = ",".join(repr(float(v)) for v in chain.samples[row])
            fh.write(f"{n_burn + row},{float(chain.log_posts[row])!r},"
                     f"{int(chain.accepted[row])},{vals}\n")


def _write_histograms(out_dir: str, label: str, ensemble: RunEnsemble,
                      names, manifest: list[str]) -> None:
    pooled = np.concatenate([c.samples for c in ensemble.chains], axis=0)
    for d, name in enumerate(names):
        col = pooled[:, d]
        counts, edges = np.histogram(col, bins=40,
                                     range=(float(col.min()), float(col.max()))
                                     if col.min() < col.max()
                                     else (float(col.min()) - 0.5, float(col.max()) + 0.5))
        path = os.path.join(out_dir, "tables", f"hist_{label}_{name}.csv")
        with open(path, "w") as fh:
            fh.write("bin_left,bin_right,count\n")
            for b in range(40):
                fh.write(f"{float(edges[b])!r},{float(edges[b + 1])!r},{counts[b]}\n")
        manifest.append(path)
        _render_histogram(path, col, name)


def _render_histogram(csv_path: str, samples: np.ndarray, name: str) -> None:
    # Best-effort image twin of the histogram CSV; never fails the run.
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(4, 3))
        ax.hist(samples, bins=40)
        ax.set_xlabel(name)
        fig.tight_layout()
        fig.savefig(csv_path.replace(".csv", ".png"), dpi=100)
        plt.close(fig)
    except Exception:
        pass


def run_experiment(config: ExperimentConfig, out_dir: str | None = None,
                   paper_scale: bool = False, dry_run: bool = False,
                   seed: int | None = None) -> ExperimentReport:
    """Synthesize data per sweep cell, run the K-chain ensemble, write files.

    One noise realization per cell, derived from the master seed.  With
    ``dry_run`` only the config copy and data files are produced.
    """
    t_start = time.perf_counter()
    out = out_dir or config.out_dir
    master = config.seed if seed is None else seed
    iterations = config.paper_iterations if paper_scale else config.mcmc_iterations
    runs = config.paper_runs if paper_scale else config.mcmc_runs

    for sub in ("data", "chains", "tables", "fields"):
        os.makedirs(os.path.join(out, sub), exist_ok=True)
    manifest: list[str] = []

    cfg_copy = os.path.join(out, "config.cfg")
    with open(cfg_copy, "w") as fh:
        fh.write(config.raw_text)
    manifest.append(cfg_copy)

    forward_truth = PdeForwardMap(grid=config.grid, solver=config.solver,
                                  op=config.op, prior=config.prior,
                                  initial=config.initial)
    names = config.prior.coord_names
    rows: list[dict] = []

    for idx, (label, solver_cfg, cell_sigma) in enumerate(_sweep_cells(config)):
        fmap = replace(forward_truth, solver=solver_cfg)
        rho0_true, h_true = fmap.materialize(config.truth)
        noise = NoiseModel(sigma=cell_sigma, seed=master + 7919 * (idx + 1))
        y_noisy, y_clean = synthesize_data(rho0_true, h_true, config.grid,
                                           solver_cfg, config.op, noise)
        data_path = os.path.join(out, "data", f"{label}.obs".replace("=", "_"))
        save_observations(data_path, config.op, y_noisy, noise, clean=y_clean)
        manifest.extend([data_path, data_path + ".clean"])
        if dry_run:
            rows.append({"cell": label, "dry_run": True})
            continue

        post = Posterior(forward=fmap, y=y_noisy.values,
                         sigmas=noise.stds(y_noisy.values.shape[0]),
                         prior=config.prior, bounds=config.grid.bounds)
        mc = McmcConfig(iterations=iterations, proposal_std=config.proposal_std,
                        burn_in=config.burn_in, seed=master + 1000 * (idx + 1))
        ensemble = run_ensemble(mc, post, config.prior.dim, runs,
                                workers=config.workers)

        for k, chain in enumerate(ensemble.chains):
            cpath = os.path.join(out, "chains",
                                 f"{label}_run{k}.csv".replace("=", "_"))
            _write_chain_csv(cpath, chain, names, mc.n_burn)
            manifest.append(cpath)
        _write_histograms(out, label.replace("=", "_"), ensemble, names, manifest)

        mse = mse_over_runs(ensemble, config.truth)
        row = {"cell": label, "acceptance_mean": float(np.mean(ensemble.acceptance_rates))}
        for d, name in enumerate(names):
            row[f"mean_{name}"] = float(ensemble.ensemble_mean[d])
            row[f"mse_{name}"] = float(mse[d])
        if config.prior.field is not None:
            row["mse_field"] = mse_field_over_runs(ensemble, config.prior,
                                                   config.grid, config.truth)
            _write_field_outputs(out, label.replace("=", "_"), config, ensemble,
                                 manifest)
        rows.append(row)

    if not dry_run:
        _write_summary(out, config, rows, manifest)
    report = ExperimentReport(experiment_id=config.experiment_id,
                              sweep_kind=config.sweep_kind, rows=rows,
                              runtime=time.perf_counter() - t_start,
                              manifest=manifest)
    _write_manifest(out, manifest)
    return report


def _write_field_outputs(out, label, config: ExperimentConfig,
                         ensemble: RunEnsemble, manifest: list[str]) -> None:
    from .priors import evaluate_growth_field

    h_mean = evaluate_growth_field(config.prior, ensemble.ensemble_mean, config.grid)
    h_true = evaluate_growth_field(config.prior, config.truth, config.grid)
    for suffix, arr in [("hmean", h_mean), ("hdiff", h_mean - h_true)]:
        path = os.path.join(out, "fields", f"{suffix}_{label}.txt")
        save_density(path, config.grid, arr, time=config.solver.t_final)
        manifest.extend([path, path + ".meta"])


def _write_summary(out, config: ExperimentConfig, rows: list[dict],
                   manifest: list[str]) -> None:
    path = os.path.join(out, "tables", "summary.csv")
    keys = ["cell"] + sorted({k for r in rows for k in r} - {"cell"})
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(r.get(k, "")) for k in keys) + "\n")
    manifest.append(path)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def _write_manifest(out: str, manifest: list[str]) -> None:
    with open(os.path.join(out, "manifest.txt"), "w") as fh:
        for p in manifest:
            fh.write(os.path.relpath(p, out) + "\n")


# ---------------------------------------------------------------------------
# m-convergence study


def run_m_convergence(config: ExperimentConfig, m_list=None,
                      n_samples: int | None = None,
                      out_dir: str | None = None,
                      seed: int | None = None):
    """Hellinger distances between consecutive-m posteriors, shared data.

    Data y is generated once at the largest m; all potentials reuse one
    set of prior samples.  Also tabulates the forward L1 differences
    ||rho^(m_i)(T) - rho^(m_{i+1})(T)|| at the true parameters.
    Returns (reports, l1_rows, manifest).
    """
    m_list = tuple(float(m) for m in (m_list or config.mconv_m_list))
    if len(m_list) < 2:
        raise ConfigError("m-convergence needs at least two m values")
    if list(m_list) != sorted(m_list):
        raise ConfigError("m list must be ascending")
    n_samples = int(n_samples or config.mconv_samples)
    master = config.seed if seed is None else seed
    out = out_dir or config.out_dir
    os.makedirs(os.path.join(out, "tables"), exist_ok=True)
    manifest: list[str] = []

    # One data realization at the largest m.
    solver_top = replace(config.solver, m=m_list[-1])
    fmap_top = PdeForwardMap(grid=config.grid, solver=solver_top, op=config.op,
                             prior=config.prior, initial=config.initial)
    rho0_true, h_true = fmap_top.materialize(config.truth)
    noise = NoiseModel(sigma=config.sigma, seed=master + 424243)
    y_noisy, _ = synthesize_data(rho0_true, h_true, config.grid, solver_top,
                                 config.op, noise)

    rng = np.random.default_rng(master + 1)
    samples = [sample_prior(config.prior, rng, bounds=config.grid.bounds).to_vector()
               for _ in range(n_samples)]

    phis: dict[float, np.ndarray] = {}
    densities: dict[float, np.ndarray] = {}
    for m in dict.fromkeys(m_list):
        solver_m = replace(config.solver, m=m)
        fmap = replace(fmap_top, solver=solver_m)
        post = Posterior(forward=fmap, y=y_noisy.values,
                         sigmas=noise.stds(y_noisy.values.shape[0]),
                         prior=config.prior, bounds=config.grid.bounds)
        phis[m] = np.array([post.misfit(s) for s in samples]) - post.offset
        sol = solve_forward(config.grid, rho0_true, h_true, solver_m,
                            [config.solver.t_final])
        densities[m] = sol.densities[0]

    reports: list[HellingerReport] = []
    l1_rows: list[tuple[float, float, float]] = []
    for m1, m2 in zip(m_list[:-1], m_list[1:]):
        reports.append(hellinger_estimate(phis[m1], phis[m2], m1=m1, m2=m2))
        l1 = float(np.sum(np.abs(densities[m1] - densities[m2]))) * config.grid.cell_volume
        l1_rows.append((m1, m2, l1))

    hpath = os.path.join(out, "tables", "hellinger.csv")
    with open(hpath, "w") as fh:
        fh.write(HellingerReport.csv_header() + "\n")
        for rep in reports:
            fh.write(rep.csv_row() + "\n")
    manifest.append(hpath)
    lpath = os.path.join(out, "tables", "l1_differences.csv")
    with open(lpath, "w") as fh:
        fh.write("m1,m2,l1\n")
        for m1, m2, l1 in l1_rows:
            fh.write(f"{m1:g},{m2:g},{float(l1)!r}\n")
    manifest.append(lpath)
    return reports, l1_rows, manifest


def run_forward_only(config: ExperimentConfig, out_dir: str | None = None):
    """Solve at the truth and dump density snapshots (CLI 'forward')."""
    out = out_dir or config.out_dir
    os.makedirs(os.path.join(out, "fields"), exist_ok=True)
    fmap = PdeForwardMap(grid=config.grid, solver=config.solver, op=config.op,
                         prior=config.prior, initial=config.initial)
    rho0, h = fmap.materialize(config.truth)
    sol = solve_forward(config.grid, rho0, h, config.solver, list(config.op.times))
    manifest = []
    for j, (t, rho) in enumerate(zip(sol.times, sol.densities)):
        path = os.path.join(out, "fields", f"forward_t{j}.txt")
        save_density(path, config.grid, rho, time=t)
        manifest.extend([path, path + ".meta"])
    _write_manifest(out, manifest)
    return sol, manifest


def run_synth_only(config: ExperimentConfig, out_dir: str | None = None,
                   seed: int | None = None):
    """Data synthesis only (CLI 'synth')."""
    return run_experiment(config, out_dir=out_dir, dry_run=True, seed=seed)
