"""Run orchestration: configs, replications, variance comparisons and the validation suite."""
from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .dataio import TraceWriter, write_dataset, write_matrix
from .diagnostics import TruthSpec, relative_error, sen_prec_f
from .empirical_bayes import estimate_sigma2
from .linmodel import Dataset
from .sampler import SamplerConfig, initial_state, run_chain
from .scenario import ScenarioConfig, gen_scenario

MODES = ("simulate", "fit", "validate", "eb")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything one CLI invocation needs. ``signal=None`` uses ``sqrt(log d / n)``."""

    mode: str = "simulate"
    seed: Optional[int] = None
    x_path: Optional[str] = None
    z_path: Optional[str] = None
    n: int = 200
    d: int = 500
    s_star: int = 10
    signal: Optional[float] = 1.0
    rho: float = 0.9
    sigma: float = 1.0
    sigma2: Optional[float] = None
    n_iter: int = 10_000
    burn_in: int = 2_000
    gamma0: float = 0.25
    thin: Optional[int] = None
    alpha: float = 1.0
    u: float = 1.1
    lam1: float = 1.0
    lam2: float = 1.0
    mala_step: Optional[float] = None
    drift_cap: Optional[float] = None
    replications: int = 1
    folds: int = 10
    workers: int = 1
    write_traces: bool = True
    out: Optional[str] = None

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.seed is None:
            raise ConfigError("a seed is required")
        if self.mode == "fit":
            for name in ("x_path", "z_path"):
                path = getattr(self, name)
                if path is None:
                    raise ConfigError(f"fit mode needs {name}")
                if not Path(path).is_file():
                    raise ConfigError(f"{name}: no such file {path}")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        try:
            self.sampler_config(self.d)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def scenario(self, seed) -> ScenarioConfig:
        return ScenarioConfig(self.n, self.d, self.s_star, self.signal, self.rho, self.sigma, int(seed))

    def effective_thin(self, d):
        if self.thin is not None:
            return self.thin
        return 10 if d > 100 else 1

    def sampler_config(self, d, seed=None) -> SamplerConfig:
        return SamplerConfig(
            n_iter=self.n_iter,
            burn_in=self.burn_in,
            gamma0=self.gamma0,
            mala_step=self.mala_step,
            drift_cap=self.drift_cap,
            thin=self.effective_thin(d),
            seed=int(self.seed if seed is None else seed),
        )

    def to_dict(self):
        return dataclasses.asdict(self)


def _coerce(field_type, text):
    text = text.strip()
    base = str(field_type).replace("Optional[", "").replace("]", "")
    if text.lower() in ("none", "null", "") and "Optional" in str(field_type):
        return None
    if base == "bool":
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if base == "int":
        return int(text)
    if base == "float":
        return float(text)
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name: f.type for f in fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{source}: line {lineno}: unknown key {key!r}")
        try:
            out[key] = _coerce(known[key], value)
        except ValueError as exc:
            raise ConfigError(f"{source}: line {lineno}: {exc}") from None
    return out


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def replication_seeds(master: int, count: int) -> list:
    """Independent per-replication seeds derived from one master seed."""
    children = np.random.SeedSequence(master).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def _initial(cfg: RunConfig, data: Dataset):
    return initial_state(data, alpha=cfg.alpha, u=cfg.u, lam1=cfg.lam1, lam2=cfg.lam2, gamma0=cfg.gamma0)


def summary_report(summary, truth: Optional[TruthSpec] = None) -> dict:
    out = {
        "gamma": summary.gamma,
        "n_iter": summary.n_iter,
        "burn_in": summary.burn_in,
        "mala_step": summary.mala_step,
        "acceptance": summary.acceptance,
        "theta_mean": summary.theta_mean,
        "prox_mean": summary.prox_mean,
        "inclusion_probs": summary.inclusion_probs,
        "final_phi": {
            "q": summary.final_state.phi.q,
            "lambda1": summary.final_state.phi.lam1,
            "lambda2": summary.final_state.phi.lam2,
        },
    }
    if truth is not None:
        out["metrics"] = summary.metrics
        out["posterior_mean_rel_error"] = relative_error(summary.prox_mean, truth.theta)
        out["median_model_f"] = sen_prec_f(summary.inclusion_probs > 0.5, truth.delta)[2]
    return out


def run_replication(cfg: RunConfig, seed: int, trace_dir: Optional[Path] = None, index: int = 0) -> dict:
    """Generate one scenario and run one chain on it."""
    data, truth = gen_scenario(cfg.scenario(seed))
    if cfg.sigma2 is not None:
        data = data.with_sigma2(cfg.sigma2)
    scfg = cfg.sampler_config(data.d, seed)
    writer = TraceWriter(trace_dir / f"trace_{index:03d}.jsonl") if trace_dir is not None else None
    try:
        summary = run_chain(data, scfg, _initial(cfg, data), sink=writer, truth=truth)
    finally:
        if writer is not None:
            writer.close()
    rep = summary_report(summary, truth)
    rep["seed"] = seed
    rep["curves"] = {k: v for k, v in summary.curves.items() if k != "elapsed"}
    rep["elapsed_curve"] = summary.curves.get("elapsed", [])
    rep["elapsed"] = summary.elapsed
    return rep


def _mean_se(rows):
    arr = np.asarray(rows, dtype=float)
    mean = arr.mean(axis=0)
    se = arr.std(axis=0, ddof=1) / math.sqrt(arr.shape[0]) if arr.shape[0] > 1 else np.zeros_like(mean)
    return mean, se


def aggregate(reps: list) -> dict:
    """Mean and standard error of the metric curves and final metrics across replications."""
    curves = {"iter": reps[0]["curves"]["iter"]}
    for key in ("rel_error_prox", "f_prox"):
        mean, se = _mean_se([r["curves"][key] for r in reps])
        curves[f"{key}_mean"] = mean
        curves[f"{key}_se"] = se
    elapsed_mean, _ = _mean_se([r["elapsed_curve"] for r in reps])
    metrics = {}
    for key in reps[0]["metrics"]:
        mean, se = _mean_se([r["metrics"][key] for r in reps])
        metrics[key] = {"mean": float(mean), "se": float(se)}
    return {"curves": curves, "elapsed_curve_mean": elapsed_mean, "metrics": metrics,
            "elapsed_mean": float(np.mean([r["elapsed"] for r in reps]))}


def replicate(cfg: RunConfig, out_dir: Optional[Path] = None) -> dict:
    """Run ``cfg.replications`` independent scenario replications.

    Per-replication seeds come from the master seed, so the result does not
    depend on ``cfg.workers``.
    """
    seeds = replication_seeds(cfg.seed, cfg.replications)
    trace_dir = out_dir if (out_dir is not None and cfg.write_traces) else None
    args = [(cfg, s, trace_dir, i) for i, s in enumerate(seeds)]
    if cfg.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            reps = list(pool.map(_run_star, args))
    else:
        reps = [_run_star(a) for a in args]
    report = {"config": cfg.to_dict(), "replications": reps, "aggregate": aggregate(reps)}
    if out_dir is not None:
        agg = report["aggregate"]["curves"]
        cols = ["iter", "rel_error_prox_mean", "rel_error_prox_se", "f_prox_mean", "f_prox_se"]
        write_matrix(out_dir / "curves.csv", np.column_stack([np.asarray(agg[c], dtype=float) for c in cols]), cols)
        # wall clock kept apart so curves.csv is reproducible byte for byte
        timing = np.column_stack([agg["iter"], report["aggregate"]["elapsed_curve_mean"]])
        write_matrix(out_dir / "timing.csv", timing, ["iter", "elapsed_mean"])
    return report


def _run_star(args):
    return run_replication(*args)


def fit_dataset(cfg: RunConfig, data: Dataset, trace_path: Optional[Path] = None) -> dict:
    sigma2_source = "given"
    eb = None
    if cfg.sigma2 is None:
        eb = estimate_sigma2(data, folds=cfg.folds, seed=cfg.seed)
        data = data.with_sigma2(eb.sigma2)
        sigma2_source = "empirical_bayes"
    else:
        data = data.with_sigma2(cfg.sigma2)
    writer = TraceWriter(trace_path) if trace_path is not None else None
    try:
        summary = run_chain(data, cfg.sampler_config(data.d), _initial(cfg, data), sink=writer)
    finally:
        if writer is not None:
            writer.close()
    report = summary_report(summary)
    report["sigma2"] = data.sigma2
    report["sigma2_source"] = sigma2_source
    if eb is not None:
        report["lasso_lambda"] = eb.cv.lam
        report["lasso_support_size"] = eb.fit.support_size
        report["lasso_kkt_residual"] = eb.fit.kkt_residual
    report["elapsed"] = summary.elapsed
    return report


def eb_replication(cfg: RunConfig, seed: int) -> dict:
    """One dataset, two chains on matched seeds: known variance and plug-in variance."""
    data, truth = gen_scenario(cfg.scenario(seed))
    eb = estimate_sigma2(data, folds=cfg.folds, seed=seed)
    scfg = cfg.sampler_config(data.d, seed)
    out = {"seed": seed, "sigma2_hat": eb.sigma2, "lasso_lambda": eb.cv.lam,
           "kkt_residual": eb.fit.kkt_residual, "support_size": eb.fit.support_size}
    for label, sigma2 in (("known", truth_sigma2(cfg)), ("eb", eb.sigma2)):
        d2 = data.with_sigma2(sigma2)
        summary = run_chain(d2, scfg, _initial(cfg, d2), truth=truth)
        out[label] = {
            "rel_error": summary.metrics["rel_error_prox"],
            "f_score": summary.metrics["f_prox"],
            "posterior_mean_rel_error": relative_error(summary.prox_mean, truth.theta),
            "elapsed": summary.elapsed,
        }
    return out


def truth_sigma2(cfg: RunConfig) -> float:
    return cfg.sigma ** 2


def eb_compare(cfg: RunConfig) -> dict:
    """Table-style comparison of plug-in and known noise variance across replications."""
    reps = [eb_replication(cfg, s) for s in replication_seeds(cfg.seed, cfg.replications)]
    table = {}
    for label in ("known", "eb"):
        for key in ("rel_error", "f_score"):
            mean, se = _mean_se([r[label][key] for r in reps])
            table[f"{label}_{key}_pct"] = {"mean": 100.0 * float(mean), "se": 100.0 * float(se)}
    s2 = [r["sigma2_hat"] for r in reps]
    return {
        "config": cfg.to_dict(),
        "replications": reps,
        "table": table,
        "sigma2_hat": {"mean": float(np.mean(s2)), "min": float(np.min(s2)), "max": float(np.max(s2))},
        "eb_worse_count": int(sum(r["eb"]["rel_error"] >= r["known"]["rel_error"] for r in reps)),
    }


# validation suite --------------------------------------------------------------------------------


def validation_suite(seed: int = 0) -> dict:
    """Fast self-checks against the analytic and brute-force references."""
    from .envelope import EnvelopeContext, fb_envelope
    from .linmodel import HyperState, gamma_from_rule
    from .oracle import (
        beta_metric_bound,
        beta_metric_lower,
        cor1_bound,
        example1_suite,
        fig1_curves,
        quad_posterior,
        varrho_gamma_estimate,
    )
    from .prox import MCP, ElasticNet, GenDoublePareto, Laplace, prox_oracle_scalar
    from .sampler import ApproxPosterior, ChainState

    start = time.perf_counter()
    checks = []

    def record(name, ok, **detail):
        checks.append({"name": name, "passed": bool(ok), **detail})

    rows = example1_suite([0.01, 0.1, 0.5, math.pi / 2], n_samples=20_000, seed=seed)
    record("example1", all(r["quadrature_error"] < 1e-8 and abs(r["sample_z"]) < 4
                           and r["envelope_max_error"] <= 1e-12 and r["tv"] == 2.0 for r in rows))

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    worst = 0.0
    for _ in range(200):
        kind = rng.integers(4)
        gamma = float(rng.uniform(0.05, 2.0))
        x = float(rng.normal(0, 3))
        if kind == 0:
            prior = ElasticNet(float(rng.uniform()), float(rng.uniform(0.1, 3)), float(rng.uniform(0.1, 3)))
        elif kind == 1:
            prior = Laplace(float(rng.uniform(0.1, 3)))
        elif kind == 2:
            prior = GenDoublePareto(float(rng.uniform(0.5, 3)), float(rng.uniform(0.5, 3)))
            gamma = min(gamma, prior.convex_step_limit())
        else:
            prior = MCP(float(rng.uniform(1.0, 4.0)), float(rng.uniform(0.1, 2)))
            gamma = min(gamma, 0.9 * prior.convex_step_limit())
        got = float(prior.prox(x, gamma))
        ref = prox_oracle_scalar(prior, gamma, x).point
        worst = max(worst, abs(got - ref) / (1.0 + abs(x)))
    record("prox_oracle", worst <= 1e-8, max_scaled_error=worst)

    grid, hh, hg, ht = fig1_curves(0.1)
    record("envelope_ordering", bool(np.all(hg <= ht + 1e-9) and np.all(ht <= hh + 1e-9)),
           max_gap=float(np.max(hh - hg)))

    X = rng.standard_normal((10, 2))
    data = Dataset(X, X @ np.array([1.0, 0.0]) + rng.standard_normal(10))
    phi = HyperState(q=0.3, lam1=1.0, lam2=1.0, alpha=0.9)
    gamma = gamma_from_rule(data)
    target = ApproxPosterior(data, gamma)
    theta = rng.standard_normal(2)
    r = target.delta_logits(theta, phi)
    diffs = []
    for j in range(2):
        on = np.zeros(2, bool)
        on[j] = True
        diffs.append(abs(target.log_target(ChainState(on, theta, phi))
                         - target.log_target(ChainState(np.zeros(2, bool), theta, phi)) - r[j]))
    record("delta_logit_identity", max(diffs) <= 1e-9, max_error=max(diffs))

    varrho, _ = varrho_gamma_estimate(data, phi, gamma)
    bound = cor1_bound(data, phi, gamma)
    exact = quad_posterior(data, phi, None, "exact")
    approx = quad_posterior(data, phi, gamma, "my_approx")
    dbeta, _ = beta_metric_lower(exact, approx)
    record("bound_hierarchy", 0.0 <= varrho <= bound and dbeta <= beta_metric_bound(gamma, 2, varrho),
           varrho=varrho, cor1=bound, dbeta_lower=dbeta)

    return {"checks": checks, "passed": all(c["passed"] for c in checks),
            "elapsed": time.perf_counter() - start}
