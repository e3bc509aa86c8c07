"""Metropolized-Gibbs sampler for the Moreau-Yosida spike-and-slab posterior.

The target on ``(delta, theta, phi)`` is::

    pi_delta(q) (2 pi gamma)^{|delta|/2} exp(-h_gamma(theta|delta)) x hyperprior(phi)

One sweep updates, in order: every ``delta_j`` jointly from its exact
conditional, the active coefficients by truncated MALA, the inactive
coefficients by an independence sampler with an exact Gaussian proposal,
``q`` from its Beta conditional, and ``(lambda1, lambda2)`` by adaptive
random-walk Metropolis.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_triangular

from .diagnostics import TruthSpec, relative_error, sen_prec_f
from .envelope import EnvelopeContext, default_drift_cap
from .linmodel import (
    Dataset,
    HyperState,
    default_lam1_cap,
    default_upper_bound,
    gamma_from_rule,
    log_hyperprior,
    log_prior_delta,
)

_LOG_2PI = math.log(2.0 * math.pi)


class SamplerError(RuntimeError):
    pass


@dataclass
class ChainState:
    """One point of the chain. Treated as immutable once built."""

    delta: np.ndarray
    theta: np.ndarray
    phi: HyperState
    cache: Optional["Evaluation"] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.delta = np.asarray(self.delta).astype(bool)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.delta.shape != self.theta.shape:
            raise ValueError("delta and theta must have the same shape")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("theta must be finite")

    def copy(self):
        return ChainState(self.delta.copy(), self.theta.copy(), self.phi)


@dataclass
class SamplerConfig:
    """Run settings. ``mala_step=None`` starts MALA at ``h = gamma``."""

    n_iter: int = 10_000
    burn_in: int = 1_000
    gamma0: float = 0.25
    mala_step: Optional[float] = None
    target_accept_mala: float = 0.57
    adapt_mala: bool = True
    target_accept_rwm: float = 0.30
    rwm_scale: float = 0.5
    drift_cap: Optional[float] = None
    fixed_phi: bool = False
    thin: int = 1
    seed: int = 0
    n_batches: int = 50

    def __post_init__(self):
        if not 0.0 < self.gamma0 <= 0.25:
            raise ValueError(f"gamma0 must lie in (0, 0.25], got {self.gamma0!r}")
        if self.n_iter < 0 or self.burn_in < 0:
            raise ValueError("n_iter and burn_in must be non-negative")
        if self.n_iter > 0 and not self.n_iter > self.burn_in:
            raise ValueError("n_iter must exceed burn_in")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.mala_step is not None and not self.mala_step > 0:
            raise ValueError("mala_step must be positive")


@dataclass
class Evaluation:
    """Everything one envelope evaluation produces at ``(theta, delta, phi)``."""

    h: float
    J: np.ndarray
    grad: np.ndarray
    log_target: float


@dataclass
class InactiveFactor:
    """Cholesky factor ``L`` of the inactive-block precision and its inverse."""

    index: np.ndarray
    L: np.ndarray
    L_inv: np.ndarray
    half_logdet: float


class ApproxPosterior:
    """Moreau-Yosida approximation of the spike-and-slab posterior for a dataset.

    ``gamma`` defaults to the step rule with ``gamma0``. Contexts and
    inactive-block factorizations are cached, so repeated evaluations at the
    same ``phi`` or support are cheap.
    """

    def __init__(self, data: Dataset, gamma: Optional[float] = None, gamma0: float = 0.25,
                 drift_cap: Optional[float] = None):
        self.data = data
        self.gamma = gamma_from_rule(data, gamma0) if gamma is None else float(gamma)
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        self.drift_cap = drift_cap
        self._ctx_cache: dict = {}
        self._chol_cache: dict = {}
        self._half_log_2pig = 0.5 * (_LOG_2PI + math.log(self.gamma))

    @property
    def d(self):
        return self.data.d

    def context(self, phi: HyperState) -> EnvelopeContext:
        key = (phi.alpha, phi.lam1, phi.lam2)
        ctx = self._ctx_cache.get(key)
        if ctx is None:
            if len(self._ctx_cache) > 64:
                self._ctx_cache.clear()
            ctx = EnvelopeContext(self.gamma, phi.prior(self.data.sigma2), self.drift_cap)
            self._ctx_cache[key] = ctx
        return ctx

    def drift_cap_for(self, phi: HyperState) -> float:
        if self.drift_cap is not None:
            return self.drift_cap
        return default_drift_cap(self.context(phi).prior, self.d)

    def evaluate(self, theta, delta, phi: HyperState) -> Evaluation:
        # same quantities as envelope.fb_envelope, inlined for speed
        data = self.data
        ctx = self.context(phi)
        prior = ctx.prior
        gamma = self.gamma
        resid = data.z - data.X @ theta
        loss = float(resid @ resid) / (2.0 * data.sigma2)
        grad = -(data.X.T @ resid) / data.sigma2
        J = np.where(delta, prior.prox(theta - gamma * grad, gamma), 0.0)
        step = J - theta
        s = int(np.count_nonzero(delta))
        h = (
            loss
            + float(grad @ step)
            + float(np.sum(prior.neg_log(J)))
            + s * ctx.log_norm
            + float(step @ step) / (2.0 * gamma)
        )
        if not math.isfinite(h):
            raise SamplerError("non-finite envelope value")
        lt = (
            log_prior_delta(delta, phi)
            + s * self._half_log_2pig
            - h
            + log_hyperprior(phi, self.d)
        )
        return Evaluation(h, J, grad, lt)

    def evaluate_state(self, state: ChainState) -> Evaluation:
        if state.cache is None:
            state.cache = self.evaluate(state.theta, state.delta, state.phi)
        return state.cache

    def log_target(self, state: ChainState) -> float:
        """Log density of the approximate posterior, up to a dataset constant."""
        return self.evaluate_state(state).log_target

    def delta_logits(self, theta, phi: HyperState, grad=None) -> np.ndarray:
        """Conditional log-odds of ``delta_j = 1`` given ``theta`` and ``phi``."""
        ctx = self.context(phi)
        prior = ctx.prior
        if grad is None:
            grad = -(self.data.X.T @ (self.data.z - self.data.X @ theta)) / self.data.sigma2
        dj = prior.prox(theta - self.gamma * grad, self.gamma)
        bracket = (
            grad * dj
            + ctx.log_norm
            + prior.neg_log(dj)
            + (dj * dj - 2.0 * theta * dj) / (2.0 * self.gamma)
        )
        return math.log(phi.q) - math.log1p(-phi.q) + self._half_log_2pig - bracket

    # inactive block -------------------------------------------------------

    def inactive_factor(self, delta) -> InactiveFactor:
        """Factorization of the inactive-block proposal precision.

        The precision is ``(I - (gamma/sigma2) X_c'X_c) / gamma``, the inverse of
        ``gamma * Sigma``.
        """
        key = delta.tobytes()
        fac = self._chol_cache.get(key)
        if fac is None:
            inactive = np.flatnonzero(~delta)
            G = self.data.gram[np.ix_(inactive, inactive)]
            Q = (np.eye(inactive.size) - (self.gamma / self.data.sigma2) * G) / self.gamma
            try:
                L = np.linalg.cholesky(Q)
            except np.linalg.LinAlgError as exc:
                raise SamplerError(
                    "inactive-block covariance is not positive definite; gamma violates the step rule"
                ) from exc
            L_inv = solve_triangular(L, np.eye(inactive.size), lower=True, check_finite=False)
            fac = InactiveFactor(inactive, L, L_inv, float(np.sum(np.log(np.diag(L)))))
            if len(self._chol_cache) > 32:
                self._chol_cache.clear()
            self._chol_cache[key] = fac
        return fac

    def inactive_proposal(self, theta, delta, phi: HyperState):
        """Mean and factorization of the Gaussian proposal for the inactive block.

        The proposal kernel is ``exp(-prox_surrogate)`` as a function of the
        inactive coefficients with the active ones held fixed.
        """
        prior = self.context(phi).prior
        fac = self.inactive_factor(delta)
        v = np.where(delta, prior.prox(theta, self.gamma) - theta, 0.0)
        w = self.data.X @ v
        b = -(self.data.X.T @ w)[fac.index] / self.data.sigma2
        mean = fac.L_inv.T @ (fac.L_inv @ b)
        return mean, fac

    # MALA on the active block ----------------------------------------------

    def mala_mean(self, theta, J, active, step, cap):
        G = (theta[active] - J[active]) / self.gamma
        norm = float(np.linalg.norm(G))
        if norm > cap:
            G = G * (cap / norm)
        return theta[active] - 0.5 * step * G


def gaussian_logpdf_prec(x, mean, fac: InactiveFactor):
    """Log density of ``N(mean, (L L')^{-1})`` at ``x``."""
    v = fac.L.T @ (x - mean)
    return -0.5 * float(v @ v) + fac.half_logdet - 0.5 * x.size * _LOG_2PI


# single-site updates ---------------------------------------------------------


def log_target(target: ApproxPosterior, state: ChainState) -> float:
    return target.log_target(state)


def update_delta(target: ApproxPosterior, state: ChainState, rng) -> ChainState:
    """Resample every ``delta_j`` jointly from its exact conditional."""
    grad = state.cache.grad if state.cache is not None else None
    r = target.delta_logits(state.theta, state.phi, grad)
    prob = 0.5 * (1.0 + np.tanh(0.5 * r))
    delta = rng.random(r.size) < prob
    return ChainState(delta, state.theta, state.phi)


def mala_log_ratio(target: ApproxPosterior, state: ChainState, proposal, step: float):
    """Log MH ratio of a truncated-MALA move of the active block to ``proposal``.

    Returns ``(log_ratio, proposed_state)``.
    """
    active = np.flatnonzero(state.delta)
    cap = target.drift_cap_for(state.phi)
    cur = target.evaluate_state(state)
    theta_new = state.theta.copy()
    theta_new[active] = proposal
    new_state = ChainState(state.delta, theta_new, state.phi)
    new = target.evaluate_state(new_state)
    fwd_mean = target.mala_mean(state.theta, cur.J, active, step, cap)
    rev_mean = target.mala_mean(theta_new, new.J, active, step, cap)
    log_fwd = -float(np.sum((proposal - fwd_mean) ** 2)) / (2.0 * step)
    log_rev = -float(np.sum((state.theta[active] - rev_mean) ** 2)) / (2.0 * step)
    return new.log_target - cur.log_target + log_rev - log_fwd, new_state


def update_theta_active(target: ApproxPosterior, state: ChainState, rng, step: float):
    """Truncated-MALA step on the active coefficients.

    Returns ``(state, accepted, acceptance_probability)``; a support with no
    active coordinate is left unchanged and reports ``accepted=None``.
    """
    active = np.flatnonzero(state.delta)
    if active.size == 0:
        return state, None, None
    cur = target.evaluate_state(state)
    cap = target.drift_cap_for(state.phi)
    mean = target.mala_mean(state.theta, cur.J, active, step, cap)
    proposal = mean + math.sqrt(step) * rng.standard_normal(active.size)
    log_ratio, new_state = mala_log_ratio(target, state, proposal, step)
    accept_prob = 1.0 if log_ratio >= 0 else math.exp(log_ratio)
    if rng.random() < accept_prob:
        return new_state, True, accept_prob
    return state, False, accept_prob


def independence_log_ratio(target: ApproxPosterior, state: ChainState, proposal, mean=None,
                           fac=None):
    """Log MH ratio of replacing the inactive block by ``proposal``.

    Returns ``(log_ratio, proposed_state)``.
    """
    if mean is None:
        mean, fac = target.inactive_proposal(state.theta, state.delta, state.phi)
    theta_new = state.theta.copy()
    theta_new[fac.index] = proposal
    new_state = ChainState(state.delta, theta_new, state.phi)
    lt_new = target.log_target(new_state)
    lt_cur = target.log_target(state)
    lq_new = gaussian_logpdf_prec(proposal, mean, fac)
    lq_cur = gaussian_logpdf_prec(state.theta[fac.index], mean, fac)
    return lt_new - lt_cur + lq_cur - lq_new, new_state


def update_theta_inactive(target: ApproxPosterior, state: ChainState, rng):
    """Independence-Metropolis step on the inactive coefficients.

    Returns ``(state, accepted, acceptance_probability)``.
    """
    if state.delta.all():
        return state, None, None
    mean, fac = target.inactive_proposal(state.theta, state.delta, state.phi)
    proposal = mean + fac.L_inv.T @ rng.standard_normal(fac.index.size)
    log_ratio, new_state = independence_log_ratio(target, state, proposal, mean, fac)
    accept_prob = 1.0 if log_ratio >= 0 else math.exp(log_ratio)
    if rng.random() < accept_prob:
        return new_state, True, accept_prob
    return state, False, accept_prob


def update_q(state: ChainState, rng) -> ChainState:
    """``q ~ Beta(|delta| + 1, d + d^u - |delta|)``."""
    d = state.delta.size
    s = int(np.count_nonzero(state.delta))
    q = rng.beta(s + 1.0, d + float(d) ** state.phi.u - s)
    q = min(max(q, 1e-300), 1.0 - 1e-16)
    return ChainState(state.delta, state.theta, state.phi.replace(q=q))


def lambda_moves(phi: HyperState):
    """Which of ``(lambda1, lambda2)`` influence the target."""
    return (phi.alpha > 0.0, phi.alpha < 1.0)


def update_lambdas(target: ApproxPosterior, state: ChainState, rng, scales):
    """Gaussian random-walk Metropolis on the active penalties.

    ``scales`` holds one proposal standard deviation per penalty. Proposals
    outside ``[a_min, M]`` are rejected. Returns
    ``(state, accepted, acceptance_probability)``.
    """
    move1, move2 = lambda_moves(state.phi)
    noise = rng.standard_normal(2)
    phi = state.phi
    lam1 = phi.lam1 + scales[0] * noise[0] if move1 else phi.lam1
    lam2 = phi.lam2 + scales[1] * noise[1] if move2 else phi.lam2
    proposal = phi.replace(lam1=float(lam1), lam2=float(lam2))
    u = rng.random()
    if not proposal.in_support():
        return state, False, 0.0
    new_state = ChainState(state.delta, state.theta, proposal)
    log_ratio = target.log_target(new_state) - target.log_target(state)
    accept_prob = 1.0 if log_ratio >= 0 else math.exp(log_ratio)
    if u < accept_prob:
        return new_state, True, accept_prob
    return state, False, accept_prob


# chains -----------------------------------------------------------------------


@dataclass
class TraceRecord:
    iter: int
    delta: np.ndarray
    theta: np.ndarray
    q: float
    lambda1: float
    lambda2: float
    log_target: float
    acc_mala: Optional[bool]
    acc_ind: Optional[bool]
    acc_rwm: Optional[bool]

    def to_dict(self):
        return {
            "iter": self.iter,
            "delta": "".join("1" if b else "0" for b in self.delta),
            "theta": [float(t) for t in self.theta],
            "q": float(self.q),
            "lambda1": float(self.lambda1),
            "lambda2": float(self.lambda2),
            "log_target": float(self.log_target),
            "acc_mala": self.acc_mala,
            "acc_ind": self.acc_ind,
            "acc_rwm": self.acc_rwm,
        }


@dataclass
class ChainSummary:
    n_iter: int
    burn_in: int
    gamma: float
    final_state: ChainState
    mala_step: float
    theta_mean: np.ndarray
    theta_sq_mean: np.ndarray
    prox_mean: np.ndarray
    inclusion_probs: np.ndarray
    acceptance: dict
    pattern_counts: dict = field(default_factory=dict)
    theta_batch_means: Optional[np.ndarray] = None
    theta_sq_batch_means: Optional[np.ndarray] = None
    metrics: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    elapsed: float = 0.0


def initial_state(data: Dataset, alpha: float = 1.0, u: float = 1.1, q: Optional[float] = None,
                  lam1: float = 1.0, lam2: float = 1.0, a_min: float = 1e-5,
                  M: Optional[float] = None, M1: Optional[float] = None,
                  gamma0: float = 0.25) -> ChainState:
    """All-zero ``theta`` and ``delta`` with the given hyperparameters."""
    d = data.d
    if M1 is None:
        M1 = default_lam1_cap(data, gamma_from_rule(data, gamma0))
    phi = HyperState(
        q=1.0 / (d + 1.0) if q is None else q,
        lam1=lam1,
        lam2=lam2,
        alpha=alpha,
        u=u,
        a_min=a_min,
        M=default_upper_bound(data, alpha) if M is None else M,
        M1=M1,
    )
    return ChainState(np.zeros(d, dtype=bool), np.zeros(d), phi)


def _rngs(seed):
    children = np.random.SeedSequence(seed).spawn(5)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def run_chain(data: Dataset, config: SamplerConfig, init: Optional[ChainState] = None,
              sink: Optional[Callable[[TraceRecord], None]] = None,
              truth: Optional[TruthSpec] = None) -> ChainSummary:
    """Run ``config.n_iter`` sweeps and summarize the post-burn-in draws.

    Every ``config.thin``-th sweep is passed to ``sink`` as a
    :class:`TraceRecord`. With ``truth`` the relative error and F-score are
    tracked for every recorded sweep, both on the prox image ``J`` (exactly
    sparse) and on the raw ``(theta, delta)``.
    """
    start = time.perf_counter()
    state = init.copy() if init is not None else initial_state(data)
    target = ApproxPosterior(data, gamma0=config.gamma0, drift_cap=config.drift_cap)
    rng_delta, rng_mala, rng_ind, rng_q, rng_rwm = _rngs(config.seed)
    d = data.d
    step = target.gamma if config.mala_step is None else config.mala_step
    log_step = math.log(step)
    move1, move2 = lambda_moves(state.phi)
    rwm_scales = np.array([config.rwm_scale * max(state.phi.lam1, 1e-3),
                           config.rwm_scale * max(state.phi.lam2, 1e-3)])
    log_rwm = np.log(rwm_scales)

    kept = max(config.n_iter - config.burn_in, 0)
    sums = np.zeros(d)
    sq_sums = np.zeros(d)
    prox_sums = np.zeros(d)
    incl = np.zeros(d)
    patterns: dict = {}
    n_batches = min(config.n_batches, kept) if kept else 0
    batch_len = kept // n_batches if n_batches else 0
    batch = np.zeros((n_batches, d))
    batch_sq = np.zeros((n_batches, d))
    counts = {k: [0, 0] for k in ("mala", "ind", "rwm")}
    metric_sums = {"rel_error_prox": 0.0, "f_prox": 0.0, "rel_error_theta": 0.0, "f_delta": 0.0}
    curves = {"iter": [], "elapsed": [], "rel_error_prox": [], "f_prox": []}
    track_patterns = d <= 12

    for it in range(1, config.n_iter + 1):
        state = update_delta(target, state, rng_delta)
        state, acc_m, p_m = update_theta_active(target, state, rng_mala, step)
        if acc_m is not None:
            counts["mala"][0] += int(acc_m)
            counts["mala"][1] += 1
            if config.adapt_mala and it <= config.burn_in:
                log_step += it ** -0.6 * (p_m - config.target_accept_mala)
                step = math.exp(log_step)
        state, acc_i, _ = update_theta_inactive(target, state, rng_ind)
        if acc_i is not None:
            counts["ind"][0] += int(acc_i)
            counts["ind"][1] += 1
        acc_r = None
        if not config.fixed_phi:
            state = update_q(state, rng_q)
            if move1 or move2:
                state, acc_r, p_r = update_lambdas(target, state, rng_rwm, rwm_scales)
                counts["rwm"][0] += int(acc_r)
                counts["rwm"][1] += 1
                log_rwm += it ** -0.6 * (p_r - config.target_accept_rwm)
                rwm_scales = np.exp(log_rwm)

        record = it % config.thin == 0
        post = it > config.burn_in
        ev = None
        if post or record:
            ev = target.evaluate_state(state)
        if post:
            k = it - config.burn_in - 1
            th = state.theta
            sums += th
            sq_sums += th * th
            prox_sums += ev.J
            incl += state.delta
            if track_patterns:
                key = "".join("1" if b else "0" for b in state.delta)
                patterns[key] = patterns.get(key, 0) + 1
            if batch_len and k < batch_len * n_batches:
                b = k // batch_len
                batch[b] += th
                batch_sq[b] += th * th
            if truth is not None:
                metric_sums["rel_error_prox"] += relative_error(ev.J, truth.theta)
                metric_sums["f_prox"] += sen_prec_f(ev.J != 0.0, truth.delta)[2]
                metric_sums["rel_error_theta"] += relative_error(th, truth.theta)
                metric_sums["f_delta"] += sen_prec_f(state.delta, truth.delta)[2]
        if record:
            if truth is not None:
                curves["iter"].append(it)
                curves["elapsed"].append(time.perf_counter() - start)
                curves["rel_error_prox"].append(relative_error(ev.J, truth.theta))
                curves["f_prox"].append(sen_prec_f(ev.J != 0.0, truth.delta)[2])
            if sink is not None:
                sink(TraceRecord(it, state.delta.copy(), state.theta.copy(), state.phi.q,
                                 state.phi.lam1, state.phi.lam2, ev.log_target, acc_m, acc_i, acc_r))

    denom = max(kept, 1)
    acceptance = {k: (v[0] / v[1] if v[1] else None) for k, v in counts.items()}
    metrics = {k: v / denom for k, v in metric_sums.items()} if truth is not None and kept else {}
    return ChainSummary(
        n_iter=config.n_iter,
        burn_in=config.burn_in,
        gamma=target.gamma,
        final_state=state,
        mala_step=step,
        theta_mean=sums / denom,
        theta_sq_mean=sq_sums / denom,
        prox_mean=prox_sums / denom,
        inclusion_probs=incl / denom,
        acceptance=acceptance,
        pattern_counts=patterns,
        theta_batch_means=batch / batch_len if batch_len else None,
        theta_sq_batch_means=batch_sq / batch_len if batch_len else None,
        metrics=metrics,
        curves=curves if truth is not None else {},
        elapsed=time.perf_counter() - start,
    )
