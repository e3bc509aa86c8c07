"""Forward-backward envelope of ``l + P(.|delta)`` and its building blocks.

For a smooth convex loss ``l`` and a separable prior restricted to the
support ``delta``::

    J(theta)   = prox_{gamma P(.|delta)}(theta - gamma grad l(theta))
    h_gamma    = l + <grad l, J - theta> + P(J|delta) + ||J - theta||^2 / (2 gamma)
    G(theta)   = (theta - J(theta)) / gamma

``P(.|delta)`` carries the per-coordinate log normalizer of the slab so that
envelope values are comparable across supports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

import numpy as np

from .prox import ElasticNet, PriorSpec, prox_restricted

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class SmoothLoss(Protocol):
    def value(self, theta) -> float: ...

    def gradient(self, theta) -> np.ndarray: ...

    def hessian_apply(self, theta, v) -> np.ndarray: ...


class ZeroLoss:
    """``l = 0``."""

    def value(self, theta):
        return 0.0

    def gradient(self, theta):
        return np.zeros_like(np.asarray(theta, dtype=float))

    def hessian_apply(self, theta, v):
        return np.zeros_like(np.asarray(v, dtype=float))


class FunctionLoss:
    """Smooth loss assembled from plain callables."""

    def __init__(self, value: Callable, gradient: Callable, hessian_apply: Callable):
        self._value = value
        self._gradient = gradient
        self._hessian_apply = hessian_apply

    def value(self, theta):
        return float(self._value(np.asarray(theta, dtype=float)))

    def gradient(self, theta):
        return np.asarray(self._gradient(np.asarray(theta, dtype=float)), dtype=float)

    def hessian_apply(self, theta, v):
        return np.asarray(self._hessian_apply(np.asarray(theta, dtype=float), np.asarray(v, dtype=float)))


def default_drift_cap(prior: PriorSpec, d: int) -> float:
    if isinstance(prior, ElasticNet):
        slope = prior.lam1 / prior.sigma2
    else:
        slope = prior.slope_at_zero()
    cap = 10.0 * math.sqrt(d) * slope
    return cap if cap > 0 else math.inf


@dataclass(frozen=True)
class EnvelopeContext:
    """Step size, prior and drift cap shared by the envelope computations.

    ``log_norm`` is the constant added to ``-log p`` for every active
    coordinate. ``None`` means the prior's own log normalizer (zero for
    improper priors).
    """

    gamma: float
    prior: PriorSpec
    drift_cap: Optional[float] = None
    log_norm: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        if self.drift_cap is not None and not self.drift_cap > 0:
            raise ValueError(f"drift cap must be positive, got {self.drift_cap!r}")
        if self.log_norm is None:
            try:
                value = self.prior.log_normalizer()
            except ValueError:
                value = 0.0
            object.__setattr__(self, "log_norm", value)

    def cap_for(self, d):
        return self.drift_cap if self.drift_cap is not None else default_drift_cap(self.prior, d)


def _support(delta, shape):
    delta = np.asarray(delta).astype(bool)
    if delta.shape != shape:
        raise ValueError(f"delta has shape {delta.shape}, expected {shape}")
    return delta


def penalty(ctx: EnvelopeContext, u, delta) -> float:
    """``P(u|delta)``: prior term on the support, ``+inf`` off it."""
    u = np.asarray(u, dtype=float)
    delta = _support(delta, u.shape)
    if np.any(u[~delta] != 0.0):
        return math.inf
    active = u[delta]
    return float(np.sum(ctx.prior.neg_log(active))) + active.size * ctx.log_norm


def moreau_penalty(ctx: EnvelopeContext, w, delta) -> float:
    """``P_gamma(w|delta) = min_u P(u|delta) + ||u - w||^2 / (2 gamma)``."""
    w = np.asarray(w, dtype=float)
    p = prox_restricted(ctx.prior, ctx.gamma, w, delta)
    return penalty(ctx, p, delta) + float(np.sum((p - w) ** 2)) / (2.0 * ctx.gamma)


def envelope_from_gradient(ctx: EnvelopeContext, theta, delta, loss_value, grad):
    """Envelope value and ``J`` given ``l(theta)`` and ``grad l(theta)``.

    Shared by :func:`fb_envelope` and the samplers, which keep their own
    cached residuals.
    """
    theta = np.asarray(theta, dtype=float)
    J = prox_restricted(ctx.prior, ctx.gamma, theta - ctx.gamma * grad, delta)
    step = J - theta
    value = (
        loss_value
        + float(grad @ step)
        + penalty(ctx, J, delta)
        + float(step @ step) / (2.0 * ctx.gamma)
    )
    return value, J


def j_map(ctx: EnvelopeContext, loss: SmoothLoss, theta, delta) -> np.ndarray:
    """``prox(theta - gamma grad l(theta) | delta)``."""
    theta = np.asarray(theta, dtype=float)
    return prox_restricted(ctx.prior, ctx.gamma, theta - ctx.gamma * loss.gradient(theta), delta)


def fb_envelope(ctx: EnvelopeContext, loss: SmoothLoss, theta, delta, form: str = "prox") -> float:
    """Forward-backward envelope ``h_gamma(theta|delta)``.

    ``form="prox"`` evaluates it through ``J``; ``form="moreau"`` as
    ``l - (gamma/2)||grad l||^2 + P_gamma(theta - gamma grad l)``. The two
    agree up to rounding.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    value = loss.value(theta)
    grad = loss.gradient(theta)
    if form == "prox":
        return envelope_from_gradient(ctx, theta, delta, value, grad)[0]
    if form == "moreau":
        return (
            value
            - 0.5 * ctx.gamma * float(grad @ grad)
            + moreau_penalty(ctx, theta - ctx.gamma * grad, delta)
        )
    raise ValueError(f"unknown form {form!r}")


def prox_surrogate(ctx: EnvelopeContext, loss: SmoothLoss, theta, delta) -> float:
    """Envelope with ``J`` replaced by ``prox(theta|delta)``.

    As a function of the inactive block this is a Gaussian log-kernel for the
    quadratic loss; the independence sampler proposes from it.
    """
    theta = np.asarray(theta, dtype=float)
    p = prox_restricted(ctx.prior, ctx.gamma, theta, delta)
    grad = loss.gradient(theta)
    step = p - theta
    return (
        loss.value(theta)
        + float(grad @ step)
        + penalty(ctx, p, delta)
        + float(step @ step) / (2.0 * ctx.gamma)
    )


def g_drift(ctx: EnvelopeContext, loss: SmoothLoss, theta, delta) -> np.ndarray:
    """``(theta - J(theta)) / gamma``."""
    theta = np.asarray(theta, dtype=float)
    return (theta - j_map(ctx, loss, theta, delta)) / ctx.gamma


def cap_vector(v, cap: float) -> np.ndarray:
    """``(c / max(c, ||v||)) v``."""
    norm = float(np.linalg.norm(v))
    return v if norm <= cap else v * (cap / norm)


def g_drift_capped(ctx: EnvelopeContext, loss: SmoothLoss, theta, delta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return cap_vector(g_drift(ctx, loss, theta, delta), ctx.cap_for(theta.size))


def grad_fb_exact(ctx: EnvelopeContext, loss: SmoothLoss, theta, delta) -> np.ndarray:
    """Gradient of the envelope: ``(I - gamma Hess l)(theta - J) / gamma``.

    Uses symmetry of the Hessian, so only Hessian-vector products are needed.
    """
    G = g_drift(ctx, loss, theta, delta)
    return G - ctx.gamma * loss.hessian_apply(theta, G)


def _golden_min(f, lo, hi, tol):
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    x = 0.5 * (lo + hi)
    return x, f(x)


def _line_min(f, x0, f0, scale, tol):
    """Minimize a convex 1-D function, bracketing outward from ``x0``."""
    step = max(scale, 1e-8)
    left, right = x0 - step, x0 + step
    while f(left) < f0 and step < 1e12:
        step *= 2.0
        left = x0 - step
    step = max(scale, 1e-8)
    while f(right) < f0 and step < 1e12:
        step *= 2.0
        right = x0 + step
    x, fx = _golden_min(f, left, right, tol)
    return (x, fx) if fx < f0 else (x0, f0)


def moreau_env_oracle(h: Callable, gamma: float, x, delta=None, tol: float = 1e-12,
                      max_sweeps: int = 2000) -> float:
    """Moreau envelope ``min_u h(u) + ||u - x||^2 / (2 gamma)`` by direct search.

    ``h`` takes a full vector; the search runs over the coordinates flagged by
    ``delta`` (all of them by default) with the rest pinned at zero. One
    active coordinate is a single golden-section search; more use cyclic
    coordinate golden-section searches from two starts, which converge for a
    convex ``h`` whose nonsmooth part is separable. Supports up to three
    active coordinates. The returned value never exceeds the objective at
    the starting points, so it is an upper bound on the true envelope.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    delta = np.ones(x.shape, dtype=bool) if delta is None else _support(delta, x.shape)
    idx = np.flatnonzero(delta)
    if idx.size > 3:
        raise ValueError("moreau_env_oracle supports at most three active coordinates")

    def full(u_act):
        u = np.zeros_like(x)
        u[idx] = u_act
        return u

    def objective(u_act):
        u = full(u_act)
        return float(h(u)) + float(np.sum((u - x) ** 2)) / (2.0 * gamma)

    if idx.size == 0:
        return objective(np.zeros(0))

    scale = math.sqrt(gamma) + float(np.max(np.abs(x))) + 1.0
    best = math.inf
    for start in (x[idx].copy(), np.zeros(idx.size)):
        u = start
        fu = objective(u)
        for _ in range(max_sweeps):
            prev = fu
            for k in range(idx.size):
                def along(t, k=k, u=u):
                    v = u.copy()
                    v[k] = t
                    return objective(v)

                t, fu = _line_min(along, u[k], fu, scale, tol)
                u = u.copy()
                u[k] = t
            if idx.size == 1 or prev - fu <= 1e-15 * max(1.0, abs(fu)):
                break
        best = min(best, fu)
    return best
