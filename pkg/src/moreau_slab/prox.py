"""Scalar-separable sparsity priors and their proximal maps.

Every prior exposes the negative log of its (unnormalized) density kernel,
the closed-form proximal map of that function, and enough extra structure
(slope at the origin, subgradient, cancellation-free differences) for the
golden-section oracle in :func:`prox_oracle_scalar` to check it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .special import log_erfcx

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class OracleBracketError(RuntimeError):
    """Golden-section search did not trap the minimizer inside its bracket."""


def _check_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class ElasticNet:
    """Elastic-net kernel ``exp(-a (l1/s2)|x| - (1-a)(l2/(2 s2)) x^2)``."""

    alpha: float
    lam1: float
    lam2: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        _check_positive("sigma2", self.sigma2)
        if self.alpha > 0:
            _check_positive("lam1", self.lam1)
        if self.alpha < 1:
            _check_positive("lam2", self.lam2)

    convex = True

    @property
    def l1_weight(self):
        return self.alpha * self.lam1 / self.sigma2

    @property
    def l2_weight(self):
        return (1.0 - self.alpha) * self.lam2 / self.sigma2

    def neg_log(self, x):
        return self.l1_weight * np.abs(x) + 0.5 * self.l2_weight * np.square(x)

    def neg_log_diff(self, a, b):
        return self.l1_weight * (abs(a) - abs(b)) + 0.5 * self.l2_weight * (a - b) * (a + b)

    def slope_at_zero(self):
        return self.l1_weight

    def subgradient(self, x):
        return self.l1_weight * np.sign(x) + self.l2_weight * np.asarray(x)

    def prox(self, x, gamma):
        x = np.asarray(x, dtype=float)
        shrunk = np.maximum(np.abs(x) - gamma * self.l1_weight, 0.0)
        return np.sign(x) * shrunk / (1.0 + gamma * self.l2_weight)

    def log_normalizer(self):
        """``log Z`` with ``Z = integral of the kernel over the real line``."""
        if self.alpha == 1.0:
            return math.log(2.0 * self.sigma2 / self.lam1)
        sigma = math.sqrt(self.sigma2)
        b = (1.0 - self.alpha) * self.lam2
        arg = self.alpha * self.lam1 / (sigma * math.sqrt(2.0 * b))
        return math.log(sigma) + 0.5 * math.log(2.0 * math.pi / b) + log_erfcx(arg)


@dataclass(frozen=True)
class Laplace:
    """Laplace kernel ``exp(-lam |x|)``."""

    lam: float

    def __post_init__(self):
        _check_positive("lam", self.lam)

    convex = True

    def neg_log(self, x):
        return self.lam * np.abs(x)

    def neg_log_diff(self, a, b):
        return self.lam * (abs(a) - abs(b))

    def slope_at_zero(self):
        return self.lam

    def subgradient(self, x):
        return self.lam * np.sign(x)

    def prox(self, x, gamma):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * np.maximum(np.abs(x) - gamma * self.lam, 0.0)

    def log_normalizer(self):
        return math.log(2.0 / self.lam)


@dataclass(frozen=True)
class GenDoublePareto:
    """Generalized double Pareto, ``(1/(2 lam)) (1 + |x|/(alpha lam))^-(alpha+1)``.

    The negative log-density is concave on each half-line, so the prox
    objective is only convex while ``gamma <= (alpha lam)^2 / (alpha + 1)``.
    :meth:`prox` returns the global minimizer for every ``gamma``.
    """

    alpha: float
    lam: float

    def __post_init__(self):
        _check_positive("alpha", self.alpha)
        _check_positive("lam", self.lam)

    convex = False

    @property
    def scale(self):
        return self.alpha * self.lam

    def neg_log(self, x):
        return (self.alpha + 1.0) * np.log1p(np.abs(x) / self.scale)

    def neg_log_diff(self, a, b):
        return (self.alpha + 1.0) * math.log1p((abs(a) - abs(b)) / (self.scale + abs(b)))

    def slope_at_zero(self):
        return (self.alpha + 1.0) / self.scale

    def subgradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * (self.alpha + 1.0) / (self.scale + np.abs(x))

    def convex_step_limit(self):
        return self.scale ** 2 / (self.alpha + 1.0)

    def prox(self, x, gamma):
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        c = self.scale
        k = gamma * (self.alpha + 1.0)
        # positive stationary points solve u^2 + (c - a) u + k - a c = 0
        disc = (a + c) ** 2 - 4.0 * k
        root = 0.5 * ((a - c) + np.sqrt(np.maximum(disc, 0.0)))
        valid = (disc >= 0.0) & (root > 0.0)
        root = np.where(valid, root, 0.0)

        def objective(u):
            return (self.alpha + 1.0) * np.log1p(u / c) + (u - a) ** 2 / (2.0 * gamma)

        better = valid & (objective(root) < objective(np.zeros_like(a)))
        return np.sign(x) * np.where(better, root, 0.0)

    def log_normalizer(self):
        return math.log(2.0 * self.lam)


@dataclass(frozen=True)
class MCP:
    """Improper prior induced by the minimax concave penalty.

    ``-log p(x) = lam |x| - x^2/(2 alpha)`` for ``|x| <= alpha lam`` and
    ``alpha lam^2 / 2`` beyond.
    """

    alpha: float
    lam: float

    def __post_init__(self):
        _check_positive("alpha", self.alpha)
        _check_positive("lam", self.lam)

    convex = False

    @property
    def knee(self):
        return self.alpha * self.lam

    def neg_log(self, x):
        a = np.abs(x)
        inside = self.lam * a - a * a / (2.0 * self.alpha)
        return np.where(a <= self.knee, inside, 0.5 * self.alpha * self.lam ** 2)

    def neg_log_diff(self, a, b):
        a, b = abs(a), abs(b)
        if a <= self.knee and b <= self.knee:
            return (a - b) * (self.lam - (a + b) / (2.0 * self.alpha))
        return float(self.neg_log(a) - self.neg_log(b))

    def slope_at_zero(self):
        return self.lam

    def subgradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * np.maximum(self.lam - np.abs(x) / self.alpha, 0.0)

    def convex_step_limit(self):
        return self.alpha

    def prox(self, x, gamma):
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        knee = self.knee

        def objective(u):
            return self.neg_log(u) + (u - a) ** 2 / (2.0 * gamma)

        # firm threshold on the curved piece, identity past the knee, and the
        # two endpoints of the curved piece in case it is concave (gamma > alpha)
        candidates = [np.zeros_like(a), np.full_like(a, knee), np.where(a > knee, a, knee)]
        if gamma != self.alpha:
            firm = (a - gamma * self.lam) / (1.0 - gamma / self.alpha)
            candidates.append(np.clip(firm, 0.0, knee))
        cand = np.stack(candidates)
        # argmin returns the first minimum, so ties resolve to zero
        idx = np.argmin(objective(cand), axis=0)
        best = np.take_along_axis(cand, idx[None], axis=0)[0]
        return np.sign(x) * best

    def log_normalizer(self):
        raise ValueError("the MCP prior is improper and has no normalizing constant")


PriorSpec = Union[ElasticNet, Laplace, GenDoublePareto, MCP]


@dataclass(frozen=True)
class ProxResult:
    point: float
    objective_value: float


def _check_inputs(gamma, x):
    if not (math.isfinite(gamma) and gamma > 0):
        raise ValueError(f"step gamma must be positive and finite, got {gamma!r}")
    if not np.all(np.isfinite(x)):
        raise ValueError("prox input must be finite")


def shrink_scalar(prior: PriorSpec, gamma: float, x):
    """Proximal map of ``-log p`` with step ``gamma``, applied elementwise."""
    _check_inputs(gamma, x)
    out = prior.prox(x, gamma)
    return float(out) if np.ndim(x) == 0 else out


def prox_restricted(prior: PriorSpec, gamma: float, theta, delta):
    """``delta * shrink(theta)``: the prox of ``P(.|delta)``, zero off the support."""
    theta = np.asarray(theta, dtype=float)
    delta = np.asarray(delta)
    if theta.shape != delta.shape:
        raise ValueError(f"theta has shape {theta.shape} but delta has shape {delta.shape}")
    _check_inputs(gamma, theta)
    return np.where(delta.astype(bool), prior.prox(theta, gamma), 0.0)


def neg_log_prior(prior: PriorSpec, x):
    """Negative log of the unnormalized prior kernel."""
    if not np.all(np.isfinite(x)):
        raise ValueError("prior argument must be finite")
    out = prior.neg_log(x)
    return float(out) if np.ndim(x) == 0 else out


def prox_oracle_scalar(prior: PriorSpec, gamma: float, x: float, tol: float = 1e-12) -> ProxResult:
    """Golden-section minimization of ``-log p(u) + (u - x)^2 / (2 gamma)``.

    Independent of the closed forms; used to certify them. Comparisons use
    cancellation-free objective differences so the minimizer is located well
    below the square-root-of-epsilon limit of plain value comparisons.
    The objective must be unimodal on the bracket.
    """
    _check_inputs(gamma, x)
    x = float(x)
    half = abs(x) + 10.0 * gamma * prior.slope_at_zero()

    def diff(a, b):
        # objective(a) - objective(b)
        return prior.neg_log_diff(a, b) + (a - b) * (a + b - 2.0 * x) / (2.0 * gamma)

    def objective(u):
        return float(prior.neg_log(u)) + (u - x) ** 2 / (2.0 * gamma)

    lo, hi = x - half, x + half
    if half == 0.0:
        return ProxResult(x, objective(x))
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        if diff(c, d) <= 0.0:
            hi, d = d, c
            c = hi - _INV_PHI * (hi - lo)
        else:
            lo, c = c, d
            d = lo + _INV_PHI * (hi - lo)
    point = 0.5 * (lo + hi)
    # the minimizer of a convex penalty plus quadratic sits at 0 whenever
    # the subdifferential condition holds there; snap if 0 is within tolerance
    if abs(point) <= tol * max(1.0, abs(x)) * 10 and diff(0.0, point) <= 0.0:
        point = 0.0
    edge = x - half if point < x else x + half
    if abs(point - edge) <= 10 * tol * max(1.0, abs(edge)):
        outside = edge + (edge - x) * 1e-3
        if diff(outside, point) < 0.0:
            raise OracleBracketError(
                f"minimizer escaped bracket [{x - half}, {x + half}] for x={x}, gamma={gamma}, prior={prior}"
            )
    return ProxResult(point, objective(point))
