"""Brute-force references for small problems.

Exact posteriors for ``d <= 3`` by tensor Gauss-Legendre quadrature over
every support pattern, the approximation-error functional ``r_gamma`` and
its log-average ``varrho_gamma``, the closed-form error bounds, and the
point-mass example where everything is analytic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize
from scipy.special import logsumexp

from .envelope import EnvelopeContext, FunctionLoss, ZeroLoss, fb_envelope, moreau_env_oracle
from .linmodel import Dataset, HyperState, log_prior_delta
from .prox import ElasticNet, Laplace, PriorSpec

_LOG_2PI = math.log(2.0 * math.pi)
WHICH = ("exact", "my_approx", "tilde")


class QuadratureError(RuntimeError):
    pass


class GridMismatchError(ValueError):
    pass


class StepSizeError(ValueError):
    pass


# one-dimensional rules ---------------------------------------------------------


def axis_rule(lo: float, hi: float, n_panels: int, order: int = 8, breaks: Sequence[float] = (0.0,)):
    """Composite Gauss-Legendre nodes and weights on ``[lo, hi]``.

    Interior ``breaks`` become panel edges so kinks fall between panels.
    Also returns a mask of nodes in the two outermost panels.
    """
    if not hi > lo:
        raise ValueError("empty interval")
    edges = np.linspace(lo, hi, n_panels + 1)
    extra = [b for b in breaks if lo < b < hi and np.min(np.abs(edges - b)) > 1e-12 * (hi - lo)]
    edges = np.sort(np.concatenate([edges, extra]))
    x, w = leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    outer = np.zeros(nodes.size, dtype=bool)
    outer[:order] = True
    outer[-order:] = True
    return nodes, weights, outer


# posterior building blocks -------------------------------------------------------


def _loss_batch(data: Dataset, theta):
    """Quadratic loss and gradient at each row of ``theta``."""
    s2 = data.sigma2
    tg = theta @ data.gram
    lin = theta @ data.Xtz
    loss = (float(data.z @ data.z) - 2.0 * lin + np.einsum("ij,ij->i", tg, theta)) / (2.0 * s2)
    grad = (tg - data.Xtz) / s2
    return loss, grad


def _penalty_batch(prior: PriorSpec, log_norm: float, theta, delta):
    s = int(np.count_nonzero(delta))
    return np.sum(prior.neg_log(theta[:, delta]), axis=1) + s * log_norm


def exact_objective_batch(data, prior, log_norm, theta, delta):
    """``h(theta|delta) = l(theta) + P(theta|delta)`` for rows supported on ``delta``."""
    loss, _ = _loss_batch(data, theta)
    return loss + _penalty_batch(prior, log_norm, theta, delta)


def envelope_batch(data, prior, log_norm, gamma, theta, delta):
    """Forward-backward envelope ``h_gamma(theta|delta)`` at each row of ``theta``."""
    loss, grad = _loss_batch(data, theta)
    J = np.where(delta, prior.prox(theta - gamma * grad, gamma), 0.0)
    step = J - theta
    return (
        loss
        + np.einsum("ij,ij->i", grad, step)
        + _penalty_batch(prior, log_norm, J, delta)
        + np.einsum("ij,ij->i", step, step) / (2.0 * gamma)
    )


def r_gamma_batch(data, prior, gamma, theta, delta):
    theta_d = np.where(delta, theta, 0.0)
    _, g_full = _loss_batch(data, theta)
    _, g_d = _loss_batch(data, theta_d)
    diff = theta - theta_d
    first = np.einsum("ij,ij->i", g_full - g_d, diff)
    v = np.where(delta, g_full + prior.subgradient(theta_d), 0.0)
    return first + 0.5 * gamma * np.einsum("ij,ij->i", v, v)


def r_gamma(data: Dataset, prior: PriorSpec, gamma: float, delta, theta) -> float:
    """``<grad l(theta) - grad l(theta_delta), theta - theta_delta>
    + (gamma/2) ||delta . (grad l(theta) + g(theta_delta))||^2``.

    ``g`` is the subgradient ``prior.subgradient`` (zero at the origin).
    Nonnegative because the loss is convex.
    """
    theta = np.asarray(theta, dtype=float)[None, :]
    delta = np.asarray(delta).astype(bool)
    return float(r_gamma_batch(data, prior, gamma, theta, delta)[0])


def lemma2_sandwich(data: Dataset, prior: PriorSpec, gamma: float, delta, theta, log_norm=None):
    """``(lower, h_gamma, upper)`` around the envelope.

    ``upper = h(theta_delta|delta) + ||theta - theta_delta||^2 / (2 gamma)`` and
    ``lower = upper - r_gamma``.
    """
    theta = np.asarray(theta, dtype=float)
    delta = np.asarray(delta).astype(bool)
    ctx = EnvelopeContext(gamma, prior, log_norm=log_norm)
    theta_d = np.where(delta, theta, 0.0)
    upper = float(
        exact_objective_batch(data, prior, ctx.log_norm, theta_d[None], delta)[0]
        + np.sum((theta - theta_d) ** 2) / (2.0 * gamma)
    )
    value = float(envelope_batch(data, prior, ctx.log_norm, gamma, theta[None], delta)[0])
    return upper - r_gamma(data, prior, gamma, delta, theta), value, upper


# quadrature posteriors -------------------------------------------------------------


@dataclass
class Component:
    """One support pattern: its log mass and a normalized density on a tensor grid.

    ``coords`` are the coordinates of ``theta`` the grid spans; the others
    are zero.
    """

    delta: tuple
    coords: np.ndarray
    axes: list
    log_mass: float
    density: np.ndarray
    leakage: float
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def points(self, d):
        key = ("points", d)
        if key not in self._memo:
            self._memo[key] = np.asfortranarray(self._points(d))
        return self._memo[key]

    def mass_weights(self):
        """``density * weights``: the quadrature weight of each grid point."""
        if "mass" not in self._memo:
            self._memo["mass"] = self.density * self.weights()
        return self._memo["mass"]

    def _points(self, d):
        grids = np.meshgrid(*[a[0] for a in self.axes], indexing="ij") if self.axes else []
        m = int(np.prod([a[0].size for a in self.axes])) if self.axes else 1
        theta = np.zeros((m, d))
        for k, g in zip(self.coords, grids):
            theta[:, k] = g.ravel()
        return theta

    def weights(self):
        if not self.axes:
            return np.ones(1)
        w = self.axes[0][1]
        for a in self.axes[1:]:
            w = np.multiply.outer(w, a[1])
        return np.ravel(w)


@dataclass
class QuadraturePosterior:
    which: str
    d: int
    gamma: Optional[float]
    components: dict
    delta_weights: dict
    log_normalizer: float
    n_panels: int
    refinement_tv: float = math.nan
    meta: dict = field(default_factory=dict)

    def expect(self, f: Callable) -> float:
        """``E f(delta, theta)``; ``f`` maps a support mask and an ``(N, d)`` array to ``N`` values."""
        total = 0.0
        for key, comp in self.components.items():
            w = self.delta_weights[key]
            if w == 0.0:
                continue
            vals = f(np.array(key, dtype=bool), comp.points(self.d))
            total += w * float(vals @ comp.mass_weights())
        return total

    def theta_moments(self):
        mean = np.array([self.expect(lambda dl, th, j=j: th[:, j]) for j in range(self.d)])
        second = np.array([self.expect(lambda dl, th, j=j: th[:, j] ** 2) for j in range(self.d)])
        return mean, second

    def inclusion_probs(self):
        out = np.zeros(self.d)
        for key, w in self.delta_weights.items():
            out += w * np.array(key, dtype=float)
        return out

    def pattern_weights(self):
        """Weights keyed by bitstrings such as ``"10"``."""
        return {"".join("1" if b else "0" for b in k): w for k, w in self.delta_weights.items()}


def _patterns(d, fixed_delta):
    if fixed_delta is not None:
        return [tuple(bool(b) for b in np.asarray(fixed_delta).astype(bool))]
    return [tuple(bool(b) for b in p) for p in itertools.product((False, True), repeat=d)]


def _exact_mode(data, prior, delta, n_iter=5000):
    # proximal gradient on the active block
    L = max(data.lambda_max / data.sigma2, 1e-12)
    step = 1.0 / L
    theta = np.zeros(data.d)
    for _ in range(n_iter):
        _, g = _loss_batch(data, theta[None])
        new = np.where(delta, prior.prox(theta - step * g[0], step), 0.0)
        if np.max(np.abs(new - theta)) <= 1e-12 * (1.0 + np.max(np.abs(theta))):
            theta = new
            break
        theta = new
    return theta


def _exact_halfwidths(data, prior, active):
    if active.size == 0:
        return np.zeros(0)
    H = data.gram[np.ix_(active, active)] / data.sigma2
    l2 = getattr(prior, "l2_weight", 0.0)
    H = H + l2 * np.eye(active.size)
    slope = prior.slope_at_zero()
    try:
        sd = np.sqrt(np.diag(np.linalg.inv(H)))
        gauss = 10.0 * sd
        if not np.all(np.isfinite(gauss)) or np.any(gauss <= 0):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        gauss = np.full(active.size, math.inf)
    lap = np.full(active.size, 40.0 / slope if slope > 0 else math.inf)
    out = np.minimum(gauss, lap)
    if not np.all(np.isfinite(out)):
        raise QuadratureError("posterior is improper along some coordinate")
    return out


def _approx_mode_and_widths(data, prior, log_norm, gamma, delta, start):
    def fun(th):
        return float(envelope_batch(data, prior, log_norm, gamma, th[None], delta)[0])

    ctx = EnvelopeContext(gamma, prior, log_norm=log_norm)
    from .envelope import grad_fb_exact
    from .linmodel import LinearLoss

    loss = LinearLoss(data)

    def jac(th):
        return grad_fb_exact(ctx, loss, th, delta)

    res = minimize(fun, start, jac=jac, method="L-BFGS-B", options={"maxiter": 2000, "gtol": 1e-12})
    mode = res.x
    eps = 1e-6 * (1.0 + np.abs(mode))
    H = np.empty((data.d, data.d))
    for k in range(data.d):
        e = np.zeros(data.d)
        e[k] = eps[k]
        H[:, k] = (jac(mode + e) - jac(mode - e)) / (2.0 * eps[k])
    H = 0.5 * (H + H.T)
    try:
        sd = np.sqrt(np.diag(np.linalg.inv(H)))
        if not np.all(np.isfinite(sd)) or np.any(sd <= 0):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        sd = np.full(data.d, math.sqrt(gamma))
    return mode, 10.0 * np.maximum(sd, math.sqrt(gamma))


def _log_integrand(which, data, phi, prior, log_norm, gamma, delta, theta):
    d = data.d
    s = int(np.count_nonzero(delta))
    base = log_prior_delta(np.array(delta), phi)
    if which == "exact":
        return base - exact_objective_batch(data, prior, log_norm, theta, delta)
    if which == "my_approx":
        return base + 0.5 * s * (_LOG_2PI + math.log(gamma)) - envelope_batch(
            data, prior, log_norm, gamma, theta, delta
        )
    theta_d = np.where(delta, theta, 0.0)
    u = theta - theta_d
    return (
        base
        - 0.5 * (d - s) * (_LOG_2PI + math.log(gamma))
        - np.einsum("ij,ij->i", u, u) / (2.0 * gamma)
        - exact_objective_batch(data, prior, log_norm, theta_d, delta)
    )


def _integrate(which, data, phi, prior, log_norm, gamma, delta, coords, bounds, n_panels, order):
    axes = []
    for k, (lo, hi) in zip(coords, bounds):
        axes.append(axis_rule(lo, hi, n_panels, order))
    comp = Component(tuple(delta), np.asarray(coords, dtype=int), axes, 0.0, np.ones(1), 0.0)
    theta = comp.points(data.d)
    logf = _log_integrand(which, data, phi, prior, log_norm, gamma, np.array(delta), theta)
    w = comp.weights()
    log_mass = float(logsumexp(logf, b=w))
    dens = np.exp(logf - log_mass)
    comp.log_mass = log_mass
    comp.density = dens
    if axes:
        mass = (dens * w).reshape([a[0].size for a in axes])
        leak = 0.0
        for k, a in enumerate(axes):
            marginal = np.sum(np.moveaxis(mass, k, 0).reshape(a[0].size, -1), axis=1)
            leak = max(leak, float(np.sum(marginal[a[2]])))
        comp.leakage = leak
    return comp


def _component(which, data, phi, prior, log_norm, gamma, delta, n_panels, order, bounds):
    delta_arr = np.array(delta, dtype=bool)
    active = np.flatnonzero(delta_arr)
    coords = active if which == "exact" else np.arange(data.d)
    if bounds is not None:
        box = [bounds[k] for k in coords]
        return _integrate(which, data, phi, prior, log_norm, gamma, delta, coords, box, n_panels, order)
    mode = _exact_mode(data, prior, delta_arr)
    if which == "my_approx":
        center, half = _approx_mode_and_widths(data, prior, log_norm, gamma, delta_arr, mode)
    else:
        center = mode
        half = np.zeros(data.d)
        half[active] = _exact_halfwidths(data, prior, active)
        half[~delta_arr] = 14.0 * math.sqrt(gamma) if gamma else 0.0
    for _ in range(8):
        box = [(center[k] - half[k], center[k] + half[k]) for k in coords]
        comp = _integrate(which, data, phi, prior, log_norm, gamma, delta, coords, box, n_panels, order)
        if comp.leakage <= 1e-7:
            return comp
        half = half * 1.6
    if comp.leakage > 1e-4:
        raise QuadratureError(f"grid mass leakage {comp.leakage:.2e} for delta={delta}; widen bounds")
    return comp


def _assemble(which, data, phi, gamma, comps, n_panels):
    keys = list(comps)
    logs = np.array([comps[k].log_mass for k in keys])
    log_norm = float(logsumexp(logs))
    weights = {k: float(math.exp(comps[k].log_mass - log_norm)) for k in keys}
    return QuadraturePosterior(which, data.d, gamma, comps, weights, log_norm, n_panels)


def quad_posterior(data: Dataset, phi: HyperState, gamma: Optional[float] = None, which: str = "my_approx",
                   fixed_delta=None, n_panels: Optional[int] = None, order: int = 8,
                   max_panels: Optional[int] = None, tol: float = 1e-6, bounds=None,
                   log_norm: Optional[float] = None) -> QuadraturePosterior:
    """Posterior over ``(delta, theta)`` by enumeration and tensor quadrature.

    ``which`` selects the exact posterior, the Moreau-Yosida approximation or
    the intermediate posterior with Gaussian spikes. Panels double until the
    support weights move less than ``tol`` in total variation or
    ``max_panels`` is reached; the last change is kept in ``refinement_tv``.
    ``bounds`` (one ``(lo, hi)`` per coordinate) pins the grid, which lets
    two posteriors share it for :func:`tv_distance`.
    """
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}")
    d = data.d
    if d > 3:
        raise ValueError("quadrature posteriors are supported for d <= 3 only")
    if which != "exact" and not (gamma is not None and gamma > 0):
        raise ValueError("gamma must be positive for the approximate posteriors")
    prior = phi.prior(data.sigma2)
    ln = prior.log_normalizer() if log_norm is None else log_norm
    if n_panels is None:
        n_panels = {1: 16, 2: 12, 3: 5}[d]
    if max_panels is None:
        max_panels = {1: 128, 2: 48, 3: 10}[d]
    patterns = _patterns(d, fixed_delta)

    def build(panels):
        comps = {p: _component(which, data, phi, prior, ln, gamma, p, panels, order, bounds) for p in patterns}
        return _assemble(which, data, phi, gamma, comps, panels)

    post = build(n_panels)
    change = math.nan
    while n_panels * 2 <= max_panels:
        n_panels *= 2
        finer = build(n_panels)
        change = sum(abs(finer.delta_weights[k] - post.delta_weights[k]) for k in patterns)
        change = max(change, abs(finer.log_normalizer - post.log_normalizer))
        post = finer
        if change < tol:
            break
    post.refinement_tv = change
    post.meta = {"order": order, "leakage": max(c.leakage for c in post.components.values())}
    return post


# distances ---------------------------------------------------------------------------


def delta_tv(p: QuadraturePosterior, q) -> float:
    """``sum_delta |p(delta) - q(delta)|`` over support patterns.

    ``q`` may be another posterior or a mapping of pattern tuples or
    bitstrings to probabilities.
    """
    qw = q.delta_weights if isinstance(q, QuadraturePosterior) else q
    norm = {}
    for k, v in qw.items():
        key = tuple(c == "1" for c in k) if isinstance(k, str) else tuple(bool(b) for b in k)
        norm[key] = norm.get(key, 0.0) + v
    keys = set(p.delta_weights) | set(norm)
    return float(sum(abs(p.delta_weights.get(k, 0.0) - norm.get(k, 0.0)) for k in keys))


def tv_distance(p: QuadraturePosterior, q: QuadraturePosterior) -> float:
    """Total variation ``sup_{|f| <= 1} |E_p f - E_q f| = integral of |p - q|``.

    Disjoint supports give 2. Components living on grids of different
    dimension are mutually singular; components on the same coordinates
    must share their grid.
    """
    if p.d != q.d:
        raise GridMismatchError("posteriors live in different dimensions")
    total = 0.0
    for key in set(p.components) | set(q.components):
        cp, cq = p.components.get(key), q.components.get(key)
        wp, wq = p.delta_weights.get(key, 0.0), q.delta_weights.get(key, 0.0)
        if cp is None or cq is None or not np.array_equal(cp.coords, cq.coords):
            total += wp + wq
            continue
        if len(cp.axes) != len(cq.axes) or any(
            not np.array_equal(a[0], b[0]) for a, b in zip(cp.axes, cq.axes)
        ):
            raise GridMismatchError(f"grids differ for delta={key}")
        total += float(np.sum(np.abs(wp * cp.density - wq * cq.density) * cp.weights()))
    return total


def wasserstein1_1d(samples, target_point: float = 0.0) -> float:
    """W1 distance between an empirical law and a point mass."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("no samples")
    return float(np.mean(np.abs(x - target_point)))


# bounds -------------------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoremBoundInputs:
    L1: float
    L2: float
    c_max: float
    R: float

    def __post_init__(self):
        if self.L1 < 0 or self.L2 < 0:
            raise ValueError("curvature constants must be nonnegative")


def bound_inputs(data: Dataset, phi: HyperState) -> TheoremBoundInputs:
    """``L1 = L2 = lambda_max / sigma2``, ``c = (alpha lam1 / sigma2)^2 d`` and
    ``R = l(0) + max_delta P(0|delta)``."""
    prior = phi.prior(data.sigma2)
    L = data.lambda_max / data.sigma2
    log_z = prior.log_normalizer()
    R = float(data.z @ data.z) / (2.0 * data.sigma2) + data.d * max(log_z, 0.0)
    return TheoremBoundInputs(L, L, prior.l1_weight ** 2 * data.d, R)


def thm2_bound(inputs: TheoremBoundInputs, gamma: float, d: int) -> float:
    """``3 gamma [c_max/2 + d (L1 + 2 L2) + L2 R]``; requires ``4 gamma max(L1, L2) <= 1``."""
    if gamma < 0:
        raise StepSizeError("gamma must be nonnegative")
    if 4.0 * gamma * max(inputs.L1, inputs.L2) > 1.0 + 1e-12:
        raise StepSizeError("step-size condition 4 gamma max(L1, L2) <= 1 is violated")
    return 3.0 * gamma * (0.5 * inputs.c_max + d * (inputs.L1 + 2.0 * inputs.L2) + inputs.L2 * inputs.R)


def cor1_bound(data: Dataset, phi: HyperState, gamma: float, d: Optional[int] = None) -> float:
    """``(3 gamma/2)(alpha lam1/sigma2)^2 d + (3 gamma/sigma2) lambda_max (3 d + ||z||^2/(2 sigma2))``."""
    d = data.d if d is None else d
    if gamma < 0:
        raise StepSizeError("gamma must be nonnegative")
    if gamma > 0.25 * data.sigma2 / data.lambda_max * (1.0 + 1e-12):
        raise StepSizeError("gamma exceeds sigma2 / (4 lambda_max)")
    s2 = data.sigma2
    a = phi.alpha * phi.lam1 / s2
    zz = float(data.z @ data.z)
    return 1.5 * gamma * a * a * d + 3.0 * gamma / s2 * data.lambda_max * (3.0 * d + zz / (2.0 * s2))


def beta_metric_bound(gamma: float, d: int, varrho: float) -> float:
    """``sqrt(gamma d) + 2 (1 - exp(-varrho))``."""
    return math.sqrt(gamma * d) + 2.0 * (-math.expm1(-varrho))


def varrho_gamma_estimate(data: Dataset, phi: HyperState, gamma: float, prior: Optional[PriorSpec] = None,
                          n_panels: Optional[int] = None, order: int = 8):
    """``log E exp(r_gamma)`` under the Gaussian-spike posterior, by quadrature.

    Returns ``(estimate, refinement_delta)``: the value on a grid and its
    change from the grid with half as many panels.
    """
    if data.d > 3:
        raise ValueError("varrho estimation is supported for d <= 3 only")
    prior = phi.prior(data.sigma2) if prior is None else prior
    base = n_panels or {1: 32, 2: 12, 3: 5}[data.d]
    values = []
    for panels in (base, 2 * base):
        post = quad_posterior(data, phi, gamma, "tilde", n_panels=panels, max_panels=panels, order=order)
        logs = []
        for key, comp in post.components.items():
            w = post.delta_weights[key]
            if w == 0.0:
                continue
            theta = comp.points(data.d)
            r = r_gamma_batch(data, prior, gamma, theta, np.array(key, dtype=bool))
            logs.append(math.log(w) + float(logsumexp(r, b=comp.density * comp.weights())))
        values.append(float(logsumexp(logs)))
    return max(values[1], 0.0), abs(values[1] - values[0])


def varrho_semi_analytic(data: Dataset, phi: HyperState, gamma: float, exact: QuadraturePosterior) -> float:
    """``varrho_gamma`` with the Gaussian inactive block integrated in closed form.

    For a quadratic loss ``r_gamma`` is quadratic in the inactive block, so
    only the active coordinates need a grid (taken from ``exact``).
    """
    prior = phi.prior(data.sigma2)
    H = data.gram / data.sigma2
    logs = []
    for key, comp in exact.components.items():
        w = exact.delta_weights[key]
        if w == 0.0:
            continue
        delta = np.array(key, dtype=bool)
        A, C = np.flatnonzero(delta), np.flatnonzero(~delta)
        theta = comp.points(data.d)
        _, g = _loss_batch(data, theta)
        a = (g + prior.subgradient(theta))[:, A]
        if C.size == 0:
            vals = 0.5 * gamma * np.einsum("ij,ij->i", a, a)
        else:
            H_ac = H[np.ix_(A, C)]
            M = np.eye(C.size) / gamma - 2.0 * H[np.ix_(C, C)] - gamma * H_ac.T @ H_ac
            b = gamma * a @ H_ac
            sol = np.linalg.solve(M, b.T).T
            _, logdet = np.linalg.slogdet(gamma * M)
            vals = 0.5 * gamma * np.einsum("ij,ij->i", a, a) + 0.5 * np.einsum("ij,ij->i", b, sol) - 0.5 * logdet
        logs.append(math.log(w) + float(logsumexp(vals, b=comp.density * comp.weights())))
    return float(logsumexp(logs))


def bounded_lipschitz_family(d: int, centers: Sequence[float] = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)):
    """Test functions ``f(delta, theta)`` with ``||f||_inf + Lip(f) <= 1``.

    The metric on support-coefficient pairs is the Euclidean distance of the
    concatenated vector ``(delta, theta)``.
    """
    fam = []
    for j in range(d):
        fam.append((f"delta{j}", lambda dl, th, j=j: np.full(th.shape[0], (2.0 / 3.0) * (dl[j] - 0.5))))
        for c in (0.25, 0.5, 1.0, 2.0):
            for t in centers:
                fam.append((f"clip{j}_{c}_{t}",
                            lambda dl, th, j=j, c=c, t=t: np.clip(th[:, j] - t, -c, c) / (1.0 + c)))
        for c in (0.1, 0.25, 0.5):
            for t in centers:
                fam.append((f"tent{j}_{c}_{t}",
                            lambda dl, th, j=j, c=c, t=t: np.maximum(c - np.abs(th[:, j] - t), 0.0) / (1.0 + c)))
    for c in (0.25, 0.5, 1.0, 2.0):
        fam.append((f"norm_{c}", lambda dl, th, c=c: np.minimum(np.linalg.norm(th, axis=1), c) / (1.0 + c)))
    return fam


def beta_metric_lower(p: QuadraturePosterior, q: QuadraturePosterior, family=None):
    """Largest ``|E_p f - E_q f|`` over a bounded-Lipschitz family: a lower bound on ``d_beta``."""
    family = bounded_lipschitz_family(p.d) if family is None else family
    best, arg = 0.0, None
    for name, f in family:
        gap = abs(p.expect(f) - q.expect(f))
        if gap > best:
            best, arg = gap, name
    return best, arg


# the point-mass example ---------------------------------------------------------------------------


def example1_suite(gammas: Sequence[float], n_samples: int = 100_000, seed: int = 0,
                   grid=None) -> list:
    """Point-mass prior with no data: the approximation is ``N(0, gamma)``.

    For each ``gamma`` reports ``E|Z|`` by quadrature and by sampling against
    ``sqrt(2 gamma/pi)``, the largest deviation of the envelope from
    ``x^2/(2 gamma)`` on a grid, and the total variation to the point mass.
    """
    grid = np.linspace(-10.0, 10.0, 201) if grid is None else np.asarray(grid, dtype=float)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    rows = []
    for gamma in gammas:
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        sd = math.sqrt(gamma)
        nodes, weights, _ = axis_rule(0.0, 40.0 * sd, 64, 10)
        dens = np.exp(-nodes ** 2 / (2.0 * gamma)) / math.sqrt(2.0 * math.pi * gamma)
        quad = 2.0 * float(np.sum(weights * nodes * dens))
        analytic = math.sqrt(2.0 * gamma / math.pi)
        signed = rng.standard_normal(n_samples) * sd
        draws = np.abs(signed)
        se = float(draws.std(ddof=1)) / math.sqrt(n_samples)
        ctx = EnvelopeContext(gamma, Laplace(1.0), log_norm=0.0)
        env = np.array([fb_envelope(ctx, ZeroLoss(), [x], [False]) for x in grid])
        env_err = float(np.max(np.abs(env - grid ** 2 / (2.0 * gamma))))
        approx = QuadraturePosterior(
            "my_approx", 1, gamma,
            {(False,): Component((False,), np.array([0]), [axis_rule(-40 * sd, 40 * sd, 16, 8)], 0.0,
                                 np.ones(1), 0.0)},
            {(False,): 1.0}, 0.0, 16)
        point = QuadraturePosterior("exact", 1, None,
                                    {(False,): Component((False,), np.array([], dtype=int), [], 0.0, np.ones(1), 0.0)},
                                    {(False,): 1.0}, 0.0, 0)
        rows.append({
            "gamma": gamma,
            "analytic": analytic,
            "quadrature": quad,
            "quadrature_error": abs(quad - analytic),
            "sample_mean": float(draws.mean()),
            "sample_se": se,
            "sample_z": (float(draws.mean()) - analytic) / se,
            "w1_samples": wasserstein1_1d(signed, 0.0),
            "envelope_max_error": env_err,
            "tv": tv_distance(approx, point),
        })
    return rows


# the smooth one-dimensional example -------------------------------------------------------------------


def fig1_loss(a: float = 0.8) -> FunctionLoss:
    """``l(x) = -a x + log(1 + e^{a x})``."""

    def value(x):
        t = a * x[0]
        return -t + np.logaddexp(0.0, t)

    def gradient(x):
        t = a * x[0]
        return np.array([a * (1.0 / (1.0 + np.exp(-t)) - 1.0)])

    def hess(x, v):
        t = a * x[0]
        p = 1.0 / (1.0 + np.exp(-t))
        return a * a * p * (1.0 - p) * v

    return FunctionLoss(value, gradient, hess)


def fig1_curves(gamma: float, grid=None, a: float = 0.8, b: float = 0.5):
    """``h``, ``h_gamma`` and the Moreau envelope of ``h`` on a grid for
    ``h(x) = -a x + log(1 + e^{a x}) + b|x|``."""
    grid = np.linspace(-10.0, 10.0, 201) if grid is None else np.asarray(grid, dtype=float)
    loss = fig1_loss(a)
    ctx = EnvelopeContext(gamma, Laplace(b), log_norm=0.0)

    def h(u):
        return loss.value(u) + b * abs(u[0])

    hh = np.array([h(np.array([x])) for x in grid])
    hg = np.array([fb_envelope(ctx, loss, [x], [True]) for x in grid])
    ht = np.array([moreau_env_oracle(h, gamma, [x]) for x in grid])
    return grid, hh, hg, ht
