"""Gaussian-mixture approximation to the standard Gumbel density.

The sampler replaces Gumbel utility shocks with a finite Gaussian mixture
``g_K(x) = sum_k pi_k N(x | m_k, s_k^2)``.  The mixture parameters are chosen
by minimizing the KL divergence ``KL(g || g_K)`` evaluated on a fixed
quadrature grid, with the parameters unconstrained through a softmax/log
reparameterization and a quasi-Newton optimizer on analytic gradients.

Two pre-computed parameter tables (K=6 and K=10) are bundled; the K=6 table
is the default shock model for logit fits, and a single standard normal
component recovers the probit variant of the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .distributions import gumbel_log_density

__all__ = [
    "GaussianMixture",
    "QuadratureGrid",
    "FitResult",
    "gumbel_quadrature_grid",
    "kl_divergence",
    "fit_mixture",
    "fit_mixture_ladder",
    "builtin_table",
    "single_normal",
    "write_mixture",
    "read_mixture",
]

EULER_GAMMA = 0.5772156649015329  # mean of the standard Gumbel
GUMBEL_VAR = math.pi**2 / 6.0  # variance of the standard Gumbel

# Weights rounded to three decimals may not sum to exactly one.
_WEIGHT_SUM_TOL = 5e-3


@dataclass
class GaussianMixture:
    """A K-component Gaussian mixture: weights, means, standard deviations."""

    weights: np.ndarray
    means: np.ndarray
    sds: np.ndarray

    def __post_init__(self):
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        self.means = np.atleast_1d(np.asarray(self.means, dtype=np.float64))
        self.sds = np.atleast_1d(np.asarray(self.sds, dtype=np.float64))
        k = self.weights.shape[0]
        if self.means.shape != (k,) or self.sds.shape != (k,):
            raise ValueError("weights, means, sds must have equal length")
        if k < 1:
            raise ValueError("mixture needs at least one component")
        if np.any(self.weights < 0):
            raise ValueError("mixture weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"mixture weights sum to {self.weights.sum()}, expected 1")
        if np.any(self.sds <= 0):
            raise ValueError("mixture standard deviations must be positive")

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    def log_density(self, x):
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(divide="ignore", over="ignore"):
            lw = (
                np.log(self.weights)
                - np.log(self.sds)
                - 0.5 * np.log(2.0 * np.pi)
                - 0.5 * ((x[..., None] - self.means) / self.sds) ** 2
            )
        return logsumexp(lw, axis=-1)

    def density(self, x):
        return np.exp(self.log_density(x))

    def sorted_by_weight(self) -> "GaussianMixture":
        """Canonical component order: descending weight (ties by mean)."""
        order = np.lexsort((self.means, -self.weights))
        return GaussianMixture(self.weights[order], self.means[order], self.sds[order])


@dataclass
class QuadratureGrid:
    """Fixed nodes/weights for integrals against the Gumbel density."""

    nodes: np.ndarray
    weights: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be matching vectors")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")


def gumbel_quadrature_grid(lo=-10.0, hi=40.0, panels=50, order=20) -> QuadratureGrid:
    """Composite Gauss-Legendre grid covering essentially all Gumbel mass.

    The default range leaves less than 1e-17 of mass outside.  The grid is
    validated against the normalization integral on construction.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mids = 0.5 * (edges[1:] + edges[:-1])
    nodes = (half[:, None] * x[None, :] + mids[:, None]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    grid = QuadratureGrid(nodes, weights, float(lo), float(hi))
    mass = weights @ np.exp(gumbel_log_density(nodes))
    if abs(mass - 1.0) > 1e-8:
        raise ValueError(f"quadrature grid integrates Gumbel density to {mass}, not 1")
    return grid


def kl_divergence(mix: GaussianMixture, grid: QuadratureGrid) -> float:
    """KL(g || g_K) of the Gumbel density g from the mixture, on the grid.

    Returns ``+inf`` if the mixture underflows to zero density anywhere the
    Gumbel density is positive.  Nonnegative up to quadrature noise.
    """
    log_g = gumbel_log_density(grid.nodes)
    g = np.exp(log_g)
    log_gk = mix.log_density(grid.nodes)
    if np.any(np.isneginf(log_gk) & (g > 0)):
        return float("inf")
    return float(grid.weights @ (g * (log_g - log_gk)))


@dataclass
class FitResult:
    mixture: GaussianMixture
    kl: float
    converged: bool
    n_iter: int = 0
    message: str = ""


def _pack(weights, means, sds):
    return np.concatenate([np.log(np.maximum(weights, 1e-300)), means, np.log(sds)])


def _unpack(theta, k):
    logits = theta[:k]
    means = theta[k : 2 * k]
    sds = np.exp(theta[2 * k :])
    logits = logits - logits.max()
    weights = np.exp(logits)
    weights = weights / weights.sum()
    return weights, means, sds


def _objective(theta, k, nodes, gw):
    """Cross-entropy part of the KL objective and its gradient.

    ``gw`` is the vector of quadrature weights times the Gumbel density, so
    the objective is ``-sum_i gw_i log g_K(x_i)``; the entropy term of the KL
    is constant in the mixture parameters.
    """
    weights, means, sds = _unpack(theta, k)
    z = (nodes[:, None] - means) / sds
    lw = np.log(weights) - np.log(sds) - 0.5 * np.log(2.0 * np.pi) - 0.5 * z**2
    lg = logsumexp(lw, axis=1)
    resp = np.exp(lw - lg[:, None])
    f = -float(gw @ lg)
    coef = gw[:, None] * resp
    d_mean = -(coef * z / sds).sum(axis=0)
    d_logsd = -(coef * (z**2 - 1.0)).sum(axis=0)
    d_logit = -(gw[:, None] * (resp - weights)).sum(axis=0)
    return f, np.concatenate([d_logit, d_mean, d_logsd])


def _warm_starts(init: GaussianMixture, k: int):
    """Initial points for a K fit from a (K-1)- or K-component mixture."""
    w, m, s = init.weights / init.weights.sum(), init.means, init.sds
    if init.k == k:
        return [_pack(w, m, s)]
    # Split the heaviest component.  The unperturbed copy reproduces the
    # (K-1)-fit density exactly, guaranteeing the fit never regresses.
    j = int(np.argmax(w))
    starts = []
    for shift in (0.0, 0.5, -0.5):
        w2 = np.append(w, w[j] / 2.0)
        w2[j] /= 2.0
        m2 = np.append(m, m[j] + shift * s[j])
        m2[j] -= shift * s[j]
        s2 = np.append(s, s[j])
        starts.append(_pack(w2, m2, s2))
    return starts


def fit_mixture(
    k: int,
    grid: QuadratureGrid | None = None,
    init: GaussianMixture | None = None,
    restarts: int = 5,
    max_iter: int = 2000,
    seed: int = 0,
) -> FitResult:
    """Fit a K-component mixture to the Gumbel density by KL minimization.

    ``init`` may have K components (used as a starting point) or K-1
    components (warm start: the heaviest component is split).  ``restarts``
    additional random starts guard against local minima; the best local
    optimum wins.  If no start converges within the iteration budget the
    best iterate is still returned, flagged ``converged=False``.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if init is not None and init.k not in (k, k - 1):
        raise ValueError(f"init must have {k} or {k - 1} components, got {init.k}")
    if grid is None:
        grid = gumbel_quadrature_grid()

    gw = grid.weights * np.exp(gumbel_log_density(grid.nodes))
    entropy_term = float(gw @ gumbel_log_density(grid.nodes))

    starts = [] if init is None else _warm_starts(init, k)
    rng = np.random.default_rng(seed)
    n_random = restarts if starts else max(restarts, 1)
    for _ in range(n_random):
        theta0 = np.concatenate(
            [
                rng.normal(0.0, 0.5, k),
                EULER_GAMMA + rng.normal(0.0, 1.0, k),
                0.5 * np.log(GUMBEL_VAR) + rng.normal(0.0, 0.5, k),
            ]
        )
        starts.append(theta0)

    best = None
    for theta0 in starts:
        res = minimize(
            _objective,
            theta0,
            args=(k, grid.nodes, gw),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": max_iter, "ftol": 1e-14, "gtol": 1e-10},
        )
        if best is None or res.fun < best.fun:
            best = res

    weights, means, sds = _unpack(best.x, k)
    mixture = GaussianMixture(weights, means, sds).sorted_by_weight()
    return FitResult(
        mixture=mixture,
        kl=float(best.fun + entropy_term),
        converged=bool(best.success),
        n_iter=int(best.nit),
        message=str(best.message),
    )


def fit_mixture_ladder(k_max: int, grid: QuadratureGrid | None = None, seed: int = 0, **kwargs):
    """Fit K = 1..k_max successively, warm-starting each fit from the last."""
    if grid is None:
        grid = gumbel_quadrature_grid()
    results = []
    prev = None
    for k in range(1, k_max + 1):
        res = fit_mixture(k, grid=grid, init=prev, seed=seed + k, **kwargs)
        results.append(res)
        prev = res.mixture
    return results


# Pre-computed KL-optimal parameters, components in descending-weight order.
_TABLE_6 = {
    "means": (0.455, -0.354, 1.497, 2.275, -1.016, 4.270),
    "sds": (0.649, 0.516, 0.768, 1.297, 0.397, 1.948),
    "weights": (0.365, 0.279, 0.160, 0.123, 0.061, 0.012),
}
_TABLE_10 = {
    "means": (-0.117, 2.062, 1.310, -0.896, 0.679, 0.885, -0.243, 0.551, 1.565, 4.087),
    "sds": (0.529, 1.265, 0.733, 0.427, 0.448, 0.678, 0.456, 0.603, 0.693, 1.914),
    "weights": (0.307, 0.156, 0.123, 0.116, 0.090, 0.073, 0.058, 0.035, 0.024, 0.016),
}


def builtin_table(k: int) -> GaussianMixture:
    """The bundled pre-computed mixture for K=6 or K=10, verbatim.

    Values are rounded to three decimals, so the weight sum can differ from
    one in the third decimal.
    """
    if k == 6:
        t = _TABLE_6
    elif k == 10:
        t = _TABLE_10
    else:
        raise ValueError(f"no builtin mixture table for K={k}; available: 6, 10")
    return GaussianMixture(np.array(t["weights"]), np.array(t["means"]), np.array(t["sds"]))


def single_normal() -> GaussianMixture:
    """The one-component standard normal 'mixture' (probit shock model)."""
    return GaussianMixture(np.array([1.0]), np.array([0.0]), np.array([1.0]))


def write_mixture(mix: GaussianMixture, path, provenance=()) -> None:
    """Serialize a mixture to a flat key-value text file (round-trip exact).

    ``provenance`` lines (how the mixture was produced) are written as
    comments, which readers skip.
    """
    mix = mix.sorted_by_weight()
    with open(path, "w", encoding="utf-8") as fh:
        for line in provenance:
            fh.write(f"# {line}\n")
        fh.write(f"K = {mix.k}\n")
        for name, values in (("pi", mix.weights), ("m", mix.means), ("s", mix.sds)):
            fh.write(f"{name} = {', '.join(repr(float(v)) for v in values)}\n")


def read_mixture(path) -> GaussianMixture:
    fields = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    missing = {"K", "pi", "m", "s"} - fields.keys()
    if missing:
        raise ValueError(f"mixture file {path} missing fields: {sorted(missing)}")
    k = int(fields["K"])
    arrays = {
        name: np.array([float(tok) for tok in fields[name].split(",")])
        for name in ("pi", "m", "s")
    }
    for name, arr in arrays.items():
        if arr.shape != (k,):
            raise ValueError(f"mixture field {name} has {arr.shape[0]} entries, expected K={k}")
    return GaussianMixture(arrays["pi"], arrays["m"], arrays["s"])
