"""Domain types, response functions, prior, and likelihood.

The response model: legislator ``i`` with latent position ``beta_i`` faces,
on item ``j``, one affirmative option flanked by two negative ones.  With
item discriminations ``alpha_j = (a1, a2)`` and positions
``delta_j = (d1, d2)``, the probability of an affirmative outcome is

    theta = 1 / (1 + exp(-a1 (beta - d1)) + exp(-a2 (beta - d2)))

which is non-monotone in ``beta`` (an unfolding response).  The ordering of
the three option positions requires ``a1 > 0 > a2`` or ``a1 < 0 < a2``; the
indicator ``z = +1/-1`` records which orthant holds.  The probit variant of
the model replaces the softmax above with the orthant probability of the
corresponding Gaussian-shock utilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, logsumexp, roots_hermitenorm

from .rng import RngStream

__all__ = [
    "YEA",
    "NAY",
    "MISSING",
    "Legislator",
    "Item",
    "VoteMatrix",
    "Hyperparams",
    "ItemParams",
    "response_probability",
    "log_response_terms",
    "probit_response_probability",
    "log_probit_response_terms",
    "log_likelihood",
    "log_likelihood_by_legislator",
    "log_prior_item",
    "sample_prior_items",
    "sample_prior_theta",
]

YEA = 1
NAY = 0
MISSING = -1


@dataclass(frozen=True)
class Legislator:
    id: str
    name: str | None = None
    party: str | None = None


@dataclass(frozen=True)
class Item:
    id: str
    description: str | None = None


@dataclass
class VoteMatrix:
    """An I x J matrix of votes in {YEA, NAY, MISSING} with row/column metadata."""

    cells: np.ndarray
    legislators: list[Legislator]
    items: list[Item]

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.int8)
        if self.cells.ndim != 2:
            raise ValueError("cells must be a 2-D matrix")
        if not np.all(np.isin(self.cells, (YEA, NAY, MISSING))):
            raise ValueError("cells must contain only YEA, NAY, or MISSING codes")
        if len(self.legislators) != self.cells.shape[0]:
            raise ValueError("legislator metadata does not match row count")
        if len(self.items) != self.cells.shape[1]:
            raise ValueError("item metadata does not match column count")

    @property
    def n_legislators(self) -> int:
        return self.cells.shape[0]

    @property
    def n_items(self) -> int:
        return self.cells.shape[1]

    @property
    def observed(self) -> np.ndarray:
        return self.cells != MISSING

    @property
    def yea(self) -> np.ndarray:
        return self.cells == YEA

    def unanimous_items(self) -> np.ndarray:
        """Boolean mask of items whose observed votes are all equal (or absent)."""
        obs = self.observed
        n_obs = obs.sum(axis=0)
        n_yea = (self.cells == YEA).sum(axis=0)
        return (n_yea == 0) | (n_yea == n_obs)

    def check_invariants(self, max_missing_share: float = 0.4) -> None:
        """Raise if any item is unanimous or a legislator is mostly absent."""
        if self.n_legislators == 0 or self.n_items == 0:
            raise ValueError("empty vote matrix")
        bad = self.unanimous_items()
        if np.any(bad):
            ids = [self.items[j].id for j in np.nonzero(bad)[0]]
            raise ValueError(f"unanimous items present: {ids}")
        missing_share = 1.0 - self.observed.mean(axis=1)
        over = missing_share > max_missing_share + 1e-12
        if np.any(over):
            ids = [self.legislators[i].id for i in np.nonzero(over)[0]]
            raise ValueError(f"legislators over the missing-vote threshold: {ids}")


@dataclass
class Hyperparams:
    """Prior constants for the item-parameter distribution.

    ``vartheta`` is the prior location of the item positions when ``z=+1``
    (negated for ``z=-1``); ``omega_sq`` and ``kappa_sq`` are the prior
    variances of each discrimination and position component.
    """

    vartheta: np.ndarray = field(default_factory=lambda: np.array([-2.0, 10.0]))
    omega_sq: float = 25.0
    kappa_sq: float = 10.0

    def __post_init__(self):
        self.vartheta = np.asarray(self.vartheta, dtype=np.float64).reshape(2)
        if not (self.omega_sq > 0 and self.kappa_sq > 0):
            raise ValueError("omega_sq and kappa_sq must be positive")


@dataclass
class ItemParams:
    """Per-item parameters with the orthant indicator.

    Construction enforces consistency: ``z=+1`` requires ``alpha_1 > 0 >
    alpha_2`` and ``z=-1`` the reverse.
    """

    alpha: np.ndarray
    delta: np.ndarray
    z: int

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64).reshape(2)
        self.delta = np.asarray(self.delta, dtype=np.float64).reshape(2)
        self.z = int(self.z)
        if self.z not in (1, -1):
            raise ValueError("z must be +1 or -1")
        ok = (
            self.alpha[0] > 0 > self.alpha[1]
            if self.z == 1
            else self.alpha[0] < 0 < self.alpha[1]
        )
        if not ok:
            raise ValueError(
                f"alpha={tuple(self.alpha)} inconsistent with orthant indicator z={self.z}"
            )


def _utility_exponents(beta, alpha, delta):
    """The two non-reference exponents -a_k (beta - d_k), broadcast to (..., 2).

    ``beta`` broadcasts against item-parameter arrays ``alpha``/``delta`` of
    shape (..., 2); with ``beta`` of shape (I, 1) and items of shape (J, 2)
    the result is (I, J, 2).
    """
    beta = np.asarray(beta, dtype=np.float64)[..., None]
    alpha = np.asarray(alpha, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    return -alpha * (beta - delta)


def log_response_terms(beta, alpha, delta):
    """Return (log theta, log(1 - theta)) for the softmax response, stably."""
    t = _utility_exponents(beta, alpha, delta)
    both = np.logaddexp(t[..., 0], t[..., 1])
    denom = np.logaddexp(0.0, both)
    return -denom, both - denom


_TINY = np.nextafter(0.0, 1.0)
_ALMOST_ONE = np.nextafter(1.0, 0.0)


def _clip_open_unit(p):
    """Keep probabilities strictly inside (0, 1) when exp under/overflows.

    The log-scale values carry the unclipped information; the clip only
    matters past |log theta| ~ 745 where no double in (0, 1) exists.
    """
    return np.clip(p, _TINY, _ALMOST_ONE)


def response_probability(beta, alpha, delta):
    """Probability of an affirmative outcome under the softmax response."""
    log_theta, _ = log_response_terms(beta, alpha, delta)
    out = _clip_open_unit(np.exp(log_theta))
    return float(out) if np.ndim(out) == 0 else out


_GH_NODES, _GH_WEIGHTS = roots_hermitenorm(101)
_GH_LOGW = np.log(_GH_WEIGHTS) - 0.5 * np.log(2.0 * np.pi)


def log_probit_response_terms(beta, alpha, delta):
    """(log theta, log(1-theta)) for the Gaussian-shock (probit) response.

    theta = P(e2 > -a1(b-d1) + e1, e2 > -a2(b-d2) + e3) for iid standard
    normal shocks; evaluated as a Gauss-Hermite quadrature over the shared
    shock e2, entirely in log space.
    """
    t = _utility_exponents(beta, alpha, delta)  # (..., 2)
    # log Phi(e2 - t_k) at each quadrature node for e2
    arg = _GH_NODES.reshape((-1,) + (1,) * t.ndim) - t[None, ...]
    log_phi = log_ndtr(arg)
    joint = log_phi[..., 0] + log_phi[..., 1]  # (nodes, ...)
    logw = _GH_LOGW.reshape((-1,) + (1,) * (joint.ndim - 1))
    log_theta = logsumexp(logw + joint, axis=0)
    log_theta = np.minimum(log_theta, -1e-300)  # quadrature rounding guard
    with np.errstate(divide="ignore"):
        comp = np.log(-np.expm1(np.minimum(joint, -1e-300)))
    log_one_minus = logsumexp(logw + comp, axis=0)
    log_one_minus = np.minimum(log_one_minus, -1e-300)
    return log_theta, log_one_minus


def probit_response_probability(beta, alpha, delta):
    log_theta, _ = log_probit_response_terms(beta, alpha, delta)
    out = _clip_open_unit(np.exp(log_theta))
    return float(out) if np.ndim(out) == 0 else out


_RESPONSE_TERMS = {"logit": log_response_terms, "probit": log_probit_response_terms}


def log_likelihood_by_legislator(votes: VoteMatrix, beta, alpha, delta, response="logit"):
    """Per-legislator sums of Bernoulli log-likelihood over observed cells."""
    beta = np.asarray(beta, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if beta.shape != (votes.n_legislators,) or alpha.shape != (votes.n_items, 2):
        raise ValueError("parameter dimensions do not match the vote matrix")
    log_theta, log_one_minus = _RESPONSE_TERMS[response](beta[:, None], alpha, delta)
    obs = votes.observed
    yea = votes.yea
    terms = np.where(yea, log_theta, log_one_minus)
    return np.where(obs, terms, 0.0).sum(axis=1)


def log_likelihood(votes: VoteMatrix, beta, alpha, delta, response="logit") -> float:
    """Total Bernoulli log-likelihood; missing cells contribute nothing."""
    return float(log_likelihood_by_legislator(votes, beta, alpha, delta, response).sum())


def log_prior_item(alpha, delta, hyper: Hyperparams) -> float:
    """Log density of the orthant-constrained item-parameter prior.

    The prior is an equal-weight two-component mixture: each component pairs
    an orthant-truncated N(0, omega^2 I) for the discriminations with an
    untruncated N(+-vartheta, kappa^2 I) for the positions.  Only one
    component is nonzero at any interior alpha; the density is normalized
    (each truncated Gaussian carries a factor 4 against its orthant mass of
    1/4).  Returns -inf outside both orthants.
    """
    alpha = np.asarray(alpha, dtype=np.float64).reshape(2)
    delta = np.asarray(delta, dtype=np.float64).reshape(2)
    if alpha[0] > 0 > alpha[1]:
        center = hyper.vartheta
    elif alpha[0] < 0 < alpha[1]:
        center = -hyper.vartheta
    else:
        return float("-inf")
    log_alpha = -np.log(2.0 * np.pi * hyper.omega_sq) - 0.5 * alpha @ alpha / hyper.omega_sq
    diff = delta - center
    log_delta = -np.log(2.0 * np.pi * hyper.kappa_sq) - 0.5 * diff @ diff / hyper.kappa_sq
    return float(np.log(2.0) + log_alpha + log_delta)


def sample_prior_items(hyper: Hyperparams, n_items: int, rng: RngStream):
    """Draw (z, alpha, delta) for ``n_items`` items from the prior.

    Returns arrays of shapes (J,), (J, 2), (J, 2).
    """
    z = np.where(rng.uniform(n_items) < 0.5, 1, -1).astype(np.int8)
    omega = np.sqrt(hyper.omega_sq)
    kappa = np.sqrt(hyper.kappa_sq)
    half = np.abs(rng.standard_normal((n_items, 2))) * omega
    alpha = half * np.stack([z, -z], axis=1)
    delta = z[:, None] * hyper.vartheta + kappa * rng.standard_normal((n_items, 2))
    return z, alpha, delta


def sample_prior_theta(hyper: Hyperparams, count: int, rng: RngStream):
    """Implied prior distribution of the affirmative-vote probability.

    Draws ``beta ~ N(0,1)`` and item parameters from the prior, then maps
    through the softmax response.  Useful for prior-shape checks.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    beta = rng.standard_normal(count)
    _, alpha, delta = sample_prior_items(hyper, count, rng)
    log_theta, _ = log_response_terms(beta, alpha, delta)
    return _clip_open_unit(np.exp(log_theta))
