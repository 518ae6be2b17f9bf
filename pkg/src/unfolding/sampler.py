"""Data-augmented Gibbs sampler for the unfolding model.

One iteration applies, in order: component labels for the utility shocks,
truncated latent utilities, latent positions, per-item orthant indicator and
discriminations, per-item positions, and (on every ``flip_every``-th
iteration) a Metropolis move that proposes sending items to the mirrored
orthant.  All conditionals are conjugate given the Gaussian-mixture shock
model; the same kernels run the probit variant when handed the
single-standard-normal mixture.

Randomness is organized for reproducibility: each (iteration, kernel) pair
owns a counter-based stream from which it draws arrays of fixed,
data-independent shape.  The transforms consuming those arrays are
elementwise or per-entity, so results are invariant to execution order and
worker count; a chain is a pure function of its seed.

Latent utilities and labels are maintained for missing cells too (drawn from
their unconstrained conditionals) purely to keep array shapes fixed; every
sum feeding a parameter update masks them out.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from . import model
from .distributions import categorical_from_uniform, truncated_normal_from_uniform
from .gumbel_mix import GaussianMixture, builtin_table
from .model import Hyperparams, VoteMatrix, log_likelihood_by_legislator, log_response_terms
from .rng import RngStream

__all__ = [
    "SamplerConfig",
    "ChainState",
    "DrawStore",
    "init_state",
    "step_lambda",
    "step_utilities",
    "step_beta",
    "step_item",
    "step_delta",
    "step_flip",
    "run_chain",
]

# Stream slots within an iteration; iteration 0 is reserved for initialization.
_SLOTS_PER_ITER = 8
_SLOT_LAMBDA, _SLOT_YSTAR, _SLOT_BETA, _SLOT_ITEM, _SLOT_DELTA, _SLOT_FLIP = range(6)


def _stream(seed: int, iteration: int, slot: int) -> RngStream:
    return RngStream(seed, iteration * _SLOTS_PER_ITER + slot)


@dataclass
class SamplerConfig:
    """Chain schedule and shock model.

    Defaults follow the full-scale analysis schedule (500k burn-in, 20k
    retained draws thinned by 50); :meth:`desk_scale` gives a schedule that
    finishes in minutes on mid-sized matrices.
    """

    mixture: GaussianMixture = field(default_factory=lambda: builtin_table(6))
    burn_in: int = 500_000
    n_keep: int = 20_000
    thin: int = 50
    flip_every: int = 5
    flip_sign_prob: float = 0.1
    seed: int = 0
    init_mode: str = "random"
    response: str = "logit"
    store_cell_loglik: bool = False

    def __post_init__(self):
        if self.thin < 1 or self.flip_every < 1:
            raise ValueError("thin and flip_every must be positive integers")
        if not (0.0 <= self.flip_sign_prob <= 1.0):
            raise ValueError("flip_sign_prob must lie in [0, 1]")
        if self.burn_in < 0 or self.n_keep < 0:
            raise ValueError("burn_in and n_keep must be nonnegative")
        if self.init_mode not in ("random", "party-signed"):
            raise ValueError("init_mode must be 'random' or 'party-signed'")
        if self.response not in ("logit", "probit"):
            raise ValueError("response must be 'logit' or 'probit'")

    @classmethod
    def desk_scale(cls, **overrides) -> "SamplerConfig":
        base = dict(burn_in=5_000, n_keep=2_000, thin=5)
        base.update(overrides)
        return cls(**base)

    @property
    def total_iterations(self) -> int:
        return self.burn_in + self.n_keep * self.thin


@dataclass
class ChainState:
    """Mutable state of one chain: parameters plus latent augmentation arrays."""

    beta: np.ndarray  # (I,)
    alpha: np.ndarray  # (J, 2)
    delta: np.ndarray  # (J, 2)
    z: np.ndarray  # (J,) in {+1, -1}
    ystar: np.ndarray  # (I, J, 3) latent utilities
    lam: np.ndarray  # (I, J, 3) mixture component labels
    iteration: int = 0

    def copy(self) -> "ChainState":
        return ChainState(
            self.beta.copy(),
            self.alpha.copy(),
            self.delta.copy(),
            self.z.copy(),
            self.ystar.copy(),
            self.lam.copy(),
            self.iteration,
        )

    def check_invariants(self, votes: VoteMatrix) -> None:
        """Orthant consistency of (z, alpha) and vote consistency of ystar."""
        plus = self.z == 1
        ok = np.where(
            plus,
            (self.alpha[:, 0] > 0) & (self.alpha[:, 1] < 0),
            (self.alpha[:, 0] < 0) & (self.alpha[:, 1] > 0),
        )
        if not np.all(ok):
            raise AssertionError("orthant constraint violated")
        side = np.maximum(self.ystar[..., 0], self.ystar[..., 2])
        yea_ok = self.ystar[..., 1] > side
        bad = votes.observed & np.where(votes.yea, ~yea_ok, yea_ok)
        if np.any(bad):
            raise AssertionError("latent utilities inconsistent with observed votes")


@dataclass
class DrawStore:
    """Retained posterior draws plus the per-draw likelihood summaries."""

    iters: np.ndarray  # (n,)
    beta: np.ndarray  # (n, I)
    alpha: np.ndarray  # (n, J, 2)
    delta: np.ndarray  # (n, J, 2)
    z: np.ndarray  # (n, J)
    loglik: np.ndarray  # (n,)
    loglik_by_legislator: np.ndarray  # (n, I)
    legislator_ids: list[str]
    item_ids: list[str]
    cell_loglik: np.ndarray | None = None  # (n, n_observed_cells), optional
    cell_index: np.ndarray | None = None  # (n_observed_cells, 2)
    truncated: bool = False
    response: str = "logit"

    @property
    def n_draws(self) -> int:
        return self.beta.shape[0]


class _MixTables:
    """Mixture constants laid out for vectorized kernel arithmetic."""

    def __init__(self, mixture: GaussianMixture):
        w = mixture.weights / mixture.weights.sum()
        self.m = mixture.means
        self.s = mixture.sds
        self.s2 = mixture.sds**2
        self.log_w = np.log(w) - np.log(mixture.sds)  # shared Gaussian constant dropped


def _locations(beta, alpha, delta):
    """Systematic part of the three latent utilities, shape (I, J, 3)."""
    loc = np.zeros((beta.shape[0], alpha.shape[0], 3))
    loc[..., 0] = -alpha[:, 0] * (beta[:, None] - delta[:, 0])
    loc[..., 2] = -alpha[:, 1] * (beta[:, None] - delta[:, 1])
    return loc


def step_lambda(state: ChainState, votes: VoteMatrix, mixture: GaussianMixture, rng: RngStream) -> ChainState:
    """Gibbs update of the mixture component labels for every cell."""
    tab = _MixTables(mixture)
    u = rng.uniform((votes.n_legislators, votes.n_items, 3))
    resid = state.ystar - _locations(state.beta, state.alpha, state.delta)
    lw = tab.log_w - 0.5 * ((resid[..., None] - tab.m) / tab.s) ** 2
    state.lam = categorical_from_uniform(lw, u)
    return state


def _draw_utilities(ystar, lam, loc, tab, yea, nay, u):
    """One truncated-Gaussian sweep over the three utility coordinates.

    Coordinates are updated in order 1, 2, 3, each conditioned on the newest
    values of the others; the truncation regions enforce consistency with
    the observed vote (affirmative iff coordinate 2 exceeds both others).
    Cells that are neither yea nor nay are drawn unconstrained.
    """
    inf = np.inf
    mean = tab.m[lam] + loc
    sd = tab.s[lam]
    y2 = ystar[..., 1]
    y3 = ystar[..., 2]

    lower = np.where(nay & (y3 < y2), y2, -inf)
    upper = np.where(yea, y2, inf)
    y1 = truncated_normal_from_uniform(u[..., 0], mean[..., 0], sd[..., 0], lower, upper)

    side = np.maximum(y1, y3)
    lower = np.where(yea, side, -inf)
    upper = np.where(nay, side, inf)
    y2 = truncated_normal_from_uniform(u[..., 1], mean[..., 1], sd[..., 1], lower, upper)

    lower = np.where(nay & (y1 < y2), y2, -inf)
    upper = np.where(yea, y2, inf)
    y3 = truncated_normal_from_uniform(u[..., 2], mean[..., 2], sd[..., 2], lower, upper)

    return np.stack([y1, y2, y3], axis=-1)


def step_utilities(state: ChainState, votes: VoteMatrix, mixture: GaussianMixture, rng: RngStream) -> ChainState:
    """Gibbs update of the latent utilities for every cell."""
    tab = _MixTables(mixture)
    u = rng.uniform((votes.n_legislators, votes.n_items, 3))
    loc = _locations(state.beta, state.alpha, state.delta)
    yea = votes.yea
    nay = votes.observed & ~yea
    state.ystar = _draw_utilities(state.ystar, state.lam, loc, tab, yea, nay, u)
    return state


def _beta_conditionals(state: ChainState, votes: VoteMatrix, tab: _MixTables):
    """Mean and precision of each position's Gaussian full conditional."""
    obs = votes.observed
    s2_1 = tab.s2[state.lam[..., 0]]
    s2_3 = tab.s2[state.lam[..., 2]]
    a1 = state.alpha[None, :, 0]
    a2 = state.alpha[None, :, 1]
    r1 = state.ystar[..., 0] - tab.m[state.lam[..., 0]] - a1 * state.delta[None, :, 0]
    r3 = state.ystar[..., 2] - tab.m[state.lam[..., 2]] - a2 * state.delta[None, :, 1]
    prec = 1.0 + np.where(obs, a1**2 / s2_1 + a2**2 / s2_3, 0.0).sum(axis=1)
    num = -np.where(obs, a1 * r1 / s2_1 + a2 * r3 / s2_3, 0.0).sum(axis=1)
    return num / prec, prec


def step_beta(state: ChainState, votes: VoteMatrix, mixture: GaussianMixture, rng: RngStream) -> ChainState:
    """Gibbs update of the latent positions from their Gaussian conditionals."""
    tab = _MixTables(mixture)
    normals = rng.standard_normal(votes.n_legislators)
    mean, prec = _beta_conditionals(state, votes, tab)
    state.beta = mean + normals / np.sqrt(prec)
    return state


def _item_conditionals(state, votes, hyper, tab):
    """Posterior mean/sd of each item's two discriminations given the rest."""
    obs = votes.observed
    s2_1 = tab.s2[state.lam[..., 0]]
    s2_3 = tab.s2[state.lam[..., 2]]
    x1 = state.beta[:, None] - state.delta[None, :, 0]
    x3 = state.beta[:, None] - state.delta[None, :, 1]
    r1 = state.ystar[..., 0] - tab.m[state.lam[..., 0]]
    r3 = state.ystar[..., 2] - tab.m[state.lam[..., 2]]
    prec1 = np.where(obs, x1**2 / s2_1, 0.0).sum(axis=0) + 1.0 / hyper.omega_sq
    prec3 = np.where(obs, x3**2 / s2_3, 0.0).sum(axis=0) + 1.0 / hyper.omega_sq
    mu1 = -np.where(obs, x1 * r1 / s2_1, 0.0).sum(axis=0) / prec1
    mu3 = -np.where(obs, x3 * r3 / s2_3, 0.0).sum(axis=0) / prec3
    return mu1, mu3, 1.0 / np.sqrt(prec1), 1.0 / np.sqrt(prec3)


def _item_orthant_log_weights(state: ChainState, votes: VoteMatrix, hyper: Hyperparams, tab: _MixTables):
    """Unnormalized log conditional of z_j for both orthants (alpha integrated out).

    Each orthant weighs the position-prior density against the orthant
    probability of the Gaussian conditional for the discriminations; the
    Phi arguments are the conditional means standardized by their standard
    deviations.  Constant factors shared by the two orthants are dropped.
    """
    mu1, mu3, sd1, sd3 = _item_conditionals(state, votes, hyper, tab)
    dplus = state.delta - hyper.vartheta
    dminus = state.delta + hyper.vartheta
    lw_plus = (
        -0.5 * (dplus**2).sum(axis=1) / hyper.kappa_sq
        + log_ndtr(mu1 / sd1)
        + log_ndtr(-mu3 / sd3)
    )
    lw_minus = (
        -0.5 * (dminus**2).sum(axis=1) / hyper.kappa_sq
        + log_ndtr(-mu1 / sd1)
        + log_ndtr(mu3 / sd3)
    )
    return lw_plus, lw_minus


def step_item(state: ChainState, votes: VoteMatrix, hyper: Hyperparams, mixture: GaussianMixture, rng: RngStream) -> ChainState:
    """Joint Gibbs update of (z_j, alpha_j) for every item.

    The orthant indicator is drawn first with the discriminations integrated
    out, then the discriminations are drawn from their Gaussian conditional
    truncated to the chosen orthant (two independent univariate draws; the
    conditional covariance is diagonal).
    """
    tab = _MixTables(mixture)
    u_z = rng.uniform(votes.n_items)
    u_alpha = rng.uniform((votes.n_items, 2))
    mu1, mu3, sd1, sd3 = _item_conditionals(state, votes, hyper, tab)
    lw_plus, lw_minus = _item_orthant_log_weights(state, votes, hyper, tab)
    p_plus = np.exp(lw_plus - np.logaddexp(lw_plus, lw_minus))
    z = np.where(u_z < p_plus, 1, -1).astype(np.int8)

    inf = np.inf
    a1 = truncated_normal_from_uniform(
        u_alpha[:, 0], mu1, sd1, np.where(z == 1, 0.0, -inf), np.where(z == 1, inf, 0.0)
    )
    a2 = truncated_normal_from_uniform(
        u_alpha[:, 1], mu3, sd3, np.where(z == 1, -inf, 0.0), np.where(z == 1, 0.0, inf)
    )
    state.z = z
    state.alpha = np.stack([a1, a2], axis=1)
    return state


def _delta_conditionals(state: ChainState, votes: VoteMatrix, hyper: Hyperparams, tab: _MixTables):
    """Mean and precision (per coordinate) of each position pair's conditional."""
    obs = votes.observed
    s2_1 = tab.s2[state.lam[..., 0]]
    s2_3 = tab.s2[state.lam[..., 2]]
    a1 = state.alpha[None, :, 0]
    a2 = state.alpha[None, :, 1]
    r1 = state.ystar[..., 0] - tab.m[state.lam[..., 0]] + a1 * state.beta[:, None]
    r3 = state.ystar[..., 2] - tab.m[state.lam[..., 2]] + a2 * state.beta[:, None]
    prec1 = np.where(obs, a1**2 / s2_1, 0.0).sum(axis=0) + 1.0 / hyper.kappa_sq
    prec3 = np.where(obs, a2**2 / s2_3, 0.0).sum(axis=0) + 1.0 / hyper.kappa_sq
    num1 = np.where(obs, a1 * r1 / s2_1, 0.0).sum(axis=0) + state.z * hyper.vartheta[0] / hyper.kappa_sq
    num3 = np.where(obs, a2 * r3 / s2_3, 0.0).sum(axis=0) + state.z * hyper.vartheta[1] / hyper.kappa_sq
    mean = np.stack([num1 / prec1, num3 / prec3], axis=1)
    prec = np.stack([prec1, prec3], axis=1)
    return mean, prec


def step_delta(state: ChainState, votes: VoteMatrix, hyper: Hyperparams, mixture: GaussianMixture, rng: RngStream) -> ChainState:
    """Gibbs update of the item positions from their Gaussian conditionals."""
    tab = _MixTables(mixture)
    normals = rng.standard_normal((votes.n_items, 2))
    mean, prec = _delta_conditionals(state, votes, hyper, tab)
    state.delta = mean + normals / np.sqrt(prec)
    return state


def _bernoulli_log_ratio(beta, alpha_old, delta_old, alpha_new, delta_new, votes: VoteMatrix):
    """Per-item log likelihood ratio under the closed-form softmax response."""
    lt_old, lo_old = log_response_terms(beta[:, None], alpha_old, delta_old)
    lt_new, lo_new = log_response_terms(beta[:, None], alpha_new, delta_new)
    gain = np.where(votes.yea, lt_new - lt_old, lo_new - lo_old)
    return np.where(votes.observed, gain, 0.0).sum(axis=0)


def step_flip(state: ChainState, votes: VoteMatrix, hyper: Hyperparams, config: SamplerConfig, rng: RngStream) -> ChainState:
    """Metropolis move proposing each item's reflection into the other orthant.

    With probability ``flip_sign_prob`` the proposal is the exact sign flip
    of (z, alpha, delta); otherwise it is a restart draw from the prior
    restricted to the opposite orthant.  Both proposals are accepted with
    the Bernoulli likelihood ratio under the closed-form softmax response
    (the prior and proposal terms cancel exactly).  Accepted items have
    their labels and latent utilities refreshed immediately so no other
    kernel sees augmentation variables from the mirrored orthant.
    """
    tab = _MixTables(config.mixture)
    n_i, n_j = votes.n_legislators, votes.n_items
    u_move = rng.uniform(n_j)
    u_alpha = rng.uniform((n_j, 2))
    n_delta = rng.standard_normal((n_j, 2))
    u_accept = rng.uniform(n_j)
    u_lam = rng.uniform((n_i, n_j, 3))
    u_ystar = rng.uniform((n_i, n_j, 3))

    z_new = (-state.z).astype(np.int8)
    sign_flip = u_move < config.flip_sign_prob

    inf = np.inf
    omega = np.sqrt(hyper.omega_sq)
    kappa = np.sqrt(hyper.kappa_sq)
    a1_restart = truncated_normal_from_uniform(
        u_alpha[:, 0], 0.0, omega, np.where(z_new == 1, 0.0, -inf), np.where(z_new == 1, inf, 0.0)
    )
    a2_restart = truncated_normal_from_uniform(
        u_alpha[:, 1], 0.0, omega, np.where(z_new == 1, -inf, 0.0), np.where(z_new == 1, 0.0, inf)
    )
    alpha_prop = np.where(
        sign_flip[:, None], -state.alpha, np.stack([a1_restart, a2_restart], axis=1)
    )
    delta_prop = np.where(
        sign_flip[:, None], -state.delta, z_new[:, None] * hyper.vartheta + kappa * n_delta
    )

    log_ratio = _bernoulli_log_ratio(state.beta, state.alpha, state.delta, alpha_prop, delta_prop, votes)
    yea = votes.yea

    with np.errstate(divide="ignore"):
        accept = np.log(u_accept) < log_ratio
    if not np.any(accept):
        return state

    col = accept[None, :]
    state.z = np.where(accept, z_new, state.z).astype(np.int8)
    state.alpha = np.where(accept[:, None], alpha_prop, state.alpha)
    state.delta = np.where(accept[:, None], delta_prop, state.delta)

    # Refresh the augmentation variables of accepted items from their full
    # conditionals under the new parameters (labels first, then utilities).
    loc = _locations(state.beta, state.alpha, state.delta)
    resid = state.ystar - loc
    lw = tab.log_w - 0.5 * ((resid[..., None] - tab.m) / tab.s) ** 2
    lam_new = categorical_from_uniform(lw, u_lam)
    state.lam = np.where(col[..., None], lam_new, state.lam)
    nay = votes.observed & ~yea
    ystar_new = _draw_utilities(state.ystar, state.lam, loc, tab, yea, nay, u_ystar)
    state.ystar = np.where(col[..., None], ystar_new, state.ystar)
    return state


def init_state(votes: VoteMatrix, hyper: Hyperparams, config: SamplerConfig, seed=None) -> ChainState:
    """Initial chain state: prior parameter draws and consistent utilities.

    ``party-signed`` mode centers each party's positions at -1/+1 (parties
    in sorted label order) instead of drawing them from the prior; it
    requires party labels in the vote metadata.
    """
    seed = config.seed if seed is None else seed
    rng_beta = _stream(seed, 0, _SLOT_LAMBDA)
    rng_items = _stream(seed, 0, _SLOT_YSTAR)
    rng_lam = _stream(seed, 0, _SLOT_BETA)
    rng_ystar = _stream(seed, 0, _SLOT_ITEM)

    n_i, n_j = votes.n_legislators, votes.n_items
    if config.init_mode == "party-signed":
        parties = [leg.party for leg in votes.legislators]
        labels = sorted({p for p in parties if p is not None})
        if not labels:
            raise ValueError("party-signed initialization requires party labels")
        sign_of = {p: (-1.0 if i == 0 else (1.0 if i == 1 else 0.0)) for i, p in enumerate(labels)}
        centers = np.array([sign_of.get(p, 0.0) if p is not None else 0.0 for p in parties])
        beta = centers + 0.1 * rng_beta.standard_normal(n_i)
    else:
        beta = rng_beta.standard_normal(n_i)

    z, alpha, delta = model.sample_prior_items(hyper, n_j, rng_items)
    lam = rng_lam.integers(0, config.mixture.k, size=(n_i, n_j, 3))
    state = ChainState(
        beta=beta,
        alpha=alpha,
        delta=delta,
        z=z,
        ystar=np.zeros((n_i, n_j, 3)),
        lam=lam,
        iteration=0,
    )
    # Start the utilities at their systematic means, then one constrained
    # sweep guarantees vote consistency from the first iteration.
    tab = _MixTables(config.mixture)
    state.ystar = _locations(beta, alpha, delta) + tab.m[lam]
    step_utilities(state, votes, config.mixture, rng_ystar)
    return state


def run_chain(
    votes: VoteMatrix,
    hyper: Hyperparams | None = None,
    config: SamplerConfig | None = None,
    initial_state: ChainState | None = None,
    writer=None,
    progress=None,
    progress_every: int = 1000,
) -> DrawStore:
    """Run the full kernel schedule and collect retained draws.

    Retains every ``thin``-th state after ``burn_in`` iterations, with the
    per-draw, per-legislator log-likelihood under the configured response
    model.  ``writer``, if given, receives blocks of persisted rows (see
    :mod:`unfolding.data_io`); an interrupt flushes complete rows and marks
    the output truncated before re-raising.

    Deterministic: the returned draws are a pure function of
    ``(votes, hyper, config, initial_state)``.
    """
    hyper = hyper or Hyperparams()
    config = config or SamplerConfig()
    mixture = config.mixture
    state = initial_state.copy() if initial_state is not None else init_state(votes, hyper, config)

    n = config.n_keep
    n_i, n_j = votes.n_legislators, votes.n_items
    store = DrawStore(
        iters=np.zeros(n, dtype=np.int64),
        beta=np.zeros((n, n_i)),
        alpha=np.zeros((n, n_j, 2)),
        delta=np.zeros((n, n_j, 2)),
        z=np.zeros((n, n_j), dtype=np.int8),
        loglik=np.zeros(n),
        loglik_by_legislator=np.zeros((n, n_i)),
        legislator_ids=[leg.id for leg in votes.legislators],
        item_ids=[item.id for item in votes.items],
        response=config.response,
    )
    obs_idx = None
    if config.store_cell_loglik:
        obs_idx = np.argwhere(votes.observed)
        store.cell_index = obs_idx
        store.cell_loglik = np.zeros((n, obs_idx.shape[0]))

    kept = 0
    tic = time.perf_counter()
    try:
        for t in range(1, config.total_iterations + 1):
            state.iteration = t
            step_lambda(state, votes, mixture, _stream(config.seed, t, _SLOT_LAMBDA))
            step_utilities(state, votes, mixture, _stream(config.seed, t, _SLOT_YSTAR))
            step_beta(state, votes, mixture, _stream(config.seed, t, _SLOT_BETA))
            step_item(state, votes, hyper, mixture, _stream(config.seed, t, _SLOT_ITEM))
            step_delta(state, votes, hyper, mixture, _stream(config.seed, t, _SLOT_DELTA))
            if t % config.flip_every == 0:
                step_flip(state, votes, hyper, config, _stream(config.seed, t, _SLOT_FLIP))

            if t > config.burn_in and (t - config.burn_in) % config.thin == 0:
                per_leg = log_likelihood_by_legislator(
                    votes, state.beta, state.alpha, state.delta, response=config.response
                )
                store.iters[kept] = t
                store.beta[kept] = state.beta
                store.alpha[kept] = state.alpha
                store.delta[kept] = state.delta
                store.z[kept] = state.z
                store.loglik_by_legislator[kept] = per_leg
                store.loglik[kept] = per_leg.sum()
                if obs_idx is not None:
                    terms = _cell_loglik_terms(votes, state, config.response)
                    store.cell_loglik[kept] = terms[obs_idx[:, 0], obs_idx[:, 1]]
                kept += 1
                if writer is not None and kept % 100 == 0:
                    writer.append(store, kept)

            if progress is not None and t % progress_every == 0:
                per_leg = log_likelihood_by_legislator(
                    votes, state.beta, state.alpha, state.delta, response=config.response
                )
                progress(t, config.total_iterations, time.perf_counter() - tic, float(per_leg.sum()))
                tic = time.perf_counter()
    except BaseException:
        _shrink(store, kept)
        if writer is not None:
            writer.append(store, kept)
            writer.finalize(truncated=True, rows=kept)
        store.truncated = True
        raise

    _shrink(store, kept)
    if writer is not None:
        writer.append(store, kept)
        writer.finalize(truncated=False, rows=kept)
    return store


def _shrink(store: DrawStore, kept: int) -> None:
    if kept == store.beta.shape[0]:
        return
    store.iters = store.iters[:kept]
    store.beta = store.beta[:kept]
    store.alpha = store.alpha[:kept]
    store.delta = store.delta[:kept]
    store.z = store.z[:kept]
    store.loglik = store.loglik[:kept]
    store.loglik_by_legislator = store.loglik_by_legislator[:kept]
    if store.cell_loglik is not None:
        store.cell_loglik = store.cell_loglik[:kept]


def _cell_loglik_terms(votes: VoteMatrix, state: ChainState, response: str):
    fn = model.log_response_terms if response == "logit" else model.log_probit_response_terms
    log_theta, log_one_minus = fn(state.beta[:, None], state.alpha, state.delta)
    return np.where(votes.yea, log_theta, log_one_minus)
