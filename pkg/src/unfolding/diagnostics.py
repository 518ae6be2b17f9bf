"""Posterior summaries and model-comparison statistics.

The complexity-adjusted fit score sums, over legislators, the log posterior-
mean likelihood minus the posterior variance of the log-likelihood; the
pointwise unit is the legislator (a per-cell variant is available for
sensitivity checks by passing a per-cell matrix).  Rank agreement between
fits uses the classical Spearman formula on permutation ranks.  Chain
efficiency uses the initial-monotone-positive-sequence estimator of the
autocorrelation time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len
from scipy.special import logsumexp

from .model import VoteMatrix
from .sampler import DrawStore

__all__ = [
    "WaicReport",
    "RankSummary",
    "ComparisonReport",
    "DegenerateSeriesError",
    "waic",
    "spearman",
    "ranks",
    "ess",
    "response_curve",
    "compare_models",
]


class DegenerateSeriesError(ValueError):
    """Raised when a statistic is undefined for a constant series."""


@dataclass
class WaicReport:
    lppd: float
    penalty: float
    waic: float
    per_unit: np.ndarray  # per-legislator (or per-cell) contributions


@dataclass
class RankSummary:
    mean_rank: np.ndarray  # (I,) posterior point ranks
    per_draw: np.ndarray  # (n, I) integer ranks, each row a permutation of 1..I


@dataclass
class ComparisonReport:
    waic_a: WaicReport
    waic_b: WaicReport
    waic_diff: float
    rho_point: float  # Spearman of the posterior point ranks
    rho_mean: float  # posterior mean of the per-draw Spearman
    rho_lower: float  # central 90% interval
    rho_upper: float
    n_pairs: int


def waic(loglik: np.ndarray) -> WaicReport:
    """Complexity-adjusted fit from an (n_draws, n_units) log-likelihood matrix.

    First term per unit: log of the posterior-mean likelihood (via
    logsumexp); second term: posterior variance of the log-likelihood.
    Larger is better.
    """
    ll = np.asarray(loglik, dtype=np.float64)
    if ll.ndim != 2 or ll.shape[0] == 0:
        raise ValueError("need a nonempty (n_draws, n_units) log-likelihood matrix")
    n = ll.shape[0]
    lppd_units = logsumexp(ll, axis=0) - np.log(n)
    penalty_units = ll.var(axis=0, ddof=1) if n > 1 else np.zeros(ll.shape[1])
    report = WaicReport(
        lppd=float(lppd_units.sum()),
        penalty=float(penalty_units.sum()),
        waic=float(lppd_units.sum() - penalty_units.sum()),
        per_unit=lppd_units - penalty_units,
    )
    return report


def _check_permutation(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r)
    n = r.shape[0]
    if n < 2:
        raise ValueError("need at least two ranks")
    if not np.array_equal(np.sort(r), np.arange(1, n + 1)):
        raise ValueError("rank vector is not a permutation of 1..n")
    return r.astype(np.float64)


def spearman(ranks_a, ranks_b) -> float:
    """Rank correlation 1 - 6 sum d^2 / (n (n^2 - 1)) for permutation ranks."""
    ra = _check_permutation(ranks_a)
    rb = _check_permutation(ranks_b)
    if ra.shape != rb.shape:
        raise ValueError("rank vectors must have equal length")
    n = ra.shape[0]
    d2 = float(((ra - rb) ** 2).sum())
    return 1.0 - 6.0 * d2 / (n * (n**2 - 1.0))


def ranks(beta_draws: np.ndarray, point: str = "mean-of-ranks") -> RankSummary:
    """Ascending ranks of the positions within each draw (ties by index).

    ``point`` selects the posterior point summary: the mean of the per-draw
    ranks (default) or the rank of the posterior-mean positions.
    """
    beta = np.atleast_2d(np.asarray(beta_draws, dtype=np.float64))
    n, n_leg = beta.shape
    order = np.argsort(beta, axis=1, kind="stable")
    per_draw = np.empty((n, n_leg), dtype=np.int64)
    np.put_along_axis(per_draw, order, np.arange(1, n_leg + 1)[None, :], axis=1)
    if point == "mean-of-ranks":
        point_rank = per_draw.mean(axis=0)
    elif point == "rank-of-mean":
        point_rank = np.empty(n_leg)
        point_rank[np.argsort(beta.mean(axis=0), kind="stable")] = np.arange(1, n_leg + 1)
    else:
        raise ValueError("point must be 'mean-of-ranks' or 'rank-of-mean'")
    return RankSummary(mean_rank=point_rank, per_draw=per_draw)


def ess(series) -> float:
    """Effective sample size n / (1 + 2 sum rho_t).

    Autocorrelations are truncated with the initial-monotone-positive-
    sequence rule on successive lag pairs.  Raises
    :class:`DegenerateSeriesError` for a constant series.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 10:
        raise ValueError("need a 1-D series of length >= 10")
    n = x.shape[0]
    center = x.mean()
    x = x - center
    if np.max(np.abs(x)) <= 1e-12 * max(1.0, abs(center)):
        raise DegenerateSeriesError("autocorrelation undefined for a constant series")
    nfft = next_fast_len(2 * n)
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n] / n
    rho = acov / acov[0]

    n_pairs = (len(rho) - 1) // 2
    pair = rho[: 2 * n_pairs].reshape(n_pairs, 2).sum(axis=1)
    positive = pair > 0
    cut = int(np.argmin(positive)) if not positive.all() else n_pairs
    if cut == 0:
        tau = 1.0 + 2.0 * rho[1]  # antithetic edge case
    else:
        kept = np.minimum.accumulate(pair[:cut])
        tau = -1.0 + 2.0 * float(kept.sum())
    # noise can push the estimate below one sample per draw; a single chain
    # is never treated as super-efficient
    return n / max(tau, 1.0)


def response_curve(draws: DrawStore, item: int | str, beta_grid, level: float = 0.9):
    """Pointwise posterior mean and central band of the response curve.

    ``item`` is an item id or column index into the draw store.  Returns
    ``(mean, lower, upper)`` arrays over ``beta_grid``, using the response
    model the draws were fit under.
    """
    if draws.n_draws == 0:
        raise ValueError("empty draw store")
    if isinstance(item, str):
        try:
            j = draws.item_ids.index(item)
        except ValueError:
            raise KeyError(f"item {item!r} not present in draws") from None
    else:
        j = int(item)
        if not (0 <= j < len(draws.item_ids)):
            raise KeyError(f"item index {j} out of range")
    from . import model as _model

    fn = (
        _model.log_response_terms
        if getattr(draws, "response", "logit") == "logit"
        else _model.log_probit_response_terms
    )
    grid = np.asarray(beta_grid, dtype=np.float64)
    # (G, n): each grid point against every retained draw of item j
    log_theta, _ = fn(grid[:, None], draws.alpha[None, :, j, :], draws.delta[None, :, j, :])
    theta = np.exp(log_theta)
    tail = (1.0 - level) / 2.0
    return (
        theta.mean(axis=1),
        np.quantile(theta, tail, axis=1),
        np.quantile(theta, 1.0 - tail, axis=1),
    )


def compare_models(draws_a: DrawStore, draws_b: DrawStore, votes: VoteMatrix | None = None) -> ComparisonReport:
    """Fit-score difference and rank agreement between two fits.

    Requires both draw stores to cover the same legislators (and, when
    ``votes`` is given, the same roster as the data).  The posterior of the
    rank correlation pairs draws by index.
    """
    if draws_a.legislator_ids != draws_b.legislator_ids:
        raise ValueError("draw stores cover different legislator sets")
    if votes is not None:
        ids = [leg.id for leg in votes.legislators]
        if ids != draws_a.legislator_ids:
            raise ValueError("draws do not match the vote matrix roster")
    if draws_a.n_draws == 0 or draws_b.n_draws == 0:
        raise ValueError("empty draw store")

    waic_a = waic(draws_a.loglik_by_legislator)
    waic_b = waic(draws_b.loglik_by_legislator)

    ranks_a = ranks(draws_a.beta)
    ranks_b = ranks(draws_b.beta)
    n_pairs = min(draws_a.n_draws, draws_b.n_draws)
    ra = ranks_a.per_draw[:n_pairs].astype(np.float64)
    rb = ranks_b.per_draw[:n_pairs].astype(np.float64)
    n_leg = ra.shape[1]
    rho_draws = 1.0 - 6.0 * ((ra - rb) ** 2).sum(axis=1) / (n_leg * (n_leg**2 - 1.0))

    point_a = np.empty(n_leg)
    point_a[np.argsort(ranks_a.mean_rank, kind="stable")] = np.arange(1, n_leg + 1)
    point_b = np.empty(n_leg)
    point_b[np.argsort(ranks_b.mean_rank, kind="stable")] = np.arange(1, n_leg + 1)

    return ComparisonReport(
        waic_a=waic_a,
        waic_b=waic_b,
        waic_diff=waic_a.waic - waic_b.waic,
        rho_point=spearman(point_a.astype(int), point_b.astype(int)),
        rho_mean=float(rho_draws.mean()),
        rho_lower=float(np.quantile(rho_draws, 0.05)),
        rho_upper=float(np.quantile(rho_draws, 0.95)),
        n_pairs=n_pairs,
    )
