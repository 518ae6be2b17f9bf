"""Primitive densities and samplers used by the Gibbs kernels.

All samplers are inversion-based: each output value consumes exactly one
uniform variate, so a kernel can pre-draw a fixed-shape block of uniforms
from its stream and apply the (deterministic, elementwise) transforms in any
execution order without changing the result.  Tail quantities are handled in
log space throughout; the chain routinely visits regions where naive
arithmetic underflows (items with lopsided vote margins push the relevant
exponents past +-700).
"""

from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr, ndtri_exp

from .rng import RngStream

__all__ = [
    "gumbel_log_density",
    "log_normal_cdf",
    "sample_truncated_normal",
    "truncated_normal_from_uniform",
    "sample_categorical_log",
    "categorical_from_uniform",
]


def gumbel_log_density(x):
    """Log density of the standard Gumbel distribution, ``-x - exp(-x)``."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("gumbel_log_density requires finite input")
    out = -x - np.exp(-x)
    return float(out) if out.ndim == 0 else out


def log_normal_cdf(x):
    """log Phi(x), accurate deep in the left tail (delegates to scaled erfc)."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("log_normal_cdf requires finite input")
    out = log_ndtr(x)
    return float(out) if out.ndim == 0 else out


def truncated_normal_from_uniform(u, mean, sd, lower, upper):
    """Map uniforms on (0, 1) to N(mean, sd^2) draws truncated to (lower, upper).

    The quantile is computed on the log-CDF scale: the target CDF value is
    ``(1-u) Phi(a) + u Phi(b)`` assembled with ``logaddexp`` and inverted with
    ``ndtri_exp``, after mirroring intervals that sit in the right tail into
    the left tail.  This stays accurate for truncation bounds tens of
    standard deviations out, where plain ``Phi``/``Phi^-1`` round to 0 or 1.

    Bounds may be ``-inf``/``+inf``.  Outputs are strictly inside the bounds.
    """
    u, mean, sd, lower, upper = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.float64) for a in (u, mean, sd, lower, upper))
    )
    if np.any(sd <= 0):
        raise ValueError("sd must be positive")
    if np.any(~(lower < upper)):
        raise ValueError("require lower < upper for truncation bounds")

    a = (lower - mean) / sd
    b = (upper - mean) / sd

    # Mirror right-tail intervals: X ~ TN(a, b) iff -X ~ TN(-b, -a).
    mirror = a > -b
    lo = np.where(mirror, -b, a)
    hi = np.where(mirror, -a, b)

    with np.errstate(divide="ignore"):  # log Phi(-inf) = -inf, log(0) = -inf
        log_lo = np.where(np.isneginf(lo), -np.inf, log_ndtr(lo))
        log_hi = log_ndtr(hi)
        log_p = np.logaddexp(log_lo + np.log1p(-u), log_hi + np.log(np.maximum(u, 1e-300)))
    z = ndtri_exp(np.minimum(log_p, -1e-300))
    z = np.where(mirror, -z, z)
    x = mean + sd * z

    # Rounding can land exactly on a finite bound; nudge strictly inside.
    x = np.where(x <= lower, np.nextafter(lower, np.inf), x)
    x = np.where(x >= upper, np.nextafter(upper, -np.inf), x)
    return x if x.ndim else float(x)


def sample_truncated_normal(mean, sd, lower, upper, rng: RngStream):
    """Draw from N(mean, sd^2) restricted to (lower, upper).

    Arguments broadcast; one uniform is consumed per output element.
    """
    shape = np.broadcast_shapes(
        *(np.shape(a) for a in (mean, sd, lower, upper))
    )
    u = rng.uniform(shape if shape else None)
    return truncated_normal_from_uniform(u, mean, sd, lower, upper)


def categorical_from_uniform(log_weights, u):
    """Map uniforms to categorical indices with unnormalized log weights.

    ``log_weights`` has categories on the last axis; ``u`` matches the
    leading axes.  Weights are normalized internally, so the draw is
    invariant to adding a constant to every log weight.  Entries of ``-inf``
    are allowed; a row whose weights are all ``-inf`` is an error.
    """
    lw = np.asarray(log_weights, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if lw.ndim == 0 or lw.shape[-1] == 0:
        raise ValueError("log_weights must have at least one category")
    # only ratios matter: subtracting the row max both normalizes enough and
    # gives the shift invariance for free
    mx = np.max(lw, axis=-1, keepdims=True)
    if np.any(np.isneginf(mx)):
        raise ValueError("all categorical log weights are -inf")
    cum = np.cumsum(np.exp(lw - mx), axis=-1)
    idx = np.sum(u[..., None] * cum[..., -1:] >= cum, axis=-1)
    return np.minimum(idx, lw.shape[-1] - 1)


def sample_categorical_log(log_weights, rng: RngStream):
    """Draw one index k with probability proportional to exp(log_weights[k])."""
    lw = np.asarray(log_weights, dtype=np.float64)
    if lw.ndim != 1:
        raise ValueError("log_weights must be a vector")
    return int(categorical_from_uniform(lw, rng.uniform()))
