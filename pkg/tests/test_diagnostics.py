import math

import numpy as np
import pytest

from unfolding.diagnostics import (
    DegenerateSeriesError,
    compare_models,
    ess,
    ranks,
    response_curve,
    spearman,
    waic,
)
from unfolding.sampler import DrawStore


def make_store(beta, alpha, delta, loglik_by_leg, response="logit"):
    beta = np.asarray(beta, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    delta = np.asarray(delta, dtype=float)
    ll = np.asarray(loglik_by_leg, dtype=float)
    n, n_leg = beta.shape
    n_item = alpha.shape[1]
    return DrawStore(
        iters=np.arange(1, n + 1),
        beta=beta,
        alpha=alpha,
        delta=delta,
        z=np.where(alpha[..., 0] > 0, 1, -1).astype(np.int8),
        loglik=ll.sum(axis=1),
        loglik_by_legislator=ll,
        legislator_ids=[f"L{i}" for i in range(n_leg)],
        item_ids=[f"V{j}" for j in range(n_item)],
        response=response,
    )


class TestWaic:
    def test_repeated_draw_zero_penalty(self):
        ll = np.array([[-1.5, -2.0], [-1.5, -2.0]])
        report = waic(ll)
        assert report.penalty == 0.0
        assert report.waic == pytest.approx(-3.5, rel=1e-12)
        assert report.lppd == pytest.approx(-3.5, rel=1e-12)

    def test_draw_order_invariance(self):
        gen = np.random.default_rng(3)
        ll = gen.normal(size=(100, 5)) - 3.0
        a = waic(ll)
        b = waic(ll[gen.permutation(100)])
        assert a.waic == pytest.approx(b.waic, rel=1e-12)
        assert a.penalty == pytest.approx(b.penalty, rel=1e-12)

    def test_matches_direct_summation_oracle(self):
        gen = np.random.default_rng(5)
        ll = gen.normal(size=(100, 3)) - 2.0
        report = waic(ll)
        # independently coded direct summation
        want = 0.0
        want_pen = 0.0
        for i in range(3):
            want += math.log(sum(math.exp(v) for v in ll[:, i]) / 100.0)
            mean_i = sum(ll[:, i]) / 100.0
            want_pen += sum((v - mean_i) ** 2 for v in ll[:, i]) / 99.0
        assert report.lppd == pytest.approx(want, abs=1e-8)
        assert report.penalty == pytest.approx(want_pen, abs=1e-8)
        assert report.waic == pytest.approx(want - want_pen, abs=1e-8)
        assert report.penalty >= 0
        assert report.waic == pytest.approx(report.lppd - report.penalty, rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            waic(np.zeros((0, 3)))


class TestSpearman:
    def test_identical(self):
        assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0

    def test_reversed(self):
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0

    def test_hand_example(self):
        assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, rel=1e-12)

    def test_symmetry_and_self_correlation(self):
        gen = np.random.default_rng(7)
        a = gen.permutation(10) + 1
        b = gen.permutation(10) + 1
        assert spearman(a, b) == pytest.approx(spearman(b, a), rel=1e-12)
        assert spearman(a, a) == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            spearman([1, 2], [1, 2, 3])
        with pytest.raises(ValueError):
            spearman([1, 2, 2], [1, 2, 3])


class TestRanks:
    def test_single_legislator(self):
        summary = ranks(np.array([[0.5], [1.5]]))
        assert np.all(summary.per_draw == 1)
        assert summary.mean_rank[0] == 1.0

    def test_single_draw(self):
        summary = ranks(np.array([[0.3, -1.2, 2.0]]))
        assert list(summary.per_draw[0]) == [2, 1, 3]

    def test_reflection_reverses(self):
        gen = np.random.default_rng(9)
        beta = gen.normal(size=(50, 7))
        r = ranks(beta).per_draw
        r_ref = ranks(-beta).per_draw
        assert np.array_equal(r + r_ref, np.full_like(r, 8))

    def test_rows_are_permutations(self):
        gen = np.random.default_rng(11)
        summary = ranks(gen.normal(size=(20, 6)))
        for row in summary.per_draw:
            assert sorted(row) == [1, 2, 3, 4, 5, 6]

    def test_monotone_transform_invariance(self):
        gen = np.random.default_rng(13)
        beta = gen.normal(size=(30, 5))
        assert np.array_equal(ranks(beta).per_draw, ranks(np.exp(beta) * 3 + 1).per_draw)

    def test_tie_broken_by_index(self):
        summary = ranks(np.array([[1.0, 1.0, 0.0]]))
        assert list(summary.per_draw[0]) == [2, 3, 1]

    def test_rank_of_mean_point(self):
        beta = np.array([[0.0, 1.0], [2.0, -1.0]])
        summary = ranks(beta, point="rank-of-mean")
        assert list(summary.mean_rank) == [2, 1]


class TestEss:
    def test_iid_series(self):
        gen = np.random.default_rng(15)
        x = gen.standard_normal(10_000)
        assert ess(x) == pytest.approx(10_000, rel=0.10)

    def test_ar1_series(self):
        gen = np.random.default_rng(17)
        n, phi = 100_000, 0.9
        x = np.empty(n)
        x[0] = gen.standard_normal()
        eps = gen.standard_normal(n) * math.sqrt(1 - phi**2)
        for t in range(1, n):
            x[t] = phi * x[t - 1] + eps[t]
        want = n * (1 - phi) / (1 + phi)
        assert ess(x) == pytest.approx(want, rel=0.10)

    def test_constant_series_degenerate(self):
        with pytest.raises(DegenerateSeriesError):
            ess(np.full(100, 3.7))

    def test_never_wildly_exceeds_length(self):
        gen = np.random.default_rng(19)
        for _ in range(20):
            x = gen.standard_normal(2_000)
            assert ess(x) <= 1.05 * 2_000

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            ess(np.arange(5.0))


class TestResponseCurve:
    def _store(self, alphas, deltas):
        n = len(alphas)
        return make_store(
            beta=np.zeros((n, 2)),
            alpha=np.asarray(alphas)[:, None, :],
            delta=np.asarray(deltas)[:, None, :],
            loglik_by_leg=np.zeros((n, 2)),
        )

    def test_single_draw_band_collapses(self):
        store = self._store([[1.0, -1.0]], [[0.0, 1.0]])
        grid = np.linspace(-2, 2, 11)
        mean, lower, upper = response_curve(store, 0, grid)
        assert np.allclose(mean, lower) and np.allclose(mean, upper)

    def test_flat_curve_at_one_third(self):
        store = self._store([[0.0, 0.0]] * 3, [[0.5, -0.5]] * 3)
        mean, lower, upper = response_curve(store, "V0", np.linspace(-3, 3, 7))
        assert np.allclose(mean, 1 / 3, atol=1e-12)
        assert np.allclose(lower, 1 / 3, atol=1e-12) and np.allclose(upper, 1 / 3, atol=1e-12)

    def test_two_draw_mean_matches_direct_average(self):
        from unfolding.model import response_probability

        alphas = [[1.0, -2.0], [2.0, -0.5]]
        deltas = [[0.0, 1.0], [-1.0, 2.0]]
        store = self._store(alphas, deltas)
        grid = np.linspace(-2.5, 2.5, 21)
        mean, lower, upper = response_curve(store, 0, grid)
        direct = np.array(
            [
                0.5 * (response_probability(b, alphas[0], deltas[0]) + response_probability(b, alphas[1], deltas[1]))
                for b in grid
            ]
        )
        assert np.max(np.abs(mean - direct)) < 1e-12
        assert np.all(lower <= mean + 1e-15) and np.all(mean <= upper + 1e-15)

    def test_unknown_item(self):
        store = self._store([[1.0, -1.0]], [[0.0, 1.0]])
        with pytest.raises(KeyError):
            response_curve(store, "nope", np.linspace(-1, 1, 3))


class TestCompareModels:
    def _random_store(self, seed, n=40, n_leg=6, n_item=3):
        gen = np.random.default_rng(seed)
        return make_store(
            beta=gen.normal(size=(n, n_leg)),
            alpha=np.stack(
                [np.abs(gen.normal(size=(n, n_item))) + 0.2, -np.abs(gen.normal(size=(n, n_item))) - 0.2],
                axis=-1,
            ),
            delta=gen.normal(size=(n, n_item, 2)),
            loglik_by_leg=gen.normal(size=(n, n_leg)) - 5.0,
        )

    def test_self_comparison(self):
        store = self._random_store(21)
        report = compare_models(store, store)
        assert report.waic_diff == 0.0
        assert report.rho_point == 1.0
        assert report.rho_mean == 1.0
        assert (report.rho_lower, report.rho_upper) == (1.0, 1.0)

    def test_reflection_gives_minus_one(self):
        store = self._random_store(23)
        reflected = make_store(
            beta=-store.beta,
            alpha=-store.alpha,
            delta=-store.delta,
            loglik_by_leg=store.loglik_by_legislator,
        )
        report = compare_models(store, reflected)
        assert report.rho_mean == pytest.approx(-1.0, abs=1e-12)
        assert report.rho_point == pytest.approx(-1.0, abs=1e-12)
        assert report.waic_diff == 0.0

    def test_mismatched_rosters_rejected(self):
        a = self._random_store(25)
        b = self._random_store(27, n_leg=5)
        with pytest.raises(ValueError, match="legislator"):
            compare_models(a, b)
