import math

import numpy as np
import pytest
from scipy import stats

from unfolding.gumbel_mix import GaussianMixture, builtin_table, single_normal
from unfolding.model import MISSING, NAY, YEA, Hyperparams, Item, Legislator, VoteMatrix
from unfolding.rng import RngStream
from unfolding.sampler import (
    ChainState,
    SamplerConfig,
    _beta_conditionals,
    _bernoulli_log_ratio,
    _delta_conditionals,
    _item_orthant_log_weights,
    _locations,
    _MixTables,
    init_state,
    run_chain,
    step_beta,
    step_delta,
    step_flip,
    step_item,
    step_lambda,
    step_utilities,
)


def make_votes(cells):
    cells = np.asarray(cells)
    legs = [Legislator(f"L{i}", party=("A" if i % 2 else "B")) for i in range(cells.shape[0])]
    items = [Item(f"V{j}") for j in range(cells.shape[1])]
    return VoteMatrix(cells, legs, items)


def make_state(votes, beta, alpha, delta, z, ystar, lam):
    return ChainState(
        beta=np.asarray(beta, dtype=float),
        alpha=np.asarray(alpha, dtype=float),
        delta=np.asarray(delta, dtype=float),
        z=np.asarray(z, dtype=np.int8),
        ystar=np.asarray(ystar, dtype=float),
        lam=np.asarray(lam, dtype=np.int64),
        iteration=0,
    )


def replicated_state(votes, n_rows, n_cols, beta0, alpha0, delta0, z0, ystar0, lam0):
    """Identical parameters/latents in every cell: one kernel call gives iid draws."""
    beta = np.full(n_rows, beta0)
    alpha = np.tile(np.asarray(alpha0, dtype=float), (n_cols, 1))
    delta = np.tile(np.asarray(delta0, dtype=float), (n_cols, 1))
    z = np.full(n_cols, z0, dtype=np.int8)
    ystar = np.tile(np.asarray(ystar0, dtype=float), (n_rows, n_cols, 1))
    lam = np.tile(np.asarray(lam0, dtype=np.int64), (n_rows, n_cols, 1))
    return make_state(votes, beta, alpha, delta, z, ystar, lam)


class TestStepLambda:
    def test_frequencies_match_direct_weights(self):
        mixture = builtin_table(6)
        n_rows, n_cols = 500, 200  # 100k iid cells
        votes = make_votes(np.full((n_rows, n_cols), YEA))
        beta0, alpha0, delta0 = 0.4, (1.5, -0.8), (-0.2, 1.1)
        ystar0 = (0.6, -0.3, 1.2)
        state = replicated_state(votes, n_rows, n_cols, beta0, alpha0, delta0, 1, ystar0, (0, 0, 0))
        step_lambda(state, votes, mixture, RngStream(101, 0))

        loc = (
            -alpha0[0] * (beta0 - delta0[0]),
            0.0,
            -alpha0[1] * (beta0 - delta0[1]),
        )
        for ell in range(3):
            # independently coded weight oracle
            w = mixture.weights * stats.norm.pdf(
                ystar0[ell], loc=mixture.means + loc[ell], scale=mixture.sds
            )
            w = w / w.sum()
            counts = np.bincount(state.lam[..., ell].ravel(), minlength=6)
            p = stats.chisquare(counts, w * counts.sum()).pvalue
            assert p > 0.001, f"coordinate {ell}: {counts} vs {w}"

    def test_single_component_always_zero(self):
        votes = make_votes([[YEA, NAY], [NAY, YEA]])
        state = init_state(votes, Hyperparams(), SamplerConfig(mixture=single_normal(), seed=1))
        step_lambda(state, votes, single_normal(), RngStream(5, 1))
        assert np.all(state.lam == 0)

    def test_dominating_component(self):
        # one component pinned at the observed residual with tiny sd
        mixture = GaussianMixture([0.5, 0.5], [0.0, 5.0], [1e-6, 1.0])
        votes = make_votes(np.full((100, 10), YEA))
        state = replicated_state(votes, 100, 10, 0.0, (1.0, -1.0), (0.0, 0.0), 1, (0.0, 0.0, 0.0), (0, 0, 0))
        step_lambda(state, votes, mixture, RngStream(7, 0))
        assert np.all(state.lam[..., 1] == 0)  # y*=0 sits exactly at component 0


class TestStepUtilities:
    @staticmethod
    def _gibbs_pool(vote_value, mu, sds, n_chains=500, burn=200, keep=100, gap=20):
        votes = make_votes(np.full((n_chains, 1), vote_value))
        # encode the target means via beta=0, delta=0 => loc comes from alpha... use
        # alpha=0 and mixture means equal to mu so locations are zero offsets.
        mixture = GaussianMixture([1 / 3, 1 / 3, 1 / 3], list(mu), list(sds))
        state = replicated_state(
            votes, n_chains, 1, 0.0, (0.0, 0.0), (0.0, 0.0), 1, tuple(mu), (0, 1, 2)
        )
        # start consistent with the vote
        if vote_value == YEA:
            state.ystar[..., 1] += 10.0
        else:
            state.ystar[..., 0] += 10.0
        samples = []
        k = 0
        for sweep in range(burn + keep * gap):
            step_utilities(state, votes, mixture, RngStream(900 + vote_value, sweep))
            if sweep >= burn and (sweep - burn) % gap == 0:
                samples.append(state.ystar[:, 0, :].copy())
                k += 1
        return np.concatenate(samples, axis=0)

    @staticmethod
    def _rejection_pool(vote_value, mu, sds, n=50_000, seed=4):
        gen = np.random.default_rng(seed)
        out = []
        total = 0
        while total < n:
            cand = gen.standard_normal((4 * n, 3)) * np.asarray(sds) + np.asarray(mu)
            cond = cand[:, 1] > np.maximum(cand[:, 0], cand[:, 2])
            if vote_value == NAY:
                cond = ~cond
            good = cand[cond]
            out.append(good)
            total += good.shape[0]
        return np.concatenate(out, axis=0)[:n]

    @pytest.mark.parametrize("vote_value", [YEA, NAY])
    def test_stationary_matches_rejection_oracle(self, vote_value):
        mu = (0.3, -0.2, 0.5)
        sds = (1.0, 0.7, 1.3)
        chain = self._gibbs_pool(vote_value, mu, sds)
        oracle = self._rejection_pool(vote_value, mu, sds)
        for ell in range(3):
            p = stats.ks_2samp(chain[:, ell], oracle[:, ell]).pvalue
            assert p > 0.001, f"coordinate {ell} mismatch (p={p})"

    def test_vote_consistency_after_sweep(self):
        gen = np.random.default_rng(11)
        cells = gen.choice([YEA, NAY, MISSING], size=(20, 15), p=[0.45, 0.45, 0.1])
        votes = make_votes(cells)
        state = init_state(votes, Hyperparams(), SamplerConfig(seed=3))
        for t in range(5):
            step_utilities(state, votes, builtin_table(6), RngStream(31, t))
            state.check_invariants(votes)


class TestStepBeta:
    def test_no_votes_draws_from_prior(self):
        votes = make_votes([[YEA, NAY], [MISSING, MISSING]])
        state = init_state(votes, Hyperparams(), SamplerConfig(seed=9))
        mean, prec = _beta_conditionals(state, votes, _MixTables(builtin_table(6)))
        assert mean[1] == 0.0 and prec[1] == 1.0

    def test_grid_posterior_oracle(self):
        # single vote, single standard-normal component
        votes = make_votes([[YEA]])
        state = make_state(
            votes,
            beta=[0.0],
            alpha=[[1.0, -1.0]],
            delta=[[0.0, 0.0]],
            z=[1],
            ystar=[[[-2.0, 0.5, 2.0]]],
            lam=[[[0, 0, 0]]],
        )
        mean, prec = _beta_conditionals(state, votes, _MixTables(single_normal()))
        grid = np.linspace(-12, 12, 48001)
        dens = (
            stats.norm.pdf(grid)
            * stats.norm.pdf(-2.0, loc=-1.0 * (grid - 0.0), scale=1.0)
            * stats.norm.pdf(2.0, loc=1.0 * (grid - 0.0), scale=1.0)
        )
        dens /= np.trapezoid(dens, grid)
        g_mean = np.trapezoid(grid * dens, grid)
        g_var = np.trapezoid((grid - g_mean) ** 2 * dens, grid)
        assert abs(mean[0] - g_mean) < 1e-6
        assert abs(1.0 / prec[0] - g_var) < 1e-6
        assert mean[0] == pytest.approx(4.0 / 3.0, abs=1e-12)
        assert prec[0] == pytest.approx(3.0, abs=1e-12)

    def test_draw_moments_match_conditionals(self):
        n = 200_000
        votes = make_votes(np.full((n, 1), YEA))
        state = replicated_state(votes, n, 1, 0.0, (1.2, -0.7), (0.1, -0.4), 1, (0.2, 1.0, -0.3), (2, 1, 4))
        mean, prec = _beta_conditionals(state, votes, _MixTables(builtin_table(6)))
        step_beta(state, votes, builtin_table(6), RngStream(77, 0))
        sd = 1.0 / math.sqrt(prec[0])
        assert state.beta.mean() == pytest.approx(mean[0], abs=3 * sd / math.sqrt(n))
        assert state.beta.std() == pytest.approx(sd, rel=0.02)


class TestStepItem:
    def test_orthant_constraint_always_holds(self):
        gen = np.random.default_rng(13)
        cells = gen.choice([YEA, NAY], size=(12, 8))
        votes = make_votes(cells)
        state = init_state(votes, Hyperparams(), SamplerConfig(seed=21))
        for t in range(20):
            step_item(state, votes, Hyperparams(), builtin_table(6), RngStream(50, t))
            plus = state.z == 1
            assert np.all((state.alpha[plus, 0] > 0) & (state.alpha[plus, 1] < 0))
            assert np.all((state.alpha[~plus, 0] < 0) & (state.alpha[~plus, 1] > 0))

    def test_symmetric_configuration_is_fair_coin(self):
        hyper = Hyperparams(vartheta=np.zeros(2), omega_sq=4.0, kappa_sq=2.0)
        votes = make_votes([[YEA], [NAY]])
        mixture = single_normal()
        # residuals y* - m = 0 make the alpha-conditional mean exactly zero
        state = make_state(
            votes,
            beta=[0.5, -0.5],
            alpha=[[1.0, -1.0]],
            delta=[[0.0, 0.0]],
            z=[1],
            ystar=np.zeros((2, 1, 3)),
            lam=np.zeros((2, 1, 3), dtype=int),
        )
        lw_plus, lw_minus = _item_orthant_log_weights(state, votes, hyper, _MixTables(mixture))
        assert lw_plus[0] == pytest.approx(lw_minus[0], abs=1e-12)

    def test_orthant_probability_matches_quadrature(self):
        hyper = Hyperparams(vartheta=np.array([-0.5, 1.0]), omega_sq=4.0, kappa_sq=2.0)
        votes = make_votes([[YEA], [NAY]])
        mixture = builtin_table(6)
        tab = _MixTables(mixture)
        state = make_state(
            votes,
            beta=[0.8, -0.6],
            alpha=[[1.0, -1.0]],
            delta=[[0.3, 0.9]],
            z=[1],
            ystar=[[[0.4, 0.1, -0.7]]] * 2,
            lam=[[[1, 0, 3]], [[2, 2, 0]]],
        )
        lw_plus, lw_minus = _item_orthant_log_weights(state, votes, hyper, tab)
        p_kernel = float(np.exp(lw_plus - np.logaddexp(lw_plus, lw_minus))[0])

        # brute-force 2-D quadrature of likelihood x prior over each orthant
        n = 240
        x, w = np.polynomial.legendre.leggauss(n)
        half = 15.0  # +-7.5 prior sds for omega=2
        nodes = 0.5 * half * x + 0.5 * half
        wts = 0.5 * half * w

        def orthant_mass(sign, center):
            a1 = sign * nodes[:, None]
            a2 = -sign * nodes[None, :]
            val = np.ones((n, n))
            val *= stats.norm.pdf(a1, scale=2.0) * stats.norm.pdf(a2, scale=2.0)
            for i in range(2):
                for ell, col in ((0, 0), (2, 1)):
                    m_k = mixture.means[state.lam[i, 0, ell]]
                    s_k = mixture.sds[state.lam[i, 0, ell]]
                    coef = state.beta[i] - state.delta[0, col]
                    a = a1 if col == 0 else a2
                    val *= stats.norm.pdf(state.ystar[i, 0, ell], loc=m_k - a * coef, scale=s_k)
            prior_delta = stats.norm.pdf(state.delta[0, 0], loc=center[0], scale=math.sqrt(2.0))
            prior_delta *= stats.norm.pdf(state.delta[0, 1], loc=center[1], scale=math.sqrt(2.0))
            return prior_delta * float(wts @ val @ wts)

        mass_plus = orthant_mass(1.0, hyper.vartheta)
        mass_minus = orthant_mass(-1.0, -hyper.vartheta)
        p_oracle = mass_plus / (mass_plus + mass_minus)
        assert abs(p_kernel - p_oracle) < 1e-6

    def test_z_frequency_matches_probability(self):
        hyper = Hyperparams(vartheta=np.array([-0.5, 1.0]), omega_sq=4.0, kappa_sq=2.0)
        n_items = 100_000
        votes = make_votes(np.tile([[YEA], [NAY]], (1, n_items)))
        state = replicated_state(
            votes, 2, n_items, 0.0, (1.0, -1.0), (0.3, 0.9), 1, (0.4, 0.1, -0.7), (1, 0, 3)
        )
        state.beta = np.array([0.8, -0.6])
        tab = _MixTables(builtin_table(6))
        lw_plus, lw_minus = _item_orthant_log_weights(state, votes, hyper, tab)
        p = float(np.exp(lw_plus - np.logaddexp(lw_plus, lw_minus))[0])
        step_item(state, votes, hyper, builtin_table(6), RngStream(61, 0))
        freq = np.mean(state.z == 1)
        se = math.sqrt(p * (1 - p) / n_items)
        assert freq == pytest.approx(p, abs=4 * se)


class TestStepDelta:
    def test_empty_item_prior(self):
        votes = make_votes([[YEA, MISSING], [NAY, MISSING]])
        hyper = Hyperparams()
        state = init_state(votes, hyper, SamplerConfig(seed=2))
        mean, prec = _delta_conditionals(state, votes, hyper, _MixTables(builtin_table(6)))
        want = state.z[1] * hyper.vartheta
        assert np.allclose(mean[1], want)
        assert np.allclose(prec[1], 1.0 / hyper.kappa_sq)

    def test_grid_posterior_oracle_and_ks(self):
        hyper = Hyperparams(vartheta=np.array([0.5, -1.0]), omega_sq=4.0, kappa_sq=1.5)
        mixture = single_normal()
        n_items = 10_000
        votes = make_votes(np.tile([[YEA], [NAY]], (1, n_items)))
        state = replicated_state(
            votes, 2, n_items, 0.0, (0.8, -1.3), (0.0, 0.0), 1, (0.3, -0.2, 0.9), (0, 0, 0)
        )
        state.beta = np.array([1.1, -0.4])
        tab = _MixTables(mixture)
        mean, prec = _delta_conditionals(state, votes, hyper, tab)

        # 1-D grid oracle per coordinate (the conditional factorizes, but the
        # oracle only multiplies likelihood terms and prior pointwise)
        grid = np.linspace(-15, 15, 24001)
        for col, (alpha_c, theta_c, ell) in enumerate(
            [(0.8, 0.5, 0), (-1.3, -1.0, 2)]
        ):
            dens = stats.norm.pdf(grid, loc=theta_c, scale=math.sqrt(1.5))
            for i in range(2):
                loc = -alpha_c * (state.beta[i] - grid)
                dens = dens * stats.norm.pdf(state.ystar[i, 0, ell], loc=loc, scale=1.0)
            dens /= np.trapezoid(dens, grid)
            g_mean = np.trapezoid(grid * dens, grid)
            g_var = np.trapezoid((grid - g_mean) ** 2 * dens, grid)
            assert abs(mean[0, col] - g_mean) < 1e-6
            assert abs(1.0 / prec[0, col] - g_var) < 1e-6

            cdf = np.cumsum(dens)
            cdf = cdf / cdf[-1]
            oracle = np.interp(np.random.default_rng(17 + col).random(n_items), cdf, grid)
            step_delta(state, votes, hyper, mixture, RngStream(71, col))
            p = stats.ks_2samp(state.delta[:, col], oracle).pvalue
            assert p > 0.001


class TestStepFlip:
    def test_empty_item_always_accepts(self):
        votes = make_votes([[MISSING], [MISSING]])
        hyper = Hyperparams()
        config = SamplerConfig(seed=4)
        state = init_state(votes, hyper, config)
        signs = []
        for t in range(30):
            step_flip(state, votes, hyper, config, RngStream(81, t))
            signs.append(int(state.z[0]))
        # empty likelihood product: every proposal accepted, so z alternates
        assert all(signs[t] != signs[t + 1] for t in range(29))

    def test_acceptance_ratio_matches_brute_force(self):
        gen = np.random.default_rng(19)
        cells = gen.choice([YEA, NAY, MISSING], size=(6, 3), p=[0.4, 0.4, 0.2])
        votes = make_votes(cells)
        beta = gen.normal(size=6)
        alpha = np.stack([np.abs(gen.normal(size=3)) + 0.1, -np.abs(gen.normal(size=3)) - 0.1], axis=1)
        delta = gen.normal(size=(3, 2))
        log_ratio = _bernoulli_log_ratio(beta, alpha, delta, -alpha, -delta, votes)

        for j in range(3):
            want = 0.0
            for i in range(6):
                if cells[i, j] == MISSING:
                    continue
                def theta(a, d):
                    return 1.0 / (
                        1.0
                        + math.exp(-a[0] * (beta[i] - d[0]))
                        + math.exp(-a[1] * (beta[i] - d[1]))
                    )
                t_old = theta(alpha[j], delta[j])
                t_new = theta(-alpha[j], -delta[j])
                if cells[i, j] == YEA:
                    want += math.log(t_new) - math.log(t_old)
                else:
                    want += math.log(1 - t_new) - math.log(1 - t_old)
            assert abs(log_ratio[j] - want) < 1e-10

    def test_invariants_preserved_after_flip(self):
        gen = np.random.default_rng(23)
        cells = gen.choice([YEA, NAY], size=(10, 6))
        votes = make_votes(cells)
        hyper = Hyperparams()
        config = SamplerConfig(seed=6, flip_sign_prob=0.5)
        state = init_state(votes, hyper, config)
        for t in range(20):
            step_flip(state, votes, hyper, config, RngStream(91, t))
            state.check_invariants(votes)


@pytest.fixture(scope="module")
def votes():
    gen = np.random.default_rng(29)
    cells = gen.choice([YEA, NAY, MISSING], size=(6, 8), p=[0.45, 0.45, 0.1])
    cells[0, :] = [YEA, NAY] * 4  # guards against unanimity
    return make_votes(cells)


class TestRunChain:
    def test_n_keep_zero(self, votes):
        config = SamplerConfig(burn_in=3, n_keep=0, thin=1, seed=1)
        store = run_chain(votes, Hyperparams(), config)
        assert store.n_draws == 0

    def test_deterministic_replay(self, votes):
        config = SamplerConfig(burn_in=10, n_keep=8, thin=3, seed=42)
        a = run_chain(votes, Hyperparams(), config)
        b = run_chain(votes, Hyperparams(), config)
        for field in ("beta", "alpha", "delta", "z", "loglik", "loglik_by_legislator"):
            assert np.array_equal(getattr(a, field), getattr(b, field)), field

    def test_recorded_draws_satisfy_orthant(self, votes):
        config = SamplerConfig(burn_in=5, n_keep=10, thin=2, seed=11)
        store = run_chain(votes, Hyperparams(), config)
        plus = store.z == 1
        assert np.all(store.alpha[..., 0][plus] > 0) and np.all(store.alpha[..., 1][plus] < 0)
        assert np.all(store.alpha[..., 0][~plus] < 0) and np.all(store.alpha[..., 1][~plus] > 0)
        assert store.iters[0] == config.burn_in + config.thin

    def test_probit_variant_runs_same_code_path(self, votes):
        config = SamplerConfig(
            mixture=single_normal(), response="probit", burn_in=5, n_keep=5, thin=1, seed=3
        )
        store = run_chain(votes, Hyperparams(), config)
        assert store.n_draws == 5
        assert store.response == "probit"
        assert np.all(np.isfinite(store.loglik))

    def test_invariants_through_full_schedule(self, votes):
        hyper = Hyperparams()
        config = SamplerConfig(burn_in=0, n_keep=15, thin=1, seed=17)
        mixture = config.mixture
        state = init_state(votes, hyper, config)
        state.check_invariants(votes)
        from unfolding.sampler import _SLOT_BETA, _SLOT_DELTA, _SLOT_FLIP, _SLOT_ITEM, _SLOT_LAMBDA, _SLOT_YSTAR, _stream

        for t in range(1, 16):
            step_lambda(state, votes, mixture, _stream(17, t, _SLOT_LAMBDA))
            step_utilities(state, votes, mixture, _stream(17, t, _SLOT_YSTAR))
            state.check_invariants(votes)
            step_beta(state, votes, mixture, _stream(17, t, _SLOT_BETA))
            step_item(state, votes, hyper, mixture, _stream(17, t, _SLOT_ITEM))
            step_delta(state, votes, hyper, mixture, _stream(17, t, _SLOT_DELTA))
            if t % config.flip_every == 0:
                step_flip(state, votes, hyper, config, _stream(17, t, _SLOT_FLIP))
            state.check_invariants(votes)

    def test_cell_loglik_storage(self, votes):
        config = SamplerConfig(burn_in=2, n_keep=4, thin=1, seed=5, store_cell_loglik=True)
        store = run_chain(votes, Hyperparams(), config)
        assert store.cell_loglik.shape == (4, int(votes.observed.sum()))
        # cell terms must sum to the per-legislator totals
        sums = np.zeros((4, votes.n_legislators))
        for c, (i, j) in enumerate(store.cell_index):
            sums[:, i] += store.cell_loglik[:, c]
        assert np.allclose(sums, store.loglik_by_legislator, atol=1e-10)


class TestInitState:
    def test_invariants_hold(self):
        gen = np.random.default_rng(31)
        votes = make_votes(gen.choice([YEA, NAY], size=(8, 5)))
        state = init_state(votes, Hyperparams(), SamplerConfig(seed=8))
        state.check_invariants(votes)

    def test_party_signed_means(self):
        gen = np.random.default_rng(37)
        votes = make_votes(gen.choice([YEA, NAY], size=(40, 5)))
        config = SamplerConfig(seed=12, init_mode="party-signed")
        state = init_state(votes, Hyperparams(), config)
        parties = np.array([leg.party for leg in votes.legislators])
        assert state.beta[parties == "A"].mean() < 0 < state.beta[parties == "B"].mean()

    def test_party_signed_requires_labels(self):
        votes = VoteMatrix(
            np.array([[YEA, NAY], [NAY, YEA]], dtype=np.int8),
            [Legislator("a"), Legislator("b")],
            [Item("v1"), Item("v2")],
        )
        with pytest.raises(ValueError, match="party"):
            init_state(votes, Hyperparams(), SamplerConfig(seed=1, init_mode="party-signed"))

    def test_random_beta_moments(self):
        gen = np.random.default_rng(41)
        votes = make_votes(gen.choice([YEA, NAY], size=(50, 4)))
        betas = []
        for s in range(400):
            state = init_state(votes, Hyperparams(), SamplerConfig(seed=s))
            betas.append(state.beta)
        betas = np.concatenate(betas)
        assert betas.mean() == pytest.approx(0.0, abs=0.03)
        assert betas.std() == pytest.approx(1.0, abs=0.03)


class TestSamplerConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SamplerConfig(thin=0)
        with pytest.raises(ValueError):
            SamplerConfig(flip_sign_prob=1.5)
        with pytest.raises(ValueError):
            SamplerConfig(init_mode="other")

    def test_paper_scale_defaults(self):
        config = SamplerConfig()
        assert (config.burn_in, config.thin, config.n_keep) == (500_000, 50, 20_000)
        assert (config.flip_every, config.flip_sign_prob) == (5, 0.1)
        assert config.mixture.k == 6

    def test_desk_scale(self):
        config = SamplerConfig.desk_scale(seed=3)
        assert (config.burn_in, config.thin, config.n_keep) == (5_000, 5, 2_000)
