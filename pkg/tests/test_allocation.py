import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from allocgen import gf
from allocgen.allocation import (
    PortfolioModel,
    allocate_compound_katz,
    allocate_independent,
    allocate_katz_closed_form,
    allocate_negbin_convolution,
    cumulative_and_layers,
    mask_validity,
    oracle_enumerate,
    oracle_size_biased,
    allocate_compound_poisson_pool,
)
from allocgen.errors import (
    AliasingRisk,
    EmptyDistribution,
    InvalidLayer,
    KatzDomain,
    OracleBudget,
    SeriesTruncation,
)
from allocgen.models import (
    BernoulliRisk,
    CompoundKatzRisk,
    ExplicitRisk,
    KatzParams,
    KatzRisk,
    compound_poisson_risk,
    explicit_risk,
    negative_binomial_risk,
    poisson_risk,
)
from allocgen.pmf import pmf_from_values

PARTNER = (0.1, 0.3, 0.2, 0.25, 0.15)


def small_explicit_portfolio(rng, n=None, max_support=8):
    n = n or rng.integers(2, 6)
    risks = []
    for _ in range(n):
        size = int(rng.integers(2, max_support + 1))
        w = rng.uniform(0.05, 1.0, size=size)
        risks.append(explicit_risk(w / w.sum()))
    return risks


class TestAllocateIndependent:
    def test_two_poisson_conditional_means_are_proportional(self):
        lam1, lam2 = 0.8, 1.7
        t = allocate_independent([poisson_risk(lam1), poisson_risk(lam2)], 64)
        k = np.arange(64.0)
        want = lam1 / (lam1 + lam2) * k
        got = t.conditional_mean[0]
        assert np.allclose(got[t.valid_mask], want[t.valid_mask], atol=1e-9)

    def test_single_risk_conditional_mean_is_identity(self):
        t = allocate_independent([explicit_risk(PARTNER)], 16)
        k = np.arange(16.0)
        valid = t.valid_mask
        assert valid[:5].all()
        assert np.allclose(t.conditional_mean[0][valid], k[valid], atol=1e-10)

    def test_bernoulli_pool_matches_enumeration(self, bernoulli_pool):
        t = allocate_independent(bernoulli_pool, 64)
        o = oracle_enumerate(PortfolioModel(risks=bernoulli_pool), 64)
        assert np.max(np.abs(t.expected_allocation - o.expected_allocation)) <= 1e-10

    def test_unstable_division_falls_back_to_products(self):
        # b=1, q=0.5 has pgf 0.5 + 0.5 z, which vanishes at z = -1
        risks = [BernoulliRisk(1, 0.5), BernoulliRisk(2, 0.3), BernoulliRisk(3, 0.7)]
        t = allocate_independent(risks, 8)
        o = oracle_enumerate(PortfolioModel(risks=risks), 8)
        assert np.max(np.abs(t.expected_allocation - o.expected_allocation)) <= 1e-12

    def test_empty_portfolio(self):
        with pytest.raises(EmptyDistribution):
            allocate_independent([], 8)

    def test_aliasing_warning_when_support_exceeds_buffer(self):
        with pytest.warns(AliasingRisk):
            allocate_independent([BernoulliRisk(40, 0.5), BernoulliRisk(40, 0.5)], 64)

    def test_oracle_triangle_on_random_portfolios(self, rng):
        for _ in range(5):
            risks = small_explicit_portfolio(rng)
            kmax = 64
            t = allocate_independent(risks, kmax)
            o = oracle_enumerate(PortfolioModel(risks=risks), kmax)
            assert np.max(np.abs(t.expected_allocation - o.expected_allocation)) <= 1e-10
            for i, risk in enumerate(risks):
                others = np.zeros(kmax)
                others[0] = 1.0
                for j, other in enumerate(risks):
                    if j != i:
                        others = np.convolve(others, other.pmf_vector(kmax))[:kmax]
                sb = oracle_size_biased(risk, pmf_from_values(others))
                assert np.max(np.abs(sb - t.expected_allocation[i])) <= 1e-10


class TestTableInvariants:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_identities_on_random_portfolios(self, seed):
        rng = np.random.default_rng(seed)
        risks = small_explicit_portfolio(rng)
        t = allocate_independent(risks, 64)
        k = np.arange(64.0)
        # every payment unit at S=k is attributed to someone
        target = k * t.fs_raw
        dev = np.abs(t.expected_allocation.sum(axis=0) - target)
        assert np.max(dev[t.valid_mask] / (1.0 + target[t.valid_mask])) <= 1e-10
        # per-risk totals recover the means
        for i, r in enumerate(risks):
            assert t.expected_allocation[i].sum() == pytest.approx(r.mean(), abs=1e-9)
        # cumulative rows are prefix sums
        assert np.allclose(
            t.expected_cumulative, np.cumsum(t.expected_allocation, axis=1), atol=1e-12
        )
        # conditional means live on [0, min(k, own support)]
        for i, r in enumerate(risks):
            vals = t.conditional_mean[i][t.valid_mask]
            bound = np.minimum(k[t.valid_mask], r.support_top())
            assert np.all(vals >= -1e-8)
            assert np.all(vals <= bound + 1e-8)

    def test_mask_validity_retolerance(self, small_pool):
        t = allocate_compound_poisson_pool(small_pool, 64)
        loose = mask_validity(t, 1e-2)
        strict = mask_validity(t, 1e-12)
        assert loose.valid_mask.sum() >= t.valid_mask.sum() >= strict.valid_mask.sum()
        assert loose.tolerance_used == 1e-2

    def test_degenerate_total_has_single_valid_point(self):
        t = allocate_independent([explicit_risk([0, 0, 1.0])], 8)
        assert t.valid_mask.sum() == 1
        assert t.valid_mask[2]


class TestKatzClosedForm:
    def test_poisson_row(self):
        lam = 0.7
        risks = [poisson_risk(lam), explicit_risk(PARTNER)]
        t = allocate_independent(risks, 64)
        alloc, cum = allocate_katz_closed_form(KatzParams.poisson(lam), t.fs)
        want = np.concatenate([[0.0], lam * t.fs_raw[:-1]])
        assert np.max(np.abs(alloc - want)) <= 1e-12
        assert np.max(np.abs(cum - np.cumsum(alloc))) <= 1e-12

    def test_zero_at_origin(self):
        fs = pmf_from_values([0.3, 0.4, 0.2, 0.1])
        for params in (KatzParams.poisson(0.5), KatzParams.negative_binomial(2, 0.6)):
            alloc, cum = allocate_katz_closed_form(params, fs)
            assert alloc[0] == 0.0 and cum[0] == 0.0

    @pytest.mark.parametrize(
        "params",
        [
            KatzParams.poisson(0.7),
            KatzParams.negative_binomial(2.0, 0.6),
            KatzParams.binomial(5, 0.3),
        ],
    )
    def test_matches_transform_path(self, params):
        risks = [KatzRisk(params), explicit_risk(PARTNER)]
        t = allocate_independent(risks, 128)
        alloc, cum = allocate_katz_closed_form(params, t.fs)
        assert np.max(np.abs(alloc - t.expected_allocation[0])) <= 1e-11
        # linear relation tying allocation, cumulative allocation and the cdf
        a, b = params.a, params.b
        FS = np.concatenate([[0.0], np.cumsum(t.fs_raw)[:-1]])
        resid = (a - 1.0) * cum - a * alloc + (a + b) * FS
        assert np.max(np.abs(resid)) <= 1e-10

    def test_binomial_text_parameterization(self):
        # the b used for binomial counts is (m+1) q/(1-q); the transform path arbitrates
        params = KatzParams.binomial(4, 0.2)
        assert params.b == pytest.approx(5 * 0.2 / 0.8)


class TestNegbinSeries:
    def test_single_risk_reduces_to_weighted_pmf(self):
        r, q = 2.5, 0.4
        f = KatzParams.negative_binomial(r, q).pmf(32)
        for k in (1, 2, 5, 9):
            got = allocate_negbin_convolution([(r, q)], k)
            assert got == pytest.approx(k * f[k], rel=1e-12)

    def test_two_risks_match_transform_path(self):
        rs, qs = (2.0, 3.0), (0.5, 0.65)
        risks = [negative_binomial_risk(r, q) for r, q in zip(rs, qs)]
        t = allocate_independent(risks, 128)
        for k in (1, 3, 7, 15):
            got = allocate_negbin_convolution(list(zip(rs, qs)), k)
            assert got == pytest.approx(t.expected_allocation[0][k], abs=1e-10)

    def test_equal_q_matches_closed_form(self):
        rs, qs = (2.0, 3.0), (0.5, 0.5)
        risks = [negative_binomial_risk(r, q) for r, q in zip(rs, qs)]
        t = allocate_independent(risks, 128)
        alloc, _ = allocate_katz_closed_form(KatzParams.negative_binomial(rs[0], qs[0]), t.fs)
        for k in (1, 4, 10):
            got = allocate_negbin_convolution(list(zip(rs, qs)), k)
            assert got == pytest.approx(alloc[k], abs=1e-10)

    def test_zero_point(self):
        assert allocate_negbin_convolution([(2.0, 0.5)], 0) == 0.0

    def test_accepts_katz_risks(self):
        got = allocate_negbin_convolution([negative_binomial_risk(2.0, 0.5)], 3)
        f = KatzParams.negative_binomial(2.0, 0.5).pmf(8)
        assert got == pytest.approx(3 * f[3], rel=1e-12)

    def test_budget(self):
        with pytest.raises(SeriesTruncation):
            allocate_negbin_convolution([(2.0, 0.5)], 10**6, ell_max=10)


class TestCompoundKatz:
    def test_unit_severity_reduces_to_poisson_row(self):
        lam = 0.9
        unit = pmf_from_values([0.0, 1.0])
        risk = CompoundKatzRisk(KatzParams.poisson(lam), unit)
        partner = explicit_risk(PARTNER)
        z = gf.roots_of_unity(64)
        mu = allocate_compound_katz(risk, partner.pgf_on_roots(z), 64)
        t = allocate_independent([KatzRisk(KatzParams.poisson(lam)), partner], 64)
        assert np.max(np.abs(mu - t.expected_allocation[0])) <= 1e-12

    @pytest.mark.filterwarnings("ignore::allocgen.errors.AliasingRisk")
    def test_matches_explicit_pmf_route(self):
        sev = pmf_from_values(KatzParams.negative_binomial(2, 0.45).pmf(64))
        risk = CompoundKatzRisk(KatzParams.poisson(0.1), sev)
        partner = explicit_risk(PARTNER)
        z = gf.roots_of_unity(128)
        mu = allocate_compound_katz(risk, partner.pgf_on_roots(z), 128)
        explicit = ExplicitRisk(
            pmf_from_values(risk.pmf_vector(128))
        )
        t = allocate_independent([explicit, partner], 128)
        assert np.max(np.abs(mu - t.expected_allocation[0])) <= 1e-11

    @pytest.mark.filterwarnings("ignore::allocgen.errors.AliasingRisk")
    def test_negative_binomial_count(self):
        sev = pmf_from_values([0.0, 0.6, 0.4])
        risk = CompoundKatzRisk(KatzParams.negative_binomial(2.0, 0.55), sev)
        partner = explicit_risk(PARTNER)
        z = gf.roots_of_unity(128)
        mu = allocate_compound_katz(risk, partner.pgf_on_roots(z), 128)
        explicit = ExplicitRisk(pmf_from_values(risk.pmf_vector(128)))
        t = allocate_independent([explicit, partner], 128)
        assert np.max(np.abs(mu - t.expected_allocation[0])) <= 1e-11


class TestAlgorithmOne:
    def test_single_risk_conditional_mean_is_identity(self):
        risk = compound_poisson_risk(0.4, [0.0, 0.5, 0.5])
        t = allocate_compound_poisson_pool([risk], 64)
        k = np.arange(64.0)
        assert np.allclose(t.conditional_mean[0][t.valid_mask], k[t.valid_mask], atol=1e-8)

    def test_matches_generic_independent_path(self, small_pool):
        t1 = allocate_compound_poisson_pool(small_pool, 64)
        t2 = allocate_independent(small_pool, 64)
        assert np.max(np.abs(t1.expected_allocation - t2.expected_allocation)) <= 1e-12

    def test_cached_and_streamed_agree_exactly(self, small_pool):
        a = allocate_compound_poisson_pool(small_pool, 64, cache=True)
        b = allocate_compound_poisson_pool(small_pool, 64, cache=False)
        assert np.array_equal(a.expected_allocation, b.expected_allocation)
        assert np.array_equal(a.fs_raw, b.fs_raw)

    def test_rejects_non_poisson_counts(self):
        bad = CompoundKatzRisk(KatzParams.negative_binomial(2, 0.5), pmf_from_values([0, 1.0]))
        with pytest.raises(KatzDomain):
            allocate_compound_poisson_pool([bad], 16)

    def test_total_allocation_recovers_mean(self):
        risk = CompoundKatzRisk(
            KatzParams.poisson(0.161152),
            pmf_from_values(
                KatzParams.negative_binomial(2, 0.489756).pmf(512)
            ),
        )
        t = allocate_compound_poisson_pool([risk], 2048)
        assert t.expected_allocation[0].sum() == pytest.approx(0.335788, abs=1e-5)


class TestLayers:
    def test_telescoping(self, small_pool):
        t = allocate_compound_poisson_pool(small_pool, 64)
        retained, layer, excess = cumulative_and_layers(t, 2, 5, 0)
        assert retained + layer + excess == pytest.approx(t.risk_means[0], abs=1e-10)

    def test_poisson_retained_is_scaled_cdf(self):
        lam = 0.7
        t = allocate_independent([poisson_risk(lam), explicit_risk(PARTNER)], 64)
        l1, l2 = 3, 7
        retained, _, _ = cumulative_and_layers(t, l1, l2, 0)
        FS = np.cumsum(t.fs_raw)
        assert retained == pytest.approx(lam * FS[l1 - 1], abs=1e-12)

    def test_excess_vanishes_when_top_layer_covers_the_grid(self):
        # a truncated margin keeps its deficit in the truncation report, so the
        # in-table mean is fully swept up once l2 reaches the grid top
        full = KatzParams.poisson(3.0).pmf(256)
        trunc = pmf_from_values(full[:12])
        with pytest.warns(AliasingRisk):
            t = allocate_independent([ExplicitRisk(trunc), explicit_risk(PARTNER)], 32)
        *_, excess = cumulative_and_layers(t, 2, 31, 0)
        assert abs(excess) <= 1e-10
        assert t.truncation.lost_mass == pytest.approx(1.0 - trunc.total_mass, abs=1e-12)

    def test_bad_bounds(self):
        t = allocate_independent([explicit_risk(PARTNER)], 16)
        with pytest.raises(InvalidLayer):
            cumulative_and_layers(t, 5, 5, 0)


class TestOracles:
    def test_two_iid_bernoulli(self):
        risks = [explicit_risk([0.5, 0.5]), explicit_risk([0.5, 0.5])]
        o = oracle_enumerate(PortfolioModel(risks=risks), 8)
        assert o.expected_allocation[0][1] == pytest.approx(0.25)

    def test_two_poisson_proportionality(self):
        f = KatzParams.poisson(1.0).pmf(21)
        risks = [
            ExplicitRisk(pmf_from_values(f)),
            ExplicitRisk(pmf_from_values(f)),
        ]
        o = oracle_enumerate(PortfolioModel(risks=risks), 64)
        k = np.arange(64.0)
        want = 0.5 * k * o.fs_raw
        assert np.max(np.abs(o.expected_allocation[0] - want)) <= 1e-12

    def test_budget_guard(self):
        risks = [explicit_risk(np.full(100, 0.01)) for _ in range(5)]
        with pytest.raises(OracleBudget):
            oracle_enumerate(PortfolioModel(risks=risks), 512, budget=10_000)

    def test_size_biased_degenerate(self):
        risk = explicit_risk([0, 0, 1.0])  # always pays 2
        others = pmf_from_values([0.25, 0.5, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0])
        sb = oracle_size_biased(risk, others)
        want = np.zeros(8)
        want[2:5] = 2.0 * np.array([0.25, 0.5, 0.25])
        assert np.allclose(sb, want, atol=1e-15)

    def test_size_biased_poisson_row(self):
        lam = 0.7
        fX = KatzParams.poisson(lam).pmf(64)
        partner = np.pad(PARTNER, (0, 59))
        sb = oracle_size_biased(
            ExplicitRisk(pmf_from_values(fX)),
            pmf_from_values(partner),
        )
        t = allocate_independent([poisson_risk(lam), explicit_risk(PARTNER)], 64)
        assert np.max(np.abs(sb - t.expected_allocation[0])) <= 1e-11

    def test_size_biased_matches_pipeline_on_compound_pool(self, small_pool):
        t = allocate_compound_poisson_pool(small_pool, 64)
        others = np.zeros(64)
        others[0] = 1.0
        for r in small_pool[1:]:
            others = np.convolve(others, r.pmf_vector(64))[:64]
        sb = oracle_size_biased(small_pool[0], pmf_from_values(others))
        assert np.max(np.abs(sb - t.expected_allocation[0])) <= 1e-11

    def test_zero_mean_risk(self):
        sb = oracle_size_biased(explicit_risk([1.0]), pmf_from_values([0.5, 0.5]))
        assert np.all(sb == 0.0)
