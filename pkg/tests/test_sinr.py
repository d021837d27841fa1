import math

import numpy as np
import pytest

from conftest import reference_scenario, integer_shape_scenario
from ncjt import fading as fad
from ncjt import laplace as L
from ncjt import mc_sim, sinr
from ncjt.errors import DerivativeCapError, DomainError
from ncjt.gamma_fit import fit_scenario
from ncjt.scenario import Scenario, db_to_linear, per_km2

BETA_DB = np.linspace(-10.0, 20.0, 81)
BETAS = db_to_linear(BETA_DB)


def series_terms(scn, beta, m_max):
    g = fit_scenario(scn)
    return L.signal_laplace_derivatives(scn, 1.0 / (g.scale * beta), m_max).terms()


class TestBounds:
    @pytest.mark.parametrize("scn", [reference_scenario(3.5), reference_scenario(4.5), reference_scenario(4.5, cluster_size=3), reference_scenario(4.0, edge_db=6.0)], ids=["a3.5", "a4.5", "K3", "6dB"])
    def test_ordering_and_monotonicity(self, scn):
        curve = sinr.cdf_curve(scn, BETAS)
        assert np.all(curve.lower <= curve.approx) and np.all(curve.approx <= curve.upper)
        assert np.all((curve.lower >= 0) & (curve.upper <= 1))
        for col in (curve.lower, curve.approx, curve.upper):
            assert np.all(np.diff(col) >= 0)

    @pytest.mark.parametrize("beta_db", [-10.0, 0.0, 12.0])
    def test_gap_is_single_summand(self, beta_db):
        scn = reference_scenario(4.5)
        k = fit_scenario(scn).shape
        beta = db_to_linear(beta_db)
        lower, upper = sinr.cdf_bounds(scn, beta)
        t = series_terms(scn, beta, math.floor(k))
        assert upper - lower == pytest.approx(t[math.floor(k)], abs=1e-12)
        assert lower == pytest.approx(t[: math.floor(k)].sum(), rel=1e-13)

    def test_integer_shape_makes_bounds_coincide(self):
        scn = integer_shape_scenario(reference_scenario(4.5))
        assert fit_scenario(scn).shape == 6.0
        for beta in (0.3, 1.0, 7.0):
            p = sinr.cdf_point(scn, beta)
            assert p.lower == p.upper == p.approx

    def test_approx_weight(self):
        scn = reference_scenario(3.5)
        k = fit_scenario(scn).shape
        p = sinr.cdf_point(scn, 2.0)
        assert p.approx == pytest.approx(p.lower + (k - math.floor(k)) * p.gap, rel=1e-14)

    def test_approx_continuous_at_integer_shape(self):
        # approaching an integer shape from above, the weight on the extra term vanishes
        scn = integer_shape_scenario(reference_scenario(4.5))
        base = sinr.cdf_approx(scn, 1.0)
        just_above = scn.with_(snr=scn.snr * (1 - 1e-9))
        assert fit_scenario(just_above).shape > 6.0
        assert sinr.cdf_approx(just_above, 1.0) == pytest.approx(base, abs=1e-6)

    def test_unreachable_threshold(self):
        never = reference_scenario(4.5).with_(threshold=math.inf)
        for beta in (1e-3, 1.0, 1e3):
            assert sinr.cdf_bounds(never, beta) == (1.0, 1.0)

    def test_domain(self):
        with pytest.raises(DomainError):
            sinr.cdf_point(reference_scenario(), 0.0)
        with pytest.raises(DerivativeCapError):
            sinr.cdf_point(reference_scenario(2.2), 1.0, cap=20)

    def test_curve_meta(self):
        curve = sinr.cdf_curve(reference_scenario())
        assert len(curve.grid) == 81
        assert curve.meta["kind"] == "analytic"
        np.testing.assert_allclose(curve.upper - curve.lower, curve.gap, atol=1e-12)


class TestTailRemainder:
    def test_empty_tail_is_one(self):
        scn = reference_scenario(4.5)
        k = fit_scenario(scn).shape
        assert sinr.cdf_tail_remainder(scn, 1.0, math.ceil(k)).value == 1.0

    def test_nonincreasing_and_bracketed(self):
        scn = reference_scenario(4.5)
        start = math.ceil(fit_scenario(scn).shape)
        upper = sinr.cdf_bounds(scn, 1.0)[1]
        values = []
        for m_hi in range(start, start + 60, 5):
            est = sinr.cdf_tail_remainder(scn, 1.0, m_hi)
            values.append(est.value)
            # the remainder overshoots the upper bound by exactly the unreached mass
            assert est.value - est.truncation == pytest.approx(upper, abs=1e-12)
        assert all(b <= a for a, b in zip(values, values[1:]))

    def test_integer_shape_agrees_with_approximation(self):
        scn = integer_shape_scenario(reference_scenario(4.5))
        m_hi = 6 + 50
        est = sinr.cdf_tail_remainder(scn, 1.0, m_hi)
        assert abs(est.value - sinr.cdf_approx(scn, 1.0)) <= est.truncation + 1e-12

    def test_domain(self):
        scn = reference_scenario(4.5)
        with pytest.raises(DomainError):
            sinr.cdf_tail_remainder(scn, 1.0, 2)
        with pytest.raises(DerivativeCapError):
            sinr.cdf_tail_remainder(scn, 1.0, 400)


class TestAtomAndRate:
    def test_atom_unconditional_and_conditional(self):
        scn = reference_scenario(4.0, edge_db=3.0)
        frac = L.active_fraction(scn.fading, scn.edge_threshold, scn.alpha)
        assert sinr.outage_atom(scn) == pytest.approx(math.exp(-scn.mean_cluster_size * frac), rel=1e-14)
        assert sinr.outage_atom(scn.with_(cluster_size=4)) == pytest.approx((1 - frac) ** 4, rel=1e-14)
        assert sinr.outage_atom(scn.with_(threshold=math.inf)) == 1.0

    @pytest.mark.parametrize("scn", [reference_scenario(4.0, edge_db=3.0), reference_scenario(4.0, edge_db=3.0, cluster_size=2)], ids=["unconditional", "K2"])
    def test_atom_against_monte_carlo(self, scn):
        samples = mc_sim.run(scn, 100_000, seed=12)
        hit = samples.useful == 0
        se = math.sqrt(sinr.outage_atom(scn) * (1 - sinr.outage_atom(scn)) / hit.size)
        assert abs(hit.mean() - sinr.outage_atom(scn)) < 3 * se

    def test_rate_threshold_maps_to_sinr(self):
        scn = reference_scenario(4.5)
        for beta in (0.5, 1.0, 3.0):
            tau = math.log2(1 + beta)
            assert sinr.rate_cdf(scn, tau) == pytest.approx(sinr.cdf_approx(scn, beta), rel=1e-12)
        assert sinr.rate_cdf(scn, 0.0) == sinr.outage_atom(scn)
        with pytest.raises(DomainError):
            sinr.rate_cdf(scn, -0.1)

    def test_rate_cdf_monotone(self):
        scn = reference_scenario(4.5, edge_db=3.0)
        vals = [sinr.rate_cdf(scn, t) for t in np.linspace(0.0, 10.0, 41)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_rate_cdf_against_monte_carlo(self):
        scn = reference_scenario(4.5)
        samples = mc_sim.run(scn, 100_000, seed=61)
        taus = np.linspace(0.05, 10.0, 100)
        emp = mc_sim.ecdf(np.log2(1 + samples.sinr), taus)
        ana = np.array([sinr.rate_cdf(scn, t) for t in taus])
        assert np.max(np.abs(emp - ana)) <= 0.02


class TestSpectralEfficiency:
    def test_unreachable_threshold_gives_zero(self):
        assert sinr.mean_spectral_efficiency(reference_scenario(4.5).with_(threshold=math.inf)) == 0.0

    def test_nondecreasing_in_transmit_snr(self):
        base = reference_scenario(4.0)
        vals = [sinr.mean_spectral_efficiency(base.with_(snr=db_to_linear(x))) for x in (100.0, 110.0, 120.0, 162.0)]
        assert all(b >= a - 1e-4 for a, b in zip(vals, vals[1:]))
        assert vals[-1] > vals[0]

    def test_matches_rate_cdf_integral(self):
        scn = reference_scenario(4.5)
        tau = np.linspace(0.0, 40.0, 4001)
        ccdf = np.array([1 - sinr.rate_cdf(scn, t) for t in tau])
        trap = float(np.sum(0.5 * (ccdf[1:] + ccdf[:-1]) * np.diff(tau)))
        assert sinr.mean_spectral_efficiency(scn) == pytest.approx(trap, abs=2e-3)

    @pytest.mark.parametrize("K", [1, 3, 7])
    def test_against_monte_carlo(self, K):
        lam = per_km2(4)
        scn = Scenario(lam, 4.0, math.sqrt(K / (lam * math.pi)), cluster_size=K)
        samples = mc_sim.run(scn, 200_000, seed=70 + K)
        rate = np.log2(1 + samples.sinr)
        assert sinr.mean_spectral_efficiency(scn) == pytest.approx(rate.mean(), abs=0.05)


class TestTrends:
    def test_outage_grows_as_alpha_approaches_two(self):
        vals = [sinr.cdf_approx(reference_scenario(a), 1.0) for a in (3.5, 3.0, 2.5, 2.2)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1.0

    def test_outage_decreases_with_density(self):
        vals = [sinr.cdf_approx(reference_scenario(4.0, density=per_km2(d)), 1.0) for d in (4, 8, 16)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        logs = np.log(vals)
        assert np.all(np.diff(logs) < 0)


class TestPoissonWeights:
    def test_mass_and_mean(self):
        ks, ws = sinr.poisson_cluster_weights(3.96)
        assert sum(ws) >= sinr.POISSON_MASS
        assert ks[0] == 0 and ks == list(range(len(ks)))
        assert sum(k * w for k, w in zip(ks, ws)) == pytest.approx(3.96, rel=1e-6)

    def test_pilot_unconditional_is_poisson_mixture(self):
        scn = Scenario(per_km2(4), 4.0, 282.0, pilots=200)
        ks, ws = sinr.poisson_cluster_weights(scn.mean_cluster_size)
        ref = ws[0] + sum(w * sinr.cdf_approx(scn.with_(cluster_size=k), 1.0) for k, w in zip(ks[1:], ws[1:]))
        assert sinr.cdf_approx(scn, 1.0) == pytest.approx(min(ref, 1.0), rel=1e-12)


class TestCurveInvariants:
    def test_check_rejects_bad_curves(self):
        g = np.array([1.0, 2.0])
        with pytest.raises(DomainError):
            sinr.CdfCurve(g, np.array([0.1, 0.3]), np.array([0.05, 0.4]), np.array([0.2, 0.5])).check()
        with pytest.raises(DomainError):
            sinr.CdfCurve(g, np.array([0.3, 0.2]), np.array([0.3, 0.2]), np.array([0.3, 0.2])).check()
        with pytest.raises(DomainError):
            sinr.CdfCurve(g, np.zeros(2), np.zeros(2), np.full(2, 0.1), np.full(2, 0.2)).check()

    @pytest.mark.parametrize("model", [fad.Deterministic(), fad.Lognormal(6.0)], ids=["deterministic", "lognormal"])
    def test_other_fading_laws_produce_valid_curves(self, model):
        curve = sinr.cdf_curve(reference_scenario(4.5, fading=model), BETAS)
        assert curve.approx[0] < curve.approx[-1]
