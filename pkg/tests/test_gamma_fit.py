import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from conftest import reference_scenario
from ncjt import mc_sim
from ncjt.errors import DomainError
from ncjt.gamma_fit import fit, fit_scenario, interference_moments, intra_cluster_moments
from ncjt.scenario import Scenario, db_to_linear, per_km2


def campbell_moments_exponential(scn):
    """Mean and variance of J_C + J_Cbar + 1/snr for Rayleigh fading, integrating over the distance r.

    Inside the cluster a BS interferes only while g r^-alpha < T; outside always.
    E[g^n; g < x] = n! P(n + 1, x) for g ~ Exp(1).
    """
    lam, a, D, T = scn.density, scn.alpha, scn.radius, scn.threshold

    def inside(r, n):
        x = T * r**a
        return math.factorial(n) * special.gammainc(n + 1, x) * r ** (-n * a) if T > 0 else 0.0

    def outside(r, n):
        return math.factorial(n) * r ** (-n * a)

    out = []
    for n in (1, 2):
        i_in, _ = integrate.quad(lambda r: 2 * math.pi * lam * r * inside(r, n), 0.0, D, epsrel=1e-12, limit=400)
        # log-distance keeps the slow r^(2 - alpha) tail well resolved
        i_out, _ = integrate.quad(
            lambda u: 2 * math.pi * lam * math.exp(2 * u) * outside(math.exp(u), n), math.log(D), math.log(D) + 80.0, epsrel=1e-12, limit=400
        )
        out.append(i_in + i_out)
    return out[0] + 1.0 / scn.snr, out[1]


class TestFit:
    def test_examples(self):
        g = fit(2.0, 1.0)
        assert (g.shape, g.scale) == (4.0, 0.5)
        g = fit(1.0, 1.0)
        assert (g.shape, g.scale) == (1.0, 1.0)

    @pytest.mark.parametrize("args", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0)])
    def test_rejects_nonpositive(self, args):
        with pytest.raises(DomainError):
            fit(*args)

    @settings(max_examples=200)
    @given(st.floats(1e-20, 1e20), st.floats(1e-20, 1e20))
    def test_moments_round_trip(self, mean, var):
        g = fit(mean, var)
        assert g.mean == pytest.approx(mean, rel=1e-12)
        assert g.variance == pytest.approx(var, rel=1e-12)


class TestInterferenceMoments:
    def test_threshold_free_mean(self):
        lam, a, D = per_km2(14), 3.5, 300.0
        scn = Scenario(lam, a, D, snr=1e300)
        mean, _ = interference_moments(scn)
        assert mean == pytest.approx(2 * math.pi * lam / (a - 2) * D ** (2 - a), rel=1e-12)

    def test_scheduling_equivalence(self):
        fr0 = reference_scenario(3.5, edge_db=-300.0).with_(threshold=0.0)
        cs = reference_scenario(3.5, edge_db=6.0).with_(scheduling="CS")
        assert interference_moments(cs) == pytest.approx(interference_moments(fr0), rel=1e-14)

    @pytest.mark.parametrize("alpha", [3.0, 4.0, 5.0])
    @pytest.mark.parametrize("density_km2", [1.0, 14.0])
    def test_shape_matches_closed_form(self, alpha, density_km2):
        # exponential fading and T = 0: k = (2 pi lam D^(2-a)/(a-2) + 1/snr)^2 / (2 pi lam D^(2-2a)/(a-1))
        lam, D, snr = per_km2(density_km2), 400.0, db_to_linear(162)
        scn = Scenario(lam, alpha, D, snr=snr)
        mu = 2 * math.pi * lam / (alpha - 2) * D ** (2 - alpha) + 1 / snr
        var = 2 * math.pi * lam / (alpha - 1) * D ** (2 - 2 * alpha)
        g = fit_scenario(scn)
        assert g.shape == pytest.approx(mu * mu / var, rel=1e-12)
        assert g.scale == pytest.approx(var / mu, rel=1e-12)

    @pytest.mark.parametrize("edge_db", [-5.0, 0.0, 6.0])
    @pytest.mark.parametrize("alpha", [3.0, 4.5])
    def test_against_campbell_integral(self, edge_db, alpha):
        scn = reference_scenario(alpha, edge_db=edge_db, radius=450.0)
        mean, var = interference_moments(scn)
        ref_mean, ref_var = campbell_moments_exponential(scn)
        assert mean == pytest.approx(ref_mean, rel=1e-9)
        assert var == pytest.approx(ref_var, rel=1e-9)

    @pytest.mark.parametrize("alpha", [2.5, 3.5, 5.0])
    def test_fitted_gamma_reproduces_moments(self, alpha):
        scn = reference_scenario(alpha)
        g = fit_scenario(scn)
        mean, var = interference_moments(scn)
        dist = stats.gamma(g.shape, scale=g.scale)
        assert dist.mean() == pytest.approx(mean, rel=1e-13)
        assert dist.var() == pytest.approx(var, rel=1e-12)

    def test_shape_grows_as_alpha_decreases(self):
        fits = [fit_scenario(reference_scenario(a)) for a in (3.0, 2.5, 2.2)]
        assert fits[0].shape < fits[1].shape < fits[2].shape
        # the absolute scale carries D^-alpha; normalized to the cluster edge it shrinks
        edge_scale = [f.scale * 300.0**a for f, a in zip(fits, (3.0, 2.5, 2.2))]
        assert edge_scale[0] > edge_scale[1] > edge_scale[2]

    def test_cs_has_no_intra_cluster_term(self):
        scn = reference_scenario(3.5, edge_db=6.0, scheduling="CS")
        assert intra_cluster_moments(scn) == (0.0, 0.0)

    def test_pilots_add_residual_interference(self):
        scn = reference_scenario(4.0, edge_db=-300.0).with_(threshold=0.0, cluster_size=3)
        base = interference_moments(scn)
        with_pilots = interference_moments(scn.with_(pilots=200))
        assert with_pilots[0] > base[0] and with_pilots[1] > base[1]
        assert interference_moments(scn.with_(pilots=200), include_csi=False) == base

    def test_moments_vanish_with_radius(self):
        # with T~ fixed, both interference moments shrink to the noise level as D grows
        means = [interference_moments(reference_scenario(4.0, radius=d, snr=1e300))[0] for d in (100.0, 1e3, 1e4, 1e5)]
        assert all(b < a for a, b in zip(means, means[1:]))
        assert means[-1] < 1.01e-6 * means[0]


@pytest.mark.parametrize(
    "scn",
    [reference_scenario(3.5), reference_scenario(3.5, cluster_size=3), reference_scenario(4.5, edge_db=6.0, scheduling="CS")],
    ids=["unconditional", "conditional", "coordinated"],
)
def test_monte_carlo_moments(scn):
    """Sample mean and variance of the denominator within 3 standard errors at 10^6 trials."""
    samples = mc_sim.run(scn, 1_000_000, seed=2718)
    x = samples.denominator
    mean, var = interference_moments(scn)
    n = x.size
    se_mean = x.std() / math.sqrt(n)
    c = x - x.mean()
    se_var = math.sqrt(max(np.mean(c**4) - np.mean(c**2) ** 2, 0.0) / n)
    assert abs(x.mean() - mean) < 3 * se_mean
    assert abs(x.var() - var) < 3 * se_var
