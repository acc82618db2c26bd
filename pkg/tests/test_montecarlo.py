import numpy as np
import pytest
import scipy.stats

from swiptcap.channel import ConstraintSet, EhModel, HpaModel
from swiptcap.infometrics import (MassPointDistribution, average_energy,
                                  mixture_mi, mutual_information)
from swiptcap.montecarlo import (SimConfig, empirical_energy, empirical_mi,
                                 empirical_mi_onoff, sample_symbols)
from swiptcap.shannon import embed_onoff


def cfg(n=10**6, seed=20260810, hpa=None, eh=None):
    return SimConfig(n=n, seed=seed, hpa=hpa or HpaModel(bypass=True),
                     eh=eh or EhModel(b=0.5, h2=1.0))


class TestSampleSymbols:
    def test_point_mass_constant(self, fig6_dist):
        d = MassPointDistribution(np.array([1.5]), np.array([1.0]), peak=2.0)
        x = sample_symbols(d, cfg(n=1000))
        assert np.all(x == 1.5)

    def test_empirical_frequencies(self, fig6_dist):
        x = sample_symbols(fig6_dist, cfg())
        frac = np.mean(x == 2.0)
        assert frac == pytest.approx(0.25, abs=0.0015)  # binomial 3 sigma

    def test_chi_square_sanity(self, fig6_dist):
        x = sample_symbols(fig6_dist, cfg())
        counts = np.array([(x == 0.0).sum(), (x == 2.0).sum()])
        expected = np.array([0.75, 0.25]) * x.size
        stat, pval = scipy.stats.chisquare(counts, expected)
        assert pval > 1e-3

    def test_seed_repeatability(self, fig6_dist):
        a = sample_symbols(fig6_dist, cfg(n=4096))
        b = sample_symbols(fig6_dist, cfg(n=4096))
        assert np.array_equal(a, b)


class TestEmpiricalEnergy:
    def test_point_mass_at_zero_exact(self):
        d = MassPointDistribution(np.array([0.0]), np.array([1.0]), peak=1.0)
        est, se = empirical_energy(d, cfg(n=10**4))
        assert est == 1.0 and se == 0.0

    def test_dead_rectifier_exact(self, fig6_dist):
        est, se = empirical_energy(fig6_dist, cfg(n=10**4, eh=EhModel(b=0.0)))
        assert est == 1.0 and se == 0.0

    def test_matches_analytic_within_3_sigma(self, bypass, eh, fig6_dist):
        est, se = empirical_energy(fig6_dist, cfg())
        truth = average_energy(fig6_dist, bypass, eh)
        assert abs(est - truth) <= 3 * se


class TestEmpiricalMi:
    def test_degenerate_exact_zero(self, bypass):
        d = MassPointDistribution(np.array([1.0]), np.array([1.0]), peak=1.0)
        est, se = empirical_mi(d, bypass, cfg(n=10**4))
        assert abs(est) <= 1e-12 and se <= 1e-12

    def test_matches_quadrature_within_3_sigma(self, bypass, fig6_dist):
        est, se = empirical_mi(fig6_dist, bypass, cfg())
        truth = mutual_information(fig6_dist, bypass)
        assert abs(est - truth) <= 3 * se
        assert se <= 0.01 * max(truth, 1e-6)

    def test_onoff_matches_mixture_mi(self, bypass, fig6_dist):
        est, se = empirical_mi_onoff(fig6_dist, 0.5, bypass, cfg())
        ext = embed_onoff(fig6_dist, 0.5)
        truth = mixture_mi(ext, ext.states, bypass)
        assert abs(est - truth) <= 3 * se

    def test_stderr_scales_as_root_n(self, bypass, fig6_dist):
        ses = [empirical_mi(fig6_dist, bypass, cfg(n=n))[1]
               for n in (10**4, 10**5, 10**6)]
        for k in range(2):
            ratio = ses[k] / ses[k + 1]
            assert np.sqrt(10.0) / 1.5 <= ratio <= np.sqrt(10.0) * 1.5


class TestOutputSamplerMarginal:
    def test_kolmogorov_smirnov(self, bypass, fig6_dist):
        # y-draws must follow the mixture output CDF
        from swiptcap.montecarlo import _sample_outputs
        c = cfg(n=10**5)
        x = sample_symbols(fig6_dist, c)
        s = 1.0 + x**2
        y = _sample_outputs(s, c)
        scales = 1.0 + fig6_dist.locations**2

        def mix_cdf(t):
            return fig6_dist.weights @ (1.0 - np.exp(-np.outer(1.0 / scales, t)))

        stat = scipy.stats.kstest(y, mix_cdf).statistic
        assert stat < 1.63 / np.sqrt(c.n)  # 1% critical value
