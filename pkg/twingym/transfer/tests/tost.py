from django.test import SimpleTestCase
import numpy as np
from scipy import stats

from twingym.core.env import ConfigurationError
from twingym.transfer.tost import (TostConfig, t_cdf, t_crit, t_sf,
    tost_equivalence, welch_df)


def standardized(n):
    z = np.linspace(-1, 1, n)
    return (z - z.mean()) / z.std(ddof=1)


class TDistributionTest(SimpleTestCase):

    def test_against_scipy(self):
        for df in (1.5, 4, 17.3, 198):
            for t in (-3.2, -0.4, 0.0, 0.7, 2.5):
                self.assertAlmostEqual(stats.t.cdf(t, df), t_cdf(t, df), places=10)
                self.assertAlmostEqual(stats.t.sf(t, df), t_sf(t, df), places=10)
            self.assertAlmostEqual(stats.t.ppf(0.95, df), t_crit(0.05, df), places=8)

    def test_welch_df(self):
        # equal variances and sizes give n_a + n_b - 2
        self.assertAlmostEqual(18.0, welch_df(2.0, 10, 2.0, 10))


class TostTest(SimpleTestCase):

    def test_small_identical_samples(self):
        result = tost_equivalence([1, 2, 3], [1, 2, 3], TostConfig(1.0))
        self.assertAlmostEqual(1.224744871, result.t_lower, places=6)
        self.assertAlmostEqual(-1.224744871, result.t_upper, places=6)
        self.assertAlmostEqual(4.0, result.df)
        self.assertAlmostEqual(stats.t.sf(result.t_lower, 4), result.p_lower, places=6)
        self.assertAlmostEqual(stats.t.cdf(result.t_upper, 4), result.p_upper, places=6)
        self.assertFalse(result.equivalent)

    def test_large_close_samples(self):
        z = standardized(100)
        result = tost_equivalence(10 + 0.1 * z, 10.01 + 0.1 * z, TostConfig(1.0))
        self.assertTrue(result.equivalent)
        self.assertAlmostEqual(-0.01, result.difference)
        self.assertLess(max(result.p_lower, result.p_upper), 1e-6)

    def test_shifted_samples(self):
        z = standardized(50)
        result = tost_equivalence(10 + z, 12 + z, TostConfig(1.0))
        self.assertFalse(result.equivalent)
        self.assertGreater(result.p_lower, 0.5)

    def test_degenerate(self):
        result = tost_equivalence([5, 5, 5], [5, 5, 5], TostConfig(1.0))
        self.assertTrue(result.degenerate)
        self.assertTrue(result.equivalent)
        self.assertEqual(0.0, result.p_lower)
        self.assertEqual(0.0, result.p_upper)
        result = tost_equivalence([5, 5, 5], [7, 7, 7], TostConfig(1.0))
        self.assertFalse(result.equivalent)

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(0, 1, 30), rng.normal(0.2, 1.5, 25)
        forward = tost_equivalence(a, b, TostConfig(1.0))
        backward = tost_equivalence(b, a, TostConfig(1.0))
        self.assertEqual(forward.equivalent, backward.equivalent)
        self.assertAlmostEqual(forward.p_lower, backward.p_upper)
        self.assertAlmostEqual(forward.p_upper, backward.p_lower)

    def test_scale_invariance(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(0, 1, 20), rng.normal(0.1, 1, 20)
        base = tost_equivalence(a, b, TostConfig(0.8))
        scaled = tost_equivalence(a * 40, b * 40, TostConfig(32.0))
        self.assertAlmostEqual(base.p_lower, scaled.p_lower)
        self.assertAlmostEqual(base.p_upper, scaled.p_upper)

    def test_margin_monotone(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(0, 1, 15), rng.normal(0.3, 1, 15)
        verdicts = [tost_equivalence(a, b, TostConfig(delta)).equivalent
                    for delta in (0.1, 0.5, 1.0, 2.0, 5.0)]
        # once equivalent, a wider margin stays equivalent
        self.assertEqual(sorted(verdicts), verdicts)
        self.assertTrue(verdicts[-1])

    def test_invalid(self):
        with self.assertRaises(ConfigurationError):
            TostConfig(0.0)
        with self.assertRaises(ConfigurationError):
            TostConfig(1.0, alpha=0.5)
        with self.assertRaises(ConfigurationError):
            tost_equivalence([1.0], [1.0, 2.0], TostConfig(1.0))
        with self.assertRaises(ConfigurationError):
            tost_equivalence([1.0, np.nan], [1.0, 2.0], TostConfig(1.0))
