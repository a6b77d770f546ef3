import itertools
import math
import unittest

import numpy as np

from erspin.decoherence.models import (
    T1Params, Y_SITE_DENSITY, coth, effective_linewidth, excitation_density, field_noise_bound, gamma_sd,
    id_density_for, instantaneous_diffusion_rate, sech2, stretched_exponential, t1_rate, t2_sd,
    t2_temperature_model, t2_total,
)

FITTED_T1 = T1Params(r0=1.67e-8, r_ff=0.87, r_d=2.19, frequency=5.67e9)

class TestRelaxation(unittest.TestCase):

    def test_thermal_factors(self):
        self.assertAlmostEqual(sech2(1.0), 0.41997, places=5)
        self.assertAlmostEqual(coth(1.0), 1.31304, places=5)
        self.assertEqual(sech2(1e4), 0.0)

    def test_low_temperature_plateau(self):
        rate = t1_rate(1e-3, FITTED_T1)
        self.assertAlmostEqual(rate, 2.19, places=6)
        self.assertAlmostEqual(1.0 / rate, 0.4566, places=4)

    def test_high_temperature_growth(self):
        temperatures = np.array([0.5, 1.0, 2.0, 4.0])
        rates = t1_rate(temperatures, FITTED_T1)
        self.assertTrue(np.all(np.diff(rates) > 0))
        x = 5.67e9 / (2 * 20.836619e9 * 4.0)
        self.assertAlmostEqual(rates[-1], FITTED_T1.r0 + FITTED_T1.r_ff * sech2(x) + FITTED_T1.r_d / math.tanh(x))

    def test_invalid_inputs(self):
        with self.assertRaises(ValueError):
            t1_rate(0.0, FITTED_T1)
        with self.assertRaises(ValueError):
            T1Params(-1.0, 0.0, 0.0, 5.67e9)

class TestSpectralDiffusion(unittest.TestCase):

    def test_working_point_linewidth(self):
        self.assertAlmostEqual(gamma_sd(0.026, 0.259, 2.80e6, 0.70) / 1e3, 101.7, delta=1.0)

    def test_linewidth_limits(self):
        self.assertAlmostEqual(gamma_sd(1e4, 0.259, 2.80e6, 0.70), 2.80e6, delta=1.0)
        self.assertEqual(gamma_sd(0.026, 0.0, 2.80e6, 0.70), 2.80e6)

    def test_linewidth_stays_within_maximum(self):
        for T in np.geomspace(0.01, 10.0, 15):
            for B in (0.05, 0.259, 0.5):
                with self.subTest(T=T, B=B):
                    width = gamma_sd(T, B, 2.80e6, 0.70)
                    self.assertGreater(width, 0.0)
                    self.assertLessEqual(width, 2.80e6)
                    self.assertEqual(gamma_sd(T, -B, 2.80e6, 0.70), width)

    def test_t2_sd(self):
        self.assertAlmostEqual(t2_sd(64.5e3, 5.6) * 1e3, 1.8775, places=3)
        self.assertAlmostEqual(t2_sd(124e3, 1.4) * 1e3, 2.70, delta=0.01)
        self.assertAlmostEqual(t2_sd(64.5e3, 4 * 5.6), 0.5 * t2_sd(64.5e3, 5.6))
        with self.assertRaises(ValueError):
            t2_sd(0.0, 5.6)

    def test_t2_total(self):
        self.assertEqual(t2_total(2e-3), 2e-3)
        self.assertAlmostEqual(t2_total(2e-3, 7e-3, 0.365) * 1e3, 1.552, places=3)
        self.assertLessEqual(t2_total(1.0, math.inf, 0.1), 0.2)
        with self.assertRaises(ValueError):
            t2_total(-1.0)

    def test_t2_total_is_symmetric_in_its_channels(self):
        # channels enter as T2_SD, T2_ID and 2T1
        channels = (1.88e-3, 7e-3, 0.73)
        reference = t2_total(channels[0], channels[1], channels[2] / 2.0)
        for sd, id_, doubled_t1 in itertools.permutations(channels):
            with self.subTest(order=(sd, id_, doubled_t1)):
                value = t2_total(sd, id_, doubled_t1 / 2.0)
                self.assertAlmostEqual(value / reference, 1.0, places=12)
                self.assertLessEqual(value, min(channels))

    def test_effective_linewidth(self):
        self.assertEqual(effective_linewidth(0.0, 0.6e3, 64.5e3, 5.6), 0.6e3)
        self.assertAlmostEqual(effective_linewidth(1e3, 0.6e3, 64.5e3, 5.6), 32.85e3)
        self.assertAlmostEqual(effective_linewidth(1 / 5.6, 0.6e3, 64.5e3, 5.6),
                               0.6e3 + 0.5 * 64.5e3 * (1 - math.exp(-1)))
        with self.assertRaises(ValueError):
            effective_linewidth(-1.0, 0.6e3, 64.5e3, 5.6)

    def test_stretched_exponential(self):
        self.assertEqual(stretched_exponential(0.0, 2.0, 1e-3, 1.5), 2.0)
        for n in (0.5, 1.0, 2.0, 4.0):
            with self.subTest(n=n):
                self.assertAlmostEqual(stretched_exponential(1e-3, 1.0, 1e-3, n), math.exp(-1))
        self.assertAlmostEqual(stretched_exponential(0.5e-3, 1.0, 1e-3, 2.0), math.exp(-0.25))
        with self.assertRaises(ValueError):
            stretched_exponential(0.0, 1.0, 1e-3, 5.0)
        with self.assertRaises(ValueError):
            stretched_exponential(0.0, 1.0, 0.0, 2.0)

    def test_temperature_model_is_bounded_by_t1(self):
        temperatures = np.geomspace(0.01, 2.0, 20)
        t2 = t2_temperature_model(temperatures, FITTED_T1, 2.80e6, 0.70, 0.259)
        self.assertTrue(np.all(t2 <= 2.0 / t1_rate(temperatures, FITTED_T1)))
        self.assertTrue(np.all(t2 > 0))

    def test_temperature_model_composes_channels(self):
        temperatures = np.geomspace(0.02, 1.0, 12)
        rate = t1_rate(temperatures, FITTED_T1)
        width = gamma_sd(temperatures, 0.259, 2.80e6, 0.70)
        expected = t2_total(t2_sd(width, rate), 7e-3, 1.0 / rate)
        t2 = t2_temperature_model(temperatures, FITTED_T1, 2.80e6, 0.70, 0.259, t2_id=7e-3)
        np.testing.assert_allclose(t2, expected, rtol=1e-12)

        rate = t1_rate(0.1, FITTED_T1)
        single = t2_temperature_model(0.1, FITTED_T1, 2.80e6, 0.70, 0.259, t2_id=7e-3)
        composed = t2_total(t2_sd(gamma_sd(0.1, 0.259, 2.80e6, 0.70), rate), 7e-3, 1.0 / rate)
        self.assertIsInstance(single, float)
        self.assertAlmostEqual(single / composed, 1.0, places=12)

    def test_polarized_bath_leaves_id_and_t1(self):
        rate = t1_rate(0.1, FITTED_T1)
        t2 = t2_temperature_model(0.1, FITTED_T1, 0.0, 0.70, 0.259, t2_id=7e-3)
        self.assertAlmostEqual(t2 / t2_total(math.inf, 7e-3, 1.0 / rate), 1.0, places=12)


class TestInstantaneousDiffusion(unittest.TestCase):

    def test_density_for_working_limit(self):
        self.assertAlmostEqual(id_density_for(7e-3, 1.64) / 2.57e20, 1.0, delta=0.01)

    def test_g_squared_scaling(self):
        low = instantaneous_diffusion_rate(1e20, 1.64)
        high = instantaneous_diffusion_rate(1e20, 3.28)
        self.assertAlmostEqual(high.rate / low.rate, 4.0)
        self.assertAlmostEqual(low.g_squared, 1.64 ** 2)
        self.assertEqual(instantaneous_diffusion_rate(0.0, 1.64).rate, 0.0)

    def test_round_trip(self):
        n_exc = id_density_for(7e-3, 1.64)
        self.assertAlmostEqual(1.0 / instantaneous_diffusion_rate(n_exc, 1.64).rate, 7e-3)

    def test_excitation_density_factors(self):
        density = excitation_density(20.0)
        self.assertAlmostEqual(density, 20e-6 * Y_SITE_DENSITY * 0.95 * 0.75 / 16, delta=1e-6 * density)
        self.assertAlmostEqual(excitation_density(20.0, spectral_fraction=0.5) / density, 0.5)
        with self.assertRaises(ValueError):
            excitation_density(20.0, isotope_purity=1.5)

    def test_field_noise_bound(self):
        self.assertAlmostEqual(field_noise_bound(1.46e-3, 1.64) * 1e9, 9.5, delta=0.05)
        self.assertAlmostEqual(field_noise_bound(1e-3, 2.0) * 1e9, 11.37, delta=0.01)

if __name__ == '__main__':
    unittest.main()
