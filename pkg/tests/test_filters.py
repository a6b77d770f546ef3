import math
import unittest

import numpy as np

from erspin.analysis.traces import NoisePSD
from erspin.sequences.filters import (
    center_frequency, default_frequency_grid, filter_function, filter_weight, passband_width,
    predict_coherence, sign_energy,
)
from erspin.sequences.pulses import cpmg, custom, hahn, xy8


class TestFilterFunction(unittest.TestCase):

    def test_hahn_closed_form(self):
        tau = 10e-6
        f = np.linspace(1.0, 500e3, 2001)
        omega = 2 * np.pi * f
        expected = 16 * np.sin(omega * tau / 2) ** 4 / omega ** 2
        np.testing.assert_allclose(filter_weight(hahn(tau), f), expected, rtol=1e-9, atol=1e-12 * expected.max())

    def test_cpmg_one_matches_hahn(self):
        f = np.linspace(0.0, 300e3, 501)
        np.testing.assert_allclose(filter_weight(cpmg(1, 20e-6), f), filter_weight(hahn(10e-6), f), atol=1e-24)

    def test_xy8_rejects_static_noise(self):
        self.assertAlmostEqual(filter_weight(xy8(2, 20e-6), np.zeros(1))[0], 0.0, places=20)
        self.assertAlmostEqual(filter_function(xy8(2, 20e-6)).dc_limit, 0.0, places=9)

    def test_free_evolution_dc_limit(self):
        self.assertAlmostEqual(filter_function(custom([], total_time=1e-4)).dc_limit, 1.0)

    def test_parseval(self):
        for seq in (hahn(10e-6), cpmg(16, 20e-6), xy8(2, 20e-6)):
            with self.subTest(sequence=seq.label):
                self.assertAlmostEqual(filter_function(seq).parseval_ratio, 1.0, delta=0.01)
                self.assertAlmostEqual(sign_energy(seq), seq.duration)

    def test_time_translation_invariance(self):
        f = np.linspace(0.0, 300e3, 601)
        for seq in (hahn(10e-6), cpmg(8, 20e-6), xy8(1, 20e-6)):
            with self.subTest(sequence=seq.label):
                reference = filter_weight(seq, f)
                moved = filter_weight(seq.shifted(37e-6), f)
                np.testing.assert_allclose(moved, reference, rtol=1e-7, atol=1e-9 * reference.max())

    def test_default_grid(self):
        seq = cpmg(8, 20e-6)
        grid = default_frequency_grid(seq)
        self.assertEqual(grid[0], 0.0)
        self.assertAlmostEqual(grid[-1], 50.0 / 10e-6)
        self.assertLessEqual(grid[1] - grid[0], 1.0 / (16 * seq.duration) * 1.0001)

    def test_rejects_unsorted_grid(self):
        with self.assertRaises(ValueError):
            filter_function(hahn(1e-5), np.array([0.0, 2.0, 1.0]))


class TestCenterFrequency(unittest.TestCase):

    def test_cpmg(self):
        for t_sep, expected in ((20e-6, 25e3), (10e-6, 50e3)):
            with self.subTest(t_sep=t_sep):
                self.assertAlmostEqual(center_frequency(cpmg(64, t_sep)), expected, delta=0.01 * expected)

    def test_hahn(self):
        tau = 10e-6
        self.assertAlmostEqual(center_frequency(hahn(tau)) * tau, 0.371, delta=0.004)

    def test_passband_narrows_with_pulses(self):
        wide = passband_width(cpmg(8, 20e-6))
        narrow = passband_width(cpmg(64, 20e-6))
        self.assertGreater(wide, narrow)
        self.assertGreater(narrow, 0.0)


class TestPredictCoherence(unittest.TestCase):

    def test_zero_noise(self):
        psd = NoisePSD(np.array([0.0, 1e6]), np.zeros(2))
        curve = predict_coherence(filter_function(hahn(1e-5)), psd, [1e-4, 1e-3])
        np.testing.assert_allclose(curve.coherence, 1.0)
        self.assertIsNone(curve.t2())

    def test_white_noise_is_exponential(self):
        level = 100.0
        psd = NoisePSD(np.array([0.0, 1e7]), np.full(2, level))
        times = np.array([2e-4, 5e-4, 1e-3])
        curve = predict_coherence(filter_function(hahn(1e-5)), psd, times)
        np.testing.assert_allclose(curve.chi / times, level, rtol=0.02)
        self.assertTrue(np.all(np.diff(curve.coherence) <= 0))

    def test_lorentzian_noise_stretch_crossover(self):
        # Hahn dephasing under S ∝ γ/(ω² + γ²) grows as γT − 3 + 4e^{−γT/2} − e^{−γT}:
        # the local exponent falls from 3 for slow noise to 1 for fast noise, passing 2 near γT ≈ 3.8
        cutoff = 1e3
        gamma = 2 * np.pi * cutoff
        grid = np.linspace(0.0, 2e6, 200001)
        psd = NoisePSD(grid, 50.0 * gamma / ((2 * np.pi * grid) ** 2 + gamma ** 2))

        def growth(x):
            return x - 3 + 4 * np.exp(-x / 2) - np.exp(-x)

        step = 1.05
        for x in (0.5, 3.8, 40.0):
            with self.subTest(gamma_t=x):
                times = np.array([x, step * x]) / gamma
                curve = predict_coherence(filter_function(hahn(1e-5)), psd, times)
                exponent = np.log(curve.chi[1] / curve.chi[0]) / np.log(step)
                expected = np.log(growth(step * x) / growth(x)) / np.log(step)
                self.assertAlmostEqual(exponent, expected, delta=0.02)
                if x == 3.8:
                    self.assertAlmostEqual(exponent, 2.0, delta=0.05)

    def test_coverage_warning(self):
        psd = NoisePSD(np.array([1e6, 2e6]), np.full(2, 1.0))
        with self.assertLogs("erspin.sequences.filters", level="WARNING"):
            predict_coherence(filter_function(hahn(1e-5)), psd, [1e-3])

    def test_rejects_non_positive_times(self):
        psd = NoisePSD(np.array([0.0, 1e6]), np.zeros(2))
        with self.assertRaises(ValueError):
            predict_coherence(filter_function(hahn(1e-5)), psd, [0.0])


if __name__ == '__main__':
    unittest.main()
