import os
import tempfile
import unittest

import numpy as np

from erspin.analysis.psd import CPMGRun, read_cpmg_runs, read_psd, reconstruct_psd, to_field_psd
from erspin.analysis.traces import NoisePSD
from erspin.constants import HBAR, MU_B
from erspin.errors import TraceFormatError
from erspin.sequences.filters import filter_function, predict_coherence
from erspin.sequences.pulses import cpmg, hahn


class TestReconstruction(unittest.TestCase):

    def test_single_run(self):
        run = CPMGRun.from_counts(64, 20e-6, 2e-3)
        self.assertEqual(run.n_pulses, 64)
        self.assertAlmostEqual(run.frequency, 25e3)
        psd = reconstruct_psd([run])
        self.assertAlmostEqual(psd.frequencies[0], 25e3)
        self.assertAlmostEqual(psd.values[0], np.pi ** 2 / (8 * 2e-3))

    def test_points_are_sorted_and_averaged(self):
        runs = [
            CPMGRun.from_counts(16, 10e-6, 1e-3, label="a"),
            CPMGRun.from_counts(32, 40e-6, 3e-3, label="b"),
            CPMGRun.from_counts(64, 10e-6, 2e-3, label="c"),
        ]
        psd = reconstruct_psd(runs)
        np.testing.assert_allclose(psd.frequencies, [12.5e3, 50e3])
        expected = 0.5 * (np.pi ** 2 / 8e-3 + np.pi ** 2 / 16e-3)
        self.assertAlmostEqual(psd.values[1] / expected, 1.0, places=12)
        self.assertEqual(psd.sources[1], "a;c")

    def test_short_trains_are_flagged(self):
        with self.assertLogs("erspin.analysis.psd", level="WARNING") as logs:
            psd = reconstruct_psd([CPMGRun.from_counts(4, 20e-6, 1e-3, label="short")])
        self.assertEqual(len(psd.values), 1)
        self.assertIn("short", logs.output[0])

    def test_invalid_runs(self):
        with self.assertRaises(ValueError):
            reconstruct_psd([])
        with self.assertRaises(ValueError):
            CPMGRun(hahn(10e-6), 1e-3)
        with self.assertRaises(ValueError):
            CPMGRun.from_counts(8, 20e-6, 0.0)

    def test_lorentzian_round_trip(self):
        s0, cutoff = 1e3, 20e3
        grid = np.linspace(0.0, 2e6, 20001)
        truth = NoisePSD(grid, s0 / (1.0 + (grid / cutoff) ** 2))
        runs = []
        for t_sep in (10e-6, 15e-6, 20e-6, 30e-6, 40e-6):
            seq = cpmg(64, t_sep)
            curve = predict_coherence(filter_function(seq, np.linspace(0.0, 1e5, 11)), truth, [seq.duration])
            runs.append(CPMGRun(seq, seq.duration / curve.chi[0]))
        psd = reconstruct_psd(runs)
        expected = s0 / (1.0 + (psd.frequencies / cutoff) ** 2)
        for f, got, want in zip(psd.frequencies, psd.values, expected):
            with self.subTest(frequency=f):
                self.assertAlmostEqual(got / want, 1.0, delta=0.15)

    def test_field_units(self):
        psd = NoisePSD([1e3, 2e3], [4.0, 8.0])
        field = to_field_psd(psd, 2.0)
        scale = (HBAR / (2.0 * MU_B)) ** 2
        np.testing.assert_allclose(field.values, [4.0 * scale, 8.0 * scale])
        np.testing.assert_array_equal(field.frequencies, psd.frequencies)
        with self.assertRaises(ValueError):
            to_field_psd(psd, 0.0)


class TestFiles(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _write(self, name: str, text: str) -> str:
        path = os.path.join(self.tmp.name, name)
        with open(path, "w") as f:
            f.write(text)
        return path

    def test_read_runs(self):
        path = self._write("runs.csv", "n_pulses,t_sep_seconds,t2_seconds\n64,2e-05,0.002\n32,4e-05,0.003\n")
        runs = read_cpmg_runs(path)
        self.assertEqual([r.n_pulses for r in runs], [64, 32])
        self.assertAlmostEqual(runs[1].frequency, 12.5e3)

    def test_bad_run_rows(self):
        for body in ("64,2e-05,-1\n", "2.5,2e-05,0.002\n", "64,abc,0.002\n"):
            with self.subTest(row=body.strip()):
                path = self._write("runs.csv", "n_pulses,t_sep_seconds,t2_seconds\n" + body)
                with self.assertRaises(TraceFormatError):
                    read_cpmg_runs(path)
        with self.assertRaises(TraceFormatError):
            read_cpmg_runs(self._write("runs.csv", "n,t_sep_seconds,t2_seconds\n64,2e-05,0.002\n"))

    def test_read_psd(self):
        path = self._write("psd.csv", "frequency_Hz,S_rad2_per_s,source\n50000,10,b\n25000,20,a\n")
        psd = read_psd(path)
        np.testing.assert_allclose(psd.frequencies, [25e3, 50e3])
        np.testing.assert_allclose(psd.values, [20.0, 10.0])
        with self.assertRaises(TraceFormatError):
            read_psd(self._write("dup.csv", "frequency_Hz,S_rad2_per_s\n1000,1\n1000,2\n"))
        with self.assertRaises(TraceFormatError):
            read_psd(self._write("neg.csv", "frequency_Hz,S_rad2_per_s\n1000,-1\n"))


if __name__ == '__main__':
    unittest.main()
