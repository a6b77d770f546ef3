import math
import os
import tempfile
import unittest

import numpy as np

from erspin.errors import SequenceError, SequenceTableError, SpacingViolationError
from erspin.sequences.pulses import (
    HALF_PI, PI, Pulse, SequenceKind, check_spacing, cpmg, custom, hahn, make_sequence,
    read_sequence_table, rescale, stimulated, write_sequence_table, xy8,
)
from erspin.sequences.rabi import drive_field_for, rabi_frequency, rabi_nutation
from erspin.sequences.toggling import sign_function


class TestBuilders(unittest.TestCase):

    def test_hahn(self):
        seq = hahn(5e-6)
        self.assertEqual(len(seq.pulses), 2)
        self.assertAlmostEqual(seq.total_time, 10e-6)
        self.assertTrue(seq.has_preparation)
        self.assertEqual(seq.kind, SequenceKind.HAHN)

    def test_xy8_pulse_count(self):
        seq = xy8(31, 20e-6)
        self.assertEqual(len(seq.refocusing_pulses), 248)
        self.assertTrue(math.isinf(seq.target_ratio))
        self.assertAlmostEqual(seq.total_time, 248 * 20e-6)

    def test_cpmg_layout(self):
        seq = cpmg(4, 20e-6)
        times = [p.time for p in seq.refocusing_pulses]
        np.testing.assert_allclose(times, [10e-6, 30e-6, 50e-6, 70e-6])
        self.assertAlmostEqual(seq.total_time, 80e-6)
        self.assertTrue(all(p.phase == HALF_PI for p in seq.refocusing_pulses))

    def test_invalid_parameters(self):
        with self.assertRaises(SequenceError):
            hahn(0.0)
        with self.assertRaises(SequenceError):
            cpmg(0, 1e-5)
        with self.assertRaises(SequenceError):
            xy8(0, 1e-5)
        with self.assertRaises(SequenceError):
            Pulse(1e-6, 0.0)
        with self.assertRaises(SequenceError):
            custom([(2e-6, PI, 0.0), (1e-6, PI, 0.0)])

    def test_make_sequence_checks_spacing(self):
        make_sequence("hahn", tau=5e-6)
        make_sequence("cpmg", n=8, t_sep=10e-6)
        with self.assertRaises(SpacingViolationError):
            make_sequence("cpmg", n=8, t_sep=5e-6)
        with self.assertRaises(SpacingViolationError):
            check_spacing(xy8(1, 8e-6), 10e-6)

    def test_rescale(self):
        seq = rescale(hahn(5e-6), 1e-3)
        self.assertAlmostEqual(seq.total_time, 1e-3)
        self.assertAlmostEqual(seq.pulses[1].time, 0.5e-3)
        self.assertAlmostEqual(seq.spacing, 1e-3)

    def test_sign_functions(self):
        _, signs = sign_function(hahn(1e-5))
        np.testing.assert_allclose(signs, [1.0, -1.0])
        _, signs = sign_function(stimulated(1e-5, 1e-4))
        np.testing.assert_allclose(signs, [1.0, 0.0, -1.0], atol=1e-12)
        _, signs = sign_function(xy8(1, 1e-5))
        np.testing.assert_allclose(signs, [1.0, -1.0] * 4 + [1.0])

    def test_free_evolution(self):
        seq = custom([], total_time=1e-3)
        edges, signs = sign_function(seq)
        np.testing.assert_allclose(edges, [0.0, 1e-3])
        np.testing.assert_allclose(signs, [1.0])


class TestSequenceTable(unittest.TestCase):

    def test_round_trip(self):
        seq = xy8(2, 20e-6)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_sequence_table(seq, os.path.join(tmp, "xy8.txt"))
            loaded = read_sequence_table(path)
        self.assertEqual(loaded.label, seq.label)
        self.assertTrue(math.isinf(loaded.target_ratio))
        self.assertAlmostEqual(loaded.total_time, seq.total_time)
        np.testing.assert_allclose([p.time for p in loaded.pulses], [p.time for p in seq.pulses], atol=1e-12)
        np.testing.assert_allclose([p.phase for p in loaded.pulses], [p.phase for p in seq.pulses], atol=1e-9)

    def test_hand_written_table(self):
        text = "# ratio: none\n0 90 0\n10 180 90\n30 180 90\n# total_us: 40\n"
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "cpmg.txt")
            with open(path, "w") as f:
                f.write(text)
            seq = read_sequence_table(path)
        self.assertEqual(len(seq.pulses), 3)
        self.assertIsNone(seq.target_ratio)
        self.assertAlmostEqual(seq.total_time, 40e-6)
        self.assertEqual(seq.label, "cpmg")

    def test_malformed_rows(self):
        for text in ("0 90 0\n10 abc 90\n", "0 90\n10 180 90\n"):
            with self.subTest(text=text):
                with tempfile.TemporaryDirectory() as tmp:
                    path = os.path.join(tmp, "bad.txt")
                    with open(path, "w") as f:
                        f.write(text)
                    with self.assertRaises(SequenceTableError):
                        read_sequence_table(path)


class TestRabi(unittest.TestCase):

    def test_working_point_frequency(self):
        self.assertAlmostEqual(rabi_frequency(7.5, 6.3e-6) / 1e6, 0.33, delta=0.005)

    def test_linear_in_drive(self):
        self.assertAlmostEqual(rabi_frequency(7.5, 12.6e-6), 2 * rabi_frequency(7.5, 6.3e-6))
        self.assertAlmostEqual(drive_field_for(7.5, rabi_frequency(7.5, 6.3e-6)), 6.3e-6)

    def test_flat_without_drive(self):
        curve = rabi_nutation(7.5, 0.0, np.linspace(0, 1e-5, 11))
        np.testing.assert_allclose(curve.amplitude, 0.0)

    def test_pi_pulse_maximum(self):
        omega = rabi_frequency(7.5, 6.3e-6)
        curve = rabi_nutation(7.5, 6.3e-6, [0.5 / omega, 1.0 / omega])
        np.testing.assert_allclose(curve.amplitude, [1.0, 0.0], atol=1e-12)

    def test_invalid_inputs(self):
        with self.assertRaises(ValueError):
            rabi_frequency(7.5, -1e-6)
        with self.assertRaises(ValueError):
            rabi_nutation(7.5, 1e-6, [-1e-6])


if __name__ == '__main__':
    unittest.main()
