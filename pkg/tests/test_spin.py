import unittest

import numpy as np

from erspin.constants import MU_B_OVER_H
from erspin.errors import InvalidSpinError, NonHermitianError
from erspin.spin.hamiltonian import build_hamiltonian, eigensystem, level_diagram, track_levels
from erspin.spin.operators import euler_rotation, perpendicular_axis, spin_operators
from erspin.spin.system import FieldPoint, SpinSystem, Tensor
from erspin.spin.transitions import (
    field_sensitivity, find_transitions, polarization, resonance_field_estimate, thermal_populations,
)


def electron_only(g) -> SpinSystem:
    principal = (g, g, g) if np.isscalar(g) else tuple(g)
    return SpinSystem(Tensor(principal), nuclear_spin=0.0, name="electron")


ER_167 = SpinSystem(
    Tensor((12.2, 4.78, 1.64)),
    Tensor((1270e6, 500e6, 170e6)),
    Tensor((-5e6, -5e6, 10e6)),
    g_n=-0.1618,
    name="C2",
)


class TestSpinOperators(unittest.TestCase):

    def test_spin_half_sz(self):
        _, _, sz = spin_operators(0.5)
        np.testing.assert_allclose(sz, np.diag([0.5, -0.5]))

    def test_spin_seven_halves_shape(self):
        sx, sy, sz = spin_operators(3.5)
        self.assertEqual(sx.shape, (8, 8))
        np.testing.assert_allclose(np.diag(sz).real, np.arange(3.5, -4.0, -1.0))

    def test_trace_and_commutator(self):
        for s in (0.5, 1.0, 1.5, 3.5):
            with self.subTest(s=s):
                sx, sy, sz = spin_operators(s)
                self.assertAlmostEqual(np.trace(sx @ sx).real, s * (s + 1) * (2 * s + 1) / 3)
                np.testing.assert_allclose(sx @ sy - sy @ sx, 1j * sz, atol=1e-12)

    def test_invalid_spin(self):
        for s in (-0.5, 0.3):
            with self.subTest(s=s):
                with self.assertRaises(InvalidSpinError):
                    spin_operators(s)

    def test_perpendicular_axis(self):
        for direction in ([0, 0, 1], [1, 1, 0], [0.3, -0.2, 0.9]):
            with self.subTest(direction=direction):
                axis = perpendicular_axis(np.array(direction, dtype=float))
                self.assertAlmostEqual(np.linalg.norm(axis), 1.0)
                self.assertAlmostEqual(float(np.dot(axis, direction)), 0.0)


class TestHamiltonian(unittest.TestCase):

    def test_zeeman_splitting(self):
        sys = SpinSystem(Tensor.isotropic(2.0), nuclear_spin=3.5)
        energies, _ = eigensystem(build_hamiltonian(sys, FieldPoint(0.1)))
        self.assertEqual(len(energies), 16)
        splitting = energies[8:].mean() - energies[:8].mean()
        self.assertAlmostEqual(splitting / 1e9, 2 * MU_B_OVER_H * 0.1 / 1e9, places=9)

    def test_zero_field_without_couplings_vanishes(self):
        sys = SpinSystem(Tensor((12.2, 4.78, 1.64)))
        h = build_hamiltonian(sys, FieldPoint(0.0))
        np.testing.assert_allclose(h, np.zeros((16, 16)))

    def test_hermitian(self):
        h = build_hamiltonian(ER_167, FieldPoint.along([0.2, 0.5, 1.0], 0.259))
        np.testing.assert_allclose(h, h.conj().T, atol=1e-6)

    def test_lowest_g_axis_splitting(self):
        sys = electron_only((12.2, 4.78, 1.64))
        energies, _ = eigensystem(build_hamiltonian(sys, FieldPoint(0.247)))
        self.assertAlmostEqual((energies[1] - energies[0]) / 1e9, 5.67, delta=0.01)

    def test_kramers_pairs_with_quadrupole_only(self):
        sys = SpinSystem(Tensor((12.2, 4.78, 1.64)), Q=Tensor((-5e6, -5e6, 10e6)))
        energies, _ = eigensystem(build_hamiltonian(sys, FieldPoint(0.0)))
        np.testing.assert_allclose(energies[0::2], energies[1::2], atol=1e-3)

    def test_zeeman_levels_scale_linearly_with_field(self):
        sys = SpinSystem(Tensor((12.2, 4.78, 1.64), (0.4, 0.9, -0.3)), g_n=-0.1618)
        B = FieldPoint.along([0.3, -0.5, 0.8], 0.13)
        energies, _ = eigensystem(build_hamiltonian(sys, B))
        doubled, _ = eigensystem(build_hamiltonian(sys, B.with_magnitude(0.26)))
        np.testing.assert_allclose(doubled, 2.0 * energies, rtol=1e-9, atol=1e-3)
        self.assertAlmostEqual((doubled[8] - doubled[7]) / (energies[8] - energies[7]), 2.0, places=9)

    def test_frame_covariance(self):
        euler = (0.3, 1.1, -0.7)
        rotation = euler_rotation(euler)
        rotated = SpinSystem(
            Tensor(ER_167.g.principal, euler),
            Tensor(ER_167.A.principal, euler),
            Tensor(ER_167.Q.principal, euler),
            g_n=ER_167.g_n,
        )
        for direction in ([0.0, 0.0, 1.0], [0.2, 0.5, 1.0], [1.0, -0.4, 0.1]):
            with self.subTest(direction=direction):
                B = FieldPoint.along(direction, 0.259)
                expected, _ = eigensystem(build_hamiltonian(ER_167, B))
                energies, _ = eigensystem(build_hamiltonian(rotated, FieldPoint.along(rotation @ B.vector, 0.259)))
                np.testing.assert_allclose(energies, expected, rtol=0.0, atol=1.0)

    def test_eigensystem_diagonal(self):
        energies, _ = eigensystem(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(energies, [1.0, 2.0, 3.0])

    def test_eigensystem_reconstruction(self):
        rng = np.random.default_rng(7)
        m = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        h = m + m.conj().T
        energies, vectors = eigensystem(h)
        np.testing.assert_allclose(vectors @ np.diag(energies) @ vectors.conj().T, h, atol=1e-10)
        self.assertTrue(np.all(np.diff(energies) >= 0))

    def test_eigensystem_rejects_non_hermitian(self):
        with self.assertRaises(NonHermitianError):
            eigensystem(np.array([[0.0, 1.0], [0.0, 0.0]]))
        with self.assertRaises(NonHermitianError):
            eigensystem(np.zeros((2, 3)))

    def test_track_levels_identity(self):
        energies, vectors = eigensystem(build_hamiltonian(ER_167, FieldPoint(0.2)))
        perm, quality = track_levels(energies, vectors, vectors)
        np.testing.assert_array_equal(perm, np.arange(16))
        self.assertAlmostEqual(quality, 1.0)

    def test_level_diagram_shape(self):
        fields = np.linspace(0.0, 0.3, 31)
        sweep = level_diagram(ER_167, [0, 0, 1], fields)
        self.assertEqual(sweep.energies.shape, (31, 16))
        self.assertEqual(sweep.vectors.shape, (31, 16, 16))
        self.assertEqual(sweep.min_overlap[0], 1.0)


class TestTransitions(unittest.TestCase):

    def test_single_electron_transition(self):
        sys = electron_only(2.0)
        found = find_transitions(sys, FieldPoint(0.2026), 5.67e9, 10e6)
        self.assertEqual(len(found), 1)
        transition = found[0]
        self.assertEqual((transition.level_lo, transition.level_hi), (0, 1))
        self.assertAlmostEqual(transition.drive_strength, 0.5, places=9)
        self.assertAlmostEqual(transition.g_eff, 2.0, places=5)
        self.assertGreater(transition.thermal_weight, 0.0)

    def test_empty_window(self):
        self.assertEqual(find_transitions(electron_only(2.0), FieldPoint(0.1), 5.67e9, 0.0), [])

    def test_invalid_probe(self):
        with self.assertRaises(ValueError):
            find_transitions(electron_only(2.0), FieldPoint(0.1), -1.0, 1e6)

    def test_hyperfine_branch_has_many_transitions(self):
        found = find_transitions(ER_167, FieldPoint(0.247), 5.67e9, 2e9)
        self.assertGreater(len(found), 1)
        strengths = [t.drive_strength for t in found]
        self.assertEqual(strengths, sorted(strengths, reverse=True))

    def test_zeeman_sensitivity(self):
        for g in (1.64, 2.0):
            with self.subTest(g=g):
                sensitivity = field_sensitivity(electron_only(g), FieldPoint(0.259), (0, 1))
                self.assertAlmostEqual(sensitivity.g_eff, g, places=6)
                self.assertAlmostEqual(sensitivity.dE_dB / 1e9, g * MU_B_OVER_H / 1e9, places=5)

    def test_hyperfine_line_follows_lowest_g(self):
        # second-order hyperfine terms pull the slope of each nuclear line slightly below g_z
        found = find_transitions(ER_167, FieldPoint(0.259), 5.67e9, 400e6)
        self.assertTrue(found)
        self.assertAlmostEqual(found[0].g_eff, 1.64, delta=0.2)

    def test_sensitivity_rejects_bad_pair(self):
        with self.assertRaises(ValueError):
            field_sensitivity(electron_only(2.0), FieldPoint(0.1), (1, 1))

    def test_polarization(self):
        cases = [(2.0, 0.999997, 1e-6), (1.64, 0.99996, 1e-5), (0.7, 0.981, 1e-3), (0.4, 0.871, 1e-3)]
        for g, expected, delta in cases:
            with self.subTest(g=g):
                self.assertAlmostEqual(polarization(g, 0.259, 0.026), expected, delta=delta)
        self.assertEqual(polarization(1.64, 0.0, 0.026), 0.0)
        with self.assertRaises(ValueError):
            polarization(1.64, 0.259, 0.0)

    def test_thermal_populations(self):
        populations = thermal_populations(np.array([0.0, 1e9, 2e9]), 0.026)
        self.assertAlmostEqual(populations.sum(), 1.0)
        self.assertTrue(np.all(np.diff(populations) < 0))

    def test_resonance_field_estimate(self):
        self.assertAlmostEqual(resonance_field_estimate(12.2, 5.67e9), 0.0332, places=4)
        self.assertAlmostEqual(resonance_field_estimate(1.64, 5.67e9), 0.2470, places=4)


if __name__ == '__main__':
    unittest.main()
