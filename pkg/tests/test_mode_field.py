import unittest

import numpy as np

from fiberchip_cavity_hub.cavity.mode_field import ModeGeometry, aggregate_coupling, mode_intensity
from fiberchip_cavity_hub.utils.status_exception import DomainError


class TestModeField(unittest.TestCase):

    def setUp(self):
        self.geom = ModeGeometry()

    def test_antinode_and_node(self):
        self.assertAlmostEqual(mode_intensity(self.geom, [0.0, 0.0, 0.0]), 1.0, places=12)
        quarter = self.geom.wavelength / 4.0
        self.assertAlmostEqual(mode_intensity(self.geom, [quarter, 0.0, 0.0]), 0.0, places=12)
        half = self.geom.wavelength / 2.0
        self.assertAlmostEqual(mode_intensity(self.geom, [half, 0.0, 0.0]), 1.0, places=9)

    def test_transverse_gaussian(self):
        w = self.geom.waist
        self.assertAlmostEqual(mode_intensity(self.geom, [0.0, w, 0.0]), np.exp(-2.0), places=12)
        self.assertAlmostEqual(mode_intensity(self.geom, [0.0, 0.0, w]), np.exp(-2.0), places=12)

    def test_zero_outside_cavity(self):
        beyond = 0.5 * self.geom.length + 1e-6
        self.assertEqual(mode_intensity(self.geom, [beyond, 0.0, 0.0]), 0.0)
        self.assertEqual(mode_intensity(self.geom, [-beyond, 0.0, 0.0]), 0.0)

    def test_vectorised_shapes(self):
        r = np.zeros((4, 5, 3))
        self.assertEqual(mode_intensity(self.geom, r).shape, (4, 5))

    def test_random_points_are_bounded_even_and_periodic(self):
        rng = np.random.default_rng(17)
        half_length, w = 0.5 * self.geom.length, self.geom.waist
        r = rng.uniform(-1.0, 1.0, (10000, 3)) * [1.2 * half_length, 4.0 * w, 4.0 * w]
        intensity = mode_intensity(self.geom, r)
        self.assertTrue(np.all((intensity >= 0.0) & (intensity <= 1.0)))
        np.testing.assert_allclose(mode_intensity(self.geom, -r), intensity, rtol=0.0, atol=1e-12)

        inside = r[np.abs(r[:, 0]) < half_length - self.geom.wavelength]
        shifted = inside + [0.5 * self.geom.wavelength, 0.0, 0.0]
        np.testing.assert_allclose(mode_intensity(self.geom, shifted), mode_intensity(self.geom, inside), rtol=0.0, atol=1e-9)

    def test_divergent_waist(self):
        divergent = ModeGeometry(divergent_waist=True)
        z = 50e-6
        factor = 1.0 / (1.0 + (z / divergent.rayleigh_range) ** 2)
        fixed = mode_intensity(self.geom, [z, 0.0, 0.0])
        self.assertAlmostEqual(mode_intensity(divergent, [z, 0.0, 0.0]), fixed * factor, places=12)
        self.assertAlmostEqual(mode_intensity(divergent, [0.0, 0.0, 0.0]), 1.0, places=12)

    def test_aggregate_coupling(self):
        coupling = aggregate_coupling(0.8, [1.0, 0.5, 0.0], zeeman_factor=3.0 / 7.0)
        self.assertAlmostEqual(coupling.n_eff, 1.5)
        self.assertAlmostEqual(coupling.c_tot, 3.0 / 7.0 * 0.8 * 1.5)
        weighted = aggregate_coupling(0.8, [1.0, 0.5], weights=[2.0, 4.0])
        self.assertAlmostEqual(weighted.n_eff, 4.0)
        empty = aggregate_coupling(0.8, [])
        self.assertEqual(empty.c_tot, 0.0)

    def test_invalid_geometry(self):
        with self.assertRaises(DomainError):
            ModeGeometry(waist=0.0)
        with self.assertRaises(DomainError):
            ModeGeometry(direction=(1.0, 1.0, 0.0))
        with self.assertRaises(DomainError):
            aggregate_coupling(0.8, [1.5])


if __name__ == '__main__':
    unittest.main()
