import math
import unittest

from fiberchip_cavity_hub.cavity import _consts
from fiberchip_cavity_hub.cavity.cavity_core import (
    CavitySpec, CouplingRates, ModeVolumeConvention, TransitionSpec,
    cavity_response, cooperativity, dipole_from_gamma, enhanced_decay_rate,
    free_spectral_range, kappa_from_geometry, mode_volume, per_two_pi, vacuum_rabi,
)
from fiberchip_cavity_hub.utils.status_exception import DomainError, StatusException


class TestCavityCore(unittest.TestCase):
    """
    Rate algebra of the reference fiber-chip cavity.
    """

    def setUp(self):
        self.transition = TransitionSpec()
        self.cavity = CavitySpec.tuned_to(self.transition, 133e-6, 280.0, 4.6e-6)

    def test_kappa_reference_cavity(self):
        kappa = kappa_from_geometry(self.cavity)
        self.assertAlmostEqual(per_two_pi(kappa) / 1e9, 2.01, delta=0.02)

    def test_cooperativity_reference_values(self):
        rates = CouplingRates.from_cavity(_consts.TWO_PI * 100e6, self.cavity, self.transition)
        self.assertAlmostEqual(rates.C, 0.83, delta=0.01)
        recomputed = rates.g ** 2 / (2.0 * rates.kappa * rates.gamma)
        self.assertAlmostEqual(rates.C, recomputed, places=12)

    def test_doubling_finesse_halves_kappa(self):
        doubled = CavitySpec.tuned_to(self.transition, 133e-6, 560.0, 4.6e-6)
        self.assertAlmostEqual(kappa_from_geometry(doubled) / kappa_from_geometry(self.cavity), 0.5, places=12)

    def test_kappa_scaling(self):
        high_finesse = CavitySpec.tuned_to(self.transition, 133e-6, 5600.0, 4.6e-6)
        self.assertAlmostEqual(per_two_pi(kappa_from_geometry(high_finesse)) / 1e9, 0.1006, delta=0.0005)

    def test_vacuum_rabi_scaling(self):
        mu, omega = 2.5e-29, self.cavity.omega_C
        self.assertAlmostEqual(vacuum_rabi(mu, omega, 1e-15) / vacuum_rabi(mu, omega, 4e-15), 2.0, places=12)
        self.assertAlmostEqual(vacuum_rabi(2 * mu, omega, 1e-15) / vacuum_rabi(mu, omega, 1e-15), 2.0, places=12)
        with self.assertRaises(DomainError):
            vacuum_rabi(mu, omega, 0.0)

    def test_free_spectral_range_is_finesse_linewidths(self):
        ratio = free_spectral_range(self.cavity) / (2.0 * kappa_from_geometry(self.cavity))
        self.assertAlmostEqual(ratio, self.cavity.finesse, places=9)

    def test_cavity_response(self):
        self.assertAlmostEqual(cavity_response(self.cavity, self.transition.omega_A), 1.0, places=12)
        kappa = kappa_from_geometry(self.cavity)
        self.assertAlmostEqual(cavity_response(self.cavity, self.transition.omega_A - kappa), 0.5, places=4)
        half_fsr = CavitySpec.tuned_to(self.transition, 133e-6, 280.0, 4.6e-6, detuning=0.5 * free_spectral_range(self.cavity))
        self.assertLess(cavity_response(half_fsr, self.transition.omega_A), 1e-4)

    def test_dipole_from_decay_rate(self):
        self.assertAlmostEqual(dipole_from_gamma(self.transition) / 1e-29, 2.52, delta=0.01)
        explicit = TransitionSpec(dipole_moment=3e-29)
        self.assertEqual(explicit.mu, 3e-29)

    def test_vacuum_rabi_from_mode_volume(self):
        traveling = mode_volume(self.cavity, ModeVolumeConvention.TRAVELING_GAUSSIAN)
        standing = mode_volume(self.cavity, ModeVolumeConvention.STANDING_GAUSSIAN)
        self.assertAlmostEqual(traveling.value, math.pi * (4.6e-6) ** 2 * 133e-6 / 4.0, places=25)
        self.assertAlmostEqual(standing.value, 0.5 * traveling.value, places=25)

        two_g = 2.0 * vacuum_rabi(self.transition.mu, self.cavity.omega_C, traveling.value)
        self.assertAlmostEqual(two_g / 6.0947e8, 1.0, delta=0.03)
        g_standing = vacuum_rabi(self.transition.mu, self.cavity.omega_C, standing.value)
        self.assertAlmostEqual(g_standing / (0.5 * two_g), math.sqrt(2.0), places=9)

    def test_enhanced_decay(self):
        gamma = self.transition.gamma
        decay = enhanced_decay_rate(gamma, 0.25)
        self.assertAlmostEqual(decay.total, 2.0 * gamma * 1.5)
        self.assertAlmostEqual(decay.into_mode, gamma)
        self.assertEqual(enhanced_decay_rate(gamma, 0.0).into_mode, 0.0)

    def test_recoil_velocity(self):
        self.assertAlmostEqual(self.transition.recoil_velocity * 1e3, 6.02, delta=0.02)

    def test_invalid_inputs(self):
        with self.assertRaises(DomainError):
            cooperativity(1.0, 0.0, 1.0)
        with self.assertRaises(DomainError):
            CouplingRates(g=1.0, kappa=-1.0, gamma=1.0)
        with self.assertRaises(DomainError):
            CavitySpec(finesse=0.5)
        with self.assertRaises(DomainError):
            TransitionSpec(zeeman_factor=0.0)
        with self.assertRaises(DomainError) as ctx:
            enhanced_decay_rate(1.0, -0.1)
        self.assertEqual(ctx.exception.status, StatusException.ERROR)
        self.assertIsInstance(ctx.exception, ValueError)


if __name__ == '__main__':
    unittest.main()
