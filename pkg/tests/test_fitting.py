import unittest

import numpy as np
import pandas as pd

from fiberchip_cavity_hub.cavity.fitting import (
    ModelConfig, OptimizerConfig, ScanDataset, fit_scan, initial_guess, profile_uncertainty, synthesize_scan,
)
from fiberchip_cavity_hub.cavity.reflection import AtomNumberDistribution, DistributionKind, averaged_lineshape
from fiberchip_cavity_hub.utils.status_exception import DomainError, FitConvergenceError, StatusException


class TestFitting(unittest.TestCase):
    """
    Mean N_eff estimation from detuning scans.
    """

    def setUp(self):
        self.v = 0.194292
        self.delta = np.linspace(-20.0, 20.0, 41)

    def exact_scan(self, n_eff, sigma=1e-3):
        fixed = AtomNumberDistribution(DistributionKind.FIXED, n_eff)
        fraction = averaged_lineshape(self.v, fixed, 0.0, self.delta, C=0.8)
        return ScanDataset(delta=self.delta, fraction=fraction, sigma=np.full(self.delta.size, sigma), v=self.v)

    def test_noise_free_scan(self):
        data = self.exact_scan(0.7)
        self.assertAlmostEqual(initial_guess(data), 0.7, places=6)
        result = fit_scan(data, ModelConfig(distribution=DistributionKind.FIXED), OptimizerConfig(n_eff_guess=0.3))
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.n_eff, 0.7, delta=1e-4)
        self.assertLess(result.chi2, 1e-3)
        self.assertEqual(result.dof, 40)
        summary = result.as_dict()
        self.assertEqual(summary['free'], ['n_eff'])
        self.assertIsInstance(summary['n_eff'], float)

    def test_round_trip_on_synthetic_scans(self):
        model = ModelConfig()
        for truth in (0.6, 1.1):
            dist = AtomNumberDistribution(DistributionKind.POISSON_MODE, truth)
            estimates, pulls = [], []
            for rep in range(100):
                data = synthesize_scan(self.v, dist, self.delta, seed=1000 + rep, C=0.8)
                result = fit_scan(data, model)
                estimates.append(result.n_eff)
                pulls.append((result.n_eff - truth) / result.n_eff_err)
            self.assertAlmostEqual(np.mean(estimates) / truth, 1.0, delta=0.05)
            # one standard error covers about 68% of the repetitions
            coverage = np.mean(np.abs(pulls) < 1.0)
            self.assertGreater(coverage, 0.55)
            self.assertLess(coverage, 0.82)

    def test_noise_free_empty_scan(self):
        data = self.exact_scan(0.0)
        result = fit_scan(data, ModelConfig(distribution=DistributionKind.FIXED), OptimizerConfig(n_eff_guess=0.3))
        self.assertAlmostEqual(result.n_eff, 0.0, delta=1e-6)
        interval = profile_uncertainty(result, data, ModelConfig(distribution=DistributionKind.FIXED))
        self.assertTrue(interval.clipped_lower)
        self.assertEqual(interval.lower, 0.0)
        self.assertGreater(interval.upper, 0.0)

    def test_sigma_scale_invariance(self):
        dist = AtomNumberDistribution(DistributionKind.POISSON_MODE, 1.1)
        data = synthesize_scan(self.v, dist, self.delta, seed=12, C=0.8)
        base = fit_scan(data)
        scaled = fit_scan(data.with_sigma(4.0 * data.sigma))
        self.assertAlmostEqual(scaled.n_eff, base.n_eff, places=10)
        self.assertAlmostEqual(scaled.n_eff_err / base.n_eff_err, 4.0, places=6)
        self.assertAlmostEqual(scaled.chi2 * 16.0 / base.chi2, 1.0, places=9)

    def test_chi2_trace_never_increases(self):
        dist = AtomNumberDistribution(DistributionKind.POISSON_MODE, 0.6)
        data = synthesize_scan(self.v, dist, self.delta, seed=13, C=0.8)
        result = fit_scan(data, optimizer=OptimizerConfig(n_eff_guess=3.0))
        chi2 = [record.chi2 for record in result.trace]
        self.assertGreater(len(chi2), 2)
        self.assertTrue(np.all(np.diff(chi2) <= 0.0))
        self.assertEqual(chi2[-1], result.chi2)

    def test_profile_interval(self):
        dist = AtomNumberDistribution(DistributionKind.POISSON_MODE, 1.1)
        data = synthesize_scan(self.v, dist, self.delta, seed=7, C=0.8)
        result = fit_scan(data)
        interval = profile_uncertainty(result, data)
        self.assertLess(interval.lower, result.n_eff)
        self.assertGreater(interval.upper, result.n_eff)
        self.assertFalse(interval.open_upper)
        self.assertFalse(interval.clipped_lower)
        half_width = 0.5 * (interval.upper - interval.lower)
        self.assertAlmostEqual(half_width / result.n_eff_err, 1.0, delta=0.5)

    def test_floating_visibility(self):
        data = self.exact_scan(0.9)
        model = ModelConfig(distribution=DistributionKind.FIXED, float_visibility=True)
        result = fit_scan(data, model)
        self.assertEqual(result.free, ('n_eff', 'visibility'))
        self.assertAlmostEqual(result.visibility, self.v, delta=1e-4)
        self.assertAlmostEqual(result.n_eff, 0.9, delta=1e-3)

    def test_iteration_cap(self):
        dist = AtomNumberDistribution(DistributionKind.POISSON_MODE, 1.1)
        data = synthesize_scan(self.v, dist, self.delta, seed=3, C=0.8)
        with self.assertRaises(FitConvergenceError) as ctx:
            fit_scan(data, optimizer=OptimizerConfig(xtol=1e-12, max_iter=1, n_eff_guess=3.0))
        self.assertEqual(ctx.exception.status, StatusException.NOT_CONVERGED)
        self.assertEqual(StatusException.exit_code(ctx.exception.status), 4)
        self.assertGreaterEqual(len(ctx.exception.trace), 1)

    def test_dataset_validation(self):
        with self.assertRaises(DomainError):
            ScanDataset(delta=[-1, 0, 1, 2, 3], fraction=[0.5] * 4, sigma=[0.1] * 5, v=self.v)
        with self.assertRaises(DomainError):
            ScanDataset(delta=[-1, 0, 1], fraction=[0.5] * 3, sigma=[0.1] * 3, v=self.v)
        with self.assertRaises(DomainError):
            ScanDataset(delta=[1, 2, 3, 4, 5], fraction=[0.5] * 5, sigma=[0.1] * 5, v=self.v)
        with self.assertRaises(DomainError):
            ScanDataset(delta=[-2, -1, 0, 1, 2], fraction=[0.5] * 5, sigma=[0.1, 0.1, 0.0, 0.1, 0.1], v=self.v)
        with self.assertRaises(DomainError):
            ScanDataset.from_frame(pd.DataFrame({'delta_la': [0.0], 'fraction': [0.5]}), self.v)

        data = self.exact_scan(0.5)
        frame = data.to_frame()
        self.assertEqual(list(frame.columns), ['delta_la', 'fraction', 'sigma'])
        again = ScanDataset.from_frame(frame, self.v)
        np.testing.assert_array_equal(again.fraction, data.fraction)
        self.assertTrue(np.all(data.with_sigma(0.02).sigma == 0.02))


if __name__ == '__main__':
    unittest.main()
