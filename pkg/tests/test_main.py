import os
import shutil
import tempfile
import unittest

import numpy as np
import yaml
from click.testing import CliRunner

from fiberchip_cavity_hub import (
    load_config, run_calibrate, run_config_dump, run_fit, run_noise, run_params, run_pulse, run_scan, run_tof,
)
from fiberchip_cavity_hub.main import cli
from fiberchip_cavity_hub.utils import module_csv
from fiberchip_cavity_hub.utils.status_exception import StatusException


SMALL_TOF = """
cloud:
  sample_budget: 2000
tof:
  t_start: 0.030
  t_stop: 0.046
  drops: 3
seed: 11
"""

QUIET_NOISE = """
cloud:
  atom_count: 0.0
chain:
  dead_time: 0.0
noise:
  bin_width: 5.0e-5
  drops: 48
  jitter_rms: {jitter}
seed: 21
"""

PULSE = """
cloud:
  atom_count: {atoms}
cavity:
  detuning: {detuning}
pulse:
  drops: 40
seed: 31
"""


class TestMain(unittest.TestCase):
    """
    Subcommands through the click group and the python entry points.
    """

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.runner = CliRunner()

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def scenario(self, text, name='scenario.yaml'):
        filename = os.path.join(self.tmp, name)
        with open(filename, 'w', encoding='utf-8') as stream:
            stream.write(text)
        return filename

    def out(self, name):
        return os.path.join(self.tmp, name)

    # REGION: [ exit codes ]

    def test_params(self):
        result = self.runner.invoke(cli, ['params'])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn('cooperativity', result.output)
        self.assertIn('kappa/2pi', result.output)

        output = run_params()
        self.assertEqual(output['status'], StatusException.OK)
        rows = {row['quantity']: row['value'] for row in output['body']['report']}
        self.assertAlmostEqual(rows['cooperativity'], 0.83, delta=0.01)
        self.assertAlmostEqual(rows['peak_n_eff'], 0.650, delta=0.005)
        self.assertNotIn('file', output['body'])

    def test_config_dump(self):
        result = self.runner.invoke(cli, ['config', 'dump', '--seed', '5'])
        self.assertEqual(result.exit_code, 0, result.output)
        document = yaml.safe_load(result.output)
        self.assertEqual(document['seed'], 5)
        self.assertIn('cavity', document)

        output = run_config_dump(seed=5)
        self.assertEqual(output['body']['config_hash'], load_config().with_overrides(seed=5).config_hash())

    def test_invalid_configuration_exits_2(self):
        filename = self.scenario('cavity:\n  lenght: 1.0e-4\n')
        result = self.runner.invoke(cli, ['tof', '--config', filename])
        self.assertEqual(result.exit_code, 2)
        self.assertIn('cavity.lenght', result.output)

        output = run_tof(config=filename)
        self.assertEqual(output['status'], StatusException.INVALID)

    def test_missing_fit_input_exits_2(self):
        result = self.runner.invoke(cli, ['fit', '--input', self.out('missing.csv'), '--out', self.tmp])
        self.assertEqual(result.exit_code, 2)
        result = self.runner.invoke(cli, ['fit', '--out', self.tmp])
        self.assertEqual(result.exit_code, 2)
        self.assertIn('fit.input', result.output)

    # ENDREGION: [ exit codes ]

    # REGION: [ scenarios ]

    def test_tof_is_independent_of_threads(self):
        filename = self.scenario(SMALL_TOF)
        for threads, folder in (('1', 'serial'), ('2', 'pooled')):
            result = self.runner.invoke(cli, ['tof', '--config', filename, '--threads', threads, '--out', self.out(folder)])
            self.assertEqual(result.exit_code, 0, result.output)
        with open(os.path.join(self.out('serial'), 'tof.csv'), 'rb') as a, open(os.path.join(self.out('pooled'), 'tof.csv'), 'rb') as b:
            self.assertEqual(a.read(), b.read())

        df, header = module_csv.read_csv(os.path.join(self.out('serial'), 'tof.csv'), schema='tof')
        self.assertEqual(list(df.columns), ['time', 'n_eff_mean', 'c_tot_mean', 'reflected_fraction', 'counts_mean', 'count_rate'])
        self.assertEqual(header['seed'], '11')
        self.assertAlmostEqual(df['n_eff_mean'].max(), 0.7, places=6)

    def test_calibrate_then_tof(self):
        filename = self.scenario(SMALL_TOF)
        output = run_calibrate(config=filename, out=self.out('cal'))
        self.assertEqual(output['status'], StatusException.OK, output)
        body = output['body']
        self.assertAlmostEqual(body['peak_after'], 0.7)
        self.assertAlmostEqual(body['atom_count'], 2e7 * body['factor'], places=3)

        calibrated = load_config(body['file'])
        self.assertFalse(calibrated.tof.calibrate)
        self.assertAlmostEqual(calibrated.cloud.atom_count, body['atom_count'])
        tof = run_tof(config=body['file'], out=self.out('tof'))
        self.assertAlmostEqual(tof['body']['peak_n_eff'], 0.7, places=6)
        self.assertIsNone(tof['body']['calibration_factor'])

    def test_scan_and_fit(self):
        scan = run_scan(out=self.out('scan'))
        self.assertEqual(scan['status'], StatusException.OK, scan)
        v = 1.0 - np.sqrt(272.0 / 419.0)
        self.assertAlmostEqual(scan['body']['wing_fraction'], (1.0 - v) ** 2, delta=0.002)
        self.assertGreater(scan['body']['center_fraction'], scan['body']['wing_fraction'])

        result = self.runner.invoke(cli, ['fit', '--input', scan['body']['file'], '--out', self.out('fit')])
        self.assertEqual(result.exit_code, 0, result.output)
        with open(os.path.join(self.out('fit'), 'fit.yaml'), 'r', encoding='utf-8') as stream:
            summary = yaml.safe_load(stream)
        self.assertAlmostEqual(summary['n_eff'], 1.1, delta=0.05)
        self.assertIn('profile', summary)
        self.assertEqual(summary['input_config_hash'], load_config().config_hash())

        capped = self.scenario('fit:\n  max_iter: 1\n  xtol: 1.0e-12\n  profile: false\n', 'capped.yaml')
        result = self.runner.invoke(cli, ['fit', '--config', capped, '--input', scan['body']['file'], '--out', self.out('fit')])
        self.assertEqual(result.exit_code, 4, result.output)

    def test_noise_shot_noise_and_jitter(self):
        quiet = run_noise(config=self.scenario(QUIET_NOISE.format(jitter=0.0), 'quiet.yaml'), out=self.out('quiet'))
        self.assertEqual(quiet['status'], StatusException.OK, quiet)
        self.assertAlmostEqual(quiet['body']['pre_arrival_fano_corrected'], 1.0, delta=0.12)
        self.assertEqual(quiet['body']['jitter_excess_empty'], 0.0)

        jittered = run_noise(config=self.scenario(QUIET_NOISE.format(jitter=2.0e-9), 'jitter.yaml'), out=self.out('jitter'))
        self.assertGreater(jittered['body']['pre_arrival_fano_corrected'], 1.25)
        self.assertAlmostEqual(jittered['body']['jitter_detuning_rms'], 2.871, delta=0.01)

        df, _ = module_csv.read_csv(quiet['body']['file'], schema='noise')
        self.assertEqual(list(df.columns), ['time', 'mean_counts', 'fano_raw', 'fano_dead_time', 'fano_corrected', 'n_eff_mean'])
        np.testing.assert_allclose(df['fano_raw'], df['fano_dead_time'])

        single = run_noise(config=self.scenario(QUIET_NOISE.format(jitter=0.0), 'single.yaml'), drops=1)
        self.assertEqual(single['status'], StatusException.INVALID)

    def test_pulse_emission(self):
        output = run_pulse(config=self.scenario(PULSE.format(atoms=1.0e8, detuning=0.0)), out=self.out('pulse'))
        self.assertEqual(output['status'], StatusException.OK, output)
        body = output['body']
        self.assertAlmostEqual(body['cavity_response'], 1.0, places=9)
        self.assertGreater(body['emission_total'], 0)
        self.assertEqual(body['drops'], 40)
        self.assertAlmostEqual(body['onset_time'], body['turn_on'], places=12)

        df, _ = module_csv.read_csv(body['file'], schema='pulse')
        before = df['time'].values < body['turn_on']
        self.assertTrue(np.all(df['emission_counts'].values[before] == 0))
        self.assertTrue(np.all(df['emission_expected'].values[before] == 0))

    def test_pulse_detuned_and_empty(self):
        detuned = run_pulse(config=self.scenario(PULSE.format(atoms=1.0e8, detuning=3.5407e12), 'detuned.yaml'), drops=2, out=self.out('detuned'))
        self.assertLess(detuned['body']['cavity_response'], 1e-4)
        self.assertEqual(detuned['body']['emission_total'], 0)

        empty = run_pulse(config=self.scenario(PULSE.format(atoms=0.0, detuning=0.0), 'empty.yaml'), out=self.out('empty'))
        self.assertEqual(empty['body']['emission_total'], 0)
        self.assertIsNone(empty['body']['onset_time'])

    # ENDREGION: [ scenarios ]


if __name__ == '__main__':
    unittest.main()
