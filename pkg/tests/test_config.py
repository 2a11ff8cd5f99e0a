import os
import tempfile
import unittest
from unittest import mock

from fiberchip_cavity_hub.utils import module_config
from fiberchip_cavity_hub.utils.module_config import OUT_DIR_ENV, ScenarioConfig
from fiberchip_cavity_hub.utils.status_exception import ConfigError, StatusException


class TestConfig(unittest.TestCase):
    """
    YAML scenario files: defaults, strict keys, coercion, overrides and the config hash.
    """

    def test_defaults(self):
        config = module_config.load()
        self.assertIsInstance(config, ScenarioConfig)
        self.assertAlmostEqual(config.coupling_rates().C, 0.83, delta=0.01)
        self.assertEqual(config.drops_for('tof'), 34)
        self.assertEqual(config.drops_for('noise'), 48)
        self.assertEqual(config.with_overrides(drops=5).drops_for('noise'), 5)
        self.assertAlmostEqual(config.chain_spec().eta, 0.54)

    def test_partial_sections(self):
        config = module_config.loads('cavity:\n  finesse: 560\ntof:\n  drops: 3\nseed: 9\n')
        self.assertEqual(config.cavity.finesse, 560.0)
        self.assertIsInstance(config.cavity.finesse, float)
        self.assertEqual(config.cavity.length, 133e-6)
        self.assertEqual(config.tof.drops, 3)
        self.assertEqual(config.seed, 9)
        # exponent without a dot is a YAML string
        self.assertEqual(module_config.loads('chain:\n  dead_time: 4e-8\n').chain.dead_time, 4e-8)

    def test_unknown_key_names_the_path(self):
        with self.assertRaises(ConfigError) as ctx:
            module_config.loads('cavity:\n  lenght: 1.0e-4\n')
        self.assertEqual(ctx.exception.field, 'cavity.lenght')
        self.assertEqual(ctx.exception.status, StatusException.INVALID)
        with self.assertRaises(ConfigError) as ctx:
            module_config.loads('detector: {}\n')
        self.assertEqual(ctx.exception.field, 'detector')

    def test_type_errors(self):
        cases = {
            'tof:\n  drops: 2.5\n': 'tof.drops',
            'seed: true\n': 'seed',
            'tof:\n  calibrate: 1\n': 'tof.calibrate',
            'cavity:\n  finesse: high\n': 'cavity.finesse',
            'cavity: 3\n': 'cavity',
        }
        for text, path in cases.items():
            with self.assertRaises(ConfigError) as ctx:
                module_config.loads(text)
            self.assertEqual(ctx.exception.field, path, text)

    def test_domain_errors_become_config_errors(self):
        cases = {
            'cavity:\n  finesse: 0.5\n': 'cavity',
            'noise:\n  drops: 1\n': 'noise.drops',
            'tof:\n  t_start: 0.05\n  t_stop: 0.04\n': 'tof.t_stop',
            'scan:\n  delta_min: 1.0\n': 'scan',
            'fit:\n  distribution: lognormal\n': 'fit.distribution',
            'excitation:\n  fiber_outcoupling: 1.5\n': 'excitation.fiber_outcoupling',
        }
        for text, path in cases.items():
            with self.assertRaises(ConfigError) as ctx:
                module_config.loads(text)
            self.assertEqual(ctx.exception.field, path, text)

    def test_dump_round_trip(self):
        config = module_config.loads('cloud:\n  atom_count: 1.0e+7\nscan:\n  noise: true\nseed: 3\n')
        again = module_config.loads(config.dump())
        self.assertEqual(again, config)
        self.assertEqual(again.config_hash(), config.config_hash())

    def test_hash_ignores_threads_and_out_dir(self):
        config = module_config.load()
        self.assertEqual(config.with_overrides(threads=4, out_dir='elsewhere').config_hash(), config.config_hash())
        self.assertNotEqual(config.with_overrides(seed=1).config_hash(), config.config_hash())

    def test_output_directory(self):
        config = module_config.load()
        with mock.patch.dict(os.environ, {OUT_DIR_ENV: 'from_env'}):
            self.assertEqual(config.output_dir(), 'from_env')
            self.assertEqual(config.with_overrides(out_dir='explicit').output_dir(), 'explicit')
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(config.output_dir(), '.')

    def test_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            filename = os.path.join(tmp, 'scenario.yaml')
            with open(filename, 'w', encoding='utf-8') as stream:
                stream.write('pulse:\n  window: 1.0e-4\n')
            self.assertEqual(module_config.load(filename).pulse.window, 1e-4)
            with self.assertRaises(ConfigError):
                module_config.load(os.path.join(tmp, 'missing.yaml'))
            with open(filename, 'w', encoding='utf-8') as stream:
                stream.write('cavity: [unclosed\n')
            with self.assertRaises(ConfigError):
                module_config.load(filename)


if __name__ == '__main__':
    unittest.main()
