import os
import tempfile
import unittest

import numpy as np
import pandas as pd

from fiberchip_cavity_hub.cli.module_version import get_version
from fiberchip_cavity_hub.utils.module_csv import read_csv, read_header, to_csv_text, write_csv
from fiberchip_cavity_hub.utils.module_rng import as_generator, map_drops, substream
from fiberchip_cavity_hub.utils.status_exception import StatusException


class TestCSV(unittest.TestCase):

    def setUp(self):
        self.df = pd.DataFrame({'time': [0.001, 0.002], 'n_eff_mean': [0.25, np.nan]})

    def test_header_block(self):
        lines = to_csv_text(self.df, 'tof', 42, 'abc123').splitlines()
        self.assertEqual(lines[0], '# schema=tof v1')
        self.assertEqual(lines[1], f'# toolkit_version={get_version()}')
        self.assertEqual(lines[2], '# seed=42')
        self.assertEqual(lines[3], '# config_hash=abc123')
        self.assertEqual(lines[4], 'time,n_eff_mean')
        self.assertEqual(lines[6], '0.002,nan')

    def test_write_and_read(self):
        with tempfile.TemporaryDirectory() as tmp:
            filename = write_csv(self.df, os.path.join(tmp, 'sub', 'tof.csv'), 'tof', 7, 'ff00')
            self.assertEqual(read_header(filename)['seed'], '7')
            df, header = read_csv(filename, schema='tof')
            self.assertEqual(header['config_hash'], 'ff00')
            self.assertEqual(list(df.columns), ['time', 'n_eff_mean'])
            self.assertAlmostEqual(df['n_eff_mean'][0], 0.25)
            self.assertTrue(np.isnan(df['n_eff_mean'][1]))
            with self.assertRaises(StatusException) as ctx:
                read_csv(filename, schema='scan')
            self.assertEqual(ctx.exception.status, StatusException.INVALID)
            with self.assertRaises(StatusException):
                read_csv(os.path.join(tmp, 'missing.csv'))


class TestRNG(unittest.TestCase):

    def test_substreams_are_reproducible(self):
        first = substream(5, 'cloud', 3).random(4)
        np.testing.assert_array_equal(first, substream(5, 'cloud', 3).random(4))
        self.assertFalse(np.array_equal(first, substream(5, 'cloud', 4).random(4)))
        self.assertFalse(np.array_equal(first, substream(5, 'counts', 3).random(4)))
        self.assertFalse(np.array_equal(first, substream(6, 'cloud', 3).random(4)))
        with self.assertRaises(KeyError):
            substream(5, 'weather', 0)

    def test_as_generator(self):
        rng = np.random.default_rng(1)
        self.assertIs(as_generator(rng), rng)
        np.testing.assert_array_equal(as_generator(3).random(2), np.random.default_rng(3).random(2))

    def test_map_drops_keeps_order(self):
        def draw(drop):
            return substream(11, 'counts', drop).poisson(10.0, 5)
        serial = map_drops(draw, 9, threads=1)
        pooled = map_drops(draw, 9, threads=4)
        for a, b in zip(serial, pooled):
            np.testing.assert_array_equal(a, b)
        self.assertEqual(map_drops(lambda i: i * i, 5, threads=3), [0, 1, 4, 9, 16])


if __name__ == '__main__':
    unittest.main()
