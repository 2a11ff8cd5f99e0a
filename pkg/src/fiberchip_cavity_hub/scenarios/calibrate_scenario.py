import os
from dataclasses import replace

import xarray as xr

from ._common import _Scenario, simulate_transits
from ..cavity.cloud_mc import calibrate_cloud
from ..cli.module_log import Logger
from ..utils.filesystem import mkdirs


class _CalibrateScenario(_Scenario):
    """
    Scale the cloud atom number so the drop-averaged time-of-flight peak of N_eff reaches
    tof.target_peak, and write the calibrated configuration.
    """

    name = 'calibrate'

    def run(self, config=None, seed=None, drops=None, out=None, threads=None, **kwargs):

        config = self.argument_validation(config=config, seed=seed, drops=drops, out=out, threads=threads)
        tof = config.tof
        n_drops = config.drops_for('tof')

        transits = simulate_transits(config, tof.t_start, tof.t_stop, tof.bin_width, n_drops, calibrate=False)
        trace = xr.Dataset(dict(n_eff=(['time'], transits.mean_n_eff())), coords=dict(time=transits.bin_centers))
        calibration = calibrate_cloud(config.cloud_spec(), trace, tof.target_peak)

        # the calibrated file reproduces the target without calibrating again
        calibrated = replace(
            config,
            cloud=replace(config.cloud, atom_count=calibration.cloud.atom_count),
            tof=replace(tof, calibrate=False),
            out_dir=None,
        )
        outfile = os.path.join(config.output_dir(), 'calibrated.yaml')
        mkdirs(config.output_dir())
        with open(outfile, 'w', encoding='utf-8') as stream:
            stream.write(calibrated.dump())
        Logger.info(f'{self.name}: atom_count {config.cloud.atom_count:.4g} -> {calibration.cloud.atom_count:.4g}, written to {outfile}')

        return {
            'status': 'OK',
            'body': {
                'file': outfile,
                'factor': float(calibration.factor),
                'atom_count': float(calibration.cloud.atom_count),
                'peak_before': float(calibration.peak_before),
                'peak_after': float(calibration.peak_after),
            }
        }
