import os
from typing import NamedTuple, Optional

import numpy as np
import xarray as xr

from ..cavity.cloud_mc import CloudCalibration, calibrate_cloud, sample_cloud, transit_trace
from ..cli.module_log import Logger
from ..utils import module_config, module_csv
from ..utils.module_config import ScenarioConfig
from ..utils.module_rng import map_drops, substream
from ..utils.status_exception import ConfigError, StatusException


class TransitRun(NamedTuple):
    """Per-drop ensemble coupling on a fine grid, grouped by output bin: c_tot/n_eff have shape (drops, bins, substeps)."""
    bin_centers: np.ndarray
    fine_times: np.ndarray
    n_eff: np.ndarray
    c_tot: np.ndarray
    calibration: Optional[CloudCalibration]

    def mean_n_eff(self):
        return self.n_eff.mean(axis=(0, 2))

    def mean_c_tot(self):
        return self.c_tot.mean(axis=(0, 2))


def bin_grid(t_start, t_stop, bin_width, substep):
    """Bin edges of width bin_width covering [t_start, t_stop) and the substep grid inside each bin."""
    n_bins = int(np.floor((t_stop - t_start) / bin_width + 1e-9))
    if n_bins < 1:
        raise ConfigError('bin_width', f'no complete bin of {bin_width} s fits in [{t_start}, {t_stop}]')
    n_sub = max(1, int(round(bin_width / substep)))
    step = bin_width / n_sub
    fine = t_start + (np.arange(n_bins * n_sub) + 0.5) * step
    centers = t_start + (np.arange(n_bins) + 0.5) * bin_width
    return centers, fine, n_sub


def simulate_transits(config: ScenarioConfig, t_start, t_stop, bin_width, drops, calibrate=None) -> TransitRun:
    """
    Sample one cloud per drop and evaluate its ensemble coupling on the output bins.

    With calibration enabled the atom number is rescaled so the drop-averaged, bin-averaged peak
    N_eff equals tof.target_peak; weighted samples are rescaled in place, physical samples are
    drawn again from the calibrated cloud.
    """
    calibrate = config.tof.calibrate if calibrate is None else calibrate
    centers, fine, n_sub = bin_grid(t_start, t_stop, bin_width, min(config.tof.substep, bin_width))
    geom, rates = config.mode_geometry(), config.coupling_rates()
    zeeman = config.transition.zeeman_factor
    budget, physical = config.cloud.sample_budget, config.cloud.physical

    def run_drops(cloud):
        def one_drop(drop):
            samples = sample_cloud(cloud, substream(config.seed, 'cloud', drop), budget, geom, physical=physical)
            return transit_trace(samples, geom, rates, fine, zeeman_factor=zeeman)['n_eff'].values
        return np.stack(map_drops(one_drop, drops, config.threads)).reshape(drops, len(centers), n_sub)

    cloud = config.cloud_spec()
    n_eff = run_drops(cloud)
    calibration = None
    if calibrate and cloud.atom_count > 0:
        mean_trace = xr.Dataset(dict(n_eff=(['time'], n_eff.mean(axis=(0, 2)))), coords=dict(time=centers))
        calibration = calibrate_cloud(cloud, mean_trace, config.tof.target_peak)
        n_eff = run_drops(calibration.cloud) if physical else n_eff * calibration.factor
    elif calibrate:
        Logger.info('Empty cloud: calibration skipped')

    c_tot = zeeman * rates.C * n_eff
    return TransitRun(bin_centers=centers, fine_times=fine, n_eff=n_eff, c_tot=c_tot, calibration=calibration)


class _Scenario():
    """
    Common argument handling of the subcommands: configuration file, command line overrides
    and the CSV output they produce.
    """

    name = 'scenario'
    schema = None

    def argument_validation(self, **kwargs):
        """
        Load the configuration and apply the command line overrides.
        """
        config = kwargs.get('config', None)
        seed = kwargs.get('seed', None)
        drops = kwargs.get('drops', None)
        out = kwargs.get('out', None)
        threads = kwargs.get('threads', None)

        if config is None or isinstance(config, str):
            config = module_config.load(config)
        if not isinstance(config, ScenarioConfig):
            raise StatusException(StatusException.INVALID, 'config must be a file name or a ScenarioConfig')
        if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
            raise ConfigError('seed', f'must be an integer, got {seed!r}')
        if drops is not None and drops < 1:
            raise ConfigError('drops', f'must be >= 1, got {drops}')
        if threads is not None and threads < 1:
            raise ConfigError('threads', f'must be >= 1, got {threads}')

        return config.with_overrides(seed=seed, drops=drops, out_dir=out, threads=threads)

    def output_file(self, config: ScenarioConfig, suffix='csv'):
        return os.path.join(config.output_dir(), f'{self.name}.{suffix}')

    def write(self, df, config: ScenarioConfig):
        filename = module_csv.write_csv(df, self.output_file(config), self.schema, config.seed, config.config_hash())
        Logger.info(f'{self.name}: {len(df)} rows written to {filename}')
        return filename
