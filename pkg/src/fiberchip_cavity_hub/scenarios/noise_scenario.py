import numpy as np
import pandas as pd

from ._common import _Scenario, simulate_transits
from ..cavity.cloud_mc import arrival_time
from ..cavity.detector_chain import (
    cavity_jitter_noise, dead_time_correct, detuning_per_length, fano, fano_band,
    generate_counts, jittered_fraction, loss_correct_fano,
)
from ..cavity.reflection import visibility
from ..cli.module_log import Logger
from ..utils.module_rng import substream
from ..utils.status_exception import ConfigError


def _filled(masked):
    return np.ma.filled(np.ma.asarray(masked, dtype=float), np.nan)


class _NoiseScenario(_Scenario):
    """
    Photon-count statistics: per-bin variance-to-mean ratio of the reflected counts across
    drops, raw, dead-time corrected and corrected for detection losses.
    """

    name = 'noise'
    schema = 'noise'

    def jitter_offsets(self, config, n_drops, n_bins):
        """Cavity detuning (units of kappa) for every (drop, bin), white Gaussian around the lock offset."""
        noise = config.noise
        x_rms = detuning_per_length(config.cavity_spec()) * noise.jitter_rms
        if x_rms == 0:
            return np.full((n_drops, n_bins), noise.lock_offset), x_rms
        x = np.stack([substream(config.seed, 'jitter', drop).normal(0.0, 1.0, n_bins) for drop in range(n_drops)])
        return noise.lock_offset + x_rms * x, x_rms

    def run(self, config=None, seed=None, drops=None, out=None, threads=None, **kwargs):

        config = self.argument_validation(config=config, seed=seed, drops=drops, out=out, threads=threads)
        noise = config.noise
        n_drops = config.drops_for('noise')
        if n_drops < 2:
            raise ConfigError('drops', 'variance-to-mean needs at least 2 drops')
        probe = config.probe
        v = visibility(probe.i_min, probe.i_max)
        chain = config.chain_spec()

        # DOC: -- Reflected fraction per drop and bin -------------------------------------
        transits = simulate_transits(config, noise.t_start, noise.t_stop, noise.bin_width, n_drops)
        n_bins = len(transits.bin_centers)
        x, x_rms = self.jitter_offsets(config, n_drops, n_bins)
        fraction = jittered_fraction(v, transits.c_tot, x[:, :, None]).mean(axis=2)

        # DOC: -- Counting and the three variance-to-mean estimates -------------------------
        series = generate_counts(probe.i_max * fraction / chain.eta, chain, noise.bin_width, n_bins * noise.bin_width,
                                 seed=config.seed, n_drops=n_drops, t0=noise.t_start, threads=config.threads)
        f_raw = fano(series)
        f_dead = fano(dead_time_correct(series))
        f_corr = loss_correct_fano(f_dead, chain.eta)

        df = pd.DataFrame({
            'time': transits.bin_centers,
            'mean_counts': series.mean_counts(),
            'fano_raw': _filled(f_raw),
            'fano_dead_time': _filled(f_dead),
            'fano_corrected': _filled(f_corr),
            'n_eff_mean': transits.mean_n_eff(),
        })

        # DOC: -- Summary before the cloud arrives ------------------------------------------
        before = df['time'].values < arrival_time(config.cloud.height) - noise.arrival_window
        pre_arrival = float(np.nanmean(df['fano_corrected'].values[before])) if np.any(before) else None
        counts_per_bin = probe.i_max * noise.bin_width
        peak_c_tot = float(transits.mean_c_tot().max())
        excess = {
            label: cavity_jitter_noise(v, c_tot, noise.jitter_rms, config.cavity_spec(), counts_per_bin, noise.lock_offset).excess_fano
            for label, c_tot in (('empty', 0.0), ('peak', peak_c_tot))
        }
        band = fano_band(n_drops) / chain.eta
        Logger.info(f'{self.name}: pre-arrival f_corr = {pre_arrival}, shot-noise band +/- {band:.3f}, jitter x_rms = {x_rms:.3g}')

        return {
            'status': 'OK',
            'body': {
                'file': self.write(df, config),
                'drops': n_drops,
                'pre_arrival_fano_corrected': pre_arrival,
                'fano_band_corrected': band,
                'jitter_detuning_rms': float(x_rms),
                'jitter_excess_empty': excess['empty'],
                'jitter_excess_peak': excess['peak'],
            }
        }
