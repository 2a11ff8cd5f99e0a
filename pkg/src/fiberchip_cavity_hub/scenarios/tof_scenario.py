import numpy as np
import pandas as pd

from ._common import _Scenario, simulate_transits
from ..cavity.detector_chain import dead_time_correct, generate_counts
from ..cavity.reflection import reflected_fraction_resonant, visibility
from ..cli.module_log import Logger


class _TOFScenario(_Scenario):
    """
    Time-of-flight signal: drop-averaged ensemble coupling, resonant reflected fraction and
    simulated detector counts while the released cloud falls through the mode.
    """

    name = 'tof'
    schema = 'tof'

    def run(self, config=None, seed=None, drops=None, out=None, threads=None, **kwargs):

        config = self.argument_validation(config=config, seed=seed, drops=drops, out=out, threads=threads)
        tof = config.tof
        n_drops = config.drops_for('tof')
        probe = config.probe
        v = visibility(probe.i_min, probe.i_max)

        # DOC: -- Cloud transits -------------------------------------------------------
        transits = simulate_transits(config, tof.t_start, tof.t_stop, tof.bin_width, n_drops)
        fraction = reflected_fraction_resonant(v, transits.c_tot).mean(axis=2)    # (drops, bins)

        df = pd.DataFrame({
            'time': transits.bin_centers,
            'n_eff_mean': transits.mean_n_eff(),
            'c_tot_mean': transits.mean_c_tot(),
            'reflected_fraction': fraction.mean(axis=0),
        })

        # DOC: -- Detector counts --------------------------------------------------------
        if tof.simulate_counts:
            chain = config.chain_spec()
            # I_max is the count rate already measured behind the detection chain
            rate = probe.i_max * fraction / chain.eta
            series = generate_counts(rate, chain, tof.bin_width, len(df) * tof.bin_width, seed=config.seed,
                                     n_drops=n_drops, t0=tof.t_start, threads=config.threads)
            df['counts_mean'] = series.mean_counts()
            df['count_rate'] = dead_time_correct(series).rates.mean(axis=0)

        peak = int(np.argmax(df['n_eff_mean'].values))
        Logger.info(f'{self.name}: peak <N_eff> = {df["n_eff_mean"].iloc[peak]:.3f} at {df["time"].iloc[peak] * 1e3:.2f} ms')
        return {
            'status': 'OK',
            'body': {
                'file': self.write(df, config),
                'drops': n_drops,
                'peak_n_eff': float(df['n_eff_mean'].iloc[peak]),
                'peak_time': float(df['time'].iloc[peak]),
                'calibration_factor': transits.calibration.factor if transits.calibration else None,
            }
        }
