import numpy as np
import pandas as pd

from ._common import _Scenario
from ..cavity.cavity_core import cavity_response
from ..cavity.cloud_mc import apply_excitation, arrival_time, sample_cloud, transit_trace
from ..cavity.detector_chain import generate_counts
from ..cavity.reflection import reflected_fraction_resonant, visibility
from ..cli.module_log import Logger
from ..utils.module_rng import map_drops, substream
from ..utils.status_exception import ConfigError


class _PulseScenario(_Scenario):
    """
    Cavity-enhanced emission collected through the fiber when a resonant excitation pulse
    pumps the atoms crossing the mode into the dark state, together with the reflection
    signal around the pulse.

    The cloud is not calibrated here: the emission depends on the configured atom number.
    """

    name = 'pulse'
    schema = 'pulse'

    def bin_edges(self, config, turn_on):
        """Bins of pulse.bin_width on [turn_on - window, turn_on + window); one edge sits on turn_on."""
        pulse = config.pulse
        n_half = max(1, int(round(pulse.window / pulse.bin_width)))
        edges = turn_on + (np.arange(2 * n_half + 1) - n_half) * pulse.bin_width
        if edges[0] < 0:
            raise ConfigError('pulse.window', f'the window starts before the release ({edges[0]:.3g} s)')
        return edges

    def run(self, config=None, seed=None, drops=None, out=None, threads=None, **kwargs):

        config = self.argument_validation(config=config, seed=seed, drops=drops, out=out, threads=threads)
        excitation = config.excitation
        n_drops = config.drops_for('pulse')
        transition, cavity = config.transition_spec(), config.cavity_spec()
        geom, rates = config.mode_geometry(), config.coupling_rates()
        cloud, chain = config.cloud_spec(), config.chain_spec()
        zeeman = transition.zeeman_factor
        probe = config.probe
        v = visibility(probe.i_min, probe.i_max)

        turn_on = excitation.turn_on if excitation.turn_on is not None else arrival_time(cloud.height)
        edges = self.bin_edges(config, turn_on)
        centers = 0.5 * (edges[:-1] + edges[1:])
        response = cavity_response(cavity, transition.omega_A)
        # photons leaving the cavity mode that reach the detector
        collection = excitation.fiber_outcoupling * chain.eta

        # DOC: -- Excitation, emission and the reflection signal per drop ---------------------
        def one_drop(drop):
            samples = sample_cloud(cloud, substream(config.seed, 'cloud', drop), config.cloud.sample_budget, geom,
                                   physical=config.cloud.physical)
            rng = substream(config.seed, 'excitation', drop)
            result = apply_excitation(
                samples, turn_on, geom, rates, rng,
                pump_photon_budget=excitation.pump_photon_budget,
                scatter_rate=excitation.scatter_rate,
                recoil_velocity=transition.recoil_velocity,
                cavity_factor=response,
                zeeman_factor=zeeman,
            )
            events = result.events
            expected = np.histogram(events.time, bins=edges, weights=events.expected_photons)[0] * collection
            emitted = rng.poisson(expected)
            c_tot = transit_trace(result.samples, geom, rates, centers, zeeman_factor=zeeman)['c_tot'].values
            return expected, emitted, c_tot

        expected, emitted, c_tot = (np.stack(a) for a in zip(*map_drops(one_drop, n_drops, config.threads)))
        fraction = reflected_fraction_resonant(v, c_tot)

        series = generate_counts(probe.i_max * fraction / chain.eta, chain, config.pulse.bin_width, len(centers) * config.pulse.bin_width,
                                 seed=config.seed, n_drops=n_drops, t0=edges[0], threads=config.threads)

        df = pd.DataFrame({
            'time': centers,
            'emission_counts': emitted.sum(axis=0),
            'emission_expected': expected.sum(axis=0),
            'reflected_fraction': fraction.mean(axis=0),
            'reflection_counts': series.mean_counts(),
        })

        nonzero = np.flatnonzero(df['emission_counts'].values > 0)
        onset = float(edges[nonzero[0]]) if nonzero.size else None
        total = int(df['emission_counts'].sum())
        Logger.info(f'{self.name}: {total} emission counts over {n_drops} drops, onset {onset}, cavity response {response:.3g}')

        return {
            'status': 'OK',
            'body': {
                'file': self.write(df, config),
                'drops': n_drops,
                'turn_on': float(turn_on),
                'onset_time': onset,
                'emission_total': total,
                'cavity_response': float(response),
            }
        }
