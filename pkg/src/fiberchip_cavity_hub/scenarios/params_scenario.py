import pandas as pd

from ._common import _Scenario
from ..cavity import cavity_core, reflection
from ..cavity.cavity_core import ModeVolumeConvention, per_two_pi
from ..cli.module_log import Logger


class _ParamsScenario(_Scenario):
    """
    Rate report of the configured atom-cavity system.
    """

    name = 'params'
    schema = 'params'

    def report(self, config):
        transition = config.transition_spec()
        cavity = config.cavity_spec()
        rates = config.coupling_rates()
        counts = config.probe.build()
        zeeman = transition.zeeman_factor

        rows = []

        def add(quantity, value, unit, rate=False):
            rows.append({'quantity': quantity, 'value': float(value), 'unit': unit})
            if rate:
                rows.append({'quantity': f'{quantity}/2pi', 'value': float(per_two_pi(value)), 'unit': 'Hz'})

        # DOC: Transition and cavity
        add('wavelength', transition.wavelength, 'm')
        add('omega_A', transition.omega_A, 'rad/s', rate=True)
        add('gamma', transition.gamma, 'rad/s', rate=True)
        add('dipole_moment', transition.mu, 'C m')
        add('cavity_length', cavity.length, 'm')
        add('finesse', cavity.finesse, '1')
        add('waist', cavity.waist, 'm')
        add('free_spectral_range', cavity_core.free_spectral_range(cavity), 'rad/s', rate=True)
        add('cavity_detuning', cavity.omega_C - transition.omega_A, 'rad/s', rate=True)
        add('cavity_response', cavity_core.cavity_response(cavity, transition.omega_A), '1')

        # DOC: Coupling rates
        add('g', rates.g, 'rad/s', rate=True)
        add('kappa', rates.kappa, 'rad/s', rate=True)
        add('cooperativity', rates.C, '1')
        add('purcell_rate', rates.purcell_rate, 'rad/s', rate=True)
        decay = cavity_core.enhanced_decay_rate(rates.gamma, zeeman * rates.C)
        add('antinode_decay_total', decay.total, 'rad/s', rate=True)
        add('antinode_decay_into_mode', decay.into_mode, 'rad/s', rate=True)
        for convention in ModeVolumeConvention:
            volume = cavity_core.mode_volume(cavity, convention)
            add(f'mode_volume_{convention.value}', volume.value, 'm^3')
            add(f'g_from_dipole_{convention.value}', cavity_core.vacuum_rabi(transition.mu, cavity.omega_C, volume.value), 'rad/s', rate=True)

        # DOC: Reflection signal
        estimate = reflection.invert_to_cooperativity(counts, C=rates.C, zeeman_factor=zeeman)
        add('visibility', estimate.visibility, '1')
        add('peak_c_tot', estimate.c_tot, '1')
        add('peak_n_eff', estimate.n_eff, '1')
        add('single_atom_contrast', reflection.single_atom_contrast(estimate.visibility, rates.C, zeeman), '1')
        add('detection_snr', reflection.detection_snr(counts, config.tof.bin_width), '1')

        Logger.debug(f'{self.name}: C = {rates.C:.4f}, kappa/2pi = {per_two_pi(rates.kappa) / 1e9:.4f} GHz')
        return rows

    def run(self, config=None, seed=None, drops=None, out=None, threads=None, **kwargs):
        """
        Compute the report; a CSV copy is written only when `out` is given.
        """
        config = self.argument_validation(config=config, seed=seed, drops=drops, out=out, threads=threads)
        rows = self.report(config)
        body = {'report': rows, 'text': format_report(rows)}
        if out is not None:
            body['file'] = self.write(pd.DataFrame(rows), config)
        return {'status': 'OK', 'body': body}


def format_report(rows):
    width = max(len(row['quantity']) for row in rows)
    return '\n'.join(f"{row['quantity']:<{width}}  {row['value']: .6e}  {row['unit']}" for row in rows)
