import numpy as np
import pandas as pd

from ._common import _Scenario
from .fit_scenario import fit_dataset
from ..cavity.fitting import ScanDataset, synthesize_scan
from ..cavity.reflection import averaged_lineshape, check_validity, visibility
from ..cli.module_log import Logger


class _ScanScenario(_Scenario):
    """
    Reflected fraction versus laser-atom detuning, averaged over the drop-to-drop N_eff
    distribution and the probe laser line, optionally with counting noise and an
    automatic fit of the result.
    """

    name = 'scan'
    schema = 'scan'

    def run(self, config=None, seed=None, drops=None, out=None, threads=None, **kwargs):

        config = self.argument_validation(config=config, seed=seed, drops=drops, out=out, threads=threads)
        scan = config.scan
        n_drops = config.drops_for('scan')
        transition, rates = config.transition_spec(), config.coupling_rates()
        v = visibility(config.probe.i_min, config.probe.i_max)
        distribution = scan.distribution_spec()
        linewidth = config.probe.laser_linewidth
        common = dict(C=rates.C, gamma=transition.gamma, zeeman_factor=transition.zeeman_factor)

        delta = np.linspace(scan.delta_min, scan.delta_max, scan.points)
        check_validity(delta, rates.g_over_gamma)
        model = averaged_lineshape(v, distribution, linewidth, delta, **common)

        expected = config.probe.i_max * scan.bin_time
        if scan.noise:
            data = synthesize_scan(v, distribution, delta, config.seed, i_max=config.probe.i_max, bin_time=scan.bin_time,
                                   n_drops=n_drops, laser_linewidth=linewidth, **common)
            fraction, sigma = data.fraction, data.sigma
        else:
            # shot-noise uncertainty of the noiseless curve
            fraction = model
            sigma = np.sqrt(np.maximum(model, 1.0 / expected) / (expected * n_drops))

        df = pd.DataFrame({'delta_la': delta, 'fraction_model': model, 'fraction': fraction, 'sigma': sigma})
        body = {
            'file': self.write(df, config),
            'drops': n_drops,
            'wing_fraction': float(model[np.argmax(np.abs(delta))]),
            'center_fraction': float(np.interp(0.0, delta, model)),
        }

        if scan.auto_fit:
            data = ScanDataset(delta=delta, fraction=fraction, sigma=sigma, v=v, **common)
            body['fit'] = fit_dataset(config, data)
            Logger.info(f'{self.name}: fitted N_eff = {body["fit"]["n_eff"]:.4g} (input {distribution.mean_n_eff})')

        return {'status': 'OK', 'body': body}
