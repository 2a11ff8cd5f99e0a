import yaml

from ._common import _Scenario
from ..cavity.fitting import ModelConfig, OptimizerConfig, ScanDataset, fit_scan, profile_uncertainty
from ..cavity.reflection import visibility
from ..cli.module_log import Logger
from ..utils import module_csv
from ..utils.filesystem import mkdirs
from ..utils.status_exception import ConfigError


def model_config(config):
    fit = config.fit
    return ModelConfig(
        distribution=fit.distribution,
        cutoff_waists=fit.cutoff_waists,
        laser_linewidth=config.probe.laser_linewidth,
        float_visibility=fit.float_visibility,
        float_linewidth=fit.float_linewidth,
    )


def fit_dataset(config, data: ScanDataset, profile=None):
    """
    Fit a scan with the model and optimizer settings of the `fit` section; the profile
    interval of N_eff is added when enabled.
    """
    profile = config.fit.profile if profile is None else profile
    model = model_config(config)
    optimizer = OptimizerConfig(xtol=config.fit.xtol, max_iter=config.fit.max_iter)
    result = fit_scan(data, model, optimizer)
    summary = result.as_dict()
    summary['reduced_chi2'] = result.reduced_chi2
    if profile:
        interval = profile_uncertainty(result, data, model, optimizer)
        summary['profile'] = {key: (bool(value) if isinstance(value, bool) else float(value)) for key, value in interval._asdict().items()}
    return summary


class _FitScenario(_Scenario):
    """
    Fit the mean N_eff to a detuning scan stored as a `scan` CSV.
    """

    name = 'fit'
    schema = 'scan'

    def argument_validation(self, **kwargs):
        config = super().argument_validation(**kwargs)
        filename = kwargs.get('input', None) or config.fit.input
        if not filename:
            raise ConfigError('fit.input', 'no scan file given')
        return config, filename

    def run(self, config=None, seed=None, drops=None, out=None, threads=None, input=None, **kwargs):

        config, filename = self.argument_validation(config=config, seed=seed, drops=drops, out=out, threads=threads, input=input)
        df, header = module_csv.read_csv(filename, schema=self.schema)
        transition = config.transition_spec()
        v = visibility(config.probe.i_min, config.probe.i_max)
        data = ScanDataset.from_frame(df, v, C=config.coupling_rates().C, gamma=transition.gamma, zeeman_factor=transition.zeeman_factor)

        summary = fit_dataset(config, data)
        summary['input'] = filename
        summary['input_config_hash'] = header.get('config_hash')

        outfile = self.output_file(config, 'yaml')
        mkdirs(config.output_dir())
        with open(outfile, 'w', encoding='utf-8') as stream:
            yaml.safe_dump(summary, stream, sort_keys=False)
        Logger.info(f'{self.name}: N_eff = {summary["n_eff"]:.4g} +/- {summary["n_eff_err"]:.2g}, written to {outfile}')

        return {
            'status': 'OK',
            'body': {'file': outfile, **summary}
        }
