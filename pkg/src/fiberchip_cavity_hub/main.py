# -----------------------------------------------------------------------------
# License:
# Copyright (c) 2025 Fiberchip Cavity Hub developers
#
# The above copyright notice and this permission notice shall be
# included in all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND,
# EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES
# OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND
# NONINFRINGEMENT. IN NO EVENT SHALL THE AUTHORS OR COPYRIGHT
# HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY,
# WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
# FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR
# OTHER DEALINGS IN THE SOFTWARE.
#
#
# Name:        main.py
# Purpose:     command line and python entry points of every scenario
#
# -----------------------------------------------------------------------------
import click
import pprint
import traceback
import json

from .cli.module_log import Logger
from .utils import module_config
from .utils.status_exception import StatusException
from .utils.module_prologo import prologo, epilogo

from .scenarios import (
    _ParamsScenario, _TOFScenario, _ScanScenario, _NoiseScenario,
    _PulseScenario, _FitScenario, _CalibrateScenario,
)


# REGION: [ COMMON ] ===================================================================================================

class _ARG_NAMES_COMMON():
    CONFIG = {
        'aliases': ['--config', '--c'],
        'help': "YAML scenario file. Built-in defaults when omitted.",
        'default': None,
        'example': '--config scenario.yaml',
    }
    SEED = {
        'aliases': ['--seed'],
        'help': "Master seed of every random stream, overrides the configuration.",
        'default': None,
        'example': '--seed 1234',
    }
    DROPS = {
        'aliases': ['--drops'],
        'help': "Number of simulated cloud drops, overrides the per-scenario value.",
        'default': None,
        'example': '--drops 48',
    }
    OUT = {
        'aliases': ['--out', '--out_dir', '--o'],
        'help': "Output directory. Defaults to $FIBERCHIP_CAVITY_OUT_DIR, then to the current directory.",
        'default': None,
        'example': '--out results/',
    }
    THREADS = {
        'aliases': ['--threads'],
        'help': "Worker threads for the drop fan-out. Does not change the results.",
        'default': None,
        'example': '--threads 4',
    }


def _scenario_options(func):
    """
    Options shared by every scenario command, plus the common --version/--debug/--verbose.
    """
    options = [
        click.option(*_ARG_NAMES_COMMON.CONFIG['aliases'], type=str, default=_ARG_NAMES_COMMON.CONFIG['default'], help=_ARG_NAMES_COMMON.CONFIG['help']),
        click.option(*_ARG_NAMES_COMMON.SEED['aliases'], type=int, default=_ARG_NAMES_COMMON.SEED['default'], help=_ARG_NAMES_COMMON.SEED['help']),
        click.option(*_ARG_NAMES_COMMON.DROPS['aliases'], type=click.IntRange(min=1), default=_ARG_NAMES_COMMON.DROPS['default'], help=_ARG_NAMES_COMMON.DROPS['help']),
        click.option(*_ARG_NAMES_COMMON.OUT['aliases'], 'out', type=str, default=_ARG_NAMES_COMMON.OUT['default'], help=_ARG_NAMES_COMMON.OUT['help']),
        click.option(*_ARG_NAMES_COMMON.THREADS['aliases'], type=click.IntRange(min=1), default=_ARG_NAMES_COMMON.THREADS['default'], help=_ARG_NAMES_COMMON.THREADS['help']),
        # ---------------------------------------------------------------------
        # Common options to all the CLI applications
        # ---------------------------------------------------------------------
        click.option('--version', is_flag=True, required=False, default=False, help="Show the version of the package."),
        click.option('--debug', is_flag=True, required=False, default=False, help="Debug mode."),
        click.option('--verbose', is_flag=True, required=False, default=False, help="Print some words more about what is doing."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _run_scenario(command, runner, debug=False, version=False, verbose=False, **kwargs):
    """
    Wrap a scenario run with prologo/epilogo and turn exceptions into a status dictionary.
    """
    t0 = None
    try:
        # DOC: -- Init logger + cli settings + handle version and debug -------
        t0 = prologo(command, version, verbose, debug)

        # DOC: -- Run the scenario -------------------------------------------
        results = runner.run(**kwargs)

    except StatusException as err:
        results = {
            'status': err.status,
            'body': {
                'message': str(err),
                ** ({"traceback": traceback.format_exc()} if debug else dict())
            }
        }
    except Exception as e:
        results = {
            "status": StatusException.ERROR,
            "body": {
                "error": str(e),
                ** ({"traceback": traceback.format_exc()} if debug else dict())
            }
        }

    if t0 is not None:
        epilogo(t0, command)

    return results


def _finish(output, text=None):
    """
    Print the outcome and leave with the exit code of its status.
    """
    Logger.debug(pprint.pformat(output))
    status = output.get('status', StatusException.ERROR)
    if status in (StatusException.OK, StatusException.SKIPPED):
        click.echo(text if text is not None else json.dumps(output['body'], indent=2, default=str))
    else:
        message = output['body'].get('message', output['body'].get('error'))
        click.echo(f'{status}: {message}', err=True)
        if 'traceback' in output['body']:
            click.echo(output['body']['traceback'], err=True)
    click.get_current_context().exit(StatusException.exit_code(status))


@click.group()
def cli():
    """
    fiberchip-cavity - atom detection and photon generation in a fiber-chip microcavity
    """

# ENDREGION: [ COMMON ] ================================================================================================



# REGION: [ PARAMS ] ===================================================================================================

@cli.command('params')
@_scenario_options
def cli_run_params(**kwargs):
    """
    Print the rate report of the configured atom-cavity system
    """
    output = run_params(**kwargs)
    _finish(output, text=output['body'].get('text'))
    return output


def run_params(config=None, seed=None, drops=None, out=None, threads=None, version=False, debug=False, verbose=False):
    """
    run_params - rates, cooperativity, mode volumes and reflection figures of merit
    """
    return _run_scenario('params', _ParamsScenario(), debug=debug, version=version, verbose=verbose,
                         config=config, seed=seed, drops=drops, out=out, threads=threads)

# ENDREGION: [ PARAMS ] ================================================================================================



# REGION: [ TOF ] ======================================================================================================

@cli.command('tof')
@_scenario_options
def cli_run_tof(**kwargs):
    """
    Time-of-flight signal of the falling cloud
    """
    output = run_tof(**kwargs)
    _finish(output)
    return output


def run_tof(config=None, seed=None, drops=None, out=None, threads=None, version=False, debug=False, verbose=False):
    """
    run_tof - writes tof.csv: time, n_eff_mean, c_tot_mean, reflected_fraction, counts_mean, count_rate
    """
    return _run_scenario('tof', _TOFScenario(), debug=debug, version=version, verbose=verbose,
                         config=config, seed=seed, drops=drops, out=out, threads=threads)

# ENDREGION: [ TOF ] ===================================================================================================



# REGION: [ SCAN ] =====================================================================================================

@cli.command('scan')
@_scenario_options
def cli_run_scan(**kwargs):
    """
    Reflected fraction versus laser-atom detuning
    """
    output = run_scan(**kwargs)
    _finish(output)
    return output


def run_scan(config=None, seed=None, drops=None, out=None, threads=None, version=False, debug=False, verbose=False):
    """
    run_scan - writes scan.csv: delta_la, fraction_model, fraction, sigma
    """
    return _run_scenario('scan', _ScanScenario(), debug=debug, version=version, verbose=verbose,
                         config=config, seed=seed, drops=drops, out=out, threads=threads)

# ENDREGION: [ SCAN ] ==================================================================================================



# REGION: [ NOISE ] ====================================================================================================

@cli.command('noise')
@_scenario_options
def cli_run_noise(**kwargs):
    """
    Variance-to-mean ratio of the photon counts across drops
    """
    output = run_noise(**kwargs)
    _finish(output)
    return output


def run_noise(config=None, seed=None, drops=None, out=None, threads=None, version=False, debug=False, verbose=False):
    """
    run_noise - writes noise.csv: time, mean_counts, fano_raw, fano_dead_time, fano_corrected, n_eff_mean
    """
    return _run_scenario('noise', _NoiseScenario(), debug=debug, version=version, verbose=verbose,
                         config=config, seed=seed, drops=drops, out=out, threads=threads)

# ENDREGION: [ NOISE ] =================================================================================================



# REGION: [ PULSE ] ====================================================================================================

@cli.command('pulse')
@_scenario_options
def cli_run_pulse(**kwargs):
    """
    Cavity-enhanced emission after a resonant excitation pulse
    """
    output = run_pulse(**kwargs)
    _finish(output)
    return output


def run_pulse(config=None, seed=None, drops=None, out=None, threads=None, version=False, debug=False, verbose=False):
    """
    run_pulse - writes pulse.csv: time, emission_counts, emission_expected, reflected_fraction, reflection_counts
    """
    return _run_scenario('pulse', _PulseScenario(), debug=debug, version=version, verbose=verbose,
                         config=config, seed=seed, drops=drops, out=out, threads=threads)

# ENDREGION: [ PULSE ] =================================================================================================



# REGION: [ FIT ] ======================================================================================================

class _ARG_NAMES_FIT():
    INPUT = {
        'aliases': ['--input', '--in', '--i'],
        'help': "Scan CSV to fit (schema \"scan\"). Defaults to fit.input of the configuration.",
        'default': None,
        'example': '--input results/scan.csv',
    }


@cli.command('fit')
@click.option(
    *_ARG_NAMES_FIT.INPUT['aliases'], 'input',
    type=str, default=_ARG_NAMES_FIT.INPUT['default'],
    help=_ARG_NAMES_FIT.INPUT['help'],
)
@_scenario_options
def cli_run_fit(**kwargs):
    """
    Fit the mean effective atom number to a detuning scan
    """
    output = run_fit(**kwargs)
    _finish(output)
    return output


def run_fit(input=None, config=None, seed=None, drops=None, out=None, threads=None, version=False, debug=False, verbose=False):
    """
    run_fit - writes fit.yaml with the estimates, their errors and the profile interval
    """
    return _run_scenario('fit', _FitScenario(), debug=debug, version=version, verbose=verbose,
                         input=input, config=config, seed=seed, drops=drops, out=out, threads=threads)

# ENDREGION: [ FIT ] ===================================================================================================



# REGION: [ CALIBRATE ] ================================================================================================

@cli.command('calibrate')
@_scenario_options
def cli_run_calibrate(**kwargs):
    """
    Scale the atom number to the target time-of-flight peak
    """
    output = run_calibrate(**kwargs)
    _finish(output)
    return output


def run_calibrate(config=None, seed=None, drops=None, out=None, threads=None, version=False, debug=False, verbose=False):
    """
    run_calibrate - writes calibrated.yaml, the configuration with the calibrated atom number
    """
    return _run_scenario('calibrate', _CalibrateScenario(), debug=debug, version=version, verbose=verbose,
                         config=config, seed=seed, drops=drops, out=out, threads=threads)

# ENDREGION: [ CALIBRATE ] =============================================================================================



# REGION: [ CONFIG DUMP ] ==============================================================================================

class _ConfigDump():

    name = 'config dump'

    def run(self, config=None, seed=None, drops=None, out=None, threads=None):
        if config is None or isinstance(config, str):
            config = module_config.load(config)
        config = config.with_overrides(seed=seed, drops=drops, out_dir=out, threads=threads)
        return {'status': StatusException.OK, 'body': {'yaml': config.dump(), 'config_hash': config.config_hash()}}


@cli.group('config')
def cli_config():
    """
    Configuration helpers
    """


@cli_config.command('dump')
@_scenario_options
def cli_run_config_dump(**kwargs):
    """
    Print the effective configuration as YAML
    """
    output = run_config_dump(**kwargs)
    _finish(output, text=output['body'].get('yaml'))
    return output


def run_config_dump(config=None, seed=None, drops=None, out=None, threads=None, version=False, debug=False, verbose=False):
    """
    run_config_dump - effective configuration after the command line overrides
    """
    return _run_scenario('config dump', _ConfigDump(), debug=debug, version=version, verbose=verbose,
                         config=config, seed=seed, drops=drops, out=out, threads=threads)

# ENDREGION: [ CONFIG DUMP ] ===========================================================================================
