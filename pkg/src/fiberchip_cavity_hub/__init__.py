from dotenv import load_dotenv
load_dotenv()

from .scenarios import (
    _ParamsScenario, _TOFScenario, _ScanScenario, _NoiseScenario,
    _PulseScenario, _FitScenario, _CalibrateScenario,
)
from .utils.module_config import ScenarioConfig, load as load_config, loads as loads_config

from .main import (
    run_params, run_tof, run_scan, run_noise, run_pulse, run_fit, run_calibrate, run_config_dump,
)
