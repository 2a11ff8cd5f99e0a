from ._common import TransitRun, bin_grid, simulate_transits
from .params_scenario import _ParamsScenario, format_report
from .tof_scenario import _TOFScenario
from .scan_scenario import _ScanScenario
from .noise_scenario import _NoiseScenario
from .pulse_scenario import _PulseScenario
from .fit_scenario import _FitScenario, fit_dataset
from .calibrate_scenario import _CalibrateScenario
