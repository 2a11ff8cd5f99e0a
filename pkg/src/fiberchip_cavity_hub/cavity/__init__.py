from . import _consts
from . import cavity_core
from . import mode_field
from . import cloud_mc
from . import reflection
from . import detector_chain
from . import fitting

from .cavity_core import (
    TransitionSpec, CavitySpec, CouplingRates, ModeVolumeConvention,
    kappa_from_geometry, vacuum_rabi, cooperativity, enhanced_decay_rate, mode_volume,
    free_spectral_range, cavity_response, dipole_from_gamma,
)
from .mode_field import ModeGeometry, EnsembleCoupling, mode_intensity, aggregate_coupling
from .cloud_mc import CloudSpec, AtomSamples, sample_cloud, propagate, transit_trace, apply_excitation, calibrate_cloud
from .reflection import (
    ReflectionInputs, CountRateTriple, AtomNumberDistribution, DistributionKind,
    visibility, reflected_fraction_resonant, reflected_fraction_detuned, invert_to_cooperativity,
    averaged_lineshape, single_atom_contrast, detection_snr,
)
from .detector_chain import (
    DetectionChainSpec, CountSeries,
    generate_counts, dead_time_correct, fano, loss_correct_fano, cavity_jitter_noise,
)
from .fitting import ScanDataset, ModelConfig, OptimizerConfig, FitResult, fit_scan, profile_uncertainty, synthesize_scan
