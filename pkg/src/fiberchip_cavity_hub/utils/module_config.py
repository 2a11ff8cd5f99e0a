# ---------------------------------------------------------------------------
# License:
# Copyright (c) 2025 Fiberchip Cavity Hub developers
#
# Name:        module_config.py
# Purpose:     scenario configuration: YAML sections mapped onto frozen dataclasses
#
# ---------------------------------------------------------------------------
import os
import dataclasses
from dataclasses import dataclass, field, fields, asdict, replace
from typing import Optional

import yaml

from .filesystem import md5text
from .status_exception import ConfigError, StatusException
from ..cavity import _consts
from ..cavity.cavity_core import TransitionSpec, CavitySpec, CouplingRates
from ..cavity.cloud_mc import CloudSpec
from ..cavity.detector_chain import DetectionChainSpec
from ..cavity.mode_field import ModeGeometry
from ..cavity.reflection import AtomNumberDistribution, CountRateTriple, DistributionKind


OUT_DIR_ENV = 'FIBERCHIP_CAVITY_OUT_DIR'


# DOC: Every section is a frozen dataclass; field names are the YAML keys.

@dataclass(frozen=True)
class TransitionConfig:
    wavelength: float = _consts._RB85_D2.WAVELENGTH
    gamma: float = _consts._RB85_D2.GAMMA
    dipole_moment: Optional[float] = None
    zeeman_factor: float = _consts._RB85_D2.ZEEMAN_FACTOR
    mass: float = _consts._RB85_D2.MASS

    def build(self):
        return TransitionSpec(**asdict(self))


@dataclass(frozen=True)
class CavityConfig:
    length: float = _consts._REFERENCE_CAVITY.LENGTH
    finesse: float = _consts._REFERENCE_CAVITY.FINESSE
    waist: float = _consts._REFERENCE_CAVITY.WAIST
    detuning: float = 0.0           # omega_C - omega_A, rad/s
    g: float = _consts._REFERENCE_CAVITY.G

    def build(self, transition: TransitionSpec):
        return CavitySpec.tuned_to(transition, self.length, self.finesse, self.waist, self.detuning)


@dataclass(frozen=True)
class ModeConfig:
    divergent_waist: bool = False


@dataclass(frozen=True)
class ProbeConfig:
    i_max: float = _consts._REFERENCE_COUNTS.I_MAX
    i_min: float = _consts._REFERENCE_COUNTS.I_MIN
    i_atoms: float = _consts._REFERENCE_COUNTS.I_ATOMS
    laser_linewidth: float = 0.0    # FWHM, rad/s

    def build(self):
        return CountRateTriple(i_max=self.i_max, i_min=self.i_min, i_atoms=self.i_atoms)


@dataclass(frozen=True)
class CloudConfig:
    atom_count: float = _consts._REFERENCE_RUN.ATOM_COUNT
    height: float = _consts._REFERENCE_RUN.DROP_HEIGHT
    rms_radius: float = 0.5e-3
    temperature: float = 25e-6
    sample_budget: int = 20000
    physical: bool = False

    def build(self, transition: TransitionSpec):
        return CloudSpec(atom_count=self.atom_count, height=self.height, rms_radius=self.rms_radius,
                         temperature=self.temperature, mass=transition.mass)


@dataclass(frozen=True)
class ChainConfig:
    beamsplitter_transmission: float = _consts._REFERENCE_RUN.BEAMSPLITTER_TRANSMISSION
    detector_efficiency: float = _consts._REFERENCE_RUN.DETECTOR_EFFICIENCY
    dead_time: float = _consts._REFERENCE_RUN.DEAD_TIME

    def build(self):
        return DetectionChainSpec(**asdict(self))


@dataclass(frozen=True)
class ExcitationConfig:
    turn_on: Optional[float] = None         # defaults to the free-fall arrival time
    pump_photon_budget: float = 3.0
    scatter_rate: float = 1e7
    fiber_outcoupling: float = 0.5


@dataclass(frozen=True)
class TOFConfig:
    t_start: float = 20e-3
    t_stop: float = 60e-3
    bin_width: float = _consts._REFERENCE_RUN.TOF_BIN
    substep: float = 10e-6
    drops: int = _consts._REFERENCE_RUN.TOF_DROPS
    calibrate: bool = True
    target_peak: float = _consts._REFERENCE_RUN.PEAK_N_EFF
    simulate_counts: bool = True


@dataclass(frozen=True)
class ScanConfig:
    delta_min: float = -20.0
    delta_max: float = 20.0
    points: int = 41
    n_eff: float = _consts._REFERENCE_RUN.SCAN_N_EFF[0]
    distribution: str = DistributionKind.POISSON_MODE.value
    cutoff_waists: float = 2.0
    noise: bool = False
    drops: int = _consts._REFERENCE_RUN.TOF_DROPS
    bin_time: float = _consts._REFERENCE_RUN.TOF_BIN
    auto_fit: bool = False

    def distribution_spec(self, n_eff=None):
        return AtomNumberDistribution(self.distribution, self.n_eff if n_eff is None else n_eff, self.cutoff_waists)


@dataclass(frozen=True)
class NoiseConfig:
    t_start: float = 30e-3
    t_stop: float = 46e-3
    bin_width: float = _consts._REFERENCE_RUN.NOISE_BIN
    drops: int = _consts._REFERENCE_RUN.NOISE_DROPS
    jitter_rms: float = 0.0         # cavity length, m
    lock_offset: float = 0.2        # cavity detuning of the lock point, units of kappa
    arrival_window: float = 0.5e-3  # half-width around the arrival excluded from the "before" statistics


@dataclass(frozen=True)
class PulseConfig:
    window: float = 200e-6
    bin_width: float = 5e-6
    drops: int = _consts._REFERENCE_RUN.TOF_DROPS


@dataclass(frozen=True)
class FitConfig:
    input: Optional[str] = None
    distribution: str = DistributionKind.POISSON_MODE.value
    cutoff_waists: float = 2.0
    float_visibility: bool = False
    float_linewidth: bool = False
    xtol: float = 1e-6
    max_iter: int = 200
    profile: bool = True


_SECTIONS = {
    'transition': TransitionConfig,
    'cavity': CavityConfig,
    'mode': ModeConfig,
    'probe': ProbeConfig,
    'cloud': CloudConfig,
    'chain': ChainConfig,
    'excitation': ExcitationConfig,
    'tof': TOFConfig,
    'scan': ScanConfig,
    'noise': NoiseConfig,
    'pulse': PulseConfig,
    'fit': FitConfig,
}


@dataclass(frozen=True)
class ScenarioConfig:
    transition: TransitionConfig = field(default_factory=TransitionConfig)
    cavity: CavityConfig = field(default_factory=CavityConfig)
    mode: ModeConfig = field(default_factory=ModeConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    cloud: CloudConfig = field(default_factory=CloudConfig)
    chain: ChainConfig = field(default_factory=ChainConfig)
    excitation: ExcitationConfig = field(default_factory=ExcitationConfig)
    tof: TOFConfig = field(default_factory=TOFConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    seed: int = 0
    drops: Optional[int] = None     # overrides the per-scenario drop counts
    threads: int = 1
    out_dir: Optional[str] = None

    # DOC: Physics objects built from the configuration
    def transition_spec(self):
        return self.transition.build()

    def cavity_spec(self):
        return self.cavity.build(self.transition_spec())

    def coupling_rates(self):
        return CouplingRates.from_cavity(self.cavity.g, self.cavity_spec(), self.transition_spec())

    def mode_geometry(self):
        return ModeGeometry.from_cavity(self.cavity_spec(), self.transition_spec(), divergent_waist=self.mode.divergent_waist)

    def cloud_spec(self):
        return self.cloud.build(self.transition_spec())

    def chain_spec(self):
        return self.chain.build()

    def drops_for(self, section):
        return self.drops if self.drops is not None else getattr(self, section).drops

    def output_dir(self):
        return self.out_dir or os.environ.get(OUT_DIR_ENV) or '.'

    def with_overrides(self, seed=None, drops=None, out_dir=None, threads=None):
        changes = {name: value for name, value in dict(seed=seed, drops=drops, out_dir=out_dir, threads=threads).items() if value is not None}
        return validate(replace(self, **changes)) if changes else self

    def to_dict(self):
        return asdict(self)

    def dump(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=False)

    def config_hash(self):
        """md5 of the canonical YAML; threads and out_dir do not change results and are left out."""
        document = {key: value for key, value in self.to_dict().items() if key not in ('threads', 'out_dir')}
        return md5text(yaml.safe_dump(document, sort_keys=True))


def _coerce(path, f: dataclasses.Field, value):
    """Coerce a YAML scalar onto the declared type of a dataclass field."""
    annotation = str(f.type)
    optional = 'Optional' in annotation
    if value is None:
        if optional:
            return None
        raise ConfigError(path, 'value required')
    try:
        if 'bool' in annotation:
            if not isinstance(value, bool):
                raise ValueError(f'expected true/false, got {value!r}')
            return value
        if 'int' in annotation:
            if isinstance(value, bool) or float(value) != int(value):
                raise ValueError(f'expected an integer, got {value!r}')
            return int(value)
        if 'float' in annotation:
            if isinstance(value, bool):
                raise ValueError(f'expected a number, got {value!r}')
            return float(value)
        if 'str' in annotation:
            return str(value)
    except (TypeError, ValueError) as ex:
        raise ConfigError(path, str(ex))
    return value


def _build_section(name, cls, values):
    if values is None:
        values = {}
    if not isinstance(values, dict):
        raise ConfigError(name, 'expected a mapping')
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f'{name}.{unknown[0]}', 'unknown key')
    return cls(**{key: _coerce(f'{name}.{key}', known[key], value) for key, value in values.items()})


def from_dict(document) -> ScenarioConfig:
    """
    from_dict - build and validate a ScenarioConfig from a parsed YAML document
    """
    document = document or {}
    if not isinstance(document, dict):
        raise ConfigError('', 'the configuration must be a mapping of sections')
    known = {f.name: f for f in fields(ScenarioConfig)}
    unknown = sorted(set(document) - set(known))
    if unknown:
        raise ConfigError(unknown[0], 'unknown key')
    kwargs = {}
    for key, value in document.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(key, _SECTIONS[key], value)
        else:
            kwargs[key] = _coerce(key, known[key], value)
    return validate(ScenarioConfig(**kwargs))


def load(filename=None) -> ScenarioConfig:
    """
    load - read a YAML scenario file, defaults when filename is None
    """
    if not filename:
        return validate(ScenarioConfig())
    if not os.path.isfile(filename):
        raise ConfigError('config', f'file not found: {filename}')
    with open(filename, 'r', encoding='utf-8') as stream:
        try:
            document = yaml.safe_load(stream)
        except yaml.YAMLError as ex:
            raise ConfigError('config', f'invalid YAML: {ex}')
    return from_dict(document)


def loads(text) -> ScenarioConfig:
    try:
        return from_dict(yaml.safe_load(text))
    except yaml.YAMLError as ex:
        raise ConfigError('config', f'invalid YAML: {ex}')


def validate(config: ScenarioConfig) -> ScenarioConfig:
    """
    validate - build every physics object once so domain errors surface before any simulation,
    reported as configuration errors on the owning section
    """
    checks = (
        ('transition', config.transition_spec),
        ('cavity', config.cavity_spec),
        ('cavity.g', config.coupling_rates),
        ('mode', config.mode_geometry),
        ('cloud', config.cloud_spec),
        ('chain', config.chain_spec),
        ('probe', config.probe.build),
        ('scan', config.scan.distribution_spec),
    )
    for path, check in checks:
        try:
            check()
        except StatusException as ex:
            raise ConfigError(path, ex.message)
        except ValueError as ex:
            raise ConfigError(path, str(ex))

    positive = {
        'tof.bin_width': config.tof.bin_width, 'tof.substep': config.tof.substep,
        'noise.bin_width': config.noise.bin_width, 'pulse.bin_width': config.pulse.bin_width,
        'pulse.window': config.pulse.window, 'scan.bin_time': config.scan.bin_time,
        'excitation.scatter_rate': config.excitation.scatter_rate, 'fit.xtol': config.fit.xtol,
    }
    for path, value in positive.items():
        if not value > 0:
            raise ConfigError(path, f'must be positive, got {value}')
    counts = {
        'tof.drops': config.tof.drops, 'noise.drops': config.noise.drops, 'pulse.drops': config.pulse.drops,
        'scan.drops': config.scan.drops, 'scan.points': config.scan.points, 'cloud.sample_budget': config.cloud.sample_budget,
        'threads': config.threads, 'fit.max_iter': config.fit.max_iter,
    }
    for path, value in counts.items():
        if value < 1:
            raise ConfigError(path, f'must be >= 1, got {value}')
    if config.drops is not None and config.drops < 1:
        raise ConfigError('drops', f'must be >= 1, got {config.drops}')
    if config.noise.drops < 2:
        raise ConfigError('noise.drops', 'variance-to-mean needs at least 2 drops')
    if config.tof.t_stop <= config.tof.t_start:
        raise ConfigError('tof.t_stop', 'must exceed tof.t_start')
    if config.noise.t_stop <= config.noise.t_start:
        raise ConfigError('noise.t_stop', 'must exceed noise.t_start')
    if config.scan.delta_max <= 0 or config.scan.delta_min >= 0:
        raise ConfigError('scan', 'the detuning range must cover both signs')
    if config.excitation.pump_photon_budget < 1:
        raise ConfigError('excitation.pump_photon_budget', 'must be >= 1')
    if not 0 < config.excitation.fiber_outcoupling <= 1:
        raise ConfigError('excitation.fiber_outcoupling', 'must lie in (0, 1]')
    if config.excitation.turn_on is not None and config.excitation.turn_on < 0:
        raise ConfigError('excitation.turn_on', 'precedes the simulation start')
    try:
        DistributionKind(config.fit.distribution)
    except ValueError:
        raise ConfigError('fit.distribution', f'unknown distribution {config.fit.distribution!r}')
    return config
