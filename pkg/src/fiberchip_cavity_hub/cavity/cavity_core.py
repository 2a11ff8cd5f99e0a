"""
Closed-form cavity-QED rate algebra for a single-mode Fabry-Perot cavity.

All rates are angular frequencies in rad/s. gamma and kappa follow the half-width
convention: the atomic population decays at 2*gamma, the cavity field energy at 2*kappa
and the vacuum Rabi frequency is 2*g.
"""
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import _consts
from ..utils.status_exception import DomainError


def _require_positive(name, value, allow_zero=False):
    if value is None or not np.isfinite(value):
        raise DomainError(f'{name} must be finite, got {value}')
    if value < 0 or (value == 0 and not allow_zero):
        raise DomainError(f'{name} must be {"non-negative" if allow_zero else "positive"}, got {value}')
    return float(value)


def per_two_pi(rate):
    """Angular rate (rad/s) expressed as the "2pi x" frequency in Hz."""
    return rate / _consts.TWO_PI


@dataclass(frozen=True)
class TransitionSpec:
    wavelength: float = _consts._RB85_D2.WAVELENGTH
    gamma: float = _consts._RB85_D2.GAMMA
    dipole_moment: Optional[float] = None
    zeeman_factor: float = _consts._RB85_D2.ZEEMAN_FACTOR
    mass: float = _consts._RB85_D2.MASS

    def __post_init__(self):
        _require_positive('transition.wavelength', self.wavelength)
        _require_positive('transition.gamma', self.gamma)
        _require_positive('transition.mass', self.mass)
        if self.dipole_moment is not None:
            _require_positive('transition.dipole_moment', self.dipole_moment)
        if not 0.0 < self.zeeman_factor <= 1.0:
            raise DomainError(f'transition.zeeman_factor must lie in (0, 1], got {self.zeeman_factor}')

    @property
    def omega_A(self):
        return _consts.TWO_PI * _consts.C_LIGHT / self.wavelength

    @property
    def mu(self):
        """Dipole moment, derived from gamma when not given explicitly."""
        return self.dipole_moment if self.dipole_moment is not None else dipole_from_gamma(self)

    @property
    def recoil_velocity(self):
        return _consts.H_PLANCK / (self.mass * self.wavelength)


@dataclass(frozen=True)
class CavitySpec:
    length: float = _consts._REFERENCE_CAVITY.LENGTH
    finesse: float = _consts._REFERENCE_CAVITY.FINESSE
    waist: float = _consts._REFERENCE_CAVITY.WAIST
    omega_C: float = _consts.TWO_PI * _consts.C_LIGHT / _consts._RB85_D2.WAVELENGTH

    def __post_init__(self):
        _require_positive('cavity.length', self.length)
        _require_positive('cavity.waist', self.waist)
        _require_positive('cavity.omega_C', self.omega_C)
        if not np.isfinite(self.finesse) or self.finesse < 1.0:
            raise DomainError(f'cavity.finesse must be >= 1, got {self.finesse}')

    @classmethod
    def tuned_to(cls, transition, length, finesse, waist, detuning=0.0):
        """Cavity whose resonance sits `detuning` rad/s above the atomic line."""
        return cls(length=length, finesse=finesse, waist=waist, omega_C=transition.omega_A + detuning)


@dataclass(frozen=True)
class CouplingRates:
    g: float
    kappa: float
    gamma: float
    C: float = field(init=False)

    def __post_init__(self):
        _require_positive('g', self.g, allow_zero=True)
        _require_positive('kappa', self.kappa)
        _require_positive('gamma', self.gamma)
        object.__setattr__(self, 'C', cooperativity(self.g, self.kappa, self.gamma))

    @classmethod
    def from_cavity(cls, g, cavity, transition):
        return cls(g=g, kappa=kappa_from_geometry(cavity), gamma=transition.gamma)

    @property
    def purcell_rate(self):
        """Emission rate of one antinode atom into the cavity mode, 4*C*gamma = 2*g^2/kappa."""
        return 4.0 * self.C * self.gamma

    @property
    def g_over_gamma(self):
        return self.g / self.gamma


class DecayRates(NamedTuple):
    total: float
    into_mode: float


class ModeVolumeConvention(str, enum.Enum):
    TRAVELING_GAUSSIAN = 'traveling_gaussian'
    STANDING_GAUSSIAN = 'standing_gaussian'


class ModeVolume(NamedTuple):
    value: float
    convention: ModeVolumeConvention


def kappa_from_geometry(spec: CavitySpec) -> float:
    """
    kappa = pi*c / (2*L*F), half the cavity energy decay rate.
    """
    length = _require_positive('cavity.length', spec.length)
    finesse = _require_positive('cavity.finesse', spec.finesse)
    return math.pi * _consts.C_LIGHT / (2.0 * length * finesse)


def free_spectral_range(spec: CavitySpec) -> float:
    """Angular free spectral range pi*c/L."""
    return math.pi * _consts.C_LIGHT / _require_positive('cavity.length', spec.length)


def cavity_response(spec: CavitySpec, omega) -> float:
    """
    Airy suppression of the cavity coupling at the frequency `omega`.

    Equals 1 on resonance and kappa^2/(kappa^2 + delta^2) for delta << FSR.
    """
    delta = spec.omega_C - omega
    coefficient = (2.0 * spec.finesse / math.pi) ** 2
    return 1.0 / (1.0 + coefficient * math.sin(math.pi * delta / free_spectral_range(spec)) ** 2)


def dipole_from_gamma(transition: TransitionSpec) -> float:
    """
    Transition dipole from the radiative decay rate, mu^2 = 3*pi*eps0*hbar*c^3*(2*gamma)/omega^3.
    """
    omega = transition.omega_A
    return math.sqrt(
        3.0 * math.pi * _consts.EPSILON_0 * _consts.HBAR * _consts.C_LIGHT ** 3 * (2.0 * transition.gamma) / omega ** 3
    )


def vacuum_rabi(mu, omega_C, volume) -> float:
    """
    Half the vacuum Rabi frequency: 2g = mu * sqrt(omega_C / (2*hbar*eps0*V)).
    """
    mu = _require_positive('mu', mu)
    omega_C = _require_positive('omega_C', omega_C)
    volume = _require_positive('mode volume', volume)
    return 0.5 * mu * math.sqrt(omega_C / (2.0 * _consts.HBAR * _consts.EPSILON_0 * volume))


def cooperativity(g, kappa, gamma) -> float:
    """Single-atom cooperativity C = g^2 / (2*kappa*gamma)."""
    g = _require_positive('g', g, allow_zero=True)
    kappa = _require_positive('kappa', kappa)
    gamma = _require_positive('gamma', gamma)
    return g * g / (2.0 * kappa * gamma)


def enhanced_decay_rate(gamma, c_tot) -> DecayRates:
    """
    Cavity-modified population decay 2*gamma*(1 + 2*C_tot) and its into-mode part 4*C_tot*gamma.
    """
    gamma = _require_positive('gamma', gamma)
    c_tot = _require_positive('C_tot', c_tot, allow_zero=True)
    return DecayRates(total=2.0 * gamma * (1.0 + 2.0 * c_tot), into_mode=4.0 * c_tot * gamma)


def mode_volume(spec: CavitySpec, convention=ModeVolumeConvention.TRAVELING_GAUSSIAN) -> ModeVolume:
    convention = ModeVolumeConvention(convention)
    traveling = 0.25 * math.pi * spec.waist ** 2 * spec.length
    if convention is ModeVolumeConvention.STANDING_GAUSSIAN:
        return ModeVolume(0.5 * traveling, convention)
    return ModeVolume(traveling, convention)
