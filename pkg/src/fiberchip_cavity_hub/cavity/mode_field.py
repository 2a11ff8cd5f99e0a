"""
Standing-wave Gaussian mode of the cavity and the ensemble coupling it produces.
"""
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from . import _consts
from .cavity_core import CavitySpec, TransitionSpec
from ..utils.status_exception import DomainError


# Beyond this many waists the transverse intensity is below exp(-50).
TRANSVERSE_CUTOFF_WAISTS = 5.0
AXIAL_MARGIN_WAISTS = 2.0

_INTENSITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ModeGeometry:
    waist: float = _consts._REFERENCE_CAVITY.WAIST
    wavelength: float = _consts._RB85_D2.WAVELENGTH
    length: float = _consts._REFERENCE_CAVITY.LENGTH
    origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    direction: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    divergent_waist: bool = False

    def __post_init__(self):
        for name in ('waist', 'wavelength', 'length'):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f'mode.{name} must be positive, got {value}')
        direction = np.asarray(self.direction, dtype=float)
        origin = np.asarray(self.origin, dtype=float)
        if direction.shape != (3,) or origin.shape != (3,):
            raise DomainError('mode.origin and mode.direction must be 3-vectors')
        if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
            raise DomainError(f'mode.direction must have unit norm, got |d|={np.linalg.norm(direction):.6g}')
        object.__setattr__(self, 'origin', tuple(float(o) for o in origin))
        object.__setattr__(self, 'direction', tuple(float(d) for d in direction))

    @classmethod
    def from_cavity(cls, cavity: CavitySpec, transition: TransitionSpec, **kwargs):
        return cls(waist=cavity.waist, wavelength=transition.wavelength, length=cavity.length, **kwargs)

    @property
    def k(self):
        return 2.0 * np.pi / self.wavelength

    @property
    def rayleigh_range(self):
        return np.pi * self.waist ** 2 / self.wavelength

    def acceptance_half_widths(self):
        """
        Half widths (along the axis, across the axis) of the horizontal window an atom
        must cross for its intensity to be non-negligible.
        """
        return (0.5 * self.length + AXIAL_MARGIN_WAISTS * self.waist, TRANSVERSE_CUTOFF_WAISTS * self.waist)


class EnsembleCoupling(NamedTuple):
    c_tot: float
    n_eff: float
    intensities: np.ndarray


def mode_intensity(geom: ModeGeometry, r):
    """
    Fraction of the peak intensity at r (shape (..., 3), metres).

    I = cos^2(k z) exp(-2 rho^2 / w^2) with z along the axis measured from an antinode at
    the mode centre and rho the distance from the axis; zero beyond |z| > L/2.
    """
    r = np.asarray(r, dtype=float)
    rel = r - np.asarray(geom.origin)
    direction = np.asarray(geom.direction)
    z = rel @ direction
    rho2 = np.maximum(np.einsum('...i,...i->...', rel, rel) - z * z, 0.0)

    w2 = geom.waist ** 2
    if geom.divergent_waist:
        w2_z = w2 * (1.0 + (z / geom.rayleigh_range) ** 2)
        peak = w2 / w2_z
    else:
        w2_z = w2
        peak = 1.0

    intensity = peak * np.cos(geom.k * z) ** 2 * np.exp(-2.0 * rho2 / w2_z)
    intensity = np.where(np.abs(z) > 0.5 * geom.length, 0.0, intensity)
    return intensity if intensity.ndim else float(intensity)


def aggregate_coupling(C, intensities, zeeman_factor=_consts._RB85_D2.ZEEMAN_FACTOR, weights=None) -> EnsembleCoupling:
    """
    C_tot = zeeman_factor * C * sum_n w_n I(r_n) and N_eff = sum_n w_n I(r_n).

    `weights` lets one sample stand for several physical atoms.
    """
    if not np.isfinite(C) or C < 0:
        raise DomainError(f'cooperativity must be non-negative, got {C}')
    intensities = np.asarray(intensities, dtype=float).ravel()
    if intensities.size and (intensities.min() < -_INTENSITY_TOLERANCE or intensities.max() > 1.0 + _INTENSITY_TOLERANCE):
        raise DomainError('mode intensities must lie in [0, 1]')
    intensities = np.clip(intensities, 0.0, 1.0)
    if weights is None:
        n_eff = float(intensities.sum())
    else:
        n_eff = float(np.dot(np.asarray(weights, dtype=float).ravel(), intensities))
    return EnsembleCoupling(c_tot=zeeman_factor * C * n_eff, n_eff=n_eff, intensities=intensities)
