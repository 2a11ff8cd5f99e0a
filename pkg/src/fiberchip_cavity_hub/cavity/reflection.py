"""
Steady-state reflection of the probe from the fiber cavity with atoms in the mode.

Reflected fractions are normalised to the off-resonant cavity (I/I_max). With
P_tot = 2*C_tot + 1 the resonant fraction is (-1 + v/P_tot)^2, v being the empty-cavity
fringe visibility 1 - sqrt(I_min/I_max); detunings are in units of gamma.
"""
import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from . import _consts
from ..cli.module_log import Logger
from ..utils.module_rng import as_generator
from ..utils.status_exception import DomainError


# The detuned formula assumes g/gamma >> |Delta|; warn past this fraction of g/gamma.
VALIDITY_FRACTION = 0.3

# N_eff grid step of the compound-Poisson distribution.
_NEFF_STEP = 0.005
_INTENSITY_NODES = 512
_LINEWIDTH_NODES = 24
_PMF_FLOOR = 1e-14


def _check_visibility(v, strict=False):
    """strict excludes v = 0."""
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
        raise DomainError(f'visibility must lie in [0, 1], got {v}')
    if strict and np.any(v == 0):
        raise DomainError(f'visibility must lie in (0, 1], got {v}')
    return v


def _check_c_tot(c_tot):
    c_tot = np.asarray(c_tot, dtype=float)
    if np.any(~np.isfinite(c_tot)) or np.any(c_tot < 0):
        raise DomainError(f'C_tot must be non-negative, got {c_tot}')
    return c_tot


@dataclass(frozen=True)
class ReflectionInputs:
    v: float
    c_tot: float
    delta_la: float = 0.0

    def __post_init__(self):
        _check_visibility(self.v, strict=True)
        _check_c_tot(self.c_tot)
        if not np.isfinite(self.delta_la):
            raise DomainError('Delta_LA must be finite')

    @property
    def p_tot(self):
        return 2.0 * self.c_tot + 1.0

    def reflected_fraction(self):
        return reflected_fraction_detuned(self.v, self.c_tot, self.delta_la)


@dataclass(frozen=True)
class CountRateTriple:
    i_max: float = _consts._REFERENCE_COUNTS.I_MAX
    i_min: float = _consts._REFERENCE_COUNTS.I_MIN
    i_atoms: float = _consts._REFERENCE_COUNTS.I_ATOMS

    def __post_init__(self):
        for name in ('i_max', 'i_min', 'i_atoms'):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise DomainError(f'{name} must be a non-negative count rate, got {value}')
        if self.i_min <= 0:
            raise DomainError(f'i_min must be positive, got {self.i_min}')
        if self.i_min > self.i_max:
            raise DomainError(f'i_min ({self.i_min}) exceeds i_max ({self.i_max})')


class CooperativityEstimate(NamedTuple):
    visibility: float
    p_tot: float
    c_tot: float
    n_eff: float


def visibility(i_min, i_max):
    """Empty-cavity fringe visibility v = 1 - sqrt(I_min/I_max)."""
    if not (np.isfinite(i_min) and np.isfinite(i_max)) or i_min < 0 or i_max <= 0:
        raise DomainError(f'count rates must be positive, got I_min={i_min}, I_max={i_max}')
    if i_min > i_max:
        raise DomainError(f'I_min ({i_min}) exceeds I_max ({i_max})')
    return float(1.0 - np.sqrt(i_min / i_max))


def reflected_fraction_resonant(v, c_tot):
    """(-1 + v/P_tot)^2, the resonant reflected fraction I_atoms/I_max."""
    v = _check_visibility(v)
    c_tot = _check_c_tot(c_tot)
    result = (-1.0 + v / (2.0 * c_tot + 1.0)) ** 2
    return result if result.ndim else float(result)


def check_validity(delta, g_over_gamma):
    """Warn and return False when some |Delta| exceeds the validity range of the detuned formula."""
    delta = np.abs(np.asarray(delta, dtype=float))
    limit = VALIDITY_FRACTION * g_over_gamma
    if delta.size and delta.max() > limit:
        Logger.warning(f"|Delta_LA| up to {delta.max():.3g} exceeds {VALIDITY_FRACTION} g/gamma = {limit:.3g}, "
                       f"the detuned reflection model loses validity")
        return False
    return True


def reflected_fraction_detuned(v, c_tot, delta, g_over_gamma=None):
    """
    Reflected fraction versus laser-atom detuning Delta (units of gamma), for g/gamma >> 1:

        |-1 + (v/P) (1 + D^2) / (1 + D^2/P + 2i D C_tot/P)|^2,  P = 2 C_tot + 1.

    Arguments broadcast. When g_over_gamma is given a warning flags detunings beyond the
    validity range of the expression.
    """
    v = _check_visibility(v)
    c_tot = _check_c_tot(c_tot)
    delta = np.asarray(delta, dtype=float)
    if np.any(~np.isfinite(delta)):
        raise DomainError('Delta_LA must be finite')
    if g_over_gamma is not None:
        check_validity(delta, g_over_gamma)
    p_tot = 2.0 * c_tot + 1.0
    d2 = delta * delta
    amplitude = -1.0 + (v / p_tot) * (1.0 + d2) / (1.0 + d2 / p_tot + 2j * delta * c_tot / p_tot)
    result = np.abs(amplitude) ** 2
    return result if result.ndim else float(result)


def invert_to_cooperativity(counts: CountRateTriple, C=None, zeeman_factor=_consts._RB85_D2.ZEEMAN_FACTOR) -> CooperativityEstimate:
    """
    Peak C_tot (and N_eff when the single-atom cooperativity C is given) from three count rates.

    Takes the branch sqrt(I_atoms/I_max) = 1 - v/P_tot, on which the reflected amplitude stays
    on the empty-cavity side of unity.
    """
    v = visibility(counts.i_min, counts.i_max)
    if counts.i_atoms < counts.i_min:
        raise DomainError(f'negative cooperativity: I_atoms ({counts.i_atoms}) below I_min ({counts.i_min})')
    ratio = np.sqrt(counts.i_atoms / counts.i_max)
    if ratio >= 1.0:
        raise DomainError('I_atoms reaches I_max: the Purcell factor is unbounded')
    if v == 0.0:
        raise DomainError('zero fringe visibility carries no cooperativity information')
    p_tot = v / (1.0 - ratio)
    c_tot = max(0.5 * (p_tot - 1.0), 0.0)
    if C is None:
        n_eff = float('nan')
    else:
        if C <= 0:
            raise DomainError(f'single-atom cooperativity must be positive, got {C}')
        n_eff = c_tot / (zeeman_factor * C)
    return CooperativityEstimate(visibility=v, p_tot=float(p_tot), c_tot=float(c_tot), n_eff=float(n_eff))


def single_atom_contrast(v, C, zeeman_factor=_consts._RB85_D2.ZEEMAN_FACTOR):
    """Rise of the resonant reflected fraction caused by one atom at an antinode."""
    return reflected_fraction_resonant(v, zeeman_factor * C) - (1.0 - v) ** 2


def detection_snr(counts: CountRateTriple, integration_time):
    """Shot-noise limited SNR of the atom signal, (I_atoms - I_min) T / sqrt(I_min T)."""
    if integration_time <= 0:
        raise DomainError(f'integration time must be positive, got {integration_time}')
    return float((counts.i_atoms - counts.i_min) * integration_time / np.sqrt(counts.i_min * integration_time))


# REGION: [Fluctuating atom number]

class DistributionKind(str, enum.Enum):
    POISSON_MODE = 'poisson_mode'
    ANTINODE = 'antinode'
    FIXED = 'fixed'


@dataclass(frozen=True)
class AtomNumberDistribution:
    """
    Per-drop distribution of N_eff.

    poisson_mode: Poisson number of atoms in the mode, each with intensity cos^2(phi) exp(-X),
    phi uniform, X uniform on [0, 2 (cutoff_waists)^2] (uniform flux over a disk of radius
    cutoff_waists * w_C). antinode: Poisson number of atoms all at I = 1. fixed: N_eff = mean.
    """
    kind: DistributionKind = DistributionKind.POISSON_MODE
    mean_n_eff: float = 1.1
    cutoff_waists: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', DistributionKind(self.kind))
        if not np.isfinite(self.mean_n_eff) or self.mean_n_eff < 0:
            raise DomainError(f'mean N_eff must be non-negative, got {self.mean_n_eff}')
        if not np.isfinite(self.cutoff_waists) or self.cutoff_waists <= 0:
            raise DomainError(f'cutoff_waists must be positive, got {self.cutoff_waists}')

    def with_mean(self, mean_n_eff):
        return AtomNumberDistribution(self.kind, mean_n_eff, self.cutoff_waists)

    @property
    def _x_max(self):
        return 2.0 * self.cutoff_waists ** 2

    @property
    def mean_intensity(self):
        """Mean single-atom intensity <I>."""
        if self.kind is not DistributionKind.POISSON_MODE:
            return 1.0
        a = self._x_max
        return 0.5 * (1.0 - np.exp(-a)) / a

    @property
    def poisson_rate(self):
        """Mean number of atoms in the mode."""
        return self.mean_n_eff / self.mean_intensity

    def draw_intensities(self, rng, size):
        if self.kind is not DistributionKind.POISSON_MODE:
            return np.ones(size)
        phi = rng.uniform(0.0, np.pi, size)
        x = rng.uniform(0.0, self._x_max, size)
        return np.cos(phi) ** 2 * np.exp(-x)

    def draw(self, rng, size):
        """Monte Carlo draws of N_eff."""
        if self.kind is DistributionKind.FIXED:
            return np.full(size, self.mean_n_eff)
        atoms = rng.poisson(self.poisson_rate, size)
        intensity = self.draw_intensities(rng, atoms.sum())
        owner = np.repeat(np.arange(size), atoms)
        return np.bincount(owner, weights=intensity, minlength=size)


def _single_atom_pmf(dist: AtomNumberDistribution, step):
    """Single-atom intensity distribution on the grid k*step, mean preserved exactly."""
    nodes = (np.arange(_INTENSITY_NODES) + 0.5) / _INTENSITY_NODES
    phi = np.pi * nodes
    x = dist._x_max * nodes
    intensity = np.outer(np.cos(phi) ** 2, np.exp(-x)).ravel()
    scaled = intensity / step
    index = np.floor(scaled).astype(int)
    frac = scaled - index
    size = int(np.ceil(1.0 / step)) + 2
    pmf = np.bincount(index, weights=1.0 - frac, minlength=size) + np.bincount(index + 1, weights=frac, minlength=size)
    return pmf / pmf.sum()


def neff_distribution(dist: AtomNumberDistribution, step=_NEFF_STEP):
    """
    Deterministic N_eff distribution as (values, probabilities), negligible tails pruned.

    The compound-Poisson law is evaluated through its characteristic function on an FFT grid.
    """
    if dist.kind is DistributionKind.FIXED or dist.mean_n_eff == 0:
        return np.array([dist.mean_n_eff]), np.array([1.0])

    rate = dist.poisson_rate
    if dist.kind is DistributionKind.ANTINODE:
        k_max = int(np.ceil(rate + 12.0 * np.sqrt(rate) + 10.0))
        k = np.arange(k_max + 1)
        pmf = stats.poisson.pmf(k, rate)
        values = k.astype(float)
    else:
        single = _single_atom_pmf(dist, step)
        mean_sq = float(np.dot((np.arange(single.size) * step) ** 2, single))
        span = dist.mean_n_eff + 12.0 * np.sqrt(rate * mean_sq) + 2.0
        size = 1 << int(np.ceil(np.log2(max(span / step, single.size) + 1)))
        padded = np.zeros(size)
        padded[:single.size] = single
        pmf = np.fft.irfft(np.exp(rate * (np.fft.rfft(padded) - 1.0)), n=size)
        pmf = np.clip(pmf, 0.0, None)
        values = np.arange(size) * step

    keep = pmf > _PMF_FLOOR
    pmf = pmf[keep]
    return values[keep], pmf / pmf.sum()


def averaged_lineshape(v, distribution: AtomNumberDistribution, laser_linewidth, delta, C=0.8,
                       zeeman_factor=_consts._RB85_D2.ZEEMAN_FACTOR, gamma=_consts._RB85_D2.GAMMA,
                       method='quadrature', seed=None, n_samples=20000):
    """
    Reflected fraction versus Delta averaged over drop-to-drop N_eff fluctuations and a
    Gaussian laser line of FWHM `laser_linewidth` (rad/s).

    method='quadrature' is deterministic (compound-Poisson distribution on a grid plus
    Gauss-Hermite nodes for the laser line); method='montecarlo' averages n_samples seeded draws.
    """
    _check_visibility(v)
    if not np.isfinite(laser_linewidth) or laser_linewidth < 0:
        raise DomainError(f'laser linewidth must be non-negative, got {laser_linewidth}')
    delta = np.asarray(delta, dtype=float)
    sigma = laser_linewidth / gamma / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    scale = zeeman_factor * C

    if method == 'montecarlo':
        rng = as_generator(seed)
        n_eff = distribution.draw(rng, n_samples)
        offsets = sigma * rng.normal(0.0, 1.0, n_samples)
        curve = np.array([
            float(np.mean(reflected_fraction_detuned(v, scale * n_eff, d + offsets)))
            for d in delta.ravel()
        ])
        return curve.reshape(delta.shape)
    if method != 'quadrature':
        raise DomainError(f'unknown averaging method {method!r}')

    values, weights = neff_distribution(distribution)
    if sigma > 0:
        nodes, node_weights = np.polynomial.hermite_e.hermegauss(_LINEWIDTH_NODES)
        node_weights = node_weights / node_weights.sum()
    else:
        nodes, node_weights = np.zeros(1), np.ones(1)

    c_tot = scale * values
    curve = np.zeros(delta.size)
    for i, d in enumerate(delta.ravel()):
        shifted = d + sigma * nodes
        f = reflected_fraction_detuned(v, c_tot[:, None], shifted[None, :])
        curve[i] = float(weights @ f @ node_weights)
    return curve.reshape(delta.shape) if delta.ndim else float(curve[0])

# ENDREGION: [Fluctuating atom number]
