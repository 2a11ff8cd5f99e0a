"""
Photon-counting chain: Poisson arrivals, beamsplitter and detector losses, APD dead time and
binning, plus the variance-to-mean statistics taken across repeated cloud drops.
"""
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Tuple

import numpy as np
import xarray as xr
from numba import njit

from . import _consts
from .cavity_core import CavitySpec, kappa_from_geometry
from ..cli.module_log import Logger
from ..utils.module_rng import map_drops, substream
from ..utils.status_exception import DomainError, SaturationError


# Points per bin at which a rate function is sampled to build its thinning envelope.
_ENVELOPE_POINTS = 8
_ENVELOPE_MARGIN = 1.2

# Dead-time corrections beyond this r*tau are logged as unreliable.
_SATURATION_MARGIN = 0.05


@dataclass(frozen=True)
class DetectionChainSpec:
    beamsplitter_transmission: float = _consts._REFERENCE_RUN.BEAMSPLITTER_TRANSMISSION
    detector_efficiency: float = _consts._REFERENCE_RUN.DETECTOR_EFFICIENCY
    dead_time: float = _consts._REFERENCE_RUN.DEAD_TIME

    def __post_init__(self):
        for name in ('beamsplitter_transmission', 'detector_efficiency'):
            value = getattr(self, name)
            if not np.isfinite(value) or not 0.0 < value <= 1.0:
                raise DomainError(f'chain.{name} must lie in (0, 1], got {value}')
        if not np.isfinite(self.dead_time) or self.dead_time < 0:
            raise DomainError(f'chain.dead_time must be non-negative, got {self.dead_time}')

    @property
    def eta(self):
        """Net detection efficiency."""
        return self.beamsplitter_transmission * self.detector_efficiency


@dataclass(frozen=True)
class CountSeries:
    """
    Counts per bin for every trial (drop), shape (n_trials, n_bins).

    Raw series hold integers; dead-time corrected series hold real-valued counts.
    """
    counts: np.ndarray
    bin_width: float
    t0: float = 0.0
    eta: float = 1.0
    dead_time: float = 0.0
    corrections: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        counts = np.atleast_2d(np.asarray(self.counts))
        if counts.ndim != 2:
            raise DomainError('counts must be a (trials, bins) array')
        if np.any(counts < 0):
            raise DomainError('counts must be non-negative')
        if not np.isfinite(self.bin_width) or self.bin_width <= 0:
            raise DomainError(f'bin width must be positive, got {self.bin_width}')
        object.__setattr__(self, 'counts', counts)
        object.__setattr__(self, 'corrections', tuple(self.corrections))

    @property
    def n_trials(self):
        return self.counts.shape[0]

    @property
    def n_bins(self):
        return self.counts.shape[1]

    @property
    def times(self):
        """Bin centres."""
        return self.t0 + (np.arange(self.n_bins) + 0.5) * self.bin_width

    @property
    def rates(self):
        return self.counts / self.bin_width

    def mean_counts(self):
        return self.counts.mean(axis=0)

    def to_dataset(self):
        return xr.Dataset(
            data_vars=dict(
                counts=(['drop', 'time'], self.counts),
            ),
            coords=dict(
                drop=np.arange(self.n_trials),
                time=self.times,
            ),
            attrs=dict(
                bin_width=self.bin_width,
                eta=self.eta,
                dead_time=self.dead_time,
                corrections=','.join(self.corrections),
            ),
        )


class JitterNoise(NamedTuple):
    excess_fano: float
    sensitivity: float
    detuning_rms: float


@njit
def _non_paralyzable(times, dead_time):
    keep = np.zeros(times.size, dtype=np.bool_)
    last = -np.inf
    for i in range(times.size):
        if times[i] - last >= dead_time:
            keep[i] = True
            last = times[i]
    return keep


def non_paralyzable_filter(times, dead_time):
    """Boolean mask of the sorted arrival times surviving a non-paralyzable dead time."""
    times = np.ascontiguousarray(times, dtype=np.float64)
    if dead_time <= 0 or times.size == 0:
        return np.ones(times.size, dtype=bool)
    return _non_paralyzable(times, float(dead_time))


def _bin_rates(rate, n_drops, n_bins, edges):
    """Per-(drop, bin) constant rates, or None when `rate` is a function of time."""
    if callable(rate):
        return None
    rate = np.asarray(rate, dtype=float)
    if rate.ndim == 0:
        rate = np.full((n_drops, n_bins), float(rate))
    elif rate.ndim == 1:
        if rate.size != n_bins:
            raise DomainError(f'rate table has {rate.size} bins, expected {n_bins}')
        rate = np.broadcast_to(rate, (n_drops, n_bins))
    elif rate.shape != (n_drops, n_bins):
        raise DomainError(f'rate table has shape {rate.shape}, expected {(n_drops, n_bins)}')
    if np.any(~np.isfinite(rate)) or np.any(rate < 0):
        raise DomainError('count rate must be finite and non-negative')
    return rate


def _arrivals_piecewise(rng, rate, edges):
    width = np.diff(edges)
    n = rng.poisson(rate * width)
    starts = np.repeat(edges[:-1], n)
    return np.sort(starts + rng.random(n.sum()) * np.repeat(width, n))


def _arrivals_thinned(rng, rate_fn, edges):
    """Inhomogeneous Poisson arrivals by thinning against a per-bin envelope."""
    width = np.diff(edges)
    probe = edges[:-1, None] + width[:, None] * np.linspace(0.0, 1.0, _ENVELOPE_POINTS)[None, :]
    sampled = np.asarray(rate_fn(probe), dtype=float)
    if np.any(~np.isfinite(sampled)) or np.any(sampled < 0):
        raise DomainError('count rate must be finite and non-negative')
    envelope = _ENVELOPE_MARGIN * sampled.max(axis=1)
    n = rng.poisson(envelope * width)
    candidates = np.repeat(edges[:-1], n) + rng.random(n.sum()) * np.repeat(width, n)
    bound = np.repeat(envelope, n)
    actual = np.asarray(rate_fn(candidates), dtype=float)
    if np.any(actual < 0):
        raise DomainError('count rate must be non-negative')
    if np.any(actual > bound):
        Logger.warning('rate function exceeds its thinning envelope, arrivals are undersampled')
    accept = rng.random(candidates.size) * bound < actual
    return np.sort(candidates[accept])


def generate_counts(rate, chain: DetectionChainSpec, bin_width, duration, seed=None, n_drops=1, t0=0.0, threads=1) -> CountSeries:
    """
    Simulate the detected counts of `n_drops` independent trials.

    `rate` (counts/s at the detector input) is a constant, a per-bin table, a per-(drop, bin)
    table or a vectorised function R(t). Arrivals are thinned with the net efficiency, passed
    through the non-paralyzable dead time and binned. Drop i uses its own random substream,
    so the result does not depend on `threads`.
    """
    if not np.isfinite(duration) or duration <= 0:
        raise DomainError(f'duration must be positive, got {duration}')
    if not np.isfinite(bin_width) or bin_width <= 0:
        raise DomainError(f'bin width must be positive, got {bin_width}')
    if n_drops < 1:
        raise DomainError(f'n_drops must be >= 1, got {n_drops}')
    n_bins = max(1, int(round(duration / bin_width)))
    edges = t0 + np.arange(n_bins + 1) * bin_width
    table = _bin_rates(rate, n_drops, n_bins, edges)

    def one_drop(drop):
        rng = substream(seed, 'counts', drop)
        if table is None:
            arrivals = _arrivals_thinned(rng, rate, edges)
        else:
            arrivals = _arrivals_piecewise(rng, table[drop], edges)
        arrivals = arrivals[rng.random(arrivals.size) < chain.eta]
        arrivals = arrivals[non_paralyzable_filter(arrivals, chain.dead_time)]
        return np.histogram(arrivals, bins=edges)[0]

    counts = np.stack(map_drops(one_drop, n_drops, threads))
    Logger.debug(f'Simulated {n_drops} drops x {n_bins} bins, {int(counts.sum())} detected counts')
    return CountSeries(counts=counts, bin_width=float(bin_width), t0=float(t0), eta=chain.eta, dead_time=chain.dead_time)


def dead_time_correct(series: CountSeries, dead_time=None) -> CountSeries:
    """
    Invert the non-paralyzable dead time bin by bin, n = r / (1 - r tau).
    """
    dead_time = series.dead_time if dead_time is None else dead_time
    if not np.isfinite(dead_time) or dead_time < 0:
        raise DomainError(f'dead time must be non-negative, got {dead_time}')
    rates = series.rates
    load = rates * dead_time
    if np.any(load >= 1.0):
        raise SaturationError(f'measured rate saturates the detector: r*tau reaches {load.max():.3f}')
    if load.size and load.max() > _SATURATION_MARGIN:
        Logger.warning(f'dead-time correction at r*tau = {load.max():.3f}, variance distortion is not corrected')
    corrected = rates / (1.0 - load) * series.bin_width
    return replace(series, counts=corrected, dead_time=dead_time, corrections=series.corrections + ('dead_time',))


def fano(series: CountSeries, across='drops'):
    """
    Per-bin variance-to-mean ratio across trials (unbiased variance); bins with zero mean are masked.
    """
    if across != 'drops':
        raise DomainError(f'fano factor can only be taken across drops, got {across!r}')
    if series.n_trials < 2:
        raise DomainError(f'fano factor needs at least 2 trials, got {series.n_trials}')
    mean = series.counts.mean(axis=0)
    var = series.counts.var(axis=0, ddof=1)
    masked = mean <= 0
    ratio = np.divide(var, mean, out=np.zeros_like(mean, dtype=float), where=~masked)
    return np.ma.masked_array(ratio, mask=masked)


def fano_band(n_trials):
    """Standard deviation of a Poisson Fano estimate over n_trials, sqrt(2/(n-1))."""
    if n_trials < 2:
        raise DomainError(f'fano band needs at least 2 trials, got {n_trials}')
    return float(np.sqrt(2.0 / (n_trials - 1)))


def loss_correct_fano(f, eta):
    """f_corr = 1 + (f - 1)/eta, undoing the approach to shot noise caused by binomial losses."""
    if not np.isfinite(eta) or not 0.0 < eta <= 1.0:
        raise DomainError(f'efficiency must lie in (0, 1], got {eta}')
    return 1.0 + (f - 1.0) / eta


# REGION: [Cavity length jitter]

def detuning_per_length(spec: CavitySpec):
    """Cavity detuning in units of kappa produced by one metre of length change, omega_C/(kappa L)."""
    return spec.omega_C / (kappa_from_geometry(spec) * spec.length)


def _jitter_amplitude(v, c_tot, x):
    return -1.0 + v / (2.0 * c_tot + 1.0 + 1j * x)


def jittered_fraction(v, c_tot, x):
    """Reflected fraction with the cavity detuned by x (units of kappa) from the laser."""
    return np.abs(_jitter_amplitude(v, np.asarray(c_tot, dtype=float), np.asarray(x, dtype=float))) ** 2


def cavity_jitter_noise(v, c_tot, jitter_rms, spec: CavitySpec, counts_per_bin, lock_offset=0.2,
                        method='linear', seed=None, n_samples=20000) -> JitterNoise:
    """
    Excess variance-to-mean caused by Gaussian cavity-length jitter of rms `jitter_rms` (m).

    The detuning x = (omega_C/(kappa L)) dL around `lock_offset` (units of kappa) modulates the
    reflected fraction f(x); with Phi = `counts_per_bin` the off-resonant counts per bin, the
    first-order excess is Phi f'(x0)^2 sigma_x^2 / f(x0). method='montecarlo' evaluates
    Phi Var[f]/E[f] by seeded sampling instead.
    """
    if not np.isfinite(jitter_rms) or jitter_rms < 0:
        raise DomainError(f'jitter rms must be non-negative, got {jitter_rms}')
    if counts_per_bin < 0:
        raise DomainError(f'counts per bin must be non-negative, got {counts_per_bin}')
    x_rms = detuning_per_length(spec) * jitter_rms
    amplitude = _jitter_amplitude(v, c_tot, lock_offset)
    derivative = -1j * v / (2.0 * c_tot + 1.0 + 1j * lock_offset) ** 2
    slope = float(2.0 * np.real(np.conj(amplitude) * derivative))
    f0 = float(np.abs(amplitude) ** 2)

    if method == 'linear':
        excess = counts_per_bin * slope ** 2 * x_rms ** 2 / f0 if f0 > 0 else 0.0
    elif method == 'montecarlo':
        rng = substream(seed, 'jitter', 0)
        f = jittered_fraction(v, c_tot, lock_offset + x_rms * rng.normal(0.0, 1.0, n_samples))
        excess = counts_per_bin * float(f.var(ddof=1) / f.mean())
    else:
        raise DomainError(f'unknown jitter method {method!r}')
    return JitterNoise(excess_fano=float(excess), sensitivity=slope, detuning_rms=float(x_rms))

# ENDREGION: [Cavity length jitter]
