"""
Monte Carlo of a cold-atom cloud released above the cavity.

The cloud falls ballistically under gravity (-z) through the horizontal cavity mode centred
at the origin. Only a tiny fraction of the atoms ever crosses the mode, so the cloud is
sampled in two strata: trajectories crossing the acceptance window of the mode (drawn
exactly from the conditional distribution) and the complement, with weights such that the
weighted ensemble is unbiased for the full cloud.
"""
import enum
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
import xarray as xr
from scipy import special, stats

from . import _consts
from .cavity_core import CouplingRates
from .mode_field import ModeGeometry, mode_intensity
from ..cli.module_log import Logger
from ..utils.module_rng import as_generator
from ..utils.status_exception import DomainError


# Samples slower than this through the mode plane are evaluated at every time step.
_SLOW_TRANSIT = 1e-3


class InternalState(str, enum.Enum):
    BRIGHT = 'bright'
    DARK = 'dark'


@dataclass(frozen=True)
class CloudSpec:
    atom_count: float = _consts._REFERENCE_RUN.ATOM_COUNT
    height: float = _consts._REFERENCE_RUN.DROP_HEIGHT
    rms_radius: float = 0.5e-3
    temperature: float = 25e-6
    mass: float = _consts._RB85_D2.MASS

    def __post_init__(self):
        checks = {
            'atom_count': self.atom_count >= 0,
            'height': self.height > 0,
            'rms_radius': self.rms_radius >= 0,
            'temperature': self.temperature >= 0,
            'mass': self.mass > 0,
        }
        for name, ok in checks.items():
            value = getattr(self, name)
            if not np.isfinite(value) or not ok:
                raise DomainError(f'cloud.{name} out of range: {value}')

    @property
    def velocity_spread(self):
        """One-dimensional rms velocity sqrt(kT/m)."""
        return float(np.sqrt(_consts.K_BOLTZMANN * self.temperature / self.mass))


class AtomSample(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    weight: float
    internal_state: InternalState


@dataclass(frozen=True)
class AtomSamples:
    """
    Vectorised ensemble of weighted samples.

    position/velocity hold the state at t_ref; kick_velocity is added from kick_time on
    (photon recoil); a sample is bright while t < dark_time.
    """
    position: np.ndarray
    velocity: np.ndarray
    weight: np.ndarray
    dark_time: np.ndarray
    in_slab: np.ndarray
    kick_velocity: np.ndarray
    kick_time: np.ndarray
    t_ref: float = 0.0

    @classmethod
    def build(cls, position, velocity, weight, in_slab=None, t_ref=0.0):
        position = np.asarray(position, dtype=float).reshape(-1, 3)
        n = len(position)
        return cls(
            position=position,
            velocity=np.asarray(velocity, dtype=float).reshape(-1, 3),
            weight=np.asarray(weight, dtype=float).reshape(n),
            dark_time=np.full(n, np.inf),
            in_slab=np.ones(n, dtype=bool) if in_slab is None else np.asarray(in_slab, dtype=bool),
            kick_velocity=np.zeros((n, 3)),
            kick_time=np.full(n, np.inf),
            t_ref=float(t_ref),
        )

    @classmethod
    def empty(cls):
        return cls.build(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0))

    def __len__(self):
        return len(self.weight)

    def __getitem__(self, index):
        return AtomSample(self.position[index], self.velocity[index], float(self.weight[index]), self.internal_state(self.t_ref)[index])

    def bright(self, t):
        return t < self.dark_time

    def internal_state(self, t):
        # object array of members, never a str array
        state = np.full(len(self), InternalState.DARK, dtype=object)
        state[self.bright(t)] = InternalState.BRIGHT
        return state

    def subset(self, mask):
        return replace(
            self,
            position=self.position[mask], velocity=self.velocity[mask], weight=self.weight[mask],
            dark_time=self.dark_time[mask], in_slab=self.in_slab[mask],
            kick_velocity=self.kick_velocity[mask], kick_time=self.kick_time[mask],
        )

    @property
    def total_weight(self):
        return float(self.weight.sum())


class EmissionEvents(NamedTuple):
    time: np.ndarray
    sample_index: np.ndarray
    branching: np.ndarray
    weight: np.ndarray

    @property
    def expected_photons(self):
        """Expected number of cavity photons per scatter, counting the sample weights."""
        return self.weight * self.branching


class ExcitationResult(NamedTuple):
    samples: AtomSamples
    events: EmissionEvents


class CloudCalibration(NamedTuple):
    factor: float
    cloud: CloudSpec
    peak_before: float
    peak_after: float


def _gravity_vector(gravity):
    return np.array([0.0, 0.0, -float(gravity)])


def _horizontal_frame(geom: ModeGeometry):
    axis = np.asarray(geom.direction)
    if abs(axis[2]) > 1e-9:
        raise DomainError('the cloud simulation needs a horizontal cavity axis')
    across = np.cross([0.0, 0.0, 1.0], axis)
    return axis, across


def arrival_time(height, gravity=_consts.G_EARTH):
    """Free-fall time from rest through `height`."""
    return float(np.sqrt(2.0 * height / gravity))


def crossing_time(z0, vz, gravity=_consts.G_EARTH):
    """
    Time at which a trajectory starting at height z0 with vertical velocity vz crosses
    the mode plane downwards; NaN when it never reaches it.
    """
    z0 = np.asarray(z0, dtype=float)
    vz = np.asarray(vz, dtype=float)
    disc = vz * vz + 2.0 * gravity * z0
    root = np.sqrt(np.where(disc >= 0, disc, np.nan))
    t = (vz + root) / gravity
    return np.where(t >= 0, t, np.nan)


def _window_probability(half_width, spread):
    spread = np.asarray(spread, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        p = special.erf(half_width / (np.sqrt(2.0) * spread))
    return np.where(spread > 0, p, 1.0)


def _truncated_normal(rng, lower, upper, scale):
    """Draws of N(0, scale^2) restricted to [lower, upper], elementwise."""
    scale = np.asarray(scale, dtype=float)
    out = np.zeros(np.broadcast(lower, upper, scale).shape)
    ok = scale > 0
    if np.any(ok):
        lo = np.broadcast_to(lower, out.shape)[ok] / scale[ok]
        hi = np.broadcast_to(upper, out.shape)[ok] / scale[ok]
        out[ok] = stats.truncnorm.rvs(lo, hi, scale=scale[ok], random_state=rng)
    return out


def _outside_window(rng, half_x, half_y, spread):
    """Horizontal crossing points drawn from N(0, spread^2 I) conditioned outside the window."""
    n = len(spread)
    px = _window_probability(half_x, spread)
    py = _window_probability(half_y, spread)
    p_x_out = 1.0 - px
    p_y_out = px * (1.0 - py)
    x_out = rng.random(n) * (p_x_out + p_y_out) < p_x_out
    side_x = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    side_y = np.where(rng.random(n) < 0.5, -1.0, 1.0)

    ux = np.where(x_out, side_x * _truncated_normal(rng, half_x, np.inf, spread), _truncated_normal(rng, -half_x, half_x, spread))
    uy = np.where(x_out, rng.normal(0.0, 1.0, n) * spread, side_y * _truncated_normal(rng, half_y, np.inf, spread))
    return ux, uy


def _initial_conditions(rng, crossing, t_cross, radius, v_spread):
    """
    Initial horizontal position and velocity along one axis given the crossing coordinate:
    (a0, va) ~ N(0, diag(radius^2, v_spread^2)) conditioned on a0 + va * t_cross = crossing.
    """
    s2 = radius ** 2 + (v_spread * t_cross) ** 2
    with np.errstate(divide='ignore', invalid='ignore'):
        mean_v = np.where(s2 > 0, v_spread ** 2 * t_cross / s2 * crossing, 0.0)
        sd_v = np.where(s2 > 0, radius * v_spread / np.sqrt(s2), 0.0)
    va = mean_v + sd_v * rng.normal(0.0, 1.0, np.shape(crossing))
    a0 = crossing - va * t_cross
    return a0, va


def _assemble(geom, height_offset, a_x, a_y, z0, v_x, v_y, vz):
    axis, across = _horizontal_frame(geom)
    origin = np.asarray(geom.origin)
    up = np.array([0.0, 0.0, 1.0])
    position = origin + np.outer(a_x, axis) + np.outer(a_y, across) + np.outer(z0 + height_offset, up)
    velocity = np.outer(v_x, axis) + np.outer(v_y, across) + np.outer(vz, up)
    return position, velocity


def sample_cloud(spec: CloudSpec, seed, sample_budget, geom: ModeGeometry = None, gravity=_consts.G_EARTH, physical=False) -> AtomSamples:
    """
    Draw an importance-sampled representation of the released cloud.

    Positions are isotropic Gaussian around (0, 0, height) above the mode, velocities
    Maxwell-Boltzmann. Vertical phase space is drawn from the true distribution; the
    horizontal crossing point is drawn inside (stratum "slab") or outside (stratum
    "complement") the acceptance window, weights carry the window probabilities so that
    the total weight equals atom_count.

    With physical=True the slab holds a Poisson number of unit-weight atoms instead and
    the complement is not represented.
    """
    if sample_budget is None or int(sample_budget) < 1:
        raise DomainError(f'sample_budget must be >= 1, got {sample_budget}')
    sample_budget = int(sample_budget)
    geom = geom or ModeGeometry()
    rng = as_generator(seed)

    if spec.atom_count == 0:
        return AtomSamples.empty()

    half_x, half_y = geom.acceptance_half_widths()
    sigma, v_spread = spec.rms_radius, spec.velocity_spread

    def vertical(n):
        z0 = spec.height + sigma * rng.normal(0.0, 1.0, n)
        vz = v_spread * rng.normal(0.0, 1.0, n)
        t_cross = crossing_time(z0, vz, gravity)
        spread = np.sqrt(sigma ** 2 + (v_spread * np.nan_to_num(t_cross)) ** 2)
        p_slab = np.where(np.isfinite(t_cross), _window_probability(half_x, spread) * _window_probability(half_y, spread), 0.0)
        return z0, vz, t_cross, spread, p_slab

    def inside(z0, vz, t_cross, spread):
        ux = _truncated_normal(rng, -half_x, half_x, spread)
        uy = _truncated_normal(rng, -half_y, half_y, spread)
        a_x, v_x = _initial_conditions(rng, ux, t_cross, sigma, v_spread)
        a_y, v_y = _initial_conditions(rng, uy, t_cross, sigma, v_spread)
        return _assemble(geom, 0.0, a_x, a_y, z0, v_x, v_y, vz)

    if physical:
        z0, vz, t_cross, spread, p_slab = vertical(sample_budget)
        p_hat = float(p_slab.mean())
        n_atoms = int(rng.poisson(spec.atom_count * p_hat))
        Logger.debug(f'Physical cloud: slab probability {p_hat:.3e}, {n_atoms} atoms cross the mode')
        if n_atoms == 0:
            return AtomSamples.empty()
        pick = rng.choice(sample_budget, size=n_atoms, replace=True, p=p_slab / p_slab.sum())
        position, velocity = inside(z0[pick], vz[pick], t_cross[pick], spread[pick])
        return AtomSamples.build(position, velocity, np.ones(n_atoms))

    n_out = sample_budget // 100 if sample_budget >= 2 else 0
    n_in = sample_budget - n_out

    z0, vz, t_cross, spread, p_slab = vertical(n_in)
    p_hat = float(p_slab.mean())
    keep = p_slab > 0
    position, velocity = inside(z0[keep], vz[keep], np.nan_to_num(t_cross[keep]), spread[keep])
    weight = spec.atom_count * p_slab[keep] / n_in
    slab = AtomSamples.build(position, velocity, weight)

    parts = [slab]
    if n_out and p_hat < 1.0:
        z0, vz, t_cross, spread, p_slab = vertical(n_out)
        q = 1.0 - p_slab
        keep = q > 0
        if np.any(keep):
            t_k = np.nan_to_num(t_cross[keep])
            ux, uy = _outside_window(rng, half_x, half_y, spread[keep])
            a_x, v_x = _initial_conditions(rng, ux, t_k, sigma, v_spread)
            a_y, v_y = _initial_conditions(rng, uy, t_k, sigma, v_spread)
            position, velocity = _assemble(geom, 0.0, a_x, a_y, z0[keep], v_x, v_y, vz[keep])
            weight = spec.atom_count * (1.0 - p_hat) * q[keep] / q[keep].sum()
            parts.append(AtomSamples.build(position, velocity, weight, in_slab=np.zeros(keep.sum(), dtype=bool)))

    Logger.debug(f'Cloud sampled: slab probability {p_hat:.3e}, {len(slab)} slab samples, {sum(map(len, parts)) - len(slab)} complement samples')
    if len(parts) == 1:
        return slab
    return AtomSamples.build(
        np.concatenate([p.position for p in parts]),
        np.concatenate([p.velocity for p in parts]),
        np.concatenate([p.weight for p in parts]),
        in_slab=np.concatenate([p.in_slab for p in parts]),
    )


def _positions_at(samples: AtomSamples, t, gravity, index=slice(None)):
    dt = t - samples.t_ref
    kick_dt = np.maximum(t - samples.kick_time[index], 0.0)
    return (
        samples.position[index]
        + samples.velocity[index] * dt
        + 0.5 * _gravity_vector(gravity) * dt * dt
        + samples.kick_velocity[index] * kick_dt[:, None]
    )


def propagate(samples: AtomSamples, t, gravity=_consts.G_EARTH) -> AtomSamples:
    """
    Closed-form ballistic state at time t: r = r0 + v0 t + g t^2 / 2, v = v0 + g t
    (plus any photon-recoil kick acquired before t).
    """
    if t < 0:
        raise DomainError(f'propagation time must be >= 0, got {t}')
    dt = t - samples.t_ref
    kicked = (t >= samples.kick_time)[:, None]
    position = _positions_at(samples, t, gravity)
    velocity = samples.velocity + _gravity_vector(gravity) * dt + np.where(kicked, samples.kick_velocity, 0.0)
    return replace(
        samples,
        position=position,
        velocity=velocity,
        kick_velocity=np.where(kicked, 0.0, samples.kick_velocity),
        t_ref=float(t),
    )


def _transit_windows(samples: AtomSamples, geom: ModeGeometry, gravity):
    """Crossing time and half-duration of the passage through the mode for every slab sample."""
    vz_ref = samples.velocity[:, 2]
    z_ref = samples.position[:, 2] - geom.origin[2]
    t_cross = samples.t_ref + crossing_time(z_ref, vz_ref, gravity)
    speed = np.abs(vz_ref - gravity * (t_cross - samples.t_ref))
    with np.errstate(divide='ignore', invalid='ignore'):
        half = (geom.acceptance_half_widths()[1] + geom.waist) / speed
    return t_cross, half


def transit_trace(samples: AtomSamples, geom: ModeGeometry, rates: CouplingRates, times, gravity=_consts.G_EARTH,
                  zeeman_factor=_consts._RB85_D2.ZEEMAN_FACTOR) -> xr.Dataset:
    """
    Time-resolved ensemble coupling of the falling cloud.

    Returns a Dataset on the `time` coordinate with C_tot(t), N_eff(t) (bright samples only,
    weights multiplying intensities) and the weighted number of bright atoms.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or (times.size > 1 and np.any(np.diff(times) <= 0)):
        raise DomainError('time grid must be strictly increasing')

    n_eff = np.zeros(times.size)
    bright_atoms = np.zeros(times.size)

    slab = np.flatnonzero(samples.in_slab)
    if slab.size:
        t_cross, half = _transit_windows(samples.subset(slab), geom, gravity)
        # trajectories that are kicked later may still cross, so they are always evaluated
        slow = ~np.isfinite(t_cross) | (half > _SLOW_TRANSIT) | np.isfinite(samples.kick_time[slab])
        always = slab[slow]
        regular = slab[~slow]
        order = np.argsort(t_cross[~slow], kind='stable')
        regular, t_sorted = regular[order], t_cross[~slow][order]
        half_max = float(half[~slow].max()) if regular.size else 0.0

        for i, t in enumerate(times):
            lo, hi = np.searchsorted(t_sorted, [t - half_max, t + half_max])
            index = np.concatenate([regular[lo:hi], always])
            if not index.size:
                continue
            index = index[samples.dark_time[index] > t]
            if not index.size:
                continue
            intensity = mode_intensity(geom, _positions_at(samples, t, gravity, index))
            n_eff[i] = float(np.dot(samples.weight[index], intensity))

    if len(samples):
        order = np.argsort(samples.dark_time, kind='stable')
        tail = np.concatenate([np.cumsum(samples.weight[order][::-1])[::-1], [0.0]])
        bright_atoms = tail[np.searchsorted(samples.dark_time[order], times, side='right')]

    c_tot = zeeman_factor * rates.C * n_eff
    return xr.Dataset(
        data_vars=dict(
            c_tot=(['time'], c_tot),
            n_eff=(['time'], n_eff),
            bright_atoms=(['time'], bright_atoms),
        ),
        coords=dict(time=times),
        attrs=dict(cooperativity=rates.C, zeeman_factor=zeeman_factor),
    )


def _group_cumsum(values, counts):
    """Cumulative sum restarted at every group boundary."""
    total = np.cumsum(values)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    offsets = np.repeat(total[starts] - values[starts], counts)
    return total - offsets


def apply_excitation(samples: AtomSamples, turn_on, geom: ModeGeometry, rates: CouplingRates, seed, *, recoil_velocity,
                     pump_photon_budget=3.0, scatter_rate=1e7,
                     beam_direction=(0.0, 0.0, 1.0), cavity_factor=1.0, gravity=_consts.G_EARTH,
                     zeeman_factor=_consts._RB85_D2.ZEEMAN_FACTOR) -> ExcitationResult:
    """
    Resonant excitation pulse switched on at `turn_on`.

    Every atom still bright scatters photons at `scatter_rate` until it is pumped dark after a
    geometric number of scatters (mean `pump_photon_budget`). Each scatter emits into the cavity
    with probability 2 C_loc / (1 + 2 C_loc), C_loc = zeeman_factor * C * I(r) * cavity_factor,
    and pushes the atom by `recoil_velocity` (TransitionSpec.recoil_velocity) along `beam_direction`.
    """
    if turn_on < samples.t_ref or turn_on < 0:
        raise DomainError(f'excitation turn-on {turn_on} s precedes the simulation start')
    if pump_photon_budget < 1:
        raise DomainError(f'pump_photon_budget must be >= 1, got {pump_photon_budget}')
    if scatter_rate <= 0:
        raise DomainError(f'scatter_rate must be positive, got {scatter_rate}')
    if recoil_velocity < 0:
        raise DomainError(f'recoil_velocity must be >= 0, got {recoil_velocity}')
    rng = as_generator(seed)
    beam = np.asarray(beam_direction, dtype=float)
    beam = beam / np.linalg.norm(beam)

    bright = np.flatnonzero(samples.dark_time > turn_on)
    if not bright.size:
        empty = np.zeros(0)
        return ExcitationResult(samples, EmissionEvents(empty, np.zeros(0, dtype=int), empty, empty))

    n_scatter = rng.geometric(1.0 / pump_photon_budget, size=bright.size)
    atom = np.repeat(bright, n_scatter)
    waits = rng.exponential(1.0 / scatter_rate, size=atom.size)
    times = turn_on + _group_cumsum(waits, n_scatter)

    # recoil from earlier scatters of the same atom: sum_{j<k} (t_k - t_j)
    rank = _group_cumsum(np.ones(atom.size), n_scatter) - 1.0
    earlier = _group_cumsum(times, n_scatter) - times
    displacement = (rank * times - earlier)[:, None] * recoil_velocity * beam

    dt = times - samples.t_ref
    position = samples.position[atom] + samples.velocity[atom] * dt[:, None] + 0.5 * _gravity_vector(gravity) * (dt * dt)[:, None] + displacement
    c_loc = zeeman_factor * rates.C * mode_intensity(geom, position) * cavity_factor
    branching = 2.0 * c_loc / (1.0 + 2.0 * c_loc)

    last = np.cumsum(n_scatter) - 1
    first = last - n_scatter + 1
    dark_time = samples.dark_time.copy()
    dark_time[bright] = times[last]
    kick_velocity = samples.kick_velocity.copy()
    kick_velocity[bright] += n_scatter[:, None] * recoil_velocity * beam
    kick_time = samples.kick_time.copy()
    kick_time[bright] = 0.5 * (times[first] + times[last])

    Logger.debug(f'Excitation at {turn_on * 1e3:.3f} ms: {bright.size} bright samples, {atom.size} scatters, '
                 f'{float(np.dot(samples.weight[atom], branching)):.3g} expected cavity photons')
    after = replace(samples, dark_time=dark_time, kick_velocity=kick_velocity, kick_time=kick_time)
    events = EmissionEvents(time=times, sample_index=atom, branching=branching, weight=samples.weight[atom])
    return ExcitationResult(after, events)


def calibrate_cloud(spec: CloudSpec, trace: xr.Dataset, target_peak=_consts._REFERENCE_RUN.PEAK_N_EFF) -> CloudCalibration:
    """
    Rescale the atom number so the peak of the (drop-averaged) N_eff trace equals target_peak.

    N_eff is linear in the sample weights, so the rescaled cloud reproduces the target exactly
    for the same random streams.
    """
    peak = float(trace['n_eff'].max())
    if peak <= 0:
        raise DomainError('cannot calibrate a cloud that never reaches the mode')
    factor = target_peak / peak
    Logger.info(f'Cloud calibration factor {factor:.4g} (peak N_eff {peak:.4g} -> {target_peak})')
    return CloudCalibration(factor=factor, cloud=replace(spec, atom_count=spec.atom_count * factor), peak_before=peak, peak_after=target_peak)
