"""
Least-squares estimation of the mean effective atom number from detuning scans.

The model is the fluctuation- and linewidth-averaged reflected fraction of `reflection`.
The optimizer is a projected Levenberg-Marquardt iteration with central-difference
derivatives: the diagonal of J^T J is scaled by (1 + lambda), lambda is divided by 10 on an
accepted step and multiplied by 10 on a rejected one.
"""
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import optimize

from . import _consts
from .reflection import (
    AtomNumberDistribution, CountRateTriple, DistributionKind,
    averaged_lineshape, invert_to_cooperativity, reflected_fraction_detuned,
)
from ..cli.module_log import Logger
from ..utils.module_rng import substream
from ..utils.status_exception import DomainError, FitConvergenceError, RankDeficiencyError


_PARAMETERS = ('n_eff', 'visibility', 'linewidth')
_MIN_POINTS = 5
_GUESS_FLOOR = 0.05


@dataclass(frozen=True)
class ScanDataset:
    delta: np.ndarray
    fraction: np.ndarray
    sigma: np.ndarray
    v: float
    C: float = 0.8
    gamma: float = _consts._RB85_D2.GAMMA
    zeeman_factor: float = _consts._RB85_D2.ZEEMAN_FACTOR

    def __post_init__(self):
        arrays = {name: np.asarray(getattr(self, name), dtype=float).ravel() for name in ('delta', 'fraction', 'sigma')}
        sizes = {a.size for a in arrays.values()}
        if len(sizes) != 1:
            raise DomainError('delta, fraction and sigma must have the same length')
        if arrays['delta'].size < _MIN_POINTS:
            raise DomainError(f'a scan needs at least {_MIN_POINTS} points, got {arrays["delta"].size}')
        if not (np.any(arrays['delta'] < 0) and np.any(arrays['delta'] > 0)):
            raise DomainError('a scan must cover both signs of the detuning')
        if any(np.any(~np.isfinite(a)) for a in arrays.values()):
            raise DomainError('scan data must be finite')
        if np.any(arrays['sigma'] <= 0):
            raise DomainError('scan uncertainties must be positive')
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    def __len__(self):
        return self.delta.size

    def with_sigma(self, sigma):
        return replace(self, sigma=np.broadcast_to(np.asarray(sigma, dtype=float), self.delta.shape).copy())

    def to_frame(self):
        return pd.DataFrame({'delta_la': self.delta, 'fraction': self.fraction, 'sigma': self.sigma})

    @classmethod
    def from_frame(cls, df, v, **kwargs):
        missing = {'delta_la', 'fraction', 'sigma'} - set(df.columns)
        if missing:
            raise DomainError(f'scan table lacks columns {sorted(missing)}')
        return cls(delta=df['delta_la'].to_numpy(), fraction=df['fraction'].to_numpy(), sigma=df['sigma'].to_numpy(), v=v, **kwargs)


@dataclass(frozen=True)
class ModelConfig:
    distribution: DistributionKind = DistributionKind.POISSON_MODE
    cutoff_waists: float = 2.0
    laser_linewidth: float = 0.0
    float_visibility: bool = False
    float_linewidth: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'distribution', DistributionKind(self.distribution))
        if self.laser_linewidth < 0:
            raise DomainError(f'laser linewidth must be non-negative, got {self.laser_linewidth}')

    @property
    def free(self):
        return np.array([True, self.float_visibility, self.float_linewidth])


@dataclass(frozen=True)
class OptimizerConfig:
    xtol: float = 1e-6
    max_iter: int = 200
    lambda0: float = 1e-3
    lambda_max: float = 1e10
    derivative_step: float = 1e-5
    n_eff_guess: Optional[float] = None

    def __post_init__(self):
        if self.xtol <= 0 or self.max_iter < 1 or self.lambda0 <= 0 or self.derivative_step <= 0:
            raise DomainError('optimizer settings must be positive')


class IterationRecord(NamedTuple):
    iteration: int
    chi2: float
    damping: float
    params: Tuple[float, ...]


@dataclass(frozen=True)
class FitResult:
    n_eff: float
    n_eff_err: float
    visibility: float
    visibility_err: float
    linewidth: float
    linewidth_err: float
    chi2: float
    dof: int
    iterations: int
    converged: bool
    free: Tuple[str, ...]
    covariance: np.ndarray = field(repr=False)
    trace: Tuple[IterationRecord, ...] = field(default_factory=tuple, repr=False)

    @property
    def reduced_chi2(self):
        return self.chi2 / self.dof if self.dof > 0 else float('nan')

    def as_dict(self):
        return {
            'n_eff': self.n_eff, 'n_eff_err': self.n_eff_err,
            'visibility': self.visibility, 'visibility_err': self.visibility_err,
            'laser_linewidth': self.linewidth, 'laser_linewidth_err': self.linewidth_err,
            'chi2': self.chi2, 'dof': self.dof, 'iterations': self.iterations,
            'converged': self.converged, 'free': list(self.free),
        }


class ProfileInterval(NamedTuple):
    lower: float
    upper: float
    open_lower: bool
    open_upper: bool
    clipped_lower: bool


_LOWER = np.array([0.0, 0.0, 0.0])
_UPPER = np.array([np.inf, 1.0, np.inf])


def _model(data: ScanDataset, model: ModelConfig, params):
    n_eff, v, linewidth = params
    distribution = AtomNumberDistribution(model.distribution, n_eff, model.cutoff_waists)
    return averaged_lineshape(v, distribution, linewidth, data.delta, C=data.C,
                              zeeman_factor=data.zeeman_factor, gamma=data.gamma)


def _residuals(data, model, params):
    return (data.fraction - _model(data, model, params)) / data.sigma


def _jacobian(data, model, params, free, rel_step, scales):
    """Central-difference derivatives of the weighted model, one-sided at the bounds."""
    columns = []
    for j in np.flatnonzero(free):
        h = rel_step * max(abs(params[j]), scales[j])
        up, down = params.copy(), params.copy()
        up[j] = min(params[j] + h, _UPPER[j])
        down[j] = max(params[j] - h, _LOWER[j])
        columns.append((_model(data, model, up) - _model(data, model, down)) / (up[j] - down[j]) / data.sigma)
    return np.column_stack(columns)


def _levenberg_marquardt(data: ScanDataset, model: ModelConfig, opt: OptimizerConfig, params, free):
    """Projected Levenberg-Marquardt on the free entries of params; returns (params, chi2, iterations, trace)."""
    scales = np.array([1e-2, 1e-3, 1e-2 * data.gamma])
    params = np.clip(np.asarray(params, dtype=float), _LOWER, _UPPER)
    r = _residuals(data, model, params)
    chi2 = float(r @ r)
    damping = opt.lambda0
    trace = [IterationRecord(0, chi2, damping, tuple(params))]

    for iteration in range(1, opt.max_iter + 1):
        J = _jacobian(data, model, params, free, opt.derivative_step, scales)
        alpha = J.T @ J
        beta = J.T @ r
        if np.linalg.matrix_rank(alpha) < alpha.shape[0] or np.any(np.diag(alpha) <= 0):
            raise RankDeficiencyError(f'degenerate Jacobian at {dict(zip(_PARAMETERS, params))}', trace)

        while True:
            step = np.linalg.solve(alpha * (1.0 + damping * np.identity(alpha.shape[0])), beta)
            candidate = params.copy()
            candidate[free] += step
            candidate = np.clip(candidate, _LOWER, _UPPER)
            r_new = _residuals(data, model, candidate)
            chi2_new = float(r_new @ r_new)
            if chi2_new <= chi2:
                damping /= 10.0
                break
            damping *= 10.0
            if damping > opt.lambda_max:
                # no decrease along any damped direction: at the minimum
                Logger.debug(f'Fit stalled at iteration {iteration}, chi2 {chi2:.6g}')
                return params, chi2, iteration, trace

        moved = np.abs(candidate - params)[free]
        params, r, chi2 = candidate, r_new, chi2_new
        trace.append(IterationRecord(iteration, chi2, damping, tuple(params)))
        if np.all(moved <= opt.xtol * (np.abs(params[free]) + opt.xtol)):
            return params, chi2, iteration, trace

    raise FitConvergenceError(f'no convergence in {opt.max_iter} iterations', trace)


def initial_guess(data: ScanDataset):
    """Mean N_eff from inverting the point nearest to zero detuning, floored at a small positive value."""
    i0 = int(np.argmin(np.abs(data.delta)))
    try:
        counts = CountRateTriple(i_max=1.0, i_min=(1.0 - data.v) ** 2, i_atoms=float(data.fraction[i0]))
        guess = invert_to_cooperativity(counts, C=data.C, zeeman_factor=data.zeeman_factor).n_eff
    except DomainError:
        guess = _GUESS_FLOOR
    return max(guess, _GUESS_FLOOR)


def fit_scan(data: ScanDataset, model: ModelConfig = None, optimizer: OptimizerConfig = None) -> FitResult:
    """
    Fit the mean N_eff (and, when enabled, visibility and laser linewidth) to a detuning scan.

    Standard errors come from the unscaled covariance (J^T J)^-1 of the weighted residuals.
    """
    model = model or ModelConfig()
    optimizer = optimizer or OptimizerConfig()
    free = model.free
    guess = optimizer.n_eff_guess if optimizer.n_eff_guess is not None else initial_guess(data)
    if guess <= 0:
        raise DomainError(f'initial N_eff guess must be positive, got {guess}')
    start = np.array([guess, data.v, model.laser_linewidth])
    Logger.debug(f'Fitting {len(data)} points from N_eff = {guess:.4g}, free parameters {[p for p, f in zip(_PARAMETERS, free) if f]}')

    params, chi2, iterations, trace = _levenberg_marquardt(data, model, optimizer, start, free)

    scales = np.array([1e-2, 1e-3, 1e-2 * data.gamma])
    J = _jacobian(data, model, params, free, optimizer.derivative_step, scales)
    try:
        covariance = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        raise RankDeficiencyError('singular curvature matrix at the solution', trace)
    errors = np.zeros(3)
    errors[free] = np.sqrt(np.clip(np.diag(covariance), 0.0, None))

    dof = len(data) - int(free.sum())
    Logger.info(f'Fit converged in {iterations} iterations: N_eff = {params[0]:.4g} +/- {errors[0]:.2g}, chi2/dof = {chi2:.3g}/{dof}')
    return FitResult(
        n_eff=float(params[0]), n_eff_err=float(errors[0]),
        visibility=float(params[1]), visibility_err=float(errors[1]),
        linewidth=float(params[2]), linewidth_err=float(errors[2]),
        chi2=chi2, dof=dof, iterations=iterations, converged=True,
        free=tuple(p for p, f in zip(_PARAMETERS, free) if f),
        covariance=covariance, trace=tuple(trace),
    )


def _profile_chi2(data, model, optimizer, result, n_eff):
    params = np.array([n_eff, result.visibility, result.linewidth])
    nuisance = model.free.copy()
    nuisance[0] = False
    if nuisance.any():
        params, chi2, _, _ = _levenberg_marquardt(data, model, optimizer, params, nuisance)
        return chi2
    r = _residuals(data, model, params)
    return float(r @ r)


def profile_uncertainty(result: FitResult, data: ScanDataset, model: ModelConfig = None,
                        optimizer: OptimizerConfig = None, max_expansions=40) -> ProfileInterval:
    """
    Delta chi2 = 1 interval of the mean N_eff from the chi-square profile (nuisance parameters
    re-optimised at every point). The lower bound is clipped at zero when the profile stays
    below the threshold there; a side that never crosses the threshold is flagged open.
    """
    model = model or ModelConfig()
    optimizer = optimizer or OptimizerConfig()
    if not result.converged:
        raise DomainError('profile needs a converged fit')
    best = result.n_eff
    target = result.chi2 + 1.0
    excess = lambda n: _profile_chi2(data, model, optimizer, result, n) - target
    step = result.n_eff_err if np.isfinite(result.n_eff_err) and result.n_eff_err > 0 else 1e-3 * max(best, 1.0)

    upper, open_upper = None, True
    hi = best
    for _ in range(max_expansions):
        lo, hi = hi, hi + step
        if excess(hi) >= 0:
            upper = optimize.brentq(excess, lo, hi, xtol=1e-10 * max(1.0, hi))
            open_upper = False
            break
        step *= 2.0
    if upper is None:
        upper = hi

    clipped_lower = open_lower = False
    if best <= 0 or excess(0.0) < 0:
        lower, clipped_lower = 0.0, True
    else:
        lower = optimize.brentq(excess, 0.0, best, xtol=1e-10 * max(1.0, best))

    Logger.debug(f'Profile interval [{lower:.4g}, {upper:.4g}] (open upper: {open_upper}, clipped lower: {clipped_lower})')
    return ProfileInterval(lower=float(lower), upper=float(upper), open_lower=open_lower, open_upper=open_upper, clipped_lower=clipped_lower)


def synthesize_scan(v, distribution: AtomNumberDistribution, delta, seed, C=0.8, i_max=_consts._REFERENCE_COUNTS.I_MAX,
                    bin_time=_consts._REFERENCE_RUN.TOF_BIN, n_drops=_consts._REFERENCE_RUN.TOF_DROPS, laser_linewidth=0.0,
                    gamma=_consts._RB85_D2.GAMMA, zeeman_factor=_consts._RB85_D2.ZEEMAN_FACTOR) -> ScanDataset:
    """
    Synthetic detuning scan: at every detuning, n_drops drops each draw N_eff and a laser
    offset, detect Poisson counts at i_max * bin_time * f and report the drop mean of the
    reflected fraction with its standard error.
    """
    delta = np.asarray(delta, dtype=float)
    expected = i_max * bin_time
    if expected <= 0:
        raise DomainError('the scan needs a positive count level')
    sigma_laser = laser_linewidth / gamma / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    fraction = np.zeros(delta.size)
    sigma = np.zeros(delta.size)
    for j, d in enumerate(delta):
        rng = substream(seed, 'scan', j)
        n_eff = distribution.draw(rng, n_drops)
        offset = sigma_laser * rng.normal(0.0, 1.0, n_drops)
        f = reflected_fraction_detuned(v, zeeman_factor * C * n_eff, d + offset)
        per_drop = rng.poisson(expected * f) / expected
        fraction[j] = per_drop.mean()
        shot = np.sqrt(max(fraction[j], 1.0 / expected) / expected / n_drops)
        sigma[j] = max(per_drop.std(ddof=1) / np.sqrt(n_drops) if n_drops > 1 else 0.0, shot)
    return ScanDataset(delta=delta, fraction=fraction, sigma=sigma, v=v, C=C, gamma=gamma, zeeman_factor=zeeman_factor)
