"""Weak values of momentum and energy at a post-selected point and their time averages.

Weak values are ratios ``<x|O|Psi_t> / <x|Psi_t>``, so they are undefined
where the wavefunction vanishes.  Samples with ``|psi|`` below
``mask_floor`` times its peak are masked and contribute nothing to time
averages; the probability carried by masked samples is reported.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .propagator import (
    MomentumGrid,
    PostSelection,
    build_momentum_grid,
    evaluate_in_space,
    evaluate_in_time,
)
from .scenario import Scenario
from .tptd import TimeGrid, TPTDistribution, build_distribution, time_moment


@dataclass(frozen=True)
class WeakValueSeries:
    grid: TimeGrid
    p_weak: np.ndarray
    H_weak: np.ndarray
    x: float
    valid: np.ndarray

    @property
    def times(self):
        return self.grid.times


@dataclass(frozen=True)
class MomentSummary:
    mean_p: float
    var_p: float
    mean_H: float
    var_H: float
    mean_t: float
    var_t: float
    commutator: complex
    product_second_moment: float
    product_stddev: float
    bound_rhs: float
    hbar: float = 1.0
    imag_mean_p: float = 0.0
    imag_mean_H: float = 0.0
    mean_t2: float = 0.0
    mean_HH: float = 0.0
    density_at_zero: float = 0.0
    masked_mass: float = 0.0

    @property
    def std_p(self) -> float:
        return math.sqrt(self.var_p)

    @property
    def variance_product(self) -> float:
        return self.var_t * self.var_H

    @property
    def second_moment_bound_holds(self) -> bool:
        return self.product_second_moment >= self.hbar**2 / 4

    @property
    def stddev_bound_holds(self) -> bool:
        return self.product_stddev >= self.bound_rhs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["commutator"] = [self.commutator.real, self.commutator.imag]
        d["std_p"] = self.std_p
        d["variance_product"] = self.variance_product
        d["second_moment_bound_holds"] = self.second_moment_bound_holds
        d["stddev_bound_holds"] = self.stddev_bound_holds
        return d


def _valid_mask(dist: TPTDistribution, floor: float) -> np.ndarray:
    mag = np.abs(dist.psi)
    return mag > floor * mag.max()


def _ratio(num, den, valid):
    out = np.full(num.shape, np.nan + 1j * np.nan)
    out[valid] = num[valid] / den[valid]
    return out


def weak_momentum_series(scenario: Scenario, dist: TPTDistribution) -> np.ndarray:
    """p_w(t;x) = -i hbar d ln<x|Psi_t>/dx on the distribution's time grid (NaN where masked)."""
    valid = _valid_mask(dist, scenario.controls.mask_floor)
    return -1j * scenario.params.hbar * _ratio(dist.dpsi, dist.psi, valid)


def weak_energy_series(scenario: Scenario, dist: TPTDistribution) -> np.ndarray:
    """H_w(t;x) = <x|H|Psi_t>/<x|Psi_t> from the spectral Hamiltonian action."""
    valid = _valid_mask(dist, scenario.controls.mask_floor)
    return _ratio(dist.hpsi, dist.psi, valid)


def weak_energy_by_time_derivative(scenario: Scenario, dist: TPTDistribution, step: float = 0.05) -> np.ndarray:
    """i hbar d ln<x|Psi_t>/dt with a five-point central difference in time."""
    s = scenario
    t = dist.times
    sel = PostSelection(dist.x)
    shifts = np.array([-2.0, -1.0, 1.0, 2.0]) * step
    vals = [
        evaluate_in_time(sel, t + h, dist.momentum_grid, s.state, s.barrier, s.params,
                         margin=s.controls.margin, workers=s.controls.workers, allow_negative=True)[0]
        for h in shifts
    ]
    dpsi_dt = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * step)
    valid = _valid_mask(dist, s.controls.mask_floor)
    return 1j * s.params.hbar * _ratio(dpsi_dt, dist.psi, valid)


def weak_value_series(scenario: Scenario, dist: TPTDistribution) -> WeakValueSeries:
    return WeakValueSeries(
        grid=dist.grid,
        p_weak=weak_momentum_series(scenario, dist),
        H_weak=weak_energy_series(scenario, dist),
        x=dist.x,
        valid=_valid_mask(dist, scenario.controls.mask_floor),
    )


def time_average(dist: TPTDistribution, values, valid=None) -> complex:
    """int dt P(t;x) f(t); masked or non-finite samples count as zero."""
    values = np.broadcast_to(np.asarray(values), dist.density.shape)
    ok = np.isfinite(values) if valid is None else (valid & np.isfinite(values))
    return complex(dist.integrate(dist.density * np.where(ok, values, 0.0)))


def mean_weak_momentum(series: WeakValueSeries, dist: TPTDistribution) -> complex:
    return time_average(dist, series.p_weak, series.valid)


def momentum_stddev(series: WeakValueSeries, dist: TPTDistribution) -> float:
    """sqrt(<|p_w|**2> - Re<p_w>**2)."""
    mean = mean_weak_momentum(series, dist).real
    second = time_average(dist, np.abs(series.p_weak) ** 2, series.valid).real
    return math.sqrt(max(second - mean**2, 0.0))


def commutator_check(series: WeakValueSeries, dist: TPTDistribution) -> complex:
    """<t (H_w* - H_w)>, which should equal i hbar."""
    return time_average(dist, dist.times * (np.conj(series.H_weak) - series.H_weak), series.valid)


def uncertainty_report(series: WeakValueSeries, dist: TPTDistribution, hbar: float = 1.0) -> MomentSummary:
    avg = lambda f: time_average(dist, f, series.valid)
    mp = avg(series.p_weak)
    mH = avg(series.H_weak)
    mean_p2 = avg(np.abs(series.p_weak) ** 2).real
    mean_HH = avg(np.abs(series.H_weak) ** 2).real
    mean_t = time_moment(dist, 1)
    mean_t2 = time_moment(dist, 2)
    var_t = mean_t2 - mean_t**2
    var_H = avg(np.abs(series.H_weak - mH.real) ** 2).real
    p0 = dist.density_at_zero
    masked = float(dist.integrate(np.where(series.valid, 0.0, dist.density)))
    return MomentSummary(
        mean_p=mp.real,
        var_p=max(mean_p2 - mp.real**2, 0.0),
        mean_H=mH.real,
        var_H=var_H,
        mean_t=mean_t,
        var_t=var_t,
        commutator=commutator_check(series, dist),
        product_second_moment=mean_t2 * mean_HH,
        product_stddev=math.sqrt(max(var_t * var_H, 0.0)),
        bound_rhs=0.5 * hbar * (1.0 - mean_t * p0),
        hbar=hbar,
        imag_mean_p=mp.imag,
        imag_mean_H=mH.imag,
        mean_t2=mean_t2,
        mean_HH=mean_HH,
        density_at_zero=p0,
        masked_mass=masked,
    )


def log_density_momentum(scenario: Scenario, dist: TPTDistribution, h: float = 0.05) -> np.ndarray:
    """-(hbar/2) d ln P(t;x)/dx by central differences of separately normalized distributions."""
    shared = dict(time_grid=dist.grid, momentum_grid=dist.momentum_grid)
    up = build_distribution(scenario, dist.x + h, **shared).density
    down = build_distribution(scenario, dist.x - h, **shared).density
    with np.errstate(divide="ignore", invalid="ignore"):
        return -0.5 * scenario.params.hbar * (np.log(up) - np.log(down)) / (2 * h)


def spatial_average_check(
    scenario: Scenario,
    t: float,
    x_grid=None,
    momentum_grid: MomentumGrid | None = None,
) -> complex:
    """int dx |psi|**2 p_w(t;x) for the free particle; equals <p> = p_i."""
    s = scenario
    if not s.barrier.is_free:
        raise DomainError("the spatial average needs eigenfunctions inside the barrier; use height 0")
    if x_grid is None:
        M, G = s.params.mass, s.state.gamma
        centre = s.state.x_center + s.state.p_incident * t / M
        width = math.sqrt((1 + (s.params.hbar * G * t / M) ** 2) / (2 * G))
        x_grid = np.linspace(centre - 14 * width, centre + 14 * width, 8001)
    x_grid = np.asarray(x_grid, dtype=float)
    if momentum_grid is None:
        c = s.controls
        momentum_grid = build_momentum_grid(
            s.state, s.params, c.window, c.panels, c.nodes_per_panel, eps_p_fraction=c.eps_p_fraction
        )
    psi, dpsi = evaluate_in_space(x_grid, t, momentum_grid, s.state, s.barrier, s.params,
                                  workers=s.controls.workers)
    # |psi|^2 p_w = psi* (-i hbar dpsi/dx), free of the node singularity
    integrand = np.conj(psi) * (-1j * s.params.hbar * dpsi)
    return complex(np.trapezoid(integrand, x_grid))
