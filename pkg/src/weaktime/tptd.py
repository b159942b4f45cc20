"""Transition path time distribution P(t;x) at a post-selected point.

The density is ``|<x|Psi_t>|**2 / N(x)`` sampled on a uniform grid on
``[0, t_max]``; ``t_max`` grows until the mass in the last tenth of the grid
drops below ``eps_tail``.  Time integrals use the trapezoid rule, so every
moment is a plain weighted sum over the stored samples.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError
from .propagator import MomentumGrid, PostSelection, build_momentum_grid, check_exterior, evaluate_in_time
from .scenario import Scenario
from .sdapprox import SDConfig, sd_time_variance

log = logging.getLogger(__name__)

MAX_EXTENSIONS = 16
EXTENSION_FACTOR = 1.5
TAIL_FRACTION = 0.1
# tail points below this fraction of the peak are treated as resolved zeros
TAIL_FLOOR = 1e-24


@dataclass(frozen=True)
class TimeGrid:
    t_max: float
    samples: int

    def __post_init__(self):
        if not self.t_max > 0:
            raise DomainError(f"t_max must be positive, got {self.t_max}")
        if self.samples < 2:
            raise DomainError(f"need at least 2 samples, got {self.samples}")

    @property
    def spacing(self) -> float:
        return self.t_max / (self.samples - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.samples)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.samples, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def integrate(self, values):
        return np.sum(self.weights * values)


@dataclass(frozen=True)
class TPTDistribution:
    """Sampled P(t;x) plus the raw wavefunction data it came from."""

    grid: TimeGrid
    density: np.ndarray
    normalization: float
    tail_mass_estimate: float
    x: float
    psi: np.ndarray = field(repr=False)
    dpsi: np.ndarray = field(repr=False)
    hpsi: np.ndarray = field(repr=False)
    momentum_grid: MomentumGrid = field(repr=False)
    tail_slope: float = float("nan")
    diagnostics: tuple[str, ...] = ()

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def density_at_zero(self) -> float:
        """P(0;x), the boundary term of the standard-deviation relation."""
        return float(self.density[0])

    def integrate(self, values):
        return self.grid.integrate(values)


def classical_arrival_time(scenario: Scenario, x: float) -> float:
    """Free-flight time from the packet centre to ``x``, via the barrier if reflected."""
    s, M = scenario.state, scenario.params.mass
    if x > 0 or scenario.barrier.is_free:
        distance = abs(x - s.x_center)
    else:
        distance = max(abs(x - s.x_center), abs(s.x_center) + abs(x))
    return M * distance / s.p_incident


def initial_t_max(scenario: Scenario, x: float) -> float:
    cfg = SDConfig(scenario.state, scenario.barrier, scenario.params, x)
    return classical_arrival_time(scenario, x) + 20.0 * math.sqrt(sd_time_variance(cfg))


def _tail_stats(grid: TimeGrid, rho: np.ndarray, norm: float):
    n = grid.samples
    start = min(n - 2, int(round((1 - TAIL_FRACTION) * (n - 1))))
    t = grid.times[start:]
    tail = rho[start:] / norm
    mass = float(np.trapezoid(tail, t))
    keep = tail > TAIL_FLOOR * (rho.max() / norm)
    if keep.sum() >= 2 and t[keep][0] > 0:
        slope = float(np.polyfit(np.log(t[keep]), np.log(tail[keep]), 1)[0])
    else:
        slope = -math.inf
    return mass, slope


def build_distribution(
    scenario: Scenario,
    x: float,
    *,
    time_grid: TimeGrid | None = None,
    momentum_grid: MomentumGrid | None = None,
) -> TPTDistribution:
    """Sample P(t;x) and its normalization.

    With an explicit ``time_grid`` the grid is used as-is (shared-grid
    comparisons); otherwise ``t_max`` is chosen adaptively.
    """
    c = scenario.controls
    check_exterior(x, scenario.barrier, c.margin)
    sel = PostSelection(x)
    fixed = time_grid is not None
    grid = time_grid or TimeGrid(initial_t_max(scenario, x), c.time_samples)
    diagnostics: list[str] = []
    for _ in range(MAX_EXTENSIONS + 1):
        pgrid = momentum_grid or build_momentum_grid(
            scenario.state,
            scenario.params,
            c.window,
            c.panels,
            c.nodes_per_panel,
            eps_p_fraction=c.eps_p_fraction,
            t_max=grid.t_max,
        )
        psi, dpsi, hpsi = evaluate_in_time(
            sel, grid.times, pgrid, scenario.state, scenario.barrier, scenario.params,
            margin=c.margin, workers=c.workers,
        )
        rho = np.abs(psi) ** 2
        norm = float(grid.integrate(rho))
        if not norm > 0:
            raise ConvergenceError(f"wavefunction vanishes on the whole time grid at x={x}")
        tail_mass, slope = _tail_stats(grid, rho, norm)
        if fixed or tail_mass < c.eps_tail:
            break
        diagnostics.append(f"tail mass {tail_mass:.3g} at t_max={grid.t_max:.6g}; extending")
        grid = TimeGrid(grid.t_max * EXTENSION_FACTOR, grid.samples)
    else:
        raise ConvergenceError(
            f"normalization did not converge at x={x}: tail mass {tail_mass:.3g} "
            f"with log-log tail slope {slope:.3g} at t_max={grid.t_max:.6g}"
        )
    if tail_mass >= c.eps_tail:
        diagnostics.append(f"tail mass {tail_mass:.3g} exceeds eps_tail on the supplied grid")
    diagnostics.extend(pgrid.diagnostics)
    for msg in diagnostics:
        log.info("x=%g: %s", x, msg)
    return TPTDistribution(
        grid=grid,
        density=rho / norm,
        normalization=norm,
        tail_mass_estimate=tail_mass,
        x=float(x),
        psi=psi,
        dpsi=dpsi,
        hpsi=hpsi,
        momentum_grid=pgrid,
        tail_slope=slope,
        diagnostics=tuple(diagnostics),
    )


def time_moment(dist: TPTDistribution, n: int) -> float:
    """Trapezoid estimate of the n-th time moment, n in {0, 1, 2}."""
    if n not in (0, 1, 2):
        raise DomainError(f"only moments 0, 1 and 2 are supported, got {n}")
    if n == 0:
        return 1.0
    return float(dist.integrate(dist.times**n * dist.density))


def time_variance(dist: TPTDistribution) -> float:
    return time_moment(dist, 2) - time_moment(dist, 1) ** 2


def mean_arrival_time(scenario: Scenario, x: float, *, dist: TPTDistribution | None = None, **grids) -> float:
    if dist is None:
        dist = build_distribution(scenario, x, **grids)
    return time_moment(dist, 1)


def arrival_time_momentum(scenario: Scenario, x: float, delta_x: float | None = None) -> float:
    """Momentum M dx / d<t> from mean arrival times at x +- dx/2.

    Central differences at ``delta_x`` and ``delta_x/2`` are combined by
    Richardson extrapolation.  All four distributions share the time and
    momentum grids of the distribution at ``x``.
    """
    c = scenario.controls
    delta_x = c.delta_x if delta_x is None else delta_x
    if not delta_x > 0:
        raise DomainError(f"delta_x must be positive, got {delta_x}")
    check_exterior([x - delta_x / 2, x + delta_x / 2], scenario.barrier, c.margin)
    centre = build_distribution(scenario, x)
    shared = dict(time_grid=centre.grid, momentum_grid=centre.momentum_grid)
    M = scenario.params.mass
    estimates = []
    for h in (delta_x, delta_x / 2):
        dt = mean_arrival_time(scenario, x + h / 2, **shared) - mean_arrival_time(scenario, x - h / 2, **shared)
        if abs(dt) < centre.grid.spacing:
            raise DomainError(
                f"mean-time difference {dt:.3g} is below the time step {centre.grid.spacing:.3g}; "
                "use a larger delta_x"
            )
        estimates.append(M * h / dt)
    coarse, fine = estimates
    return (4.0 * fine - coarse) / 3.0
