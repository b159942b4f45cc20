"""Time-dependent wavefunction outside the barrier by quadrature over scattering states.

For a post-selected point to the right of the barrier the eigenfunction is
``T(p) e^{ipx/hbar}``; to the left it is ``e^{ipx/hbar} + R(p) e^{-ipx/hbar}``.
Both forms are exact for the square barrier, so the only error is the
momentum quadrature.  The Hamiltonian action and the spatial derivative are
obtained by inserting ``p**2/2M`` and the plane-wave derivative factors in the
same integrand.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .model import (
    CoherentState,
    PhysicalParams,
    SquareBarrier,
    momentum_wavefunction_initial,
    reflection_amplitude,
    scattering_overlap,
    transmission_amplitude,
)

log = logging.getLogger(__name__)

# rows of the time/space lattice handled per matrix product
CHUNK = 512
MAX_PHASE_STEP = math.pi / 4


@dataclass(frozen=True)
class MomentumGrid:
    nodes: np.ndarray
    weights: np.ndarray
    p_lo: float
    p_hi: float
    panel_count: int
    nodes_per_panel: int
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.p_lo > 0:
            raise DomainError("momentum grid must stay strictly above p = 0")
        if np.any(self.weights <= 0):
            raise DomainError("quadrature weights must be positive")
        if np.any(np.diff(self.nodes) <= 0):
            raise DomainError("quadrature nodes must be strictly increasing")

    def __len__(self):
        return self.nodes.size

    def integrate(self, values) -> complex:
        return np.sum(self.weights * values)

    def max_phase_step(self, t_max: float, params: PhysicalParams) -> float:
        """Largest change of p**2 t / (2 M hbar) between neighbouring nodes at ``t_max``."""
        energy_phase = self.nodes**2 / (2.0 * params.mass * params.hbar)
        return float(np.max(np.diff(energy_phase)) * t_max) if len(self) > 1 else 0.0


@dataclass(frozen=True)
class PostSelection:
    x: float


def composite_gauss_legendre(lo: float, hi: float, panels: int, nodes_per_panel: int):
    """Nodes and weights of ``panels`` equal Gauss-Legendre panels on [lo, hi]."""
    g, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    return (mid + half * g).ravel(), (half * w).ravel()


def build_momentum_grid(
    state: CoherentState,
    params: PhysicalParams,
    window: float = 12.0,
    panels: int = 40,
    nodes_per_panel: int = 50,
    *,
    eps_p_fraction: float = 1e-6,
    t_max: float | None = None,
) -> MomentumGrid:
    """Composite Gauss-Legendre grid covering ``p_i +- window * sigma_p``.

    When ``t_max`` is given, the panel count is doubled until the free-phase
    advance between adjacent nodes stays below pi/4 at that time.
    """
    if window < 6:
        raise DomainError(f"window must be >= 6, got {window}")
    sigma_p = state.momentum_width(params)
    eps_p = eps_p_fraction * state.p_incident
    lo = state.p_incident - window * sigma_p
    hi = state.p_incident + window * sigma_p
    diagnostics = []
    if lo < eps_p:
        diagnostics.append(f"lower momentum bound {lo:.6g} clamped to {eps_p:.3g}")
        lo = eps_p
    while True:
        nodes, weights = composite_gauss_legendre(lo, hi, panels, nodes_per_panel)
        grid = MomentumGrid(nodes, weights, lo, hi, panels, nodes_per_panel, tuple(diagnostics))
        if t_max is None or grid.max_phase_step(t_max, params) < MAX_PHASE_STEP:
            break
        diagnostics.append(
            f"phase step {grid.max_phase_step(t_max, params):.3g} rad at t={t_max:.6g}; "
            f"panels {panels} -> {2 * panels}"
        )
        panels *= 2
    for msg in grid.diagnostics:
        log.info("momentum grid: %s", msg)
    return grid


def check_exterior(x, barrier: SquareBarrier, margin: float = 1.0):
    """Raise unless every ``x`` lies at least ``margin`` outside the barrier."""
    if barrier.is_free:
        return
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) <= barrier.half_width + margin):
        raise DomainError(
            f"post-selected point must satisfy |x| > {barrier.half_width + margin:g}; "
            "eigenfunctions are only available outside the barrier"
        )


def _spectral_coefficients(grid, state, barrier, params):
    # weight * <p+|Psi> / sqrt(2 pi hbar), shared by every (x, t)
    overlap = scattering_overlap(state, barrier, params, grid.nodes)
    return grid.weights * overlap / math.sqrt(2.0 * math.pi * params.hbar)


def _modes(x, grid, barrier, params):
    """Exterior eigenfunction factors and their x-derivatives, shape (nx, np)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    p = grid.nodes[None, :]
    k = p / params.hbar
    forward = np.exp(1j * k * x)
    if barrier.is_free:
        return forward, 1j * k * forward
    T = transmission_amplitude(barrier, params, grid.nodes)[None, :]
    R = reflection_amplitude(barrier, params, grid.nodes)[None, :]
    backward = np.exp(-1j * k * x)
    right = x > 0
    mode = np.where(right, T * forward, forward + R * backward)
    dmode = np.where(right, 1j * k * T * forward, 1j * k * (forward - R * backward))
    return mode, dmode


def _uniform_step(t):
    if t.size < 3:
        return None
    d = np.diff(t)
    step = (t[-1] - t[0]) / (t.size - 1)
    if step > 0 and np.max(np.abs(d - step)) <= 1e-12 * max(abs(t[0]), abs(t[-1])):
        return step
    return None


def _map_chunks(fn, n, workers):
    starts = range(0, n, CHUNK)
    if workers <= 1:
        parts = [fn(s, min(s + CHUNK, n)) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: fn(s, min(s + CHUNK, n)), starts))
    return np.concatenate(parts, axis=0) if parts else np.empty((0, 3), complex)


def evaluate_in_time(
    sel: PostSelection,
    times,
    grid: MomentumGrid,
    state: CoherentState,
    barrier: SquareBarrier,
    params: PhysicalParams,
    *,
    margin: float = 1.0,
    workers: int = 1,
    allow_negative: bool = False,
):
    """psi, d psi/dx and H psi at one point for an array of times.

    Returns three complex arrays with the shape of ``times``.  Negative
    times are rejected unless ``allow_negative`` (finite-difference stencils).
    """
    check_exterior(sel.x, barrier, margin)
    times = np.asarray(times, dtype=float)
    if not allow_negative and np.any(times < 0):
        raise DomainError("times must be non-negative")
    flat = np.atleast_1d(times).ravel()
    coef = _spectral_coefficients(grid, state, barrier, params)
    mode, dmode = _modes(sel.x, grid, barrier, params)
    energy = grid.nodes**2 / (2.0 * params.mass)
    # columns: psi, dpsi/dx, H psi
    cols = np.stack([mode[0] * coef, dmode[0] * coef, energy * mode[0] * coef], axis=1)
    rate = energy / params.hbar
    step = _uniform_step(flat)

    if step is None:
        def block(a, b):
            return np.exp(-1j * np.outer(flat[a:b], rate)) @ cols
    else:
        # uniform grid: one table of in-chunk phases, chunk offset folded into the columns
        offsets = np.exp(-1j * np.outer(np.arange(min(CHUNK, flat.size)) * step, rate))

        def block(a, b):
            return offsets[: b - a] @ (np.exp(-1j * flat[a] * rate)[:, None] * cols)

    out = _map_chunks(block, flat.size, workers)
    shape = times.shape
    return tuple(out[:, j].reshape(shape)[()] for j in range(3))


def evaluate_in_space(
    xs,
    t: float,
    grid: MomentumGrid,
    state: CoherentState,
    barrier: SquareBarrier,
    params: PhysicalParams,
    *,
    margin: float = 1.0,
    workers: int = 1,
):
    """psi and d psi/dx at one time for an array of points."""
    xs = np.asarray(xs, dtype=float)
    check_exterior(xs, barrier, margin)
    if t < 0:
        raise DomainError("time must be non-negative")
    flat = np.atleast_1d(xs).ravel()
    coef = _spectral_coefficients(grid, state, barrier, params)
    coef = coef * np.exp(-1j * grid.nodes**2 * t / (2.0 * params.mass * params.hbar))

    def block(a, b):
        mode, dmode = _modes(flat[a:b], grid, barrier, params)
        return np.stack([mode @ coef, dmode @ coef, np.zeros(b - a, complex)], axis=1)

    out = _map_chunks(block, flat.size, workers)
    return out[:, 0].reshape(xs.shape)[()], out[:, 1].reshape(xs.shape)[()]


def wavefunction_at(sel, t, grid, state, barrier, params, *, margin=1.0, workers=1):
    """<x|Psi_t> at the post-selected point."""
    return evaluate_in_time(sel, t, grid, state, barrier, params, margin=margin, workers=workers)[0]


def spatial_derivative_at(sel, t, grid, state, barrier, params, *, margin=1.0, workers=1):
    """d/dx <x|Psi_t>, computed spectrally."""
    return evaluate_in_time(sel, t, grid, state, barrier, params, margin=margin, workers=workers)[1]


def hamiltonian_action_at(sel, t, grid, state, barrier, params, *, margin=1.0, workers=1):
    """<x|H|Psi_t>, computed spectrally; equals i hbar d/dt <x|Psi_t>."""
    return evaluate_in_time(sel, t, grid, state, barrier, params, margin=margin, workers=workers)[2]


def gaussian_mass(grid: MomentumGrid, state: CoherentState, params: PhysicalParams) -> float:
    """Quadrature of |<p|Psi_0>|**2 on the grid; should be 1."""
    return float(np.sum(grid.weights * np.abs(momentum_wavefunction_initial(state, grid.nodes, params)) ** 2))
