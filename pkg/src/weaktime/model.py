"""Physical system: units, the Gaussian coherent state and the square barrier.

The barrier occupies ``[-a, a]``.  Scattering amplitudes are written with
functions that are even in the interior wavenumber ``q`` so the choice of
square-root branch never matters, and the same expression continues
analytically to complex momentum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FarFieldWarning

FAR_FIELD_THRESHOLD = 25.0


@dataclass(frozen=True)
class PhysicalParams:
    hbar: float = 1.0
    mass: float = 0.5

    def __post_init__(self):
        if not self.hbar > 0:
            raise DomainError(f"hbar must be positive, got {self.hbar}")
        if not self.mass > 0:
            raise DomainError(f"mass must be positive, got {self.mass}")


@dataclass(frozen=True)
class CoherentState:
    """Minimum-uncertainty Gaussian with width parameter ``gamma``.

    ``gamma`` has units of inverse length squared; the position variance is
    ``1/(2 gamma)`` and the momentum variance ``hbar**2 gamma / 2``.
    """

    gamma: float
    x_center: float
    p_incident: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not self.p_incident > 0:
            raise DomainError(f"p_incident must be positive, got {self.p_incident}")
        if self.far_field_parameter < FAR_FIELD_THRESHOLD:
            warnings.warn(
                f"gamma * x_center**2 = {self.far_field_parameter:.3g} < "
                f"{FAR_FIELD_THRESHOLD:g}; initial state may overlap the interaction region",
                FarFieldWarning,
                stacklevel=3,
            )

    @property
    def far_field_parameter(self) -> float:
        return self.gamma * self.x_center**2

    def momentum_width(self, params: PhysicalParams) -> float:
        """Standard deviation of the momentum distribution."""
        return params.hbar * math.sqrt(self.gamma / 2.0)


@dataclass(frozen=True)
class SquareBarrier:
    height: float = 1.0
    half_width: float = 1.0

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError(f"half_width must be positive, got {self.half_width}")
        if not math.isfinite(self.height):
            raise DomainError(f"height must be finite, got {self.height}")

    @property
    def is_free(self) -> bool:
        return self.height == 0.0


def position_wavefunction_initial(state: CoherentState, x, params: PhysicalParams | None = None):
    """<x|Psi_0> for the coherent state."""
    hbar = params.hbar if params is not None else 1.0
    x = np.asarray(x, dtype=float)
    dx = x - state.x_center
    out = (state.gamma / np.pi) ** 0.25 * np.exp(
        -0.5 * state.gamma * dx**2 + 1j * state.p_incident * dx / hbar
    )
    return out[()] if out.ndim == 0 else out


def momentum_wavefunction_initial(state: CoherentState, p, params: PhysicalParams):
    """<p|Psi_0>, the analytic Fourier transform of the position Gaussian."""
    hbar = params.hbar
    p = np.asarray(p, dtype=float)
    norm = (1.0 / (np.pi * hbar**2 * state.gamma)) ** 0.25
    out = norm * np.exp(
        -((p - state.p_incident) ** 2) / (2.0 * hbar**2 * state.gamma)
        - 1j * p * state.x_center / hbar
    )
    return out[()] if out.ndim == 0 else out


def _interior_terms(barrier: SquareBarrier, params: PhysicalParams, p, branch: int = 1):
    # cos(2qa) and sin(2qa)/q are even in q, so either root of q**2 works.
    k = p / params.hbar
    q2 = k**2 - 2.0 * params.mass * barrier.height / params.hbar**2
    q = branch * np.sqrt(q2 + 0j)
    arg = 2.0 * q * barrier.half_width
    small = np.abs(arg) < 1e-6
    safe_q = np.where(small, 1.0, q)
    sin_over_q = np.where(
        small,
        2.0 * barrier.half_width * (1.0 - arg**2 / 6.0),
        np.sin(arg) / safe_q,
    )
    return k, q2, np.cos(arg), sin_over_q


def _denominator(k, q2, cos_term, sin_over_q):
    return cos_term - 1j * (k**2 + q2) / (2.0 * k) * sin_over_q


def _check_momentum(p):
    p = np.asarray(p)
    if np.any(p == 0):
        raise DomainError("scattering amplitudes are singular at p = 0")
    return p


def transmission_amplitude(barrier: SquareBarrier, params: PhysicalParams, p, *, branch: int = 1):
    """T(p) for real or complex momentum ``p`` (scalar or array)."""
    p = _check_momentum(p)
    if barrier.is_free:
        out = np.ones_like(p, dtype=complex)
        return out[()] if out.ndim == 0 else out
    k, q2, c, s = _interior_terms(barrier, params, p, branch)
    out = np.exp(-2j * k * barrier.half_width) / _denominator(k, q2, c, s)
    return out[()] if np.ndim(out) == 0 else out


def reflection_amplitude(barrier: SquareBarrier, params: PhysicalParams, p, *, branch: int = 1):
    """R(p), the coefficient of exp(-ipx/hbar) to the left of the barrier."""
    p = _check_momentum(p)
    if barrier.is_free:
        out = np.zeros_like(p, dtype=complex)
        return out[()] if out.ndim == 0 else out
    k, q2, c, s = _interior_terms(barrier, params, p, branch)
    num = 1j * (q2 - k**2) / (2.0 * k) * s * np.exp(-2j * k * barrier.half_width)
    out = num / _denominator(k, q2, c, s)
    return out[()] if np.ndim(out) == 0 else out


def scattering_overlap(state: CoherentState, barrier: SquareBarrier, params: PhysicalParams, p):
    """<p+|Psi_0> = <p|Psi_0> + R*(p) <-p|Psi_0> for p > 0."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise DomainError("scattering_overlap requires p > 0")
    direct = momentum_wavefunction_initial(state, p, params)
    reflected = np.conj(reflection_amplitude(barrier, params, p)) * momentum_wavefunction_initial(
        state, -p, params
    )
    return direct + reflected


def reflected_overlap_term(state: CoherentState, barrier: SquareBarrier, params: PhysicalParams, p):
    """The R*(p) <-p|Psi_0> piece of the overlap on its own, for diagnostics."""
    p = np.asarray(p, dtype=float)
    return np.conj(reflection_amplitude(barrier, params, p)) * momentum_wavefunction_initial(
        state, -p, params
    )
