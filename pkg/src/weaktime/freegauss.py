"""Closed-form free evolution of the coherent state, used as a reference by ``verify``."""

from __future__ import annotations

import numpy as np

from .model import CoherentState, PhysicalParams


def free_gaussian(state: CoherentState, params: PhysicalParams, x, t):
    """psi, d psi/dx and H psi for the freely spreading Gaussian."""
    G, xi, pi_ = state.gamma, state.x_center, state.p_incident
    M, hbar = params.mass, params.hbar
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    alpha = 1 + 1j * hbar * G * t / M
    u = x - xi - pi_ * t / M
    psi = (G / np.pi) ** 0.25 / np.sqrt(alpha) * np.exp(
        -0.5 * G * u**2 / alpha + 1j * pi_ * (x - xi) / hbar - 1j * pi_**2 * t / (2 * M * hbar)
    )
    log_d1 = -G * u / alpha + 1j * pi_ / hbar
    log_d2 = -G / alpha
    dpsi = log_d1 * psi
    hpsi = -(hbar**2) / (2 * M) * (log_d1**2 + log_d2) * psi
    return psi, dpsi, hpsi
