"""Reference solutions used to check the integrator and the ensemble averages.

Nothing here is used by the command line tool. The brute-force collectivity
deliberately avoids the main code path: its own integrator (complex RK4 on a
uniform time grid, Omega recomputed in place), a uniform trapezoid rule over a
wider span, and a finer step.
"""

from __future__ import annotations

import cmath
import math
from typing import Optional

import numba
import numpy as np

from .dynamics import PulseKind, PulseShape, pulse_area, rabi_at
from .ensemble import SpectralDistribution


def resonant_solution(pulse: PulseShape, t: float) -> tuple[complex, complex]:
    """Exact (alpha, beta) for zero detuning and decay: cos(theta), -i sin(theta)."""
    theta = pulse_area(pulse, 0.0, t)
    return complex(math.cos(theta), 0.0), complex(0.0, -math.sin(theta))


def constant_rabi_solution(rabi: float, detuning: float, t: float) -> tuple[complex, complex]:
    """Exact (alpha, beta) for constant drive, no decay."""
    gen = math.sqrt(rabi * rabi + 0.25 * detuning * detuning)
    if gen == 0.0:
        return 1 + 0j, 0j
    phase = cmath.exp(-0.5j * detuning * t)
    s, c = math.sin(gen * t), math.cos(gen * t)
    alpha = phase * complex(c, 0.5 * detuning / gen * s)
    beta = -1j * (rabi / gen) * phase * s
    return alpha, beta


def adiabatic_beta(pulse: PulseShape, detuning: float, t) -> complex:
    """Far-detuned excited amplitude -Omega(t)/Delta."""
    if detuning == 0:
        raise ValueError("the adiabatic amplitude needs a nonzero detuning")
    return -rabi_at(pulse, t) / detuning + 0j


@numba.njit(cache=True)
def _oracle_rabi(kind_gaussian, peak, center, fwhm, t):
    if not kind_gaussian:
        return peak
    x = (t - center) / fwhm
    return peak * math.exp(-4.0 * math.log(2.0) * x * x)


@numba.njit(cache=True)
def _oracle_endpoint(kind_gaussian, peak, center, fwhm, detunings, decay, dt, n_steps):
    m = detunings.shape[0]
    out = np.empty(m, dtype=np.complex128)
    for j in range(m):
        a = 1.0 + 0.0j
        b = 0.0 + 0.0j
        z = decay + 1j * detunings[j]
        for s in range(n_steps):
            t = s * dt
            om0 = _oracle_rabi(kind_gaussian, peak, center, fwhm, t)
            omh = _oracle_rabi(kind_gaussian, peak, center, fwhm, t + 0.5 * dt)
            om1 = _oracle_rabi(kind_gaussian, peak, center, fwhm, t + dt)
            ka1 = -1j * om0 * b
            kb1 = -1j * om0 * a - z * b
            ka2 = -1j * omh * (b + 0.5 * dt * kb1)
            kb2 = -1j * omh * (a + 0.5 * dt * ka1) - z * (b + 0.5 * dt * kb1)
            ka3 = -1j * omh * (b + 0.5 * dt * kb2)
            kb3 = -1j * omh * (a + 0.5 * dt * ka2) - z * (b + 0.5 * dt * kb2)
            ka4 = -1j * om1 * (b + dt * kb3)
            kb4 = -1j * om1 * (a + dt * ka3) - z * (b + dt * kb3)
            a = a + dt / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
            b = b + dt / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4)
        out[j] = b
    return out


def brute_force_collectivity(pulse: PulseShape, dist: SpectralDistribution, decay: float,
                             t_s: float, fine_nodes: int = 2001, fine_dt: float = 2.5e-6,
                             span_sigmas: float = 7.0) -> Optional[float]:
    """Collectivity at ``t_s`` from a uniform trapezoid rule and an independent integrator.

    Returns None if the ensemble carries no excitation at ``t_s``.
    """
    if t_s == 0:
        return None
    n_steps = int(round(t_s / fine_dt))
    if n_steps < 1 or abs(n_steps * fine_dt - t_s) > 1e-9:
        raise ValueError(f"fine_dt={fine_dt} does not divide t_s={t_s}")
    if dist.fwhm == 0:
        nodes = np.array([dist.center_offset], dtype=float)
        weights = np.array([1.0])
    else:
        std = dist.fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        nodes = np.linspace(dist.center_offset - span_sigmas * std,
                            dist.center_offset + span_sigmas * std, fine_nodes)
        weights = np.exp(-0.5 * ((nodes - dist.center_offset) / std) ** 2)
        weights[0] *= 0.5
        weights[-1] *= 0.5
        weights = weights / weights.sum()
    beta = _oracle_endpoint(pulse.kind is PulseKind.GAUSSIAN, pulse.peak_rabi, pulse.center,
                            pulse.fwhm, nodes, float(decay), float(fine_dt), n_steps)
    pop = float(np.sum(weights * np.abs(beta) ** 2))
    if pop < 1e-30:
        return None
    return min(abs(np.sum(weights * beta)) ** 2 / pop, 1.0)
