"""Driven, detuned, decaying two-level amplitude dynamics.

Amplitudes of |g>|0> (alpha) and |e>|0> (beta) obey

    d(alpha)/dt = -i Omega(t) beta
    d(beta)/dt  = -i Omega(t) alpha - i Delta beta - Gamma beta

with the directional-mode back-action folded into Gamma. Units are
microseconds and rad/us throughout; a linear frequency in MHz enters as
2*pi*MHz (see :func:`mhz`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np
from scipy.special import erf

TWO_PI = 2.0 * math.pi
_FOUR_LN2 = 4.0 * math.log(2.0)


class NumericalError(RuntimeError):
    """Raised when an integration produces non-finite amplitudes."""


def mhz(value):
    """Linear frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * value


def to_mhz(value):
    """Angular frequency in rad/us -> linear frequency in MHz."""
    return value / TWO_PI


class PulseKind(str, Enum):
    GAUSSIAN = "gaussian"
    CONSTANT = "constant"


@dataclass(frozen=True)
class PulseShape:
    """Rabi frequency envelope Omega(t).

    ``peak_rabi`` is in rad/us, ``center`` and ``fwhm`` in us (the latter two
    only matter for gaussian pulses).
    """

    kind: PulseKind = PulseKind.GAUSSIAN
    peak_rabi: float = TWO_PI
    center: float = 0.2
    fwhm: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        if not self.peak_rabi >= 0:
            raise ValueError(f"peak_rabi must be >= 0, got {self.peak_rabi}")
        if self.kind is PulseKind.GAUSSIAN and not self.fwhm > 0:
            raise ValueError(f"fwhm must be > 0 for a gaussian pulse, got {self.fwhm}")

    @classmethod
    def gaussian(cls, peak_rabi: float, center: float, fwhm: float) -> "PulseShape":
        return cls(PulseKind.GAUSSIAN, peak_rabi, center, fwhm)

    @classmethod
    def constant(cls, peak_rabi: float) -> "PulseShape":
        return cls(PulseKind.CONSTANT, peak_rabi, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "peak_rabi": self.peak_rabi,
                "center": self.center, "fwhm": self.fwhm}


@dataclass(frozen=True)
class AtomParams:
    """One spectral class: detuning from the laser and amplitude decay rate (rad/us)."""

    detuning: float
    decay: float = 0.0

    def __post_init__(self):
        if not self.decay >= 0:
            raise ValueError(f"decay must be >= 0, got {self.decay}")
        if not math.isfinite(self.detuning):
            raise ValueError(f"detuning must be finite, got {self.detuning}")


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    times: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def norm(self) -> np.ndarray:
        """|alpha|^2 + |beta|^2 at every grid point."""
        return np.abs(self.alpha) ** 2 + np.abs(self.beta) ** 2


def rabi_at(pulse: PulseShape, t):
    """Evaluate Omega(t) in rad/us; ``t`` may be a scalar or an array."""
    if pulse.kind is PulseKind.CONSTANT:
        if np.ndim(t) == 0:
            return float(pulse.peak_rabi)
        return np.full(np.shape(t), float(pulse.peak_rabi))
    x = (np.asarray(t, dtype=float) - pulse.center) / pulse.fwhm
    out = pulse.peak_rabi * np.exp(-_FOUR_LN2 * x * x)
    return float(out) if np.ndim(out) == 0 else out


def pulse_area(pulse: PulseShape, t0: float, t1: float) -> float:
    """Integral of Omega(t) over [t0, t1] in radians (infinite bounds allowed)."""
    if t1 < t0:
        raise ValueError(f"t1 must be >= t0, got t0={t0}, t1={t1}")
    if t1 == t0:
        return 0.0
    if pulse.kind is PulseKind.CONSTANT:
        return pulse.peak_rabi * (t1 - t0)
    a = math.sqrt(_FOUR_LN2) / pulse.fwhm
    total = pulse.peak_rabi * math.sqrt(math.pi) / a
    return 0.5 * total * float(erf(a * (t1 - pulse.center)) - erf(a * (t0 - pulse.center)))


def time_grid(t_end: float, dt: float) -> tuple[int, np.ndarray]:
    """Validate (t_end, dt) and return the step count and the grid k*dt."""
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive, got {dt}")
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ValueError(f"t_end must be positive, got {t_end}")
    if dt > t_end:
        raise ValueError(f"dt={dt} exceeds t_end={t_end}")
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9:
        raise ValueError(f"dt={dt} does not divide t_end={t_end}")
    return n_steps, np.arange(n_steps + 1) * dt


def half_step_rabi(pulse: PulseShape, n_steps: int, dt: float) -> np.ndarray:
    """Omega sampled at every step start and midpoint: entry j is Omega(j*dt/2)."""
    return np.asarray(rabi_at(pulse, np.arange(2 * n_steps + 1) * (0.5 * dt)), dtype=float)


@numba.njit(inline="always")
def _rk4_step(ar, ai, br, bi, o0, o1, o2, delta, decay, dt):
    # Real-arithmetic RK4 step. Every kernel goes through here so a node's
    # trajectory is bitwise the same whether integrated alone or in a batch.
    h = 0.5 * dt
    # k = f(state), f_alpha = -i O beta, f_beta = -i O alpha - (decay + i delta) beta
    k1ar = o0 * bi
    k1ai = -o0 * br
    k1br = o0 * ai - decay * br + delta * bi
    k1bi = -o0 * ar - decay * bi - delta * br

    ar2 = ar + h * k1ar
    ai2 = ai + h * k1ai
    br2 = br + h * k1br
    bi2 = bi + h * k1bi
    k2ar = o1 * bi2
    k2ai = -o1 * br2
    k2br = o1 * ai2 - decay * br2 + delta * bi2
    k2bi = -o1 * ar2 - decay * bi2 - delta * br2

    ar3 = ar + h * k2ar
    ai3 = ai + h * k2ai
    br3 = br + h * k2br
    bi3 = bi + h * k2bi
    k3ar = o1 * bi3
    k3ai = -o1 * br3
    k3br = o1 * ai3 - decay * br3 + delta * bi3
    k3bi = -o1 * ar3 - decay * bi3 - delta * br3

    ar4 = ar + dt * k3ar
    ai4 = ai + dt * k3ai
    br4 = br + dt * k3br
    bi4 = bi + dt * k3bi
    k4ar = o2 * bi4
    k4ai = -o2 * br4
    k4br = o2 * ai4 - decay * br4 + delta * bi4
    k4bi = -o2 * ar4 - decay * bi4 - delta * br4

    s = dt / 6.0
    return (
        ar + s * (k1ar + 2.0 * k2ar + 2.0 * k3ar + k4ar),
        ai + s * (k1ai + 2.0 * k2ai + 2.0 * k3ai + k4ai),
        br + s * (k1br + 2.0 * k2br + 2.0 * k3br + k4br),
        bi + s * (k1bi + 2.0 * k2bi + 2.0 * k3bi + k4bi),
    )


@numba.njit(nogil=True, cache=True)
def _trajectory_kernel(omega, detunings, decay, dt, n_steps, stride, alpha, beta):
    # alpha, beta: (n_records, n_nodes) complex output; row r holds step r*stride
    m = detunings.shape[0]
    for j in range(m):
        delta = detunings[j]
        ar, ai, br, bi = 1.0, 0.0, 0.0, 0.0
        alpha[0, j] = complex(ar, ai)
        beta[0, j] = complex(br, bi)
        for s in range(n_steps):
            ar, ai, br, bi = _rk4_step(ar, ai, br, bi, omega[2 * s], omega[2 * s + 1],
                                       omega[2 * s + 2], delta, decay, dt)
            if (s + 1) % stride == 0:
                r = (s + 1) // stride
                alpha[r, j] = complex(ar, ai)
                beta[r, j] = complex(br, bi)


@numba.njit(nogil=True, cache=True)
def _moment_kernel(omega, detunings, weights, decay, dt, n_steps, snap_index,
                   mean_re, mean_im, population, snapshot):
    # Streams all nodes forward together and reduces over nodes in index order
    # after every step: mean = sum w*beta, population = sum w*|beta|^2.
    m = detunings.shape[0]
    ar = np.ones(m)
    ai = np.zeros(m)
    br = np.zeros(m)
    bi = np.zeros(m)
    mean_re[0] = 0.0
    mean_im[0] = 0.0
    population[0] = 0.0
    if snap_index == 0:
        for j in range(m):
            snapshot[j] = 0.0
    for s in range(n_steps):
        o0 = omega[2 * s]
        o1 = omega[2 * s + 1]
        o2 = omega[2 * s + 2]
        for j in range(m):
            ar[j], ai[j], br[j], bi[j] = _rk4_step(ar[j], ai[j], br[j], bi[j], o0, o1, o2,
                                                   detunings[j], decay, dt)
        sr, si, sp = _reduce(br, bi, weights)
        mean_re[s + 1] = sr
        mean_im[s + 1] = si
        population[s + 1] = sp
        if s + 1 == snap_index:
            for j in range(m):
                snapshot[j] = complex(br[j], bi[j])


@numba.njit(inline="always")
def _reduce(br, bi, weights):
    sr = 0.0
    si = 0.0
    sp = 0.0
    for j in range(weights.shape[0]):
        w = weights[j]
        sr += w * br[j]
        si += w * bi[j]
        sp += w * (br[j] * br[j] + bi[j] * bi[j])
    return sr, si, sp


@numba.njit(nogil=True, cache=True)
def _reduce_rows(beta, weights, mean_re, mean_im, population):
    for k in range(beta.shape[0]):
        sr, si, sp = _reduce(beta[k].real, beta[k].imag, weights)
        mean_re[k] = sr
        mean_im[k] = si
        population[k] = sp


def propagate(pulse: PulseShape, detunings, decay: float, t_end: float, dt: float,
              stride: int = 1):
    """Integrate every detuning in ``detunings`` from alpha=1, beta=0.

    Returns ``(times, alpha, beta)`` with alpha/beta shaped (n_records, n_nodes).
    Only every ``stride``-th step is recorded.
    """
    if not decay >= 0:
        raise ValueError(f"decay must be >= 0, got {decay}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n_steps, times = time_grid(t_end, dt)
    detunings = np.ascontiguousarray(detunings, dtype=float)
    n_rec = n_steps // stride + 1
    alpha = np.empty((n_rec, detunings.size), dtype=complex)
    beta = np.empty((n_rec, detunings.size), dtype=complex)
    omega = half_step_rabi(pulse, n_steps, dt)
    _trajectory_kernel(omega, detunings, float(decay), float(dt), n_steps, stride, alpha, beta)
    if not (np.isfinite(alpha).all() and np.isfinite(beta).all()):
        raise NumericalError("non-finite amplitude during integration")
    return times[::stride], alpha, beta


def integrate_two_level(pulse: PulseShape, atom: AtomParams, t_end: float,
                        dt: float) -> AmplitudeTrajectory:
    """Fixed-step RK4 trajectory of one spectral class on the grid k*dt, k=0..t_end/dt.

    Omega is evaluated at the step start, midpoint and end. Identical inputs
    give bit-identical outputs.
    """
    times, alpha, beta = propagate(pulse, [atom.detuning], atom.decay, t_end, dt)
    return AmplitudeTrajectory(times, alpha[:, 0].copy(), beta[:, 0].copy())
