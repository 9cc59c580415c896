import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collectivity.dynamics import (
    TWO_PI,
    AtomParams,
    NumericalError,
    PulseShape,
    integrate_two_level,
    mhz,
    propagate,
    pulse_area,
    rabi_at,
    time_grid,
    to_mhz,
)

# closed-form area of the default pulse, peak * fwhm * sqrt(pi / ln 2) / 2
AREA = TWO_PI * 0.1 * 0.5 * math.sqrt(math.pi / math.log(2))

detunings_mhz = st.floats(min_value=-2500, max_value=2500, allow_nan=False)
decays_mhz = st.floats(min_value=0.01, max_value=50)
SLOW = settings(max_examples=25, deadline=None)


def test_unit_conversion_round_trip():
    assert mhz(1.0) == TWO_PI
    assert to_mhz(mhz(1250.0)) == pytest.approx(1250.0, rel=1e-15)


class TestPulse:
    def test_peak_at_center(self):
        assert rabi_at(PulseShape(), 0.2) == TWO_PI

    def test_half_max_at_half_fwhm(self):
        p = PulseShape.gaussian(TWO_PI, 0.2, 0.15)
        assert rabi_at(p, 0.125) == pytest.approx(math.pi, rel=1e-14)

    def test_constant(self):
        assert rabi_at(PulseShape.constant(1.0), 17.3) == 1.0
        assert np.all(rabi_at(PulseShape.constant(1.0), np.linspace(0, 1, 5)) == 1.0)

    def test_array_input(self):
        t = np.linspace(0, 0.5, 11)
        out = rabi_at(PulseShape(), t)
        assert out.shape == t.shape and np.all(out >= 0)

    @pytest.mark.parametrize("kwargs", [dict(peak_rabi=-1.0), dict(fwhm=0.0)])
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ValueError):
            PulseShape(**kwargs)

    def test_full_area_closed_form(self):
        assert pulse_area(PulseShape(), -math.inf, math.inf) == pytest.approx(AREA, abs=1e-13)
        assert AREA == pytest.approx(0.6688244, abs=1e-7)

    def test_area_against_trapezoid(self):
        t = np.linspace(-0.5, 0.9, 400001)
        numeric = np.trapezoid(rabi_at(PulseShape(), t), t)
        assert pulse_area(PulseShape(), -0.5, 0.9) == pytest.approx(numeric, abs=1e-9)

    def test_constant_area(self):
        assert pulse_area(PulseShape.constant(0.5), 0.0, 2.0) == 1.0

    def test_empty_interval(self):
        assert pulse_area(PulseShape(), 0.3, 0.3) == 0.0

    def test_reversed_interval(self):
        with pytest.raises(ValueError):
            pulse_area(PulseShape(), 0.3, 0.1)


class TestGrid:
    def test_default_grid(self):
        n, t = time_grid(0.5, 1e-5)
        assert n == 50000 and t[-1] == pytest.approx(0.5, abs=1e-9)
        # k*dt correctly rounded; spacing jitter is then a few ulps of t, not of dt
        assert np.array_equal(t, np.arange(50001) * 1e-5)
        assert np.all(np.abs(np.diff(t) - 1e-5) <= 2 * np.spacing(t[1:]))

    @pytest.mark.parametrize("t_end, dt", [(0.5, 0.0), (0.5, -1e-5), (0.0, 1e-5), (0.1, 0.2), (0.5, 3e-5)])
    def test_rejects(self, t_end, dt):
        with pytest.raises(ValueError):
            time_grid(t_end, dt)

    def test_integrate_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            integrate_two_level(PulseShape(), AtomParams(0.0), 0.5, -1e-5)

    def test_atom_params_validation(self):
        with pytest.raises(ValueError):
            AtomParams(0.0, -1.0)
        with pytest.raises(ValueError):
            AtomParams(math.nan)


class TestIntegrator:
    def test_initial_condition(self):
        tr = integrate_two_level(PulseShape(), AtomParams(mhz(300)), 0.5, 1e-5)
        assert tr.alpha[0] == 1 and tr.beta[0] == 0
        assert len(tr.times) == 50001 and tr.dt == pytest.approx(1e-5)

    def test_resonant_full_pulse(self):
        tr = integrate_two_level(PulseShape(), AtomParams(0.0), 0.5, 1e-5)
        assert abs(tr.beta[-1]) == pytest.approx(math.sin(pulse_area(PulseShape(), 0, 0.5)), abs=1e-6)
        assert abs(tr.beta[-1]) == pytest.approx(0.6200634, abs=1e-6)

    def test_constant_drive_max(self):
        tr = integrate_two_level(PulseShape.constant(TWO_PI), AtomParams(TWO_PI), 2.0, 1e-5)
        assert np.abs(tr.beta).max() == pytest.approx(2 / math.sqrt(5), abs=1e-6)

    def test_zero_drive(self):
        tr = integrate_two_level(PulseShape(peak_rabi=0.0), AtomParams(mhz(40), mhz(5)), 0.5, 1e-5)
        assert np.all(tr.alpha == 1) and np.all(tr.beta == 0)

    def test_adiabatic_peak(self):
        tr = integrate_two_level(PulseShape(), AtomParams(mhz(1000)), 0.5, 1e-5)
        assert abs(tr.beta[20000]) == pytest.approx(1e-3, rel=0.1)

    def test_deterministic(self):
        a = integrate_two_level(PulseShape(), AtomParams(mhz(700), mhz(5)), 0.5, 1e-5)
        b = integrate_two_level(PulseShape(), AtomParams(mhz(700), mhz(5)), 0.5, 1e-5)
        assert np.array_equal(a.beta, b.beta) and np.array_equal(a.alpha, b.alpha)

    def test_batch_matches_single(self):
        ds = mhz(np.array([-900.0, 0.0, 12.5, 1250.0]))
        _, _, beta = propagate(PulseShape(), ds, mhz(5), 0.5, 1e-5)
        for k, d in enumerate(ds):
            single = integrate_two_level(PulseShape(), AtomParams(d, mhz(5)), 0.5, 1e-5)
            assert np.array_equal(beta[:, k], single.beta)

    def test_stride(self):
        times, _, beta = propagate(PulseShape(), [0.0], 0.0, 0.5, 1e-5, stride=100)
        full = integrate_two_level(PulseShape(), AtomParams(0.0), 0.5, 1e-5)
        assert np.array_equal(beta[:, 0], full.beta[::100])
        assert times.size == beta.shape[0]

    def test_blow_up_raises(self):
        with pytest.raises(NumericalError):
            integrate_two_level(PulseShape(), AtomParams(mhz(1e6)), 0.5, 1e-2)


@SLOW
@given(detunings_mhz)
def test_norm_conserved(d):
    tr = integrate_two_level(PulseShape(), AtomParams(mhz(d)), 0.5, 1e-5)
    assert np.abs(tr.norm() - 1).max() < 1e-8


@SLOW
@given(detunings_mhz, st.sampled_from([1e-4, 5e-5, 2e-5]))
def test_norm_conserved_coarse_steps(d, dt):
    tr = integrate_two_level(PulseShape(), AtomParams(mhz(d)), 0.5, dt)
    assert np.abs(tr.norm() - 1).max() < 1e-8


@SLOW
@given(detunings_mhz, decays_mhz)
def test_norm_decays_monotonically(d, g):
    tr = integrate_two_level(PulseShape(), AtomParams(mhz(d), mhz(g)), 0.5, 1e-5)
    assert np.diff(tr.norm()).max() <= 1e-10


@SLOW
@given(detunings_mhz, st.sampled_from([0.0, 5.0]))
def test_step_halving(d, g):
    a = integrate_two_level(PulseShape(), AtomParams(mhz(d), mhz(g)), 0.5, 1e-5)
    b = integrate_two_level(PulseShape(), AtomParams(mhz(d), mhz(g)), 0.5, 5e-6)
    assert np.abs(a.beta - b.beta[::2]).max() < 1e-6
    assert np.abs(a.alpha - b.alpha[::2]).max() < 1e-6


@SLOW
@given(detunings_mhz, st.sampled_from([0.0, 5.0, 20.0]))
def test_detuning_reflection(d, g):
    a = integrate_two_level(PulseShape(), AtomParams(mhz(d), mhz(g)), 0.5, 1e-5)
    b = integrate_two_level(PulseShape(), AtomParams(-mhz(d), mhz(g)), 0.5, 1e-5)
    assert np.abs(b.beta + np.conj(a.beta)).max() < 1e-10
    assert np.abs(b.alpha - np.conj(a.alpha)).max() < 1e-10
