import json
import math

import numpy as np
import pytest

from collectivity.dynamics import TWO_PI, AtomParams, PulseShape, integrate_two_level, mhz, rabi_at
from collectivity.ensemble import SpectralDistribution
from collectivity.oracles import (
    adiabatic_beta,
    brute_force_collectivity,
    constant_rabi_solution,
    resonant_solution,
)

from conftest import GOLDEN


def _rhs(alpha, beta, omega, delta):
    return -1j * omega * beta, -1j * omega * alpha - 1j * delta * beta


class TestClosedForms:
    def test_resonant_initial(self):
        assert resonant_solution(PulseShape(), 0.0) == (1, 0)

    def test_resonant_after_pulse(self):
        alpha, beta = resonant_solution(PulseShape(), 0.5)
        assert beta.real == 0 and -beta.imag == pytest.approx(0.6200634, abs=1e-7)
        assert abs(alpha) ** 2 + abs(beta) ** 2 == pytest.approx(1, abs=1e-15)

    def test_constant_quarter_period(self):
        _, beta = resonant_solution(PulseShape.constant(TWO_PI), 0.25)
        assert beta == pytest.approx(-1j, abs=1e-15)

    @pytest.mark.parametrize("t", [0.0, 0.05, 0.31])
    def test_constant_consistent_with_resonant(self, t):
        a1, b1 = constant_rabi_solution(TWO_PI, 0.0, t)
        a2, b2 = resonant_solution(PulseShape.constant(TWO_PI), t)
        assert a1 == pytest.approx(a2, abs=1e-14) and b1 == pytest.approx(b2, abs=1e-14)

    def test_constant_detuned_max(self):
        t = np.linspace(0, 2, 20001)
        b = np.array([constant_rabi_solution(TWO_PI, TWO_PI, x)[1] for x in t])
        assert np.abs(b).max() == pytest.approx(2 / math.sqrt(5), abs=1e-6)

    def test_no_coupling(self):
        assert constant_rabi_solution(0.0, 3.0, 0.7) == pytest.approx((1, 0), abs=1e-15)
        assert constant_rabi_solution(0.0, 0.0, 0.7) == (1, 0)

    @pytest.mark.parametrize("omega, delta", [(TWO_PI, 0.0), (TWO_PI, TWO_PI), (3.0, -40.0)])
    def test_constant_solves_equations(self, omega, delta):
        # central differences against the right-hand side
        h = 1e-6
        for t in (0.013, 0.2, 0.77):
            a_p, b_p = constant_rabi_solution(omega, delta, t + h)
            a_m, b_m = constant_rabi_solution(omega, delta, t - h)
            a, b = constant_rabi_solution(omega, delta, t)
            da, db = _rhs(a, b, omega, delta)
            assert (a_p - a_m) / (2 * h) == pytest.approx(da, abs=1e-6)
            assert (b_p - b_m) / (2 * h) == pytest.approx(db, abs=1e-6)

    def test_resonant_solves_equations(self):
        h = 1e-7
        pulse = PulseShape()
        for t in (0.1, 0.2, 0.27):
            a_p, b_p = resonant_solution(pulse, t + h)
            a_m, b_m = resonant_solution(pulse, t - h)
            a, b = resonant_solution(pulse, t)
            da, db = _rhs(a, b, rabi_at(pulse, t), 0.0)
            assert (a_p - a_m) / (2 * h) == pytest.approx(da, abs=1e-6)
            assert (b_p - b_m) / (2 * h) == pytest.approx(db, abs=1e-6)


class TestAdiabatic:
    @pytest.mark.parametrize("d_mhz, expected", [(1000, -0.001), (500, -0.002)])
    def test_peak_ratio(self, d_mhz, expected):
        assert adiabatic_beta(PulseShape(), mhz(d_mhz), 0.2) == pytest.approx(expected, rel=1e-14)

    def test_far_from_pulse(self):
        assert abs(adiabatic_beta(PulseShape(), mhz(1000), 1.5)) < 1e-30

    def test_rejects_zero_detuning(self):
        with pytest.raises(ValueError):
            adiabatic_beta(PulseShape(), 0.0, 0.2)

    def test_deviation_shrinks_with_detuning(self):
        pulse = PulseShape()
        errors = []
        for d in (250, 500, 1000, 2000):
            tr = integrate_two_level(pulse, AtomParams(mhz(d)), 0.5, 1e-5)
            window = (tr.times >= 0.15) & (tr.times <= 0.25)
            approx = adiabatic_beta(pulse, mhz(d), tr.times[window])
            errors.append(np.abs(tr.beta[window] - approx).max() / (pulse.peak_rabi / mhz(d)))
        assert all(a > b for a, b in zip(errors, errors[1:])), errors


class TestBruteForce:
    def test_homogeneous(self):
        c = brute_force_collectivity(PulseShape(), SpectralDistribution(0.0, mhz(300)), 0.0, 0.2)
        assert c == pytest.approx(1.0, abs=1e-12)

    def test_undefined_at_zero(self):
        assert brute_force_collectivity(PulseShape(), SpectralDistribution(mhz(500)), 0.0, 0.0) is None
        assert brute_force_collectivity(PulseShape(peak_rabi=0.0), SpectralDistribution(mhz(500)),
                                        0.0, 0.2, fine_nodes=11) is None

    def test_rejects_incommensurate_step(self):
        with pytest.raises(ValueError):
            brute_force_collectivity(PulseShape(), SpectralDistribution(mhz(500)), 0.0, 0.2,
                                     fine_dt=3e-6)

    def test_frozen_values_ordered(self):
        values = json.loads((GOLDEN / "brute_force_c02.json").read_text())["collectivity"]
        c = [values[k] for k in ("0", "500", "750", "1000", "1250")]
        assert all(a < b for a, b in zip(c, c[1:]))
