"""
Tests for input signals and bound estimation.
"""

import math

import numpy as np
import pytest

# Local imports
from core.errors import SignalError
from core.signals import (
    InputSignal, SignalBank, SignalProfile, SignalTerm, estimate_bounds, integrate_references,
    make_case1_signal, make_case2_signal, make_signal, profile_from_terms, sawtooth,
    stack_accelerations,
)


def constant_signal(i, value):
    profile = SignalProfile(axes=((SignalTerm('constant', value),), (SignalTerm('constant', 0.0),)))
    return make_signal(i, profile, [0.0, 0.0], [0.0, 0.0])


class TestPresetSignals:
    """Test the two replication signal families."""

    def test_case1_at_zero(self):
        assert make_case1_signal(1).accel(0.0) == pytest.approx([0.0, 0.1])
        assert make_case1_signal(10).accel(0.0) == pytest.approx([0.0, 1.0])

    def test_case1_sawtooth_resets(self):
        a = make_case1_signal(1).accel(2.0)
        assert a == pytest.approx([0.1 * math.sin(10.0), 0.1 * math.cos(10.0)])

    def test_case1_period_of_sawtooth(self):
        signal = make_case1_signal(3)
        for t in np.linspace(0.05, 9.7, 20):
            shift = signal.accel(t + 2.0) - signal.accel(t)
            expected = 0.3 * np.array([math.sin(5 * (t + 2)) - math.sin(5 * t),
                                       math.cos(5 * (t + 2)) - math.cos(5 * t)])
            assert shift == pytest.approx(expected, abs=1e-12)

    def test_case2_values(self):
        assert make_case2_signal(1).accel(0.0) == pytest.approx([0.0, 0.1])
        assert make_case2_signal(5).accel(math.pi / 2) == pytest.approx([0.5, 0.0], abs=1e-15)

    def test_case2_initial_reference(self):
        signal = make_case2_signal(1)
        assert signal.v0 == pytest.approx([-0.1, -0.1])
        assert signal.r0 == pytest.approx([0.0, 0.0])
        assert signal.vr == pytest.approx(signal.v0)

    def test_preset_index_range(self):
        with pytest.raises(SignalError):
            make_case1_signal(0)
        with pytest.raises(SignalError):
            make_case2_signal(11)


class TestSignalTerms:
    """Test the declarative signal grammar."""

    def test_sawtooth_convention(self):
        assert sawtooth(0.0) == 0.0
        assert sawtooth(2.0) == 0.0
        assert sawtooth(3.5) == pytest.approx(1.5)
        assert sawtooth(-0.5) == pytest.approx(1.5)

    def test_unknown_kind(self):
        with pytest.raises(SignalError):
            SignalTerm('square')

    def test_profile_from_terms(self):
        profile = profile_from_terms([
            [{'kind': 'sin', 'amplitude': 2.0, 'frequency': 1.0}],
            [{'kind': 'constant', 'amplitude': 3.0, 'per_agent_scale': True}],
        ])
        assert profile.dim == 2
        assert profile.evaluate(math.pi / 2, 2.0) == pytest.approx([2.0, 6.0])

    def test_phase(self):
        term = SignalTerm('sin', 1.0, frequency=1.0, phase=math.pi / 2)
        assert term.evaluate(0.0) == pytest.approx(1.0)

    def test_custom_accel_fn(self):
        signal = InputSignal(index=2, r0=[0.0], v0=[0.0], accel_fn=lambda t, i: np.array([t * i]))
        assert signal.accel(1.5) == pytest.approx([3.0])

    def test_signal_needs_a_source(self):
        with pytest.raises(SignalError):
            InputSignal(index=1, r0=[0.0, 0.0], v0=[0.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(SignalError):
            InputSignal(index=1, r0=[0.0], v0=[0.0], profile=make_case2_signal(1).profile)

    def test_explicit_scale_overrides_index(self):
        profile = make_case2_signal(1).profile
        signal = make_signal(3, profile, [0.0, 0.0], [0.0, 0.0], scale=-2.5)
        assert signal.accel(0.0) == pytest.approx([0.0, -0.25])


class TestStackAccelerations:
    """Test vectorized evaluation against the per-agent generators."""

    def test_matches_per_agent(self):
        signals = [make_case1_signal(i) for i in range(1, 11)]
        for t in (0.0, 0.37, 2.0, 7.9):
            stacked = stack_accelerations(signals, t)
            expected = np.stack([s.accel(t) for s in signals])
            assert stacked == pytest.approx(expected, abs=1e-15)

    def test_mixed_sources(self):
        signals = [make_case2_signal(1),
                   InputSignal(index=2, r0=[0.0, 0.0], v0=[0.0, 0.0],
                               accel_fn=lambda t, i: np.array([1.0, t]))]
        stacked = SignalBank(signals).accelerations(2.0)
        assert stacked[1] == pytest.approx([1.0, 2.0])
        assert stacked[0] == pytest.approx(signals[0].accel(2.0))

    def test_grid_matches_pointwise(self):
        bank = SignalBank([make_case1_signal(i) for i in range(1, 4)])
        times = np.array([0.0, 0.5, 1.99, 2.0])
        grid = bank.accelerations_on_grid(times)
        for k, t in enumerate(times):
            assert grid[k] == pytest.approx(bank.accelerations(t), abs=1e-15)


class TestIntegrateReferences:
    """Test the reference integration against closed forms."""

    @staticmethod
    def case2_exact(i, t):
        # a = 0.1 i (sin t, cos t), r(0) = 0, v(0) = -0.1 i (1, 1)
        c = 0.1 * i
        vx = c * (1.0 - np.cos(t)) - c
        vy = c * np.sin(t) - c
        rx = c * (t - np.sin(t)) - c * t
        ry = c * (1.0 - np.cos(t)) - c * t
        return np.array([rx, ry]), np.array([vx, vy])

    def test_case2_closed_form(self):
        times, r, vr, a = integrate_references([make_case2_signal(3)], 5.0, 0.01)
        exact_r, exact_v = self.case2_exact(3, times[-1])
        assert r[-1, 0] == pytest.approx(exact_r, abs=1e-9)
        assert vr[-1, 0] == pytest.approx(exact_v, abs=1e-9)

    def test_step_halving_order(self):
        errors = []
        for step in (0.2, 0.1):
            times, r, _, _ = integrate_references([make_case2_signal(4)], 10.0, step)
            exact_r, _ = self.case2_exact(4, times[-1])
            errors.append(np.linalg.norm(r[-1, 0] - exact_r))
        assert errors[1] < errors[0] / 4

    def test_grid_shape(self):
        times, r, vr, a = integrate_references([make_case1_signal(1), make_case1_signal(2)], 1.0, 0.1)
        assert times.shape == (11,)
        assert r.shape == vr.shape == a.shape == (11, 2, 2)

    def test_rejects_bad_horizon(self):
        with pytest.raises(SignalError):
            integrate_references([make_case2_signal(1)], 0.0, 0.1)
        with pytest.raises(SignalError):
            integrate_references([make_case2_signal(1)], 1.0, -0.1)


class TestEstimateBounds:
    """Test grid-estimated suprema."""

    def test_identical_signals(self):
        profile = make_case2_signal(1).profile
        signals = [make_signal(i, profile, [0.0, 0.0], [0.0, 0.0], scale=1.0) for i in (1, 2, 3)]
        assert estimate_bounds(signals, 5.0, 0.01, safety=1.0).a_bar_d == 0.0

    def test_constant_pair(self):
        bounds = estimate_bounds([constant_signal(1, 1.0), constant_signal(2, 2.0)], 1.0, 0.1,
                                 safety=1.0)
        assert bounds.a_bar_d == pytest.approx(1.0)
        assert bounds.a_bar == pytest.approx(2.0)

    def test_case2_acceleration_bound(self):
        signals = [make_case2_signal(i) for i in range(1, 11)]
        bounds = estimate_bounds(signals, 40.0, 0.001, safety=1.1)
        assert bounds.a_bar == pytest.approx(1.1, rel=1e-9)
        assert bounds.horizon == 40.0

    def test_monotone_in_safety(self):
        signals = [make_case1_signal(i) for i in range(1, 5)]
        low = estimate_bounds(signals, 4.0, 0.01, safety=1.0)
        high = estimate_bounds(signals, 4.0, 0.01, safety=1.5)
        for name in ('a_bar_d', 'r_bar', 'v_bar', 'a_bar'):
            assert getattr(high, name) >= getattr(low, name)
        assert high.a_bar_d == pytest.approx(1.5 * low.a_bar_d)

    def test_never_below_a_sample(self):
        signals = [make_case1_signal(i) for i in range(1, 4)]
        bounds = estimate_bounds(signals, 3.0, 0.01, safety=1.0)
        for t in (0.0, 0.5, 1.3, 2.9):
            a = stack_accelerations(signals, t)
            assert np.linalg.norm(a[0] - a[2]) <= bounds.a_bar_d + 1e-12
            assert np.linalg.norm(a[2]) <= bounds.a_bar + 1e-12

    def test_errors(self):
        signals = [make_case2_signal(1)]
        with pytest.raises(SignalError):
            estimate_bounds(signals, 0.0, 0.01)
        with pytest.raises(SignalError):
            estimate_bounds(signals, 1.0, 0.0)
        with pytest.raises(SignalError):
            estimate_bounds([], 1.0, 0.01)
        with pytest.raises(SignalError):
            estimate_bounds(signals, 1.0, 0.01, safety=0.5)
