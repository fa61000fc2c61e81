"""
Tests for gain synthesis, verification and the summed-error subsystem.
"""

import cmath
import math

import numpy as np
import pytest

# Local imports
from core.errors import GainError
from core.gains import (
    GAMMA_FLOOR, GainSet, alg1_beta_bound, alg1_proof_matrix, alg2_beta_bound, check_iss_subsystem,
    synthesize_gains_alg1, synthesize_gains_alg2, verify_gains,
)
from core.graph import build_graph, canonical_topology, complete_graph, random_connected_graph, spectrum
from core.signals import SignalBounds, estimate_bounds, make_case2_signal


def flat_bounds(r_bar=1.0, v_bar=1.0, a_bar=1.0, a_bar_d=0.0):
    return SignalBounds(a_bar_d=a_bar_d, r_bar=r_bar, v_bar=v_bar, a_bar=a_bar,
                        horizon=1.0, grid_step=0.1)


class TestGainSet:
    """Test GainSet validation and serialization."""

    def test_second_algorithm_needs_kappa(self):
        with pytest.raises(GainError):
            GainSet(algorithm=2, alpha=1.0, beta=1.0, gamma=1.0)

    def test_rejects_negative_gain(self):
        with pytest.raises(GainError):
            GainSet(algorithm=1, alpha=2.0, beta=-1.0, gamma=1.0)

    def test_rejects_unknown_algorithm(self):
        with pytest.raises(GainError):
            GainSet(algorithm=3, alpha=2.0, beta=1.0, gamma=1.0)

    def test_zero_gains_allowed(self):
        gains = GainSet(algorithm=1, alpha=0.0, beta=0.0, gamma=0.0)
        assert gains.provenance == 'user_supplied'

    def test_dict_round_trip(self):
        gains = GainSet(algorithm=2, alpha=3.0, beta=4.0, gamma=5.0, kappa=1.5, margin=1.2,
                        provenance='synthesized')
        assert GainSet.from_dict(gains.to_dict()) == gains

    def test_first_algorithm_dict_has_no_kappa(self):
        assert 'kappa' not in GainSet(algorithm=1, alpha=2.0, beta=1.0, gamma=1.0).to_dict()


class TestSynthesizeAlgorithmOne:
    """Test synthesize_gains_alg1."""

    def test_two_node_example(self):
        gains = synthesize_gains_alg1(spectrum(complete_graph(2)), 2, 1.0, margin=1.1)
        assert gains.alpha == pytest.approx(1.1)
        assert gains.gamma == pytest.approx(1.1)
        assert gains.beta == pytest.approx(1.1 * (1 + 1.1 ** 4 * 4) / (4 * 2 * 1.2 * 0.1))
        assert gains.beta == pytest.approx(7.856, abs=1e-3)
        assert gains.provenance == 'synthesized'
        assert gains.margin == 1.1

    def test_gamma_floor(self):
        gains = synthesize_gains_alg1(spectrum(complete_graph(3)), 3, 0.0, margin=1.1)
        assert gains.gamma == pytest.approx(GAMMA_FLOOR * 1.1)

    def test_passes_verification(self):
        g = canonical_topology()
        spec = spectrum(g)
        gains = synthesize_gains_alg1(spec, g.n, 2.5)
        report = verify_gains(gains, spec, g.n, 2.5)
        assert report.passed
        assert report.definiteness.passed

    def test_disconnected_graph_refused(self):
        with pytest.raises(GainError):
            synthesize_gains_alg1(spectrum(build_graph(3, [(1, 2)])), 3, 1.0)

    def test_margin_must_exceed_one(self):
        with pytest.raises(GainError):
            synthesize_gains_alg1(spectrum(complete_graph(3)), 3, 1.0, margin=1.0)

    def test_negative_deviation_bound(self):
        with pytest.raises(GainError):
            synthesize_gains_alg1(spectrum(complete_graph(3)), 3, -0.1)


class TestSynthesizeAlgorithmTwo:
    """Test synthesize_gains_alg2."""

    def test_complete_graph_example(self):
        gains = synthesize_gains_alg2(spectrum(complete_graph(4)), 4, flat_bounds(), margin=1.1)
        assert gains.kappa == pytest.approx(1.1)
        assert gains.alpha == pytest.approx(2.2)
        assert gains.gamma == pytest.approx(56.32)
        k, a, lam = 1.1, 2.2, 4.0
        expected = 1.1 / (4 * (a - 1)) * (
            k ** 2 / (k + (a - 1) * lam)
            + ((k - 1) ** 2 + 2 * a ** 2 * (k - 1) * lam + a ** 4 * lam ** 2) / (a * lam + k - 1))
        assert gains.beta == pytest.approx(expected)

    def test_gamma_floor(self):
        bounds = flat_bounds(0.0, 0.0, 0.0)
        gains = synthesize_gains_alg2(spectrum(complete_graph(4)), 4, bounds, margin=1.1)
        assert gains.gamma == pytest.approx(GAMMA_FLOOR * 1.1)

    def test_passes_verification(self):
        g = canonical_topology()
        spec = spectrum(g)
        bounds = flat_bounds(3.0, 2.0, 1.0)
        gains = synthesize_gains_alg2(spec, g.n, bounds)
        report = verify_gains(gains, spec, g.n, bounds)
        assert report.passed
        assert report.definiteness.passed


class TestSynthesisProperties:
    """Test properties shared by both synthesis routines."""

    def test_round_trip_on_random_instances(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            n = int(rng.integers(2, 9))
            g = random_connected_graph(n, rng=rng)
            spec = spectrum(g)
            r_bar, v_bar, a_bar, a_bar_d = rng.uniform(0.0, 5.0, size=4)
            bounds = flat_bounds(r_bar, v_bar, a_bar, a_bar_d)

            first = synthesize_gains_alg1(spec, n, a_bar_d)
            report = verify_gains(first, spec, n, bounds)
            assert report.passed, report.as_table()

            second = synthesize_gains_alg2(spec, n, bounds)
            report = verify_gains(second, spec, n, bounds)
            assert report.passed, report.as_table()

    def test_margin_monotonicity(self):
        g = canonical_topology()
        spec = spectrum(g)
        bounds = flat_bounds(2.0, 1.0, 1.0, 1.5)
        margins = [1.01, 1.1, 1.5, 2.0, 3.0]
        first = [synthesize_gains_alg1(spec, g.n, 1.5, m) for m in margins]
        second = [synthesize_gains_alg2(spec, g.n, bounds, m) for m in margins]
        for low, high in zip(first, first[1:]):
            assert high.alpha >= low.alpha
            assert high.gamma >= low.gamma
        for low, high in zip(second, second[1:]):
            assert high.alpha >= low.alpha
            assert high.kappa >= low.kappa
            assert high.gamma >= low.gamma

    def test_beta_follows_its_bound_not_the_margin(self):
        # beta's bound falls as alpha grows, so a larger margin can lower beta
        spec = spectrum(complete_graph(2))
        low = synthesize_gains_alg1(spec, 2, 1.0, margin=1.1)
        high = synthesize_gains_alg1(spec, 2, 1.0, margin=1.5)
        assert high.beta < low.beta
        assert high.beta > alg1_beta_bound(high.alpha, 2.0, 2.0)

    def test_beta_bound_decreasing_in_lambda2(self):
        alpha, lambdaN = 3.0, 5.0
        grid = np.linspace(0.4, 5.0, 50)
        values = [alg1_beta_bound(alpha, lam, lambdaN) for lam in grid]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_undefined_bounds_are_infinite(self):
        assert alg1_beta_bound(1.0, 2.0, 2.0) == math.inf
        assert alg1_beta_bound(2.0, 0.4, 2.0) == math.inf
        assert alg2_beta_bound(0.5, 1.1, 2.0, 2.0) == math.inf


class TestVerifyGains:
    """Test verify_gains reports."""

    def setup_method(self):
        """Set up the canonical graph and its spectrum."""
        self.g = canonical_topology()
        self.spec = spectrum(self.g)

    def test_alpha_boundary_fails(self):
        gains = GainSet(algorithm=1, alpha=1.0, beta=1e4, gamma=100.0)
        report = verify_gains(gains, self.spec, self.g.n, 1.0)
        assert not report.passed
        assert 'alpha > 1' in report.failures

    def test_non_strict_mode_accepts_boundary(self):
        gains = GainSet(algorithm=1, alpha=5.0, beta=1e4, gamma=9.0)
        assert not verify_gains(gains, self.spec, self.g.n, 1.0).checks[3].passed
        assert verify_gains(gains, self.spec, self.g.n, 1.0, strict=False).checks[3].passed

    def test_published_second_case_gains(self):
        signals = [make_case2_signal(i) for i in range(1, 11)]
        bounds = estimate_bounds(signals, 30.0, 0.01)
        gains = GainSet(algorithm=2, alpha=10.0, beta=450.0, gamma=50.0, kappa=2.0)
        report = verify_gains(gains, self.spec, self.g.n, bounds)
        checks = {c.name: c for c in report.checks}
        assert checks['kappa > 1'].passed
        assert checks['alpha > sqrt(n)'].passed
        assert checks['alpha > sqrt(n)'].rhs == pytest.approx(math.sqrt(10))
        gamma_check = next(c for c in report.checks if c.name.startswith('gamma'))
        beta_check = next(c for c in report.checks if c.name.startswith('beta'))
        assert math.isfinite(gamma_check.rhs) and gamma_check.rhs > 0
        assert math.isfinite(beta_check.rhs) and beta_check.rhs > 0
        assert report.definiteness is not None

    def test_gamma_shortfall_is_noted(self):
        gains = GainSet(algorithm=1, alpha=20.0, beta=400.0, gamma=5.0)
        report = verify_gains(gains, self.spec, self.g.n, 2.0)
        assert 'gamma > (n-1) a_bar_d' in report.failures
        assert any('sliding-mode bound' in note for note in report.notes)

    def test_second_algorithm_needs_full_bounds(self):
        gains = GainSet(algorithm=2, alpha=10.0, beta=450.0, gamma=50.0, kappa=2.0)
        with pytest.raises(GainError):
            verify_gains(gains, self.spec, self.g.n, 1.0)

    def test_disconnected_graph_is_noted(self):
        g = build_graph(3, [(1, 2)])
        gains = GainSet(algorithm=1, alpha=3.0, beta=10.0, gamma=1.0)
        report = verify_gains(gains, spectrum(g), 3, 0.1)
        assert not report.passed
        assert any('disconnected' in note for note in report.notes)

    def test_proof_matrix_is_symmetric(self):
        gains = GainSet(algorithm=1, alpha=3.0, beta=10.0, gamma=1.0)
        q = alg1_proof_matrix(gains, 0.5, 2.0)
        assert np.array_equal(q, q.T)

    def test_table_and_dict(self):
        gains = synthesize_gains_alg1(self.spec, self.g.n, 1.0)
        report = verify_gains(gains, self.spec, self.g.n, 1.0)
        table = report.as_table()
        assert 'overall: PASS' in table
        assert 'alpha > 1/lambda2' in table
        data = report.to_dict()
        assert data['passed'] is True
        assert len(data['checks']) == 5
        assert data['definiteness']['passed'] is True


class TestISSSubsystem:
    """Test check_iss_subsystem against the quadratic formula."""

    @pytest.mark.parametrize('kappa', [1.01, 2.0, 10.0, 1.0])
    def test_roots_match_quadratic_formula(self, kappa):
        disc = cmath.sqrt(kappa ** 2 - 4 * kappa)
        expected = np.sort_complex(np.array([(-kappa - disc) / 2, (-kappa + disc) / 2]))
        report = check_iss_subsystem(kappa)
        assert report.hurwitz
        assert np.allclose(report.eigenvalues, expected, rtol=0, atol=1e-12)

    def test_kappa_two(self):
        report = check_iss_subsystem(2.0)
        assert np.allclose(report.eigenvalues, [-1 - 1j, -1 + 1j], atol=1e-12)

    def test_hurwitz_on_grid(self):
        for kappa in np.linspace(0.05, 50.0, 40):
            assert check_iss_subsystem(float(kappa)).hurwitz

    def test_non_positive_kappa_rejected(self):
        with pytest.raises(GainError):
            check_iss_subsystem(0.0)
        with pytest.raises(GainError):
            check_iss_subsystem(-1.0)

    def test_to_dict(self):
        data = check_iss_subsystem(2.0).to_dict()
        assert data['hurwitz'] is True
        assert len(data['eigenvalues']) == 2
