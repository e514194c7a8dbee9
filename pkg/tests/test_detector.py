"""Counting model, signals and Monte Carlo error studies."""

import math
from dataclasses import replace

import numpy as np
import pytest

from atomwva.detector import (
    DetectorSetup,
    count_once,
    error_suppression_experiment,
    expected_counts,
    first_order_signal,
    lever_arm,
    log_signal,
    sample_counts,
    signal,
    simulate_counts,
    window_integral,
)
from atomwva.dynamics import EffectiveCoupling, propagate_effective
from atomwva.errors import ContractError, DomainError, NormalizationError
from atomwva.hilbert import Grid1D
from atomwva.weakvalue import PostselectionSpec, postselect, qubit_for_weak_value, weak_value

ETA = math.pi / 4


def _pdf(x):
    return math.exp(-x * x / 2) / math.sqrt(2 * math.pi)


def _cdf(x):
    return 0.5 * (1 + math.erf(x / math.sqrt(2)))


def selected(packet, A_w, g_c, eta=ETA):
    q = qubit_for_weak_value(A_w, eta)
    sel = postselect(propagate_effective(packet, q, EffectiveCoupling(0.0, g_c)), PostselectionSpec(eta))
    return sel.pointer.normalized(), sel.P_actual, weak_value(q, PostselectionSpec(eta))


class TestSetup:
    def test_collecting_region_narrower_than_offset(self):
        with pytest.raises(DomainError, match="l < x_pos"):
            DetectorSetup(x_pos=1.0, l=1.0)

    def test_windows(self):
        assert DetectorSetup(2.0, 1.0).windows == ((1.5, 2.5), (-2.5, -1.5))

    def test_windows_must_fit_grid(self, packet):
        with pytest.raises(DomainError, match="outside the grid"):
            expected_counts(packet, 1.0, DetectorSetup(x_pos=7.8, l=1.0))

    @pytest.mark.parametrize("kw", [{"chi": 0.0}, {"chi": 1.5}, {"N": -1}, {"N": 2.5}])
    def test_invalid_fields(self, kw):
        with pytest.raises(DomainError):
            DetectorSetup(**kw)


class TestLeverArm:
    def test_golden_value(self, grid):
        # window [1, 2] on the unit Gaussian: (phi(1) - phi(2)) / (Phi(2) - Phi(1))
        oracle = (_pdf(1) - _pdf(2)) / (_cdf(2) - _cdf(1))
        assert oracle == pytest.approx(1.383169, abs=1e-6)
        # trapezoid error ~ spacing^2 / 12 with spacing 1/64
        assert lever_arm(DetectorSetup(1.5, 1.0), grid) == pytest.approx(oracle, abs=1e-4)

    def test_window_integral_matches_erf(self, packet, grid):
        mass = window_integral(grid.x, packet.density(), 1.0, 2.0)
        assert mass == pytest.approx(_cdf(2) - _cdf(1), abs=1e-5)


class TestExpectedCounts:
    def test_symmetric_packet(self, packet):
        n1, n2 = expected_counts(packet, 0.6, DetectorSetup())
        assert abs(n1 / n2 - 1) < 1e-10
        assert n1 == pytest.approx(0.6 * 1e6 * (_cdf(2) - _cdf(1)), rel=1e-4)

    def test_positive_imaginary_part_favours_first_detector(self, packet):
        ptr, P, _ = selected(packet, 2 + 5j, 0.005)
        n1, n2 = expected_counts(ptr, P, DetectorSetup())
        assert n1 > n2

    def test_no_atoms(self, packet):
        assert expected_counts(packet, 0.5, DetectorSetup(N=0)) == (0.0, 0.0)

    def test_contracts(self, packet):
        with pytest.raises(ContractError):
            expected_counts(packet.to_momentum(), 1.0, DetectorSetup())
        with pytest.raises(NormalizationError):
            expected_counts(replace(packet, amplitudes=packet.amplitudes * 0.9), 1.0, DetectorSetup())


class TestSignal:
    def test_zero_coupling(self, packet):
        ptr, P, _ = selected(packet, 3 + 1j, 0.0)
        assert signal(*expected_counts(ptr, P, DetectorSetup())) == 0.0

    def test_first_order_agreement(self, packet, grid):
        setup = DetectorSetup(x_pos=1.1, l=1.0)
        x_bar = lever_arm(setup, grid)
        assert x_bar == pytest.approx(1.0, abs=0.02)
        ptr, P, wv = selected(packet, 5j, 0.005)
        approx = first_order_signal(wv, 0.005, x_bar)
        assert approx == pytest.approx(0.1, abs=0.002)
        assert abs(signal(*expected_counts(ptr, P, setup)) - approx) <= 0.01

    def test_ratio_and_log_agree_to_second_order(self):
        for s in (1e-3, 1e-2, 0.05):
            n1, n2 = 1e5 * (1 + s), 1e5
            assert abs(signal(n1, n2) - log_signal(n1, n2)) <= s ** 2

    def test_zero_second_count(self):
        with pytest.raises(DomainError):
            signal(5.0, 0.0)

    def test_signal_grows_with_lever_arm(self, packet, grid):
        ptr, P, _ = selected(packet, 1 + 4j, 0.004)
        pairs = []
        for x_pos in np.linspace(0.8, 3.0, 12):
            setup = DetectorSetup(x_pos=x_pos, l=0.6)
            pairs.append((lever_arm(setup, grid), signal(*expected_counts(ptr, P, setup))))
        pairs.sort()
        assert np.all(np.diff([s for _, s in pairs]) > 0)


class TestSampling:
    def test_unbiased(self):
        setup = DetectorSetup()
        rng = np.random.default_rng(1)
        draws = np.array([sample_counts(1e6, setup, rng)[0] for _ in range(100)])
        assert abs(draws.mean() - 1e6) <= 4 * math.sqrt(1e6) / 10

    def test_efficiency_halves_mean(self):
        rng = np.random.default_rng(2)
        draws = np.array([sample_counts(1e6, DetectorSetup(chi=0.5), rng)[0] for _ in range(100)])
        assert abs(draws.mean() - 5e5) <= 4 * math.sqrt(5e5) / 10

    def test_systematic_offset(self):
        rng = np.random.default_rng(3)
        draws = np.array([sample_counts(1e6, DetectorSetup(chi=0.8, delta0=0.05), rng)[0] for _ in range(100)])
        assert abs(draws.mean() - (0.8 + 0.05) * 1e6) <= 4 * math.sqrt(0.8e6) / 10

    def test_random_part_is_integer_poisson(self):
        counts, err = sample_counts([1e5, 2e5], DetectorSetup(delta0=0.1), np.random.default_rng(4))
        assert np.all((err + np.array([1e5, 2e5])) % 1 == 0)
        np.testing.assert_allclose(counts, 1.1 * np.array([1e5, 2e5]) + err)

    def test_seed_determinism(self):
        setup = DetectorSetup(delta0=0.1, seed=99)
        a = simulate_counts(1e5, 9e4, setup, 200)
        b = simulate_counts(1e5, 9e4, setup, 200)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_seed_required(self):
        with pytest.raises(DomainError, match="seed"):
            simulate_counts(1e5, 1e5, DetectorSetup(), 50)

    def test_count_once(self, packet):
        r = count_once(packet, 0.5, DetectorSetup(seed=3))
        assert r.n1_bar == pytest.approx(r.n2_bar, rel=1e-10)
        assert r.s_bar == pytest.approx(0.0, abs=1e-10)


class TestErrorSuppression:
    N1, N2 = 90_000.0, 80_000.0

    def test_analytic_limit(self):
        r = error_suppression_experiment(self.N1, self.N2, DetectorSetup(delta0=0.1, seed=1), 100)
        assert r.s_bar_systematic_limit == pytest.approx(r.s_bar, rel=1e-15)

    @pytest.mark.parametrize("delta0", [0.0, 0.05, 0.1, 0.2])
    def test_systematic_error_cancels(self, delta0):
        r = error_suppression_experiment(self.N1, self.N2, DetectorSetup(delta0=delta0, seed=17), 10_000)
        assert abs(r.bias) <= 3 * r.stderr
        assert r.systematic_cancels

    def test_unbiased_variance_by_propagation(self):
        r = error_suppression_experiment(self.N1, self.N2, DetectorSetup(seed=5), 10_000)
        expected = math.sqrt(1 / self.N1 + 1 / self.N2) * (1 + r.s_bar)
        assert r.s_std == pytest.approx(expected, rel=0.05)
        assert r.s_std_predicted == pytest.approx(expected, rel=1e-12)

    def test_random_error_unchanged_by_systematic(self):
        r = error_suppression_experiment(self.N1, self.N2, DetectorSetup(delta0=0.1, seed=8), 2000)
        assert r.random_error_std == r.random_error_std_reference

    def test_unequal_coefficients_do_not_cancel(self):
        r = error_suppression_experiment(self.N1, self.N2, DetectorSetup(delta0=0.1, delta0_second=0.0, seed=8),
                                         2000)
        assert not r.systematic_cancels
        assert r.bias == pytest.approx(0.1 * (1 + r.s_bar), rel=0.05)

    def test_amplification_inflates_noise(self, packet):
        # same g_c |A_w|, twice the weak value: P drops and the spread grows by sqrt(P1 / P2)
        setup = DetectorSetup(N=10 ** 7, seed=21)
        stds, probs = [], []
        for A_w, g_c in ((5j, 0.004), (10j, 0.002)):
            ptr, P, _ = selected(packet, A_w, g_c)
            r = error_suppression_experiment(*expected_counts(ptr, P, setup), setup, 10_000)
            stds.append(r.s_std)
            probs.append(P)
        assert probs[1] < probs[0]
        assert stds[1] / stds[0] == pytest.approx(math.sqrt(probs[0] / probs[1]), rel=0.05)

    def test_more_atoms_smaller_error(self):
        small = error_suppression_experiment(self.N1, self.N2, DetectorSetup(seed=3), 10_000)
        big = error_suppression_experiment(10 * self.N1, 10 * self.N2, DetectorSetup(seed=3), 10_000)
        assert small.stderr / big.stderr == pytest.approx(math.sqrt(10), rel=0.05)

    def test_too_few_trials(self):
        with pytest.raises(DomainError):
            error_suppression_experiment(self.N1, self.N2, DetectorSetup(seed=1), 10)

    def test_report_dict(self):
        r = error_suppression_experiment(self.N1, self.N2, DetectorSetup(seed=1), 40)
        d = r.as_dict(include_samples=True)
        assert len(d["samples"]) == 40 and "samples" not in r.as_dict()
