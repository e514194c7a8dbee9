"""Grids, transforms, states and derived couplings."""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atomwva.errors import ContractError, DomainError, NormalizationError
from atomwva.hilbert import (
    HBAR,
    CompositeState,
    FockSpace,
    Grid1D,
    PhysicalParams,
    QubitState,
    Representation,
    WavepacketState,
    classify,
    derive_couplings,
    make_gaussian,
    moments,
    overlap,
    fidelity,
    schmidt_rank,
    to_momentum,
    to_position,
)

# valid grids wide enough that the truncated tail (mass erfc(L / sqrt 2)) is below 1e-12
WIDE_GRIDS = [(256, 8.0), (512, 8.0), (1024, 8.0), (1024, 12.0), (2048, 10.0), (4096, 16.0)]


class TestGrid:
    @pytest.mark.parametrize("n", [63, 100, 32, 1000])
    def test_rejects_bad_point_counts(self, n):
        with pytest.raises(DomainError, match="power of two"):
            Grid1D(n, 8.0)

    def test_rejects_narrow_grid(self):
        with pytest.raises(DomainError, match="half_width"):
            Grid1D(1024, 5.0)

    def test_rejects_coarse_momentum_grid(self):
        with pytest.raises(DomainError, match="momentum half-width"):
            Grid1D(64, 20.0)

    def test_symmetric_with_zero_on_grid(self, grid):
        x = grid.x
        assert x[grid.n_points // 2] == 0.0
        # every point but the left edge has its mirror image
        np.testing.assert_array_equal(x[1:], -x[1:][::-1])
        np.testing.assert_allclose(grid.p[1:], -grid.p[1:][::-1], atol=1e-12)

    def test_arrays_are_read_only(self, grid):
        with pytest.raises(ValueError):
            grid.x[0] = 1.0


class TestGaussian:
    def test_moments(self, packet):
        mean, var = moments(packet)
        assert abs(mean) < 1e-10
        assert abs(var - 1.0) < 1e-10

    def test_momentum_variance_is_a_quarter(self, packet):
        mean, var = moments(packet.to_momentum())
        assert abs(mean) < 1e-10
        assert abs(var - 0.25) < 1e-10

    def test_real_and_even(self, packet, grid):
        amp = packet.amplitudes
        assert np.all(amp.imag == 0)
        np.testing.assert_allclose(amp[1:], amp[1:][::-1], rtol=0, atol=1e-14)

    def test_reciprocal_width(self, packet, grid):
        # (2/pi)^(1/4) exp(-pt^2) is the unit-width packet in momentum space.  The
        # residual comes from cutting the packet at the grid edge, so the bound
        # is the edge amplitude itself.
        expected = (2 / np.pi) ** 0.25 * np.exp(-grid.p ** 2)
        edge = (2 * np.pi) ** -0.25 * np.exp(-grid.half_width ** 2 / 4)
        np.testing.assert_allclose(packet.to_momentum().amplitudes, expected, rtol=0, atol=edge)

    @pytest.mark.parametrize("n, half_width", WIDE_GRIDS)
    def test_uncertainty_product(self, n, half_width):
        # Delta * Delta_p = hbar / 2 with Delta = sqrt(<x^2>), Delta_p = sqrt(<p^2>) in physical units
        g = Grid1D(n, half_width)
        phi = make_gaussian(g)
        width = 1e-5
        sx = math.sqrt(moments(phi)[1]) * width
        sp = math.sqrt(moments(phi.to_momentum())[1]) * HBAR / width
        assert abs(sx * sp / (HBAR / 2) - 1) < 1e-8

    def test_uncertainty_product_narrowest_grid(self):
        # at half_width = 6 the truncated tail (~2e-9 of the mass) biases the
        # variances; the product is still within 1e-7
        g = Grid1D(1024, 6.0)
        phi = make_gaussian(g)
        prod = math.sqrt(moments(phi)[1] * moments(phi.to_momentum())[1])
        assert 1e-8 < abs(prod / 0.5 - 1) < 1e-7


class TestTransforms:
    def test_round_trip(self, packet):
        rng = np.random.default_rng(3)
        psi = WavepacketState(packet.grid, rng.normal(size=1024) + 1j * rng.normal(size=1024)).normalized()
        back = to_position(to_momentum(psi))
        assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-12

    def test_unitarity_random_states(self, grid):
        rng = np.random.default_rng(11)
        for _ in range(100):
            psi = WavepacketState(grid, rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points))
            psi = psi.normalized()
            assert abs(psi.to_momentum().norm() - psi.norm()) < 1e-12

    @pytest.mark.parametrize("steps", [1, 5, -8])
    def test_shift_theorem(self, packet, grid, steps):
        # exp(+i p0 xt) in position translates the momentum amplitudes by +p0
        p0 = steps * grid.momentum_spacing
        kicked = replace(packet, amplitudes=packet.amplitudes * np.exp(1j * p0 * grid.x))
        expected = np.roll(packet.to_momentum().amplitudes, steps)
        np.testing.assert_allclose(kicked.to_momentum().amplitudes, expected, rtol=0, atol=1e-12)

    def test_wrong_representation(self, packet):
        with pytest.raises(ContractError):
            to_position(packet)
        with pytest.raises(ContractError):
            to_momentum(packet.to_momentum())


class TestMoments:
    def test_translated_gaussian(self, packet, grid):
        # phi(pt + g_c) has mean momentum -g_c
        g_c = 0.05
        shifted = replace(packet, amplitudes=packet.amplitudes * np.exp(-1j * g_c * grid.x))
        mean, var = moments(shifted.to_momentum())
        assert abs(mean + g_c) < 1e-10
        assert abs(var - 0.25) < 1e-10

    def test_unnormalized_state_is_refused(self, packet):
        half = replace(packet, amplitudes=packet.amplitudes * 0.5)
        with pytest.raises(NormalizationError) as err:
            moments(half)
        assert abs(err.value.norm - 0.25) < 1e-12

    def test_two_component_marginal(self, packet, grid):
        # beta^2-weighted shifted branch: mean momentum -beta^2 g_c
        q = QubitState.from_populations(0.5)
        amp = np.zeros((grid.n_points, 2, 1), dtype=complex)
        amp[:, 0, 0] = q.alpha * packet.amplitudes
        amp[:, 1, 0] = q.beta * packet.amplitudes * np.exp(-1j * 0.05 * grid.x)
        state = CompositeState(grid, amp)
        assert abs(moments(state.to_momentum())[0] + 0.025) < 1e-10


class TestQubit:
    def test_vector(self):
        q = QubitState(0.6, 0.8, 0.5)
        np.testing.assert_allclose(q.vector, [0.6, 0.8 * np.exp(0.5j)])

    def test_normalization_enforced_with_values(self):
        with pytest.raises(DomainError, match=r"alpha=0\.6.*beta=0\.7"):
            QubitState(0.6, 0.7)

    def test_negative_amplitude(self):
        with pytest.raises(DomainError):
            QubitState(-0.6, 0.8)

    def test_theta_wrapped(self):
        assert QubitState(0.6, 0.8, 2 * np.pi + 0.25).theta == pytest.approx(0.25)

    @given(st.floats(0, 1), st.floats(0, 2 * np.pi - 1e-9))
    def test_from_vector_round_trip(self, b2, theta):
        q = QubitState.from_populations(b2, theta)
        r = QubitState.from_vector(np.exp(0.7j) * q.vector)
        assert abs(r.alpha - q.alpha) < 1e-12 and abs(r.beta - q.beta) < 1e-12
        if q.beta > 1e-6 and q.alpha > 1e-6:
            assert abs(np.exp(1j * r.theta) - np.exp(1j * q.theta)) < 1e-9


class TestFock:
    @pytest.mark.parametrize("n_max", [1, 4, 8])
    def test_truncated_commutator(self, n_max):
        f = FockSpace(n_max)
        a, ad = f.annihilation(), f.creation()
        comm = a @ ad - ad @ a
        # identity on n < n_max; the last level carries the truncation artefact -n_max
        # sqrt(n)^2 is n only to rounding, hence the 1e-14 tolerance
        np.testing.assert_allclose(np.diag(comm)[:-1], np.ones(n_max), rtol=0, atol=1e-14)
        assert comm[-1, -1] == pytest.approx(-n_max, abs=1e-14)
        assert np.all(comm - np.diag(np.diag(comm)) == 0)
        np.testing.assert_array_equal(ad, a.conj().T)
        np.testing.assert_allclose(np.diag(ad @ a).real, np.arange(n_max + 1), rtol=0, atol=1e-14)

    def test_rejects_negative_cutoff(self):
        with pytest.raises(DomainError):
            FockSpace(-1)


class TestComposite:
    def test_product_is_normalized_and_separable(self, packet, mixed_qubit):
        s = CompositeState.product(packet, mixed_qubit, n_max=4)
        assert abs(s.norm() - 1) < 1e-10
        for keep in [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2)]:
            assert schmidt_rank(s, keep) == 1
        np.testing.assert_allclose(s.qubit_populations(), [0.5, 0.5], atol=1e-12)
        assert s.cavity_excitation_probability() == pytest.approx(0.0, abs=1e-15)

    def test_entangled_state_has_rank_two(self, packet, grid):
        amp = np.zeros((grid.n_points, 2, 1), dtype=complex)
        amp[:, 0, 0] = packet.amplitudes / math.sqrt(2)
        amp[:, 1, 0] = packet.amplitudes * grid.x / math.sqrt(2)
        assert schmidt_rank(CompositeState(grid, amp), (0,)) == 2

    def test_overlap_pads_fock_levels(self, packet, mixed_qubit):
        a = CompositeState.product(packet, mixed_qubit, n_max=0)
        b = CompositeState.product(packet, mixed_qubit, n_max=5)
        assert abs(overlap(a, b) - 1) < 1e-12
        assert abs(fidelity(a, b.to_momentum()) - 1) < 1e-12

    def test_bad_shape(self, grid):
        with pytest.raises(ContractError):
            CompositeState(grid, np.zeros((grid.n_points, 3, 1)))


class TestCouplings:
    def test_golden_numbers(self, ref_params):
        r = derive_couplings(ref_params)
        assert r.Omega_xc / (2 * np.pi) == pytest.approx(1e4 * math.sin(math.pi / 4), rel=1e-12)
        assert r.g0 / (2 * np.pi) == pytest.approx(707.10678118654755, rel=1e-12)
        assert r.status == "pass"

    def test_derived_relations(self, ref_params):
        p = ref_params
        assert p.k == pytest.approx(2 * np.pi / p.wavelength)
        assert p.Omega == pytest.approx(p.k * math.cos(p.k_x0) * p.Omega0)
        assert p.x_c == pytest.approx(math.tan(p.k_x0) / p.k)
        assert p.Omega_xc == pytest.approx(p.Omega * p.x_c)
        assert p.g0 == pytest.approx((p.Omega * p.x_c) ** 2 / p.delta)
        assert p.g_c == pytest.approx(2 * p.g0 * p.t * p.Delta / p.x_c)
        assert p.g_c_prime == pytest.approx(p.g0 * p.t * (p.Delta / p.x_c) ** 2)
        assert p.Delta_p == pytest.approx(HBAR / (2 * p.Delta))

    def test_tan_singularity_flagged(self):
        r = derive_couplings(replace(PhysicalParams(), k_x0=1.57))
        assert r.flag("k_x0").status == "fail"
        assert "tan" in r.flag("k_x0").message
        with pytest.raises(DomainError, match="tan"):
            derive_couplings(replace(PhysicalParams(), k_x0=math.pi / 2))

    def test_g0_decreases_with_detuning(self):
        g0 = [PhysicalParams(delta_over_2pi=d).g0 for d in np.linspace(2e4, 2e6, 50)]
        assert np.all(np.diff(g0) < 0)

    def test_zero_rabi_frequency_gives_zero_coupling(self):
        r = derive_couplings(replace(PhysicalParams(), Omega0_over_2pi=0.0))
        assert r.g_c == 0 and r.g0 == 0

    @pytest.mark.parametrize("field", ["wavelength", "delta_over_2pi", "t", "Delta", "m"])
    def test_non_positive_fields(self, field):
        with pytest.raises(DomainError, match=field):
            derive_couplings(replace(PhysicalParams(), **{field: 0.0}))

    @pytest.mark.parametrize("ratio, status", [(0.05, "pass"), (0.1, "pass"), (0.3, "warn"), (0.5, "warn"),
                                               (0.51, "fail"), (np.inf, "fail")])
    def test_thresholds(self, ratio, status):
        assert classify(ratio) == status

    def test_every_ratio_reported(self, ref_params):
        names = {f.name for f in derive_couplings(ref_params).flags}
        assert names == {"k_Delta", "k_x0", "Omega_xc_over_delta", "impulse", "Delta_over_xc", "g_c"}
