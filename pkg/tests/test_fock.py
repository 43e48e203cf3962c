import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from kerrcat.fock import (
    CoherentSuperposition,
    CutoffError,
    CutoffPolicy,
    SingleModeState,
    TwoModeState,
    choose_cutoff,
    coherent_fock,
    coherent_overlap,
    coherent_superposition,
    fidelity,
    inner_product,
    overlap_analytic,
    photon_number_distribution,
    tensor,
    vacuum_fock,
)


def kernel(beta: complex, gamma: complex) -> complex:
    """Independent oracle: <beta|gamma> = exp(-|b|^2/2 - |g|^2/2 + conj(b) g)."""
    return np.exp(-abs(beta) ** 2 / 2 - abs(gamma) ** 2 / 2 + np.conj(beta) * gamma)


class TestCutoffPolicy:
    def test_mean_plus_eight_sigma(self):
        n_max = choose_cutoff(CutoffPolicy(9.0))
        assert n_max >= 9 + 8 * math.sqrt(10.0)

    def test_poisson_tail_below_budget(self):
        for mean in (0.5, 2.0, 9.0, 50.0, 200.0):
            n_max = choose_cutoff(CutoffPolicy(mean))
            assert stats.poisson.sf(n_max, mean) < 1e-12

    def test_rejects_negative_mean(self):
        with pytest.raises(ValueError):
            choose_cutoff(CutoffPolicy(-1.0))

    def test_rejects_bad_tail_bound(self):
        with pytest.raises(ValueError):
            choose_cutoff(CutoffPolicy(1.0, tail_bound=0.0))


class TestCoherentFock:
    def test_amplitudes_match_poisson(self):
        state = coherent_fock(2.0, choose_cutoff(CutoffPolicy(4.0)))
        n = np.arange(state.n_max + 1)
        expected = np.exp(-2.0) * 2.0**n / np.sqrt(
            np.array([math.factorial(int(k)) for k in n], dtype=float)
        )
        np.testing.assert_allclose(state.amplitudes.real, expected, atol=1e-12)
        assert np.allclose(state.amplitudes.imag, 0.0)

    def test_normalized(self):
        for alpha in (0.3, 1.0, 3.0, 2 + 1j):
            state = coherent_fock(alpha, choose_cutoff(CutoffPolicy(abs(alpha) ** 2)))
            assert state.norm_sq() == pytest.approx(1.0, abs=1e-12)

    def test_cutoff_too_small_raises(self):
        with pytest.raises(CutoffError):
            coherent_fock(3.0, 10)

    def test_vacuum(self):
        state = vacuum_fock(5)
        assert state.amplitudes[0] == 1.0
        assert np.all(state.amplitudes[1:] == 0.0)


class TestOverlaps:
    def test_fock_inner_product_matches_kernel(self):
        pairs = [(1.0, 2.0), (2.0, -2.0), (1 + 1j, 2 - 0.5j), (0.5, 0.5)]
        for b, g in pairs:
            m = choose_cutoff(CutoffPolicy(max(abs(b), abs(g)) ** 2 + 1))
            got = inner_product(coherent_fock(b, m), coherent_fock(g, m))
            assert got == pytest.approx(kernel(b, g), abs=1e-12)

    def test_inner_product_pads_unequal_cutoffs(self):
        a = coherent_fock(1.0, 30)
        b = coherent_fock(1.0, 45)
        assert inner_product(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_coherent_overlap_is_kernel(self):
        assert coherent_overlap(1 + 2j, -0.5j) == pytest.approx(kernel(1 + 2j, -0.5j))

    def test_fidelity_bounds(self):
        a = coherent_fock(1.0, 30)
        b = coherent_fock(-1.0, 30)
        assert fidelity(a, a) == pytest.approx(1.0, abs=1e-12)
        assert fidelity(a, b) == pytest.approx(math.exp(-4.0), rel=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(
        st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False),
        st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False),
    )
    def test_kernel_agreement_property(self, b, g):
        m = choose_cutoff(CutoffPolicy(max(abs(b), abs(g)) ** 2 + 1.0))
        got = inner_product(coherent_fock(b, m), coherent_fock(g, m))
        assert abs(got - kernel(b, g)) < 1e-10
        assert abs(got) <= 1.0 + 1e-12  # Cauchy-Schwarz


class TestStates:
    def test_single_mode_normalize(self):
        state = SingleModeState(np.array([3.0, 4.0], dtype=complex))
        assert state.normalize().norm_sq() == pytest.approx(1.0)

    def test_amplitudes_read_only(self):
        state = vacuum_fock(3)
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0.0

    def test_json_roundtrip(self):
        state = coherent_fock(1 + 0.3j, 25)
        back = SingleModeState.from_json(state.to_json())
        np.testing.assert_array_equal(back.amplitudes, state.amplitudes)

    def test_two_mode_json_roundtrip(self):
        joint = tensor(coherent_fock(1.0, 20), vacuum_fock(20))
        back = TwoModeState.from_json(joint.to_json())
        np.testing.assert_array_equal(back.amplitudes, joint.amplitudes)

    def test_tensor_norm_and_marginals(self):
        joint = tensor(coherent_fock(1.5, 25), coherent_fock(0.5, 25))
        assert joint.norm_sq() == pytest.approx(1.0, abs=1e-12)
        p_a, p_b = photon_number_distribution(joint)
        assert p_a @ np.arange(p_a.size) == pytest.approx(2.25, abs=1e-9)
        assert p_b @ np.arange(p_b.size) == pytest.approx(0.25, abs=1e-9)

    def test_photon_distribution_single(self):
        p = photon_number_distribution(coherent_fock(2.0, 40))
        np.testing.assert_allclose(p, stats.poisson.pmf(np.arange(41), 4.0), atol=1e-12)


class TestCoherentSuperposition:
    def test_norm_matches_analytic(self):
        # even cat: norm^2 of |a> + |-a> is 2(1 + e^{-2 a^2})
        cat = coherent_superposition([(1.0, 2.0), (1.0, -2.0)])
        assert cat.norm() == pytest.approx(math.sqrt(2 * (1 + math.exp(-8.0))), rel=1e-12)

    def test_duplicate_terms_merge(self):
        s = CoherentSuperposition(((1.0, (1.0,)), (0.5, (1.0,))))
        assert len(s.terms) == 1
        assert s.terms[0][0] == pytest.approx(1.5)

    def test_to_fock_matches_sum(self):
        s = coherent_superposition([(1.0, 1.0), (1j, -1.0)])
        m = choose_cutoff(CutoffPolicy(2.0))
        direct = coherent_fock(1.0, m).amplitudes + 1j * coherent_fock(-1.0, m).amplitudes
        np.testing.assert_allclose(s.to_fock(m).amplitudes, direct, atol=1e-12)

    def test_overlap_analytic_two_mode(self):
        s = CoherentSuperposition(((1.0, (1.0, -1.0)),))
        t = CoherentSuperposition(((1.0, (1.0, 1.0)),))
        expected = kernel(1.0, 1.0) * kernel(-1.0, 1.0)
        assert overlap_analytic(s, t) == pytest.approx(expected, abs=1e-12)

    def test_mode_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            CoherentSuperposition(((1.0, (1.0,)), (1.0, (1.0, 2.0))))
