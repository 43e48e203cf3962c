import math

import numpy as np
import pytest

from kerrcat.fock import (
    CoherentSuperposition,
    CutoffPolicy,
    SingleModeState,
    choose_cutoff,
    coherent_fock,
    coherent_overlap,
    coherent_superposition,
    fidelity,
    inner_product,
    tensor,
    vacuum_fock,
)
from kerrcat.ops import (
    BeamSplitGate,
    DisplaceGate,
    KerrGate,
    PhysicalCircuit,
    TruncationWarning,
    beam_split,
    displace,
    displacement_matrix,
    kerr_closed_form,
    kerr_evolve,
    run_circuit,
)


def coherent(alpha, mean=None):
    mean = abs(alpha) ** 2 if mean is None else mean
    return coherent_fock(alpha, choose_cutoff(CutoffPolicy(mean)))


class TestKerr:
    def test_phases_on_fock_basis(self):
        state = SingleModeState(np.ones(5, dtype=complex) / math.sqrt(5.0))
        out = kerr_evolve(state, 0.3)
        n = np.arange(5)
        np.testing.assert_allclose(
            out.amplitudes, state.amplitudes * np.exp(-1j * 0.3 * n**2), atol=1e-15
        )

    def test_pi_is_parity_flip(self):
        for beta in (1.0, 2 + 1j):
            state = coherent(beta, abs(beta) ** 2 + 1)
            out = kerr_evolve(state, math.pi)
            assert fidelity(out, coherent_fock(-beta, state.n_max)) >= 1 - 1e-10

    def test_two_pi_is_identity(self):
        state = coherent(1.5)
        np.testing.assert_allclose(
            kerr_evolve(state, 2 * math.pi).amplitudes, state.amplitudes, atol=1e-14
        )

    def test_half_pi_matches_closed_form(self):
        # Fock evolution against the analytic two-component split
        amp = 2.0 * math.sqrt(2.0)
        state = coherent(amp)
        evolved = kerr_evolve(state, math.pi / 2)
        oracle = kerr_closed_form(CoherentSuperposition(((1.0, (amp,)),)), math.pi / 2)
        assert fidelity(oracle.to_fock(state.n_max), evolved) >= 1 - 1e-12

    def test_three_half_pi_matches_closed_form(self):
        state = coherent(2.0)
        evolved = kerr_evolve(state, 3 * math.pi / 2)
        oracle = kerr_closed_form(CoherentSuperposition(((1.0, (2.0,)),)), 3 * math.pi / 2)
        assert fidelity(oracle.to_fock(state.n_max), evolved) >= 1 - 1e-12

    def test_closed_form_rejects_generic_phase(self):
        with pytest.raises(ValueError):
            kerr_closed_form(coherent_superposition([(1.0, 1.0)]), 0.1)

    def test_closed_form_preserves_norm(self):
        cat = kerr_closed_form(coherent_superposition([(1.0, 2.0)]), math.pi / 2)
        assert cat.norm() == pytest.approx(1.0, abs=1e-12)


class TestDisplacement:
    def test_matrix_is_unitary(self):
        d = displacement_matrix(0.7 - 0.2j, 40)
        np.testing.assert_allclose(d @ d.conj().T, np.eye(41), atol=1e-12)

    def test_coherent_composition_law(self):
        # D(beta)|gamma> = exp((beta conj(gamma) - conj(beta) gamma)/2)|gamma+beta>
        gamma, beta = 1.5, 0.4j
        state = coherent(gamma, abs(gamma + beta) ** 2 + 2)
        out = displace(state, beta)
        phase = np.exp((beta * np.conj(gamma) - np.conj(beta) * gamma) / 2.0)
        target = phase * coherent_fock(gamma + beta, state.n_max).amplitudes
        np.testing.assert_allclose(out.amplitudes, target, atol=1e-9)

    def test_inverse(self):
        state = coherent(1.0, 4.0)
        back = displace(displace(state, 0.5), -0.5)
        np.testing.assert_allclose(back.amplitudes, state.amplitudes, atol=1e-12)

    def test_truncation_warning_on_tight_cutoff(self):
        with pytest.warns(TruncationWarning):
            displace(coherent_fock(2.0, choose_cutoff(CutoffPolicy(4.0))), 2.0)


class TestBeamSplitter:
    def test_coherent_hadamard_law(self):
        g, d = 1.2, -0.7 + 0.3j
        m = choose_cutoff(CutoffPolicy(abs(g) ** 2 + abs(d) ** 2 + 2))
        out = beam_split(tensor(coherent_fock(g, m), coherent_fock(d, m)))
        s = math.sqrt(2.0)
        target = tensor(coherent_fock((g + d) / s, m), coherent_fock((g - d) / s, m))
        assert abs(inner_product(target, out)) ** 2 >= 1 - 1e-10

    def test_self_inverse(self):
        m = choose_cutoff(CutoffPolicy(3.0))
        joint = tensor(coherent_fock(1.0, m), coherent_fock(0.5j, m))
        back = beam_split(beam_split(joint))
        np.testing.assert_allclose(back.amplitudes, joint.amplitudes, atol=1e-10)

    def test_photon_number_conserved(self):
        m = 12
        amps = np.zeros((m + 1, m + 1), dtype=complex)
        amps[3, 2] = 1.0  # |3, 2>: total n = 5
        out = beam_split(tensor(vacuum_fock(m), vacuum_fock(m)).__class__(amps))
        n_a, n_b = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
        off_shell = np.abs(out.amplitudes[n_a + n_b != 5]).max()
        assert off_shell == 0.0

    def test_requires_square_cutoffs(self):
        joint = tensor(vacuum_fock(4), vacuum_fock(5))
        with pytest.raises(ValueError):
            beam_split(joint)

    def test_entangled_state_oracle(self):
        # Kerr cat through the splitter equals the analytic two-mode
        # superposition c(|a,a> + i|-a,-a>)
        alpha = 2.0
        amp = math.sqrt(2.0) * alpha
        cat = kerr_evolve(coherent(amp), math.pi / 2)
        out = beam_split(tensor(cat, vacuum_fock(cat.n_max)))
        c = np.exp(-1j * np.pi / 4) / np.sqrt(2)
        oracle = CoherentSuperposition(
            ((c, (alpha, alpha)), (1j * c, (-alpha, -alpha)))
        ).to_fock(cat.n_max)
        assert abs(inner_product(oracle, out)) ** 2 >= 1 - 1e-10


class TestCircuits:
    def test_run_matches_manual_composition(self):
        state = coherent(1.0, 4.0)
        circuit = PhysicalCircuit((KerrGate(math.pi / 2), DisplaceGate(0.1j)))
        manual = displace(kerr_evolve(state, math.pi / 2), 0.1j)
        np.testing.assert_allclose(
            run_circuit(circuit, state).amplitudes, manual.amplitudes, atol=1e-12
        )

    def test_phase_error_only_touches_kerr(self):
        circuit = PhysicalCircuit((KerrGate(1.0), DisplaceGate(0.2), BeamSplitGate()))
        noisy = circuit.with_phase_error(0.01)
        assert noisy.ops[0].err == 0.01
        assert noisy.ops[1] == circuit.ops[1]
        assert noisy.ideal() == circuit

    def test_kerr_error_is_additive(self):
        state = coherent(1.0, 4.0)
        noisy = run_circuit(PhysicalCircuit((KerrGate(0.5, err=0.1),)), state)
        np.testing.assert_allclose(
            noisy.amplitudes, kerr_evolve(state, 0.6).amplitudes, atol=1e-14
        )

    def test_json_roundtrip(self):
        circuit = PhysicalCircuit(
            (KerrGate(0.3, mode=1, err=0.01), DisplaceGate(1 - 2j), BeamSplitGate())
        )
        assert PhysicalCircuit.from_json(circuit.to_json()) == circuit

    def test_two_mode_gates(self):
        m = choose_cutoff(CutoffPolicy(4.0))
        joint = tensor(coherent_fock(1.0, m), coherent_fock(1.0, m))
        circuit = PhysicalCircuit((KerrGate(math.pi, mode=1),))
        out = run_circuit(circuit, joint)
        target = tensor(coherent_fock(1.0, m), coherent_fock(-1.0, m))
        assert abs(inner_product(target, out)) ** 2 >= 1 - 1e-10

    def test_concatenation(self):
        a = PhysicalCircuit((KerrGate(0.1),))
        b = PhysicalCircuit((DisplaceGate(0.2),))
        assert (a + b).ops == a.ops + b.ops
