"""Primitive bosonic unitaries and circuit composition.

The building blocks are the Kerr evolution exp(-i*phi*(a^dag a)^2), the
phase-space displacement D(beta), and a fixed 50/50 beam splitter whose
action on coherent amplitudes is the Hadamard-type map

    (gamma, delta) -> ((gamma + delta)/sqrt(2), (gamma - delta)/sqrt(2)).

Circuits are immutable op lists; every Kerr gate carries an additive phase
error so that imperfect phase control can be injected without touching the
ideal description.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from .fock import (
    CoherentSuperposition,
    SingleModeState,
    TwoModeState,
)

NORM_DRIFT_TOL = 1e-9


class TruncationWarning(UserWarning):
    """A truncated unitary pushed noticeable weight against the cutoff."""


# ---------------------------------------------------------------------------
# Kerr evolution
# ---------------------------------------------------------------------------

def _kerr_phases(n_max: int, phi: float) -> np.ndarray:
    n = np.arange(n_max + 1)
    return np.exp(-1j * phi * n.astype(float) ** 2)


def kerr_evolve(state: SingleModeState, phi: float) -> SingleModeState:
    """Apply exp(-i*phi*(a^dag a)^2): c_n -> exp(-i*phi*n^2) c_n."""
    return SingleModeState(state.amplitudes * _kerr_phases(state.n_max, phi))


_QUARTER = np.pi / 2


def kerr_closed_form(state: CoherentSuperposition, phi: float) -> CoherentSuperposition:
    """Exact Kerr action on a coherent superposition for phi in k*pi/2.

    pi/2 splits every |g> into (e^{-i pi/4}/sqrt2)(|g> + i|-g>) (the
    Yurke-Stoler construction); pi flips signs; 2*pi is the identity.  Any
    other phase raises ValueError: use the Fock path for those.
    """
    k = phi / _QUARTER
    k_round = round(k)
    if abs(k - k_round) > 1e-12:
        raise ValueError(f"phi={phi} is not a multiple of pi/2; use kerr_evolve")
    k_round %= 4
    if k_round == 0:
        return state
    if k_round == 2:  # phi = pi: (-1)^(n^2) = (-1)^n flips every alpha
        return CoherentSuperposition(
            tuple((w, tuple(-a for a in alphas)) for w, alphas in state.terms)
        )
    if state.n_modes != 1:
        raise ValueError("cat splitting is implemented for single-mode states only")
    c = np.exp(-1j * np.pi / 4) / np.sqrt(2)
    if k_round == 3:  # phi = 3*pi/2 is the conjugate split
        c = np.conj(c)
    sign = 1j if k_round == 1 else -1j
    terms = []
    for w, (a,) in state.terms:
        terms.append((w * c, (a,)))
        terms.append((w * c * sign, (-a,)))
    return CoherentSuperposition(tuple(terms))


# ---------------------------------------------------------------------------
# displacement
# ---------------------------------------------------------------------------

def displacement_matrix(beta: complex, n_max: int) -> np.ndarray:
    """D(beta) = expm(beta a^dag - conj(beta) a) on the truncated space.

    The truncated generator is anti-Hermitian, so the result is exactly
    unitary on the truncated space; truncation shows up as infidelity near
    the cutoff, not as norm loss.
    """
    beta = complex(beta)
    n = np.arange(1, n_max + 1)
    a = np.diag(np.sqrt(n.astype(float)), k=1)
    gen = beta * a.conj().T - np.conj(beta) * a
    return expm(gen)


def displace(state: SingleModeState, beta: complex) -> SingleModeState:
    """Apply D(beta); on coherent states D(beta)|g> = e^{(b g* - b* g)/2}|g+b>."""
    out = SingleModeState(displacement_matrix(beta, state.n_max) @ state.amplitudes)
    _check_truncation(out, state)
    return out


def _top_level_weight(state) -> float:
    if isinstance(state, SingleModeState):
        return float(abs(state.amplitudes[-1]) ** 2)
    a = state.amplitudes
    return float(max(np.abs(a[-1, :]).max(), np.abs(a[:, -1]).max()) ** 2)


def _check_truncation(out, reference) -> None:
    drift = abs(out.norm_sq() - reference.norm_sq())
    top = _top_level_weight(out)
    if drift > NORM_DRIFT_TOL or top > NORM_DRIFT_TOL:
        warnings.warn(
            f"truncated unitary diagnostic: norm drift {drift:.2e}, "
            f"top-level weight {top:.2e}",
            TruncationWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------------------
# 50/50 beam splitter
# ---------------------------------------------------------------------------

_bs_block_cache: dict[int, np.ndarray] = {}


def _bs_block(n: int) -> np.ndarray:
    """Unitary block on the total-photon-number-n subspace, basis |j, n-j>.

    Built as exp(pi/4 (a^dag b - a b^dag)) followed by a parity flip on the
    second mode, which realizes the self-inverse Hadamard map on coherent
    amplitudes.
    """
    block = _bs_block_cache.get(n)
    if block is None:
        j = np.arange(n)
        gen = np.zeros((n + 1, n + 1))
        off = np.sqrt((j + 1.0) * (n - j))
        gen[j + 1, j] = off
        gen[j, j + 1] = -off
        rot = expm((np.pi / 4) * gen)
        parity = (-1.0) ** (n - np.arange(n + 1))
        block = parity[:, None] * rot
        _bs_block_cache[n] = block
    return block


def beam_split(state: TwoModeState) -> TwoModeState:
    """Apply the fixed 50/50 beam splitter to a square two-mode state.

    Total photon number is conserved, so the unitary acts block-wise on the
    anti-diagonals of the amplitude matrix.  Blocks with total n above the
    per-mode cutoff are incomplete; weight rotated past a corner is dropped,
    which is harmless whenever the total-photon tail bound holds.
    """
    ca, cb = state.cutoffs
    if ca != cb:
        raise ValueError("beam_split requires equal cutoffs on both modes")
    m = ca
    amps = state.amplitudes
    out = np.zeros_like(amps)
    for n in range(2 * m + 1):
        lo, hi = max(0, n - m), min(m, n)
        vec = np.zeros(n + 1, dtype=complex)
        vec[lo : hi + 1] = amps[np.arange(lo, hi + 1), n - np.arange(lo, hi + 1)]
        res = _bs_block(n) @ vec
        out[np.arange(lo, hi + 1), n - np.arange(lo, hi + 1)] = res[lo : hi + 1]
    result = TwoModeState(out)
    _check_truncation(result, state)
    return result


# ---------------------------------------------------------------------------
# circuits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KerrGate:
    phi: float
    mode: int = 0
    err: float = 0.0  # additive phase error, applied at run time


@dataclass(frozen=True)
class DisplaceGate:
    beta: complex
    mode: int = 0


@dataclass(frozen=True)
class BeamSplitGate:
    modes: tuple = (0, 1)


@dataclass(frozen=True)
class PhysicalCircuit:
    """Ordered list of primitive gates on named modes."""

    ops: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def with_phase_error(self, err: float) -> "PhysicalCircuit":
        """Copy with every Kerr gate's phase error set to ``err``."""
        return PhysicalCircuit(
            tuple(replace(op, err=err) if isinstance(op, KerrGate) else op for op in self.ops)
        )

    def ideal(self) -> "PhysicalCircuit":
        return self.with_phase_error(0.0)

    def __add__(self, other: "PhysicalCircuit") -> "PhysicalCircuit":
        return PhysicalCircuit(self.ops + other.ops)

    def to_json(self) -> dict:
        ops = []
        for op in self.ops:
            if isinstance(op, KerrGate):
                ops.append({"kind": "kerr", "phi": op.phi, "err": op.err, "mode": op.mode})
            elif isinstance(op, DisplaceGate):
                ops.append(
                    {
                        "kind": "displace",
                        "re": complex(op.beta).real,
                        "im": complex(op.beta).imag,
                        "mode": op.mode,
                    }
                )
            elif isinstance(op, BeamSplitGate):
                ops.append({"kind": "beamsplit", "modes": list(op.modes)})
            else:
                raise TypeError(f"unknown op {op!r}")
        return {"ops": ops}

    @classmethod
    def from_json(cls, obj: dict) -> "PhysicalCircuit":
        ops = []
        for entry in obj["ops"]:
            kind = entry["kind"]
            if kind == "kerr":
                ops.append(KerrGate(entry["phi"], entry.get("mode", 0), entry.get("err", 0.0)))
            elif kind == "displace":
                ops.append(DisplaceGate(entry["re"] + 1j * entry["im"], entry.get("mode", 0)))
            elif kind == "beamsplit":
                ops.append(BeamSplitGate(tuple(entry.get("modes", (0, 1)))))
            else:
                raise ValueError(f"unknown op kind {kind!r}")
        return cls(tuple(ops))


def _apply_single_mode(state, mode: int, kerr_phi=None, disp_beta=None):
    if isinstance(state, SingleModeState):
        if mode != 0:
            raise ValueError("single-mode state only has mode 0")
        if kerr_phi is not None:
            return kerr_evolve(state, kerr_phi)
        return displace(state, disp_beta)
    if not isinstance(state, TwoModeState) or mode not in (0, 1):
        raise ValueError(f"invalid target mode {mode}")
    n_max = state.cutoffs[mode]
    if kerr_phi is not None:
        phases = _kerr_phases(n_max, kerr_phi)
        amps = state.amplitudes * (phases[:, None] if mode == 0 else phases[None, :])
        return TwoModeState(amps)
    mat = displacement_matrix(disp_beta, n_max)
    if mode == 0:
        out = TwoModeState(mat @ state.amplitudes)
    else:
        out = TwoModeState(state.amplitudes @ mat.T)
    _check_truncation(out, state)
    return out


def run_circuit(circuit: PhysicalCircuit, state):
    """Apply the circuit's ops in order; Kerr gates use phi + err."""
    for op in circuit.ops:
        if isinstance(op, KerrGate):
            state = _apply_single_mode(state, op.mode, kerr_phi=op.phi + op.err)
        elif isinstance(op, DisplaceGate):
            state = _apply_single_mode(state, op.mode, disp_beta=op.beta)
        elif isinstance(op, BeamSplitGate):
            if op.modes != (0, 1):
                raise ValueError("beam splitter acts on modes (0, 1)")
            state = beam_split(state)
        else:
            raise TypeError(f"unknown op {op!r}")
    return state
