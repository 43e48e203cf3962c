"""Coherent-state qubits: encoding, effective 2x2 actions, gate synthesis.

The logical basis is {|+alpha>, |-alpha>}, nearly orthogonal for large
alpha (overlap exp(-2 alpha^2)).  Physical circuits act on the full mode;
``effective_action`` extracts their 2x2 matrix on the symmetrically
orthonormalized qubit subspace together with the probability weight that
leaks out of it.  Arbitrary rotations are synthesized from the two exact
ingredients available in this architecture: Kerr-pi/2 blocks (an effective
Rx(-pi/2)) and small imaginary displacements (effective Rz).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import CutoffPolicy, SingleModeState, choose_cutoff, coherent_fock
from .ops import DisplaceGate, KerrGate, PhysicalCircuit, run_circuit

# Pauli matrices and the fixed Kerr block's qubit action (global phase dropped).
_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_XFIXED = (_I2 + 1j * _X) / np.sqrt(2)  # Rx(-pi/2)


@dataclass(frozen=True)
class QubitEncoding:
    """Coherent-state qubit with |0> = |+alpha>, |1> = |-alpha>."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def basis_overlap(self) -> float:
        """s = <alpha|-alpha> = exp(-2 alpha^2)."""
        return math.exp(-2.0 * self.alpha**2)

    def default_cutoff(self) -> int:
        return choose_cutoff(CutoffPolicy(self.alpha**2))


def encode(bit: int, enc: QubitEncoding, n_max: int) -> SingleModeState:
    """|0> -> |+alpha>, |1> -> |-alpha> in the truncated Fock basis."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    return coherent_fock(enc.alpha if bit == 0 else -enc.alpha, n_max)


def logical_basis(enc: QubitEncoding, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric (Loewdin) orthonormalization of {|+alpha>, |-alpha>}.

    Returns the amplitude vectors of the orthonormal pair closest to the
    raw basis states; they span exactly the same subspace.
    """
    plus = encode(0, enc, n_max).amplitudes
    minus = encode(1, enc, n_max).amplitudes
    s = enc.basis_overlap
    even = (plus + minus) / math.sqrt(2.0 * (1.0 + s))
    odd = (plus - minus) / math.sqrt(2.0 * (1.0 - s))
    b0 = (even + odd) / math.sqrt(2.0)
    b1 = (even - odd) / math.sqrt(2.0)
    return b0, b1


@dataclass(frozen=True)
class EffectiveQubitAction:
    """2x2 matrix of a circuit on the qubit subspace plus its leakage."""

    matrix: np.ndarray
    leakage: float

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def effective_action(
    circuit: PhysicalCircuit, enc: QubitEncoding, n_max: int | None = None
) -> EffectiveQubitAction:
    """Run the circuit on both orthonormalized basis vectors and project back.

    leakage is the worst-case probability weight (over the two inputs)
    ending up outside the qubit subspace.
    """
    if n_max is None:
        n_max = enc.default_cutoff()
    b0, b1 = logical_basis(enc, n_max)
    basis = np.stack([b0, b1])  # rows
    matrix = np.empty((2, 2), dtype=complex)
    leak = 0.0
    for j, vec in enumerate((b0, b1)):
        out = run_circuit(circuit, SingleModeState(vec)).amplitudes
        proj = basis.conj() @ out
        matrix[:, j] = proj
        leak = max(leak, float(np.vdot(out, out).real) - float(np.vdot(proj, proj).real))
    return EffectiveQubitAction(matrix, max(leak, 0.0))


def phase_min_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Global-phase-insensitive operator distance min_theta ||u - e^{i theta} v||_F."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    cross = abs(np.trace(v.conj().T @ u))
    d2 = np.linalg.norm(u) ** 2 + np.linalg.norm(v) ** 2 - 2.0 * cross
    return math.sqrt(max(d2, 0.0))


# ---------------------------------------------------------------------------
# rotation synthesis
# ---------------------------------------------------------------------------

def _zyz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """Euler angles with u = Rz(g) Ry(b) Rz(d) for u in SU(2).

    Conventions: Rz(t) = diag(e^{-it/2}, e^{it/2}),
    Ry(t) = [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]].
    """
    beta = 2.0 * math.atan2(abs(u[1, 0]), abs(u[0, 0]))
    if abs(u[0, 0]) < 1e-12:  # anti-diagonal: g + d undetermined, zero d
        gmd = 2.0 * np.angle(u[1, 0])
        return _wrap(gmd), beta, 0.0
    if abs(u[1, 0]) < 1e-12:  # diagonal: g - d undetermined, zero d
        gpd = -2.0 * np.angle(u[0, 0])
        return _wrap(gpd), beta, 0.0
    gpd = -2.0 * np.angle(u[0, 0])
    gmd = 2.0 * np.angle(u[1, 0])
    return _wrap(0.5 * (gpd + gmd)), beta, _wrap(0.5 * (gpd - gmd))


def _wrap(angle: float) -> float:
    """Reduce to (-pi, pi]."""
    a = math.fmod(angle + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class RotationRecipe:
    """ZXZXZ plan: steps are ("rz", angle) or ("x",), applied left to right.

    The effective-Rz convention is diag(e^{i t/2}, e^{-i t/2}): positive
    angles advance the |+alpha> component's phase.  Physically an Rz(t) is
    the displacement D(i t / (4 alpha)) and each "x" step is one Kerr-pi/2
    block.  The 4 alpha comes from the exact composition law
    D(i eps)|a> = e^{i eps a}|a + i eps|: the operator phase and the
    coherent-overlap phase each contribute eps*alpha to the logical phase.
    """

    steps: tuple
    alpha: float

    def displacement_amplitudes(self) -> tuple[complex, ...]:
        return tuple(
            1j * step[1] / (4.0 * self.alpha) for step in self.steps if step[0] == "rz"
        )

    def to_circuit(self, phase_error: float = 0.0) -> PhysicalCircuit:
        ops = []
        for step in self.steps:
            if step[0] == "rz":
                if abs(step[1]) > 1e-15:
                    ops.append(DisplaceGate(1j * step[1] / (4.0 * self.alpha)))
            elif step[0] == "x":
                ops.append(KerrGate(math.pi / 2, err=phase_error))
            else:
                raise ValueError(f"unknown step {step!r}")
        return PhysicalCircuit(tuple(ops))


def synthesize_rotation(target: np.ndarray, enc: QubitEncoding) -> RotationRecipe:
    """Decompose an SU(2) target into Rz(a) X Rz(b) X Rz(c) with X = Kerr-pi/2.

    With Xf = Rx(-pi/2), any U = Rz(g) Ry(beta) Rz(d) equals
    Rz(g) Xf Rz(beta + pi) Xf Rz(d - pi) exactly, so the three Rz angles
    follow from the ZYZ Euler angles in closed form.  A target that already
    is the fixed block (up to phase) collapses to a single "x" step.
    """
    u = np.asarray(target, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("target must be 2x2")
    if abs(np.linalg.det(u) - 1.0) > 1e-10:
        raise ValueError("target must be special-unitary (det 1) within 1e-10")
    if phase_min_distance(u, _XFIXED) < 1e-10:
        return RotationRecipe((("x",),), enc.alpha)
    if abs(u[0, 1]) < 1e-12 and abs(u[1, 0]) < 1e-12:
        # Degenerate (already diagonal) target: a single Rz, unused angles zeroed.
        return RotationRecipe((("rz", _wrap(2.0 * float(np.angle(u[0, 0])))),), enc.alpha)
    g, beta, d = _zyz_angles(u)
    a, b, c = g, _wrap(beta + math.pi), _wrap(d - math.pi)
    # The math above uses Rz(t) = diag(e^{-it/2}, ...); the physical Rz
    # convention is its inverse, hence the sign flips.  Time order is
    # rightmost factor first.
    steps = (("rz", -c), ("x",), ("rz", -b), ("x",), ("rz", -a))
    return RotationRecipe(steps, enc.alpha)
