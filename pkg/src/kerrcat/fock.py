"""State representations for one and two truncated bosonic modes.

Two complementary representations are kept side by side: dense amplitude
vectors over the photon-number basis |0>..|n_max>, and exact lists of
weighted coherent amplitudes sum_k c_k |alpha_k>.  The analytic form stays
finite for cat-type states and its closed-form overlap kernel

    <beta|gamma> = exp(-|beta|^2/2 - |gamma|^2/2 + conj(beta)*gamma)

serves as an independent oracle for everything the Fock numerics do.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

NORM_TOL = 1e-12
DEFAULT_TAIL_BOUND = 1e-12


class CutoffError(ValueError):
    """The requested Fock cutoff cannot hold the intended state."""


# ---------------------------------------------------------------------------
# cutoff policy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffPolicy:
    """Rule for picking n_max from the mean photon number of the target state."""

    mean_photons: float
    tail_bound: float = DEFAULT_TAIL_BOUND
    safety_factor: float = 8.0


def choose_cutoff(policy: CutoffPolicy) -> int:
    """Smallest n_max >= mean + safety*sqrt(mean+1) whose Poisson tail mass
    beyond n_max is below the policy's tail bound.
    """
    mean = policy.mean_photons
    if mean < 0:
        raise ValueError("mean_photons must be >= 0")
    if not 0.0 < policy.tail_bound < 1.0:
        raise ValueError("tail_bound must lie in (0, 1)")
    n = int(math.ceil(mean + policy.safety_factor * math.sqrt(mean + 1.0)))
    while stats.poisson.sf(n, mean) >= policy.tail_bound:
        n += 1
    return n


# ---------------------------------------------------------------------------
# dense Fock representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SingleModeState:
    """Amplitudes c_n over the photon-number basis of one mode."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("amplitudes must be a non-empty vector")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_max(self) -> int:
        return self.amplitudes.size - 1

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def normalize(self) -> "SingleModeState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return SingleModeState(self.amplitudes / n)

    def padded(self, n_max: int) -> "SingleModeState":
        """Zero-pad to a larger cutoff (no-op if already at least n_max)."""
        if n_max <= self.n_max:
            return self
        out = np.zeros(n_max + 1, dtype=complex)
        out[: self.amplitudes.size] = self.amplitudes
        return SingleModeState(out)

    def to_json(self) -> dict:
        return {
            "cutoff": self.n_max,
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SingleModeState":
        amps = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        if len(amps) != obj["cutoff"] + 1:
            raise ValueError("cutoff field inconsistent with amplitude length")
        return cls(amps)


@dataclass(frozen=True)
class TwoModeState:
    """Amplitudes c_{n_A, n_B} over the product photon-number basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 2 or amps.size == 0:
            raise ValueError("amplitudes must be a non-empty matrix")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def cutoffs(self) -> tuple[int, int]:
        return (self.amplitudes.shape[0] - 1, self.amplitudes.shape[1] - 1)

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def normalize(self) -> "TwoModeState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return TwoModeState(self.amplitudes / n)

    def padded(self, n_max_a: int, n_max_b: int) -> "TwoModeState":
        ca, cb = self.cutoffs
        if n_max_a <= ca and n_max_b <= cb:
            return self
        out = np.zeros((max(n_max_a, ca) + 1, max(n_max_b, cb) + 1), dtype=complex)
        out[: ca + 1, : cb + 1] = self.amplitudes
        return TwoModeState(out)

    def to_json(self) -> dict:
        return {
            "cutoffs": list(self.cutoffs),
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TwoModeState":
        amps = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        return cls(amps)


def vacuum_fock(n_max: int) -> SingleModeState:
    amps = np.zeros(n_max + 1, dtype=complex)
    amps[0] = 1.0
    return SingleModeState(amps)


def coherent_fock(alpha: complex, n_max: int, tail_bound: float = DEFAULT_TAIL_BOUND) -> SingleModeState:
    """Coherent state |alpha> truncated at n_max.

    Amplitudes follow the stable recurrence c_{n+1} = c_n * alpha / sqrt(n+1)
    starting from c_0 = exp(-|alpha|^2 / 2).  Raises CutoffError when the
    truncated tail mass exceeds tail_bound.
    """
    alpha = complex(alpha)
    amps = np.empty(n_max + 1, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(n_max):
        amps[n + 1] = amps[n] * alpha / math.sqrt(n + 1)
    deficit = 1.0 - float(np.vdot(amps, amps).real)
    if deficit > tail_bound:
        raise CutoffError(
            f"cutoff n_max={n_max} leaves tail mass {deficit:.3e} > {tail_bound:.3e} "
            f"for |alpha|^2={abs(alpha)**2:.3f}"
        )
    return SingleModeState(amps)


def inner_product(a, b) -> complex:
    """<a|b> over the common (zero-padded) Fock basis."""
    if isinstance(a, SingleModeState) and isinstance(b, SingleModeState):
        n = max(a.n_max, b.n_max)
        return complex(np.vdot(a.padded(n).amplitudes, b.padded(n).amplitudes))
    if isinstance(a, TwoModeState) and isinstance(b, TwoModeState):
        ca, cb = a.cutoffs
        da, db = b.cutoffs
        na, nb = max(ca, da), max(cb, db)
        return complex(np.vdot(a.padded(na, nb).amplitudes, b.padded(na, nb).amplitudes))
    raise TypeError("states must both be single-mode or both be two-mode")


def fidelity(a, b) -> float:
    """|<a|b>|^2 (states are assumed normalized by the caller)."""
    return abs(inner_product(a, b)) ** 2


def tensor(a: SingleModeState, b: SingleModeState) -> TwoModeState:
    """Product state with amplitude(n_A, n_B) = a_{n_A} * b_{n_B}."""
    return TwoModeState(np.outer(a.amplitudes, b.amplitudes))


def photon_number_distribution(state):
    """p_n = |c_n|^2; for two-mode states, the marginal of each mode."""
    if isinstance(state, SingleModeState):
        return np.abs(state.amplitudes) ** 2
    if isinstance(state, TwoModeState):
        p = np.abs(state.amplitudes) ** 2
        return p.sum(axis=1), p.sum(axis=0)
    raise TypeError("unsupported state type")


# ---------------------------------------------------------------------------
# analytic coherent superpositions
# ---------------------------------------------------------------------------

def coherent_overlap(beta: complex, gamma: complex) -> complex:
    """Closed-form <beta|gamma> for coherent states."""
    beta, gamma = complex(beta), complex(gamma)
    return cmath.exp(-0.5 * abs(beta) ** 2 - 0.5 * abs(gamma) ** 2 + beta.conjugate() * gamma)


@dataclass(frozen=True)
class CoherentSuperposition:
    """Exact representation sum_k w_k |alpha_k(1)> x ... x |alpha_k(m)>.

    ``terms`` is a tuple of (weight, alphas) with ``alphas`` a tuple holding
    one coherent amplitude per mode.  Terms with exactly equal alphas are
    merged on construction; near-duplicates are deliberately left alone.
    """

    terms: tuple

    def __post_init__(self):
        merged: dict[tuple, complex] = {}
        n_modes = None
        for weight, alphas in self.terms:
            if np.isscalar(alphas) or isinstance(alphas, complex):
                alphas = (alphas,)
            alphas = tuple(complex(a) for a in alphas)
            if n_modes is None:
                n_modes = len(alphas)
            elif len(alphas) != n_modes:
                raise ValueError("all terms must have the same number of modes")
            merged[alphas] = merged.get(alphas, 0.0) + complex(weight)
        if not merged:
            raise ValueError("superposition needs at least one term")
        object.__setattr__(
            self, "terms", tuple((w, a) for a, w in merged.items())
        )

    @property
    def n_modes(self) -> int:
        return len(self.terms[0][1])

    def scaled(self, factor: complex) -> "CoherentSuperposition":
        return CoherentSuperposition(tuple((w * factor, a) for w, a in self.terms))

    def norm(self) -> float:
        return math.sqrt(max(overlap_analytic(self, self).real, 0.0))

    def normalized(self) -> "CoherentSuperposition":
        return self.scaled(1.0 / self.norm())

    def mean_photons(self) -> float:
        """Largest |alpha_k|^2 over terms and modes; used for cutoff sizing."""
        return max(abs(a) ** 2 for _, alphas in self.terms for a in alphas)

    def to_fock(self, n_max: int, tail_bound: float = DEFAULT_TAIL_BOUND):
        """Convert to the dense Fock representation at the given cutoff."""
        if self.n_modes == 1:
            acc = np.zeros(n_max + 1, dtype=complex)
            for w, (a,) in self.terms:
                acc += w * coherent_fock(a, n_max, tail_bound).amplitudes
            return SingleModeState(acc)
        if self.n_modes == 2:
            acc = np.zeros((n_max + 1, n_max + 1), dtype=complex)
            for w, (a, b) in self.terms:
                acc += w * np.outer(
                    coherent_fock(a, n_max, tail_bound).amplitudes,
                    coherent_fock(b, n_max, tail_bound).amplitudes,
                )
            return TwoModeState(acc)
        raise ValueError("only one- and two-mode superpositions are supported")


def coherent_superposition(terms) -> CoherentSuperposition:
    """Single-mode helper: terms is an iterable of (weight, alpha)."""
    return CoherentSuperposition(tuple((w, (a,)) for w, a in terms))


def overlap_analytic(s1: CoherentSuperposition, s2: CoherentSuperposition) -> complex:
    """<s1|s2> via the bilinear expansion over the closed-form kernel."""
    if s1.n_modes != s2.n_modes:
        raise ValueError("superpositions must have the same number of modes")
    total = 0.0 + 0.0j
    for w1, a1 in s1.terms:
        for w2, a2 in s2.terms:
            k = 1.0 + 0.0j
            for b, g in zip(a1, a2):
                k *= coherent_overlap(b, g)
            total += w1.conjugate() * w2 * k
    return total
