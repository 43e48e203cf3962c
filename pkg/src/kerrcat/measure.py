"""Coarse-grained detection of coherent-state qubits.

The qubit-basis measurement interferes the signal with an auxiliary |alpha>
on the 50/50 beam splitter: |+alpha> sends all light to the first output
port, |-alpha> to the second, so a detector only has to tell a very bright
beam from the vacuum.  Exact Born probabilities are the primary path; shot
sampling with a counter-based generator is layered on top.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    CutoffPolicy,
    SingleModeState,
    choose_cutoff,
    coherent_fock,
    photon_number_distribution,
    tensor,
)
from .ops import beam_split

PROB_TOL = 1e-10


@dataclass(frozen=True)
class DiscriminationSetup:
    """Bright-vs-vacuum discrimination via interference with |ancilla_alpha>.

    The default threshold ceil(alpha^2) sits halfway to the bright port's
    mean photon number 2 alpha^2.
    """

    ancilla_alpha: float
    threshold: int | None = None

    def __post_init__(self):
        if self.ancilla_alpha <= 0:
            raise ValueError("ancilla_alpha must be positive")
        t = self.resolved_threshold
        if not 0 < t < 2.0 * self.ancilla_alpha**2:
            raise ValueError("threshold must lie strictly between 0 and 2*alpha^2")

    @property
    def resolved_threshold(self) -> int:
        if self.threshold is None:
            return math.ceil(self.ancilla_alpha**2)
        return int(self.threshold)


@dataclass(frozen=True)
class OutcomeDistribution:
    p_plus: float
    p_minus: float
    p_inconclusive: float

    def __post_init__(self):
        probs = (self.p_plus, self.p_minus, self.p_inconclusive)
        if any(p < -PROB_TOL or p > 1 + PROB_TOL for p in probs):
            raise ValueError(f"probabilities out of range: {probs}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_plus, self.p_minus, self.p_inconclusive)


@dataclass(frozen=True)
class ShotRecord:
    seed: int
    shots: int
    counts: tuple[int, int, int]  # (+1, -1, inconclusive)

    def __post_init__(self):
        if sum(self.counts) != self.shots:
            raise ValueError("counts must sum to shots")

    def frequencies(self) -> tuple[float, float, float]:
        return tuple(c / self.shots for c in self.counts)


def outcome_masks(n_max: int, threshold: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Boolean (n1, n2) masks for the +1 / -1 / inconclusive count regions."""
    n = np.arange(n_max + 1)
    bright1 = (n > threshold)[:, None] & (n <= threshold)[None, :]
    bright2 = (n <= threshold)[:, None] & (n > threshold)[None, :]
    return bright1, bright2, ~(bright1 | bright2)


def joint_cutoff(state: SingleModeState, setup: DiscriminationSetup) -> int:
    """Per-mode cutoff large enough for signal plus ancilla photons combined."""
    p = photon_number_distribution(state)
    mean_signal = float(np.arange(p.size) @ p)
    return max(
        choose_cutoff(CutoffPolicy(mean_signal + setup.ancilla_alpha**2)), state.n_max
    )


def qubit_measure(state: SingleModeState, setup: DiscriminationSetup) -> OutcomeDistribution:
    """Exact Born probabilities of the three-outcome discrimination.

    Tensors the signal with the ancilla, beam-splits, and bins the joint
    photon-count distribution against the threshold: first port bright and
    second dark is +1, the mirror image is -1, everything else (both bright
    or both dark) is inconclusive.
    """
    m = joint_cutoff(state, setup)
    joint = beam_split(tensor(state.padded(m), coherent_fock(setup.ancilla_alpha, m)))
    p = np.abs(joint.amplitudes) ** 2
    t = setup.resolved_threshold
    mask_p, mask_m, mask_i = outcome_masks(m, t)
    total = p.sum()
    return OutcomeDistribution(
        float(p[mask_p].sum() / total),
        float(p[mask_m].sum() / total),
        float(p[mask_i].sum() / total),
    )


def coarse_count(state: SingleModeState, bin_size: int) -> np.ndarray:
    """Photon-number distribution aggregated over bins of width bin_size."""
    if bin_size < 1:
        raise ValueError("bin_size must be >= 1")
    p = photon_number_distribution(state)
    n_bins = -(-p.size // bin_size)
    padded = np.zeros(n_bins * bin_size)
    padded[: p.size] = p
    return padded.reshape(n_bins, bin_size).sum(axis=1)


def sample(dist: OutcomeDistribution, seed: int, shots: int) -> ShotRecord:
    """Multinomial shot counts from a counter-based (Philox) generator.

    Outcome k of shot i depends only on (seed, i), so identical inputs give
    bit-identical records and shot ranges can be evaluated in parallel.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    edges = np.cumsum(dist.as_tuple())
    edges[-1] = max(edges[-1], 1.0)  # guard against rounding below 1
    draws = np.searchsorted(edges, rng.random(shots), side="right")
    counts = np.bincount(draws, minlength=3)
    return ShotRecord(seed=seed, shots=shots, counts=tuple(int(c) for c in counts[:3]))
