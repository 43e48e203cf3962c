"""Fidelity curves, width scaling, and the end-to-end CHSH pipeline.

The central quantity is the overlap of the Kerr-evolved coherent state at
phase pi/2 + phi_tilde with the ideal cat state,

    e^{-N} sum_n (N^n / n!) e^{i phi_tilde n^2},   N = 2 alpha^2,

evaluated three ways: the exact series, the full Fock simulation, and the
large-N Gaussian approximation exp(-4 N^3 phi_tilde^2).  The half-width of
the fidelity curve falls off as N^(-3/2), and the same scaling governs how
precisely every Kerr phase must be controlled before a Bell violation of
the entangled coherent state disappears.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.special import gammaln

from .fock import (
    CutoffPolicy,
    SingleModeState,
    choose_cutoff,
    coherent_fock,
    inner_product,
    tensor,
    vacuum_fock,
)
from .measure import DiscriminationSetup, ShotRecord, outcome_masks
from .ops import DisplaceGate, KerrGate, PhysicalCircuit, beam_split, kerr_evolve, run_circuit
from .qubit import QubitEncoding, _wrap, synthesize_rotation

SERIES_MASS = 1.0 - 1e-15


class NoCrossingError(RuntimeError):
    """The scanned curve never reached the requested level."""


# ---------------------------------------------------------------------------
# fidelity evaluators
# ---------------------------------------------------------------------------

def _poisson_weights(mean: float) -> np.ndarray:
    """Poisson pmf up to the point where the cumulative mass reaches
    SERIES_MASS, evaluated in the log domain."""
    hi = int(stats.poisson.isf(1.0 - SERIES_MASS, mean)) + 10
    n = np.arange(hi + 1)
    return np.exp(-mean + n * math.log(mean) - gammaln(n + 1.0))


def fidelity_exact(n_mean: float, phi_tilde: float) -> float:
    """|e^{-N} sum_n (N^n/n!) e^{i phi_tilde n^2}|^2 from the truncated series."""
    if n_mean <= 0:
        raise ValueError("mean photon number must be positive")
    w = _poisson_weights(n_mean)
    n = np.arange(w.size, dtype=float)
    amp = np.sum(w * np.exp(1j * phi_tilde * n**2))
    return float(abs(amp) ** 2)


def fidelity_fock(alpha: float, phi: float) -> float:
    """Fidelity of the Kerr(phi) state against the Kerr(pi/2) cat, via Fock.

    Builds |sqrt(2) alpha>, evolves at phi and at pi/2, and returns the
    squared overlap; must agree with
    fidelity_exact(2 alpha^2, phi - pi/2).
    """
    base = _sqrt2_alpha_state(alpha)
    evolved = kerr_evolve(base, phi)
    ideal = kerr_evolve(base, math.pi / 2)
    return float(abs(inner_product(ideal, evolved)) ** 2)


_base_state_cache: dict[float, SingleModeState] = {}


def _sqrt2_alpha_state(alpha: float) -> SingleModeState:
    state = _base_state_cache.get(alpha)
    if state is None:
        n_max = choose_cutoff(CutoffPolicy(2.0 * alpha**2))
        state = coherent_fock(math.sqrt(2.0) * alpha, n_max)
        _base_state_cache[alpha] = state
    return state


def fidelity_gaussian(n_mean: float, phi_tilde: float) -> float:
    """Large-N Gaussian approximation exp(-4 N^3 phi_tilde^2)."""
    return math.exp(-4.0 * n_mean**3 * phi_tilde**2)


def gaussian_half_width(n_mean: float) -> float:
    """Closed-form F = 1/2 crossing of the Gaussian curve: sqrt(ln 2)/(2 N^1.5)."""
    return math.sqrt(math.log(2.0)) / (2.0 * n_mean**1.5)


# ---------------------------------------------------------------------------
# half-width extraction and the scaling fit
# ---------------------------------------------------------------------------

def half_width(
    evaluator,
    n_mean: float,
    level: float = 0.5,
    rel_tol: float = 1e-6,
    max_doublings: int = 40,
) -> float:
    """First positive phi_tilde where evaluator(N, phi_tilde) crosses ``level``.

    Brackets by doubling an N^(-3/2)-sized initial guess, checks that the
    curve is monotone down to the crossing on a scan grid, then bisects.
    """
    hi = 2.0 * gaussian_half_width(n_mean)
    for _ in range(max_doublings):
        if evaluator(n_mean, hi) < level:
            break
        hi *= 2.0
    else:
        raise NoCrossingError(f"no {level} crossing found up to phi_tilde={hi:.3e}")
    grid = np.linspace(0.0, hi, 65)
    vals = [evaluator(n_mean, g) for g in grid]
    crossing_idx = next(i for i, v in enumerate(vals) if v < level)
    if any(
        vals[i + 1] > vals[i] + 1e-12 for i in range(crossing_idx)
    ):
        raise NoCrossingError("fidelity curve is not monotone before the crossing")
    return float(
        optimize.brentq(
            lambda x: evaluator(n_mean, x) - level,
            grid[max(crossing_idx - 1, 0)],
            grid[crossing_idx],
            rtol=rel_tol / 10.0,
        )
    )


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power law in log-log space: half_width ~ N^exponent."""

    n_values: tuple
    half_widths: tuple
    exponent: float
    intercept: float
    residual: float  # rms residual of the log-log fit


def fit_scaling(n_values, evaluator=fidelity_exact) -> ScalingFit:
    """Slope of log(half_width) vs log(N) across the given N values."""
    n_values = tuple(float(n) for n in n_values)
    if len(set(n_values)) < 3:
        raise ValueError("need at least 3 distinct N values")
    widths = tuple(half_width(evaluator, n) for n in n_values)
    return _power_law_fit(n_values, widths)


def _power_law_fit(xs, ys) -> ScalingFit:
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return ScalingFit(
        tuple(xs), tuple(ys), float(slope), float(intercept),
        float(np.sqrt(np.mean(resid**2))),
    )


# ---------------------------------------------------------------------------
# CHSH pipeline
# ---------------------------------------------------------------------------

#: Textbook-optimal settings (theta_A, theta_B) with the usual pi/4 spacing,
#: in a frame rotated so that Bob's two axes need no displacements at all.
DEFAULT_SETTINGS = (
    (math.pi / 4, math.pi / 2),
    (math.pi / 4, 0.0),
    (3 * math.pi / 4, math.pi / 2),
    (3 * math.pi / 4, 0.0),
)


@dataclass(frozen=True)
class ChshResult:
    settings: tuple  # four (theta_A, theta_B) pairs
    correlations: tuple  # E for each pair
    s_value: float
    discard_fraction: float
    phase_error: float
    alpha: float
    mode: str = "exact"
    seed: int | None = None
    shots: int | None = None
    shot_records: tuple = field(default_factory=tuple)


def _alice_su2(theta: float) -> np.ndarray:
    """Maps the measurement axis cos(t) Z + sin(t) X onto Z."""
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, s], [-s, c]], dtype=complex)


def _bob_su2(theta: float) -> np.ndarray:
    """Maps the measurement axis cos(t) Z + sin(t) Y onto Z.

    Bob measures in the Z-Y plane because the entangled state carries a
    relative phase i between the |alpha,alpha> and |-alpha,-alpha> branches;
    with Alice in the Z-X plane the ideal correlation is cos(t_A - t_B).
    """
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


# ---------------------------------------------------------------------------
# measurement programs
# ---------------------------------------------------------------------------
#
# A party's rotation only matters up to gates that commute with photon
# counting: a trailing effective Rz is invisible, and swapping the +/- labels
# absorbs a trailing effective X.  Exploiting both freedoms lets most setting
# rotations be realized with far smaller displacements than the literal ZXZXZ
# decomposition, which is what keeps leakage out of the correlations.

_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_XF = (np.eye(2, dtype=complex) + 1j * _PAULI_X) / math.sqrt(2.0)


def _pz(t: float) -> np.ndarray:
    """Effective action of the physical Rz step: diag(e^{it/2}, e^{-it/2})."""
    return np.array([[np.exp(0.5j * t), 0.0], [0.0, np.exp(-0.5j * t)]])


def _steps_product(steps) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for step in steps:
        u = (_pz(step[1]) if step[0] == "rz" else _XF) @ u
    return u


@dataclass(frozen=True)
class MeasurementProgram:
    """Physical steps realizing a setting rotation up to Z-commuting gates.

    ``flip`` records whether the +/- outcome labels must be swapped after
    counting (the program realizes X times the requested rotation).
    """

    steps: tuple
    flip: bool
    alpha: float

    def to_circuit(self, phase_error: float = 0.0) -> PhysicalCircuit:
        ops = []
        for step in self.steps:
            if step[0] == "rz":
                if abs(step[1]) > 1e-15:
                    ops.append(DisplaceGate(1j * step[1] / (4.0 * self.alpha)))
            else:
                ops.append(KerrGate(math.pi / 2, err=phase_error))
        return PhysicalCircuit(tuple(ops))


def _equivalent_up_to_z(u: np.ndarray, target: np.ndarray, flip: bool) -> bool:
    d = (_PAULI_X @ u if flip else u) @ target.conj().T
    return abs(d[0, 1]) < 1e-9 and abs(d[1, 0]) < 1e-9


def _candidate_angles(theta: float) -> tuple[float, ...]:
    vals = {0.0, math.pi}
    for s in (0.0, theta, -theta):
        for o in (0.0, 0.5 * math.pi, -0.5 * math.pi, math.pi, -math.pi):
            vals.add(_wrap(s + o))
    return tuple(sorted(vals))


_program_cache: dict[tuple, MeasurementProgram] = {}


def measurement_program(
    target: np.ndarray, enc: QubitEncoding, theta: float = 0.0
) -> MeasurementProgram:
    """Cheapest found realization of ``target`` up to Z-commuting gates.

    Searches the family Xf^{k1} Rz(b) Xf^{k2} Rz(c) over candidate angles
    built from ``theta`` (the setting angle) and quarter turns, verifying
    each candidate exactly and scoring it by total squared Rz angle, which
    is proportional to the leakage the displacements cause.  Falls back to
    the generic ZXZXZ synthesis (with its trailing Rz dropped) when no
    structured candidate matches.
    """
    target = np.asarray(target, dtype=complex)
    key = (enc.alpha, target.round(12).tobytes())
    cached = _program_cache.get(key)
    if cached is not None:
        return cached
    angles = _candidate_angles(theta)
    best = None
    for k1 in range(4):
        for k2 in range(4):
            for b in angles if k2 else (0.0,):
                for c in angles:
                    steps = (
                        ((("rz", c),) if abs(c) > 1e-15 else ())
                        + (("x",),) * k2
                        + ((("rz", b),) if abs(b) > 1e-15 else ())
                        + (("x",),) * k1
                    )
                    score = (b * b + c * c, k1 + k2)
                    if best is not None and score >= best[0]:
                        continue
                    u = _steps_product(steps)
                    for flip in (False, True):
                        if _equivalent_up_to_z(u, target, flip):
                            best = (score, steps, flip)
                            break
    if best is not None:
        program = MeasurementProgram(best[1], best[2], enc.alpha)
    else:
        steps = synthesize_rotation(target, enc).steps
        if steps and steps[-1][0] == "rz":
            steps = steps[:-1]
        program = MeasurementProgram(tuple(steps), False, enc.alpha)
    _program_cache[key] = program
    return program


_povm_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _discrimination_povm(alpha: float, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """(E_+, E_-) POVM elements of the bright/dark discrimination on one mode.

    Row n of W is the joint output amplitude of |n> interfered with the
    ancilla |alpha>; summing |W|^2 over a count region and contracting
    gives the POVM matrix for that outcome.
    """
    key = (alpha, n_max)
    cached = _povm_cache.get(key)
    if cached is not None:
        return cached
    setup = DiscriminationSetup(alpha)
    # Row n interferes |n> with the ancilla, so the joint grid must hold
    # n_max plus the ancilla's photons before any row runs into the corner.
    m = choose_cutoff(CutoffPolicy(n_max + alpha**2))
    anc = coherent_fock(alpha, m)
    w = np.empty((n_max + 1, (m + 1) ** 2), dtype=complex)
    for n in range(n_max + 1):
        basis = np.zeros(m + 1, dtype=complex)
        basis[n] = 1.0
        joint = beam_split(tensor(SingleModeState(basis), anc))
        w[n] = joint.amplitudes.ravel()
    mask_p, mask_m, _ = outcome_masks(m, setup.resolved_threshold)
    e_plus = (w.conj() * mask_p.ravel()) @ w.T
    e_minus = (w.conj() * mask_m.ravel()) @ w.T
    _povm_cache[key] = (e_plus, e_minus)
    return e_plus, e_minus


def _party_circuit(
    program: MeasurementProgram, mode: int, phase_error: float
) -> PhysicalCircuit:
    from dataclasses import replace

    circuit = program.to_circuit(phase_error=phase_error)
    return PhysicalCircuit(tuple(replace(op, mode=mode) for op in circuit.ops))


def prepare_entangled_state(alpha: float, phase_error: float = 0.0):
    """Kerr(pi/2 + err) on |sqrt(2) alpha>, then the 50/50 beam splitter."""
    cat = kerr_evolve(_sqrt2_alpha_state(alpha), math.pi / 2 + phase_error)
    return beam_split(tensor(cat, vacuum_fock(cat.n_max)))


def _joint_outcome_table(psi, e_ops_a, e_ops_b) -> np.ndarray:
    """3x3 table of joint outcome probabilities (+, -, inconclusive) per party."""
    amps = psi.amplitudes
    norm = float(np.vdot(amps, amps).real)
    table = np.empty((3, 3))
    for i, ea in enumerate(e_ops_a):
        for j, eb in enumerate(e_ops_b):
            val = np.vdot(amps, ea @ amps @ eb.T).real
            table[i, j] = max(float(val), 0.0) / norm
    return table


def _complete(e_plus, e_minus):
    ident = np.eye(e_plus.shape[0], dtype=complex)
    return (e_plus, e_minus, ident - e_plus - e_minus)


def chsh_pipeline(
    alpha: float,
    settings=DEFAULT_SETTINGS,
    phase_error: float = 0.0,
    mode: str = "exact",
    seed: int | None = None,
    shots: int | None = None,
    prep_error_only: bool = False,
) -> ChshResult:
    """Full Bell experiment on the entangled coherent state.

    Prepares the two-mode state with the (possibly mis-set) Kerr phase,
    applies each party's synthesized rotation (whose embedded Kerr blocks
    receive the same phase error unless ``prep_error_only``), measures both
    modes coarse-grained, and assembles
    S = E(a,b) + E(a,b') + E(a',b) - E(a',b') over conclusive events.
    """
    if alpha < 1.0:
        raise ValueError("alpha must be at least 1")
    if mode not in ("exact", "sampled"):
        raise ValueError("mode must be 'exact' or 'sampled'")
    if mode == "sampled" and (seed is None or shots is None):
        raise ValueError("sampled mode needs seed and shots")
    enc = QubitEncoding(alpha)
    psi0 = prepare_entangled_state(alpha, phase_error)
    n_max = psi0.cutoffs[0]
    rot_error = 0.0 if prep_error_only else phase_error
    e_plus, e_minus = _discrimination_povm(alpha, n_max)
    e_ops = _complete(e_plus, e_minus)

    rng = np.random.Generator(np.random.Philox(key=seed)) if mode == "sampled" else None
    correlations = []
    discards = []
    records = []
    for theta_a, theta_b in settings:
        prog_a = measurement_program(_alice_su2(theta_a), enc, theta_a)
        prog_b = measurement_program(_bob_su2(theta_b), enc, theta_b)
        psi = run_circuit(_party_circuit(prog_a, 0, rot_error), psi0)
        psi = run_circuit(_party_circuit(prog_b, 1, rot_error), psi)
        ops_a = (e_ops[1], e_ops[0], e_ops[2]) if prog_a.flip else e_ops
        ops_b = (e_ops[1], e_ops[0], e_ops[2]) if prog_b.flip else e_ops
        table = _joint_outcome_table(psi, ops_a, ops_b)
        if mode == "exact":
            conclusive = table[:2, :2].sum()
            corr = (table[0, 0] + table[1, 1] - table[0, 1] - table[1, 0]) / conclusive
            discards.append(1.0 - conclusive / table.sum())
        else:
            flat = np.clip(table.ravel(), 0.0, None)
            flat /= flat.sum()
            draws = np.searchsorted(np.cumsum(flat), rng.random(shots), side="right")
            counts = np.bincount(draws, minlength=9).reshape(3, 3)
            conclusive = counts[:2, :2].sum()
            corr = (counts[0, 0] + counts[1, 1] - counts[0, 1] - counts[1, 0]) / conclusive
            discards.append(1.0 - conclusive / shots)
            records.append(tuple(int(c) for c in counts.ravel()))
        correlations.append(float(corr))
    s_value = correlations[0] + correlations[1] + correlations[2] - correlations[3]
    return ChshResult(
        settings=tuple(settings),
        correlations=tuple(correlations),
        s_value=float(s_value),
        discard_fraction=float(np.mean(discards)),
        phase_error=phase_error,
        alpha=alpha,
        mode=mode,
        seed=seed,
        shots=shots,
        shot_records=tuple(records),
    )


class NoViolationError(RuntimeError):
    """S(0) did not exceed the classical bound for some alpha."""


def violation_threshold(
    alpha: float, rel_tol: float = 1e-4, prep_error_only: bool = False
) -> float:
    """Phase error delta_phi* where S first drops to 2, by bracketing + brentq."""
    s0 = chsh_pipeline(alpha, phase_error=0.0, prep_error_only=prep_error_only).s_value
    if s0 <= 2.0:
        raise NoViolationError(f"S(0) = {s0:.4f} <= 2 at alpha = {alpha}")
    n_mean = 2.0 * alpha**2
    hi = 2.0 / n_mean**1.5
    for _ in range(40):
        if chsh_pipeline(alpha, phase_error=hi, prep_error_only=prep_error_only).s_value < 2.0:
            break
        hi *= 2.0
    else:
        raise NoCrossingError("S never dropped below 2 on the scanned range")
    return float(
        optimize.brentq(
            lambda d: chsh_pipeline(
                alpha, phase_error=d, prep_error_only=prep_error_only
            ).s_value - 2.0,
            0.0,
            hi,
            rtol=rel_tol,
        )
    )


def phase_sensitivity(alpha_values, rel_tol: float = 1e-4) -> tuple[ScalingFit, dict]:
    """Fit log(delta_phi*) against log(N) over the given alphas.

    Alphas without a violation at zero error are excluded and reported in
    the returned detail dict.
    """
    thresholds = {}
    excluded = []
    for alpha in alpha_values:
        if alpha < 1.5:
            raise ValueError("phase_sensitivity needs alpha >= 1.5")
        try:
            thresholds[alpha] = violation_threshold(alpha, rel_tol=rel_tol)
        except NoViolationError:
            excluded.append(alpha)
    if len(thresholds) < 3:
        raise NoViolationError("fewer than 3 alphas produced a violation")
    ns = tuple(2.0 * a**2 for a in thresholds)
    fit = _power_law_fit(ns, tuple(thresholds.values()))
    return fit, {"thresholds": thresholds, "excluded": excluded}
