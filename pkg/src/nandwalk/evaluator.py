"""NAND-tree evaluation by phase estimation on the walk operator.

The walk starts on the tail edge (walker at r'' = 0, coin pointing right to
r' = 1). The tree value shows up in how much of that start state lives in
the eigenspaces of the walk operator at a fixed eigenphase; which phase,
which direction and what threshold are chosen by
:func:`calibrate_decision_rule` against the classical evaluator.

Phase estimation conventions: ancilla ``k`` controls ``U^(2^k)`` and carries
bit ``k`` of the outcome, so outcome ``b`` estimates the phase
``2*pi*b / 2^t`` (wrapped to ``(-pi, pi]``).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .circuits import (
    COIN_CODES,
    OracleSpec,
    basis_index,
    build_walk_operator,
    oracle_leaf_values,
)
from .sim import (
    UNITARY_QUBIT_LIMIT,
    Circuit,
    StateVector,
    apply_circuit,
    circuit_sparse_unitary,
    circuit_unitary,
    h,
    marginal_probabilities,
    phase,
    swap,
)
from .tree import TailedTree, TreeShape, enumerate_assignments, eval_nand_classical


class EvaluationError(RuntimeError):
    pass


class CalibrationError(EvaluationError):
    pass


TAIL_EDGE = (0, "right")
TAIL_ROOT_DOWN = (0, "down")
INITIAL_STATES = {"tail-edge": TAIL_EDGE, "tail-root": TAIL_ROOT_DOWN}


@dataclass(frozen=True)
class DecisionRule:
    phase_window: float
    high_mass_value: int
    overlap_threshold: float
    phase_center: float = math.pi / 2
    margin: float | None = None
    calibrated_levels: int | None = None

    def __post_init__(self):
        if not 0 < self.phase_window < math.pi / 2:
            raise ValueError(f"phase window must lie in (0, pi/2), got {self.phase_window}")
        if not 0 < self.overlap_threshold < 1:
            raise ValueError("overlap threshold must lie in (0, 1)")
        if self.high_mass_value not in (0, 1):
            raise ValueError("high_mass_value must be 0 or 1")

    def decide(self, mass: float) -> int:
        return self.high_mass_value if mass > self.overlap_threshold else 1 - self.high_mass_value

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), **kw)

    @classmethod
    def from_json(cls, text: str) -> DecisionRule:
        return cls(**json.loads(text))


@dataclass
class EvalConfig:
    phase_bits: int = 6
    shots: int = 1000
    seed: int = 0
    rule: DecisionRule | None = None
    exact: bool = False
    initial: tuple[int, str] = TAIL_EDGE

    def __post_init__(self):
        if self.phase_bits < 1:
            raise ValueError("need at least one phase bit")
        if self.shots < 1:
            raise ValueError("need at least one shot")


@dataclass
class EvalReport:
    value: int
    zero_phase_mass: float
    phase_center: float
    phase_histogram: dict[str, int] = field(default_factory=dict)
    spectrum: list[tuple[float, float]] | None = None
    method: str = "spectral"

    def to_dict(self) -> dict:
        d = {
            "value": self.value,
            "method": self.method,
            "phase_center": self.phase_center,
            "zero_phase_mass": self.zero_phase_mass,
            "phase_histogram": dict(self.phase_histogram),
        }
        if self.spectrum is not None:
            d["spectrum"] = [[p, o] for p, o in self.spectrum]
        return d


def _as_oracle(shape: TreeShape, leaves) -> OracleSpec:
    if isinstance(leaves, OracleSpec):
        return leaves
    return OracleSpec.exact(leaves)


def initial_state(shape: TreeShape, initial: tuple[int, str] = TAIL_EDGE) -> StateVector:
    n = shape.walker_qubits
    vertex, coin = initial
    if coin not in COIN_CODES:
        raise ValueError(f"unknown coin symbol {coin!r}")
    return StateVector.basis(n + 2, basis_index(vertex, coin, n))


def phase_distance(phases: np.ndarray, center: float) -> np.ndarray:
    """Distance from each phase to the nearer of +center and -center."""
    wrapped = np.angle(np.exp(1j * np.asarray(phases)))
    return np.abs(np.abs(wrapped) - center)


def window_mass(phases, overlaps, center: float, eps: float) -> float:
    return float(np.sum(np.asarray(overlaps)[phase_distance(phases, center) <= eps]))


def eigen_overlaps(unitary: np.ndarray, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenphases and squared overlaps of ``psi`` with an orthonormal eigenbasis."""
    t, zmat = scipy.linalg.schur(unitary, output="complex")
    phases = np.angle(np.diag(t))
    overlaps = np.abs(zmat.conj().T @ psi) ** 2
    return phases, overlaps


def _check_dense(shape: TreeShape):
    if shape.walker_qubits + 2 > UNITARY_QUBIT_LIMIT:
        raise EvaluationError(
            f"{shape.walker_qubits + 2} qubits exceeds the dense limit {UNITARY_QUBIT_LIMIT}"
        )


def walk_spectrum(shape: TreeShape, leaves, initial=TAIL_EDGE):
    _check_dense(shape)
    op = build_walk_operator(shape, _as_oracle(shape, leaves))
    u = circuit_unitary(op)
    return eigen_overlaps(u, initial_state(shape, initial).amplitudes)


def default_rule_uncalibrated(phase_bits: int = 6) -> DecisionRule:
    return DecisionRule(
        phase_window=math.pi / 2**phase_bits, high_mass_value=0, overlap_threshold=0.06
    )


def spectral_eval(
    shape: TreeShape, leaves, rule: DecisionRule | None = None, initial=TAIL_EDGE
) -> EvalReport:
    rule = rule or default_rule(shape.levels)
    phases, overlaps = walk_spectrum(shape, leaves, initial)
    mass = window_mass(phases, overlaps, rule.phase_center, rule.phase_window)
    return EvalReport(
        value=rule.decide(mass),
        zero_phase_mass=mass,
        phase_center=rule.phase_center,
        spectrum=[(float(p), float(o)) for p, o in zip(phases, overlaps)],
        method="spectral",
    )


def eigenspace_mass(
    shape: TreeShape, leaves, center: float = math.pi / 2, initial=TAIL_EDGE, tol: float = 1e-12
) -> float:
    """Exact start-state mass on the eigenspaces at phases +-center.

    Works from the sparse circuit unitary, so it reaches trees far past the
    dense limit. For a normal U the least-squares residual of
    ``(U - e^{i c} I) y = psi`` is the projection of psi onto that
    eigenspace.
    """
    u = circuit_sparse_unitary(build_walk_operator(shape, _as_oracle(shape, leaves)))
    psi = initial_state(shape, initial).amplitudes
    eye = sp.identity(u.shape[0], dtype=complex, format="csr")
    targets = {complex(np.exp(1j * center)), complex(np.exp(-1j * center))}
    mass = 0.0
    for lam in sorted(targets, key=lambda c: (c.real, c.imag)):
        a = (u - lam * eye).tocsr()
        y = spla.lsqr(a, psi, atol=tol, btol=tol, iter_lim=200 * u.shape[0])[0]
        r = psi - a @ y
        mass += float(np.vdot(r, r).real)
    return mass


def exact_eval(shape: TreeShape, leaves, rule: DecisionRule | None = None, initial=TAIL_EDGE) -> EvalReport:
    """Spectral evaluation, switching to the sparse eigenspace path for big trees."""
    rule = rule or default_rule(shape.levels)
    if shape.walker_qubits + 2 <= UNITARY_QUBIT_LIMIT:
        return spectral_eval(shape, leaves, rule, initial)
    mass = eigenspace_mass(shape, leaves, rule.phase_center, initial)
    return EvalReport(rule.decide(mass), mass, rule.phase_center, method="eigenspace")


# --- phase estimation -----------------------------------------------------

def build_qft(qubits: Sequence[int], num_qubits: int) -> Circuit:
    """QFT on ``qubits`` where qubits[k] carries weight 2^k."""
    t = len(qubits)
    gates = []
    for j in reversed(range(t)):
        gates.append(h(qubits[j]))
        for m in reversed(range(j)):
            gates.append(phase(math.pi / 2 ** (j - m), qubits[j], [(qubits[m], 1)]))
    for k in range(t // 2):
        gates.append(swap(qubits[k], qubits[t - 1 - k]))
    return Circuit(num_qubits, gates)


def build_phase_estimation(unitary: Circuit, phase_bits: int) -> Circuit:
    """Textbook QPE; ancillas are appended above the system qubits."""
    if phase_bits < 1:
        raise ValueError("need at least one phase bit")
    s = unitary.num_qubits
    total = s + phase_bits
    anc = list(range(s, total))
    gates = [h(a) for a in anc]
    for k, a in enumerate(anc):
        ctrl = [g.with_controls([(a, 1)]) for g in unitary.gates]
        for _ in range(2**k):
            gates.extend(ctrl)
    gates.extend(build_qft(anc, total).inverse().gates)
    regs = dict(unitary.registers) or {"S": (0, s)}
    regs["A"] = (s, total)
    return Circuit(total, gates, regs)


def run_phase_estimation(
    unitary: Circuit, system: StateVector, phase_bits: int
) -> tuple[np.ndarray, StateVector]:
    """Outcome probabilities over the ancilla register and the final joint state."""
    qpe = build_phase_estimation(unitary, phase_bits)
    amps = np.zeros(1 << qpe.num_qubits, dtype=complex)
    amps[: system.amplitudes.size] = system.amplitudes
    final = apply_circuit(StateVector(qpe.num_qubits, amps), qpe)
    anc = list(range(unitary.num_qubits, qpe.num_qubits))
    return marginal_probabilities(final, anc), final


def outcome_phases(phase_bits: int) -> np.ndarray:
    b = np.arange(2**phase_bits)
    return np.angle(np.exp(2j * np.pi * b / 2**phase_bits))


def target_outcomes(phase_bits: int, rule: DecisionRule) -> np.ndarray:
    """Outcomes counted as 'at the phase center': within the window, never narrower than a bin."""
    eps = max(rule.phase_window, math.pi / 2**phase_bits)
    return np.flatnonzero(phase_distance(outcome_phases(phase_bits), rule.phase_center) <= eps + 1e-12)


def qpe_probabilities(shape: TreeShape, leaves, phase_bits: int, initial=TAIL_EDGE) -> np.ndarray:
    op = build_walk_operator(shape, _as_oracle(shape, leaves))
    probs, _ = run_phase_estimation(op, initial_state(shape, initial), phase_bits)
    return probs


def qpe_eval(shape: TreeShape, leaves, config: EvalConfig) -> EvalReport:
    rule = config.rule or default_rule(shape.levels)
    t = config.phase_bits
    probs = qpe_probabilities(shape, leaves, t, config.initial)
    rng = np.random.default_rng(config.seed)
    counts = rng.multinomial(config.shots, probs / probs.sum())
    hits = int(counts[target_outcomes(t, rule)].sum())
    mass = hits / config.shots
    hist = {format(b, f"0{t}b"): int(c) for b, c in enumerate(counts) if c}
    return EvalReport(
        value=rule.decide(mass),
        zero_phase_mass=mass,
        phase_center=rule.phase_center,
        phase_histogram=hist,
        method="qpe",
    )


def classification_margin(
    shape: TreeShape, rule: DecisionRule, phase_bits: int, initial=TAIL_EDGE
) -> float:
    """Worst signed distance to the threshold of the noise-free QPE target weight.

    Taken over every leaf assignment; positive means phase estimation with
    unlimited shots classifies all of them correctly.
    """
    bins = target_outcomes(phase_bits, rule)
    worst = math.inf
    for leaves in enumerate_assignments(shape):
        q = float(qpe_probabilities(shape, leaves, phase_bits, initial)[bins].sum())
        sign = 1 if eval_nand_classical(TailedTree(shape, leaves)) == rule.high_mass_value else -1
        worst = min(worst, sign * (q - rule.overlap_threshold))
    return worst


# --- calibration ----------------------------------------------------------

CENTERS = (math.pi / 2,)
ALL_CENTERS = (0.0, math.pi / 2, math.pi)
WINDOWS = tuple(math.pi / 2**j for j in range(2, 13))


def _separation(masses: np.ndarray, labels: np.ndarray, high_value: int) -> tuple[float, float, float]:
    hi = masses[labels == high_value]
    lo = masses[labels != high_value]
    if hi.size == 0 or lo.size == 0:
        return -np.inf, 0.0, 0.0
    return float(hi.min() - lo.max()), float(lo.max()), float(hi.min())


def calibrate_decision_rule(
    shape: TreeShape,
    initial=TAIL_EDGE,
    centers: Sequence[float] = CENTERS,
    windows: Sequence[float] = WINDOWS,
) -> DecisionRule:
    """Pick (center, window, direction, threshold) that classifies every assignment.

    Runs the exact spectral evaluation on all 2^N leaf assignments. For each
    center and direction the narrowest separating window is taken; the
    narrowest overall wins, then the widest margin. Raises CalibrationError when
    nothing separates.
    """
    if shape.num_leaves > 8:
        raise ValueError("calibration enumerates assignments; use N <= 8")
    spectra, labels = [], []
    for leaves in enumerate_assignments(shape):
        spectra.append(walk_spectrum(shape, leaves, initial))
        labels.append(eval_nand_classical(TailedTree(shape, leaves)))
    labels = np.array(labels)
    if len(set(labels.tolist())) < 2:
        raise CalibrationError("calibration set holds a single formula value")
    best = None
    for center in centers:
        masses = {
            eps: np.array([window_mass(p, o, center, eps) for p, o in spectra])
            for eps in windows
        }
        for hv in (0, 1):
            # narrowest separating window; a wider one only adds unresolved phases
            for eps in sorted(windows):
                margin, lo, hi = _separation(masses[eps], labels, hv)
                if margin > 1e-9:
                    break
            key = (margin > 1e-9, -eps, round(margin, 9))
            if best is None or key > best[0]:
                best = (key, center, eps, hv, margin, lo, hi)
    _, center, eps, hv, margin, lo, hi = best
    if not margin > 1e-9:
        raise CalibrationError(
            f"no separating rule for {shape.levels} levels from start {initial}: best margin {margin:.3g}"
        )
    return DecisionRule(
        phase_window=eps,
        high_mass_value=hv,
        overlap_threshold=(lo + hi) / 2,
        phase_center=center,
        margin=margin,
        calibrated_levels=shape.levels,
    )


@lru_cache(maxsize=None)
def default_rule(levels: int) -> DecisionRule:
    """Calibrated rule for a tree size; trees above 3 levels reuse the 3-level rule."""
    return calibrate_decision_rule(TreeShape(min(levels, 3)))


@lru_cache(maxsize=65536)
def _exact_value(levels: int, leaves: tuple[int, ...], rule: DecisionRule, initial) -> int:
    return exact_eval(TreeShape(levels), leaves, rule, initial).value


def evaluate_formula(shape: TreeShape, leaves, config: EvalConfig | None = None) -> int:
    """Formula value from the walk: exact spectral mode or sampled phase estimation.

    Mask oracles are reduced to the leaf bits they flip; the walk operator
    only differs off the vertex set, which the start state never reaches.
    """
    config = config or EvalConfig(exact=True)
    bits = oracle_leaf_values(_as_oracle(shape, leaves), shape)
    rule = config.rule or default_rule(shape.levels)
    if config.exact:
        return _exact_value(shape.levels, bits, rule, tuple(config.initial))
    return qpe_eval(shape, bits, config).value
