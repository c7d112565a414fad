"""Dense state-vector simulation of small gate circuits.

Basis convention: qubit ``k`` is bit ``k`` of the basis index, so the
amplitude of ``|q_{n-1} ... q_1 q_0>`` lives at ``sum(q_k << k)``.

RY convention, used by every builder in the package::

    RY(theta) = [[cos(theta/2), -sin(theta/2)],
                 [sin(theta/2),  cos(theta/2)]]
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

ON_1 = 1
ON_0 = 0

GATE_KINDS = ("X", "Z", "RY", "SWAP", "H", "P")
_ANGLED = ("RY", "P")

UNITARY_QUBIT_LIMIT = 12
ATOL = 1e-10


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    controls: tuple[tuple[int, int], ...] = ()
    angle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(
            self, "controls", tuple((int(q), int(p)) for q, p in self.controls)
        )
        if self.kind not in GATE_KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        want = 2 if self.kind == "SWAP" else 1
        if len(self.targets) != want:
            raise CircuitError(f"{self.kind} takes {want} target(s), got {self.targets}")
        if (self.angle is None) == (self.kind in _ANGLED):
            raise CircuitError(f"{self.kind} angle mismatch: {self.angle!r}")
        for _, pol in self.controls:
            if pol not in (ON_0, ON_1):
                raise CircuitError(f"control polarity must be 0 or 1, got {pol}")
        qubits = self.qubits
        if len(set(qubits)) != len(qubits):
            raise CircuitError(f"duplicate qubit in {self}")
        if min(qubits) < 0:
            raise CircuitError(f"negative qubit index in {self}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)

    def matrix(self) -> np.ndarray:
        """2x2 matrix of the single-target kinds."""
        if self.kind == "X":
            return np.array([[0, 1], [1, 0]], dtype=complex)
        if self.kind == "Z":
            return np.array([[1, 0], [0, -1]], dtype=complex)
        if self.kind == "H":
            return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        if self.kind == "RY":
            c, s = np.cos(self.angle / 2), np.sin(self.angle / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "P":
            return np.array([[1, 0], [0, np.exp(1j * self.angle)]], dtype=complex)
        raise CircuitError("SWAP has no 2x2 matrix")

    def inverse(self) -> Gate:
        if self.kind in _ANGLED:
            return Gate(self.kind, self.targets, self.controls, -self.angle)
        return self

    def with_controls(self, extra: Iterable[tuple[int, int]]) -> Gate:
        return Gate(self.kind, self.targets, self.controls + tuple(extra), self.angle)

    def remap(self, mapping: dict[int, int]) -> Gate:
        return Gate(
            self.kind,
            tuple(mapping[t] for t in self.targets),
            tuple((mapping[q], p) for q, p in self.controls),
            self.angle,
        )

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "targets": list(self.targets),
            "controls": [[q, p] for q, p in self.controls],
        }
        if self.angle is not None:
            d["angle"] = self.angle
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Gate:
        return cls(
            d["kind"],
            tuple(d["targets"]),
            tuple(tuple(c) for c in d.get("controls", [])),
            d.get("angle"),
        )


# convenience constructors

def x(t, controls=()):
    return Gate("X", (t,), tuple(controls))


def z(t, controls=()):
    return Gate("Z", (t,), tuple(controls))


def ry(theta, t, controls=()):
    return Gate("RY", (t,), tuple(controls), float(theta))


def swap(a, b, controls=()):
    return Gate("SWAP", (a, b), tuple(controls))


def h(t, controls=()):
    return Gate("H", (t,), tuple(controls))


def phase(lam, t, controls=()):
    return Gate("P", (t,), tuple(controls), float(lam))


@dataclass
class Circuit:
    """Ordered gate list over ``num_qubits`` with named half-open registers."""

    num_qubits: int
    gates: list[Gate] = field(default_factory=list)
    registers: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        self.registers = {k: (int(lo), int(hi)) for k, (lo, hi) in self.registers.items()}
        self._check_registers()
        for g in self.gates:
            self._check_gate(g)

    def _check_registers(self):
        if not self.registers:
            return
        seen: set[int] = set()
        for name, (lo, hi) in self.registers.items():
            if not 0 <= lo < hi <= self.num_qubits:
                raise CircuitError(f"register {name} range [{lo}, {hi}) out of bounds")
            span = set(range(lo, hi))
            if seen & span:
                raise CircuitError(f"register {name} overlaps another register")
            seen |= span
        if seen != set(range(self.num_qubits)):
            raise CircuitError("registers do not cover every qubit")

    def _check_gate(self, g: Gate):
        if max(g.qubits) >= self.num_qubits:
            raise CircuitError(f"{g} references a qubit beyond {self.num_qubits}")

    def append(self, g: Gate) -> Circuit:
        self._check_gate(g)
        self.gates.append(g)
        return self

    def extend(self, gates: Iterable[Gate]) -> Circuit:
        for g in gates:
            self.append(g)
        return self

    def register(self, name: str) -> list[int]:
        lo, hi = self.registers[name]
        return list(range(lo, hi))

    def inverse(self) -> Circuit:
        return Circuit(
            self.num_qubits, [g.inverse() for g in reversed(self.gates)], dict(self.registers)
        )

    def controlled(self, extra: Sequence[tuple[int, int]]) -> Circuit:
        return Circuit(
            self.num_qubits, [g.with_controls(extra) for g in self.gates], dict(self.registers)
        )

    def __len__(self):
        return len(self.gates)

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "registers": {k: [lo, hi] for k, (lo, hi) in self.registers.items()},
            "gates": [g.to_dict() for g in self.gates],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> Circuit:
        return cls(
            int(d["num_qubits"]),
            [Gate.from_dict(g) for g in d["gates"]],
            {k: tuple(v) for k, v in d.get("registers", {}).items()},
        )

    @classmethod
    def from_json(cls, text: str) -> Circuit:
        return cls.from_dict(json.loads(text))


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape[0] != 1 << self.num_qubits:
            raise CircuitError(
                f"expected {1 << self.num_qubits} amplitudes, got {self.amplitudes.shape[0]}"
            )

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> StateVector:
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> StateVector:
        return StateVector(self.num_qubits, self.amplitudes.copy())


# --- kernels --------------------------------------------------------------

def _matching_indices(n: int, fixed: dict[int, int]) -> np.ndarray:
    """All basis indices with the given bit values, built from the free bits only."""
    free = [q for q in range(n) if q not in fixed]
    base = sum(bit << q for q, bit in fixed.items())
    combos = np.arange(1 << len(free), dtype=np.int64)
    idx = np.full(combos.shape, base, dtype=np.int64)
    for j, q in enumerate(free):
        idx |= ((combos >> j) & 1) << q
    return idx


@lru_cache(maxsize=4096)
def _pair_indices(n: int, targets: tuple, controls: tuple):
    """Index pairs (i0, i1) a gate mixes, restricted to satisfied controls.

    Single target: i0 has the target bit clear, i1 = i0 with it set.
    SWAP: i0 has (t0, t1) = (1, 0), i1 has (0, 1).
    """
    fixed = dict(controls)
    if len(targets) == 1:
        (t,) = targets
        fixed[t] = 0
        i0 = _matching_indices(n, fixed)
        i1 = i0 | (1 << t)
    else:
        a, b = targets
        fixed[a], fixed[b] = 1, 0
        i0 = _matching_indices(n, fixed)
        i1 = (i0 & ~(1 << a)) | (1 << b)
    i0.setflags(write=False)
    i1.setflags(write=False)
    return i0, i1


def _apply_inplace(amps: np.ndarray, gate: Gate, n: int) -> None:
    i0, i1 = _pair_indices(n, gate.targets, gate.controls)
    if gate.kind in ("X", "SWAP"):
        amps[i0], amps[i1] = amps[i1], amps[i0].copy()
        return
    if gate.kind == "Z":
        amps[i1] *= -1
        return
    if gate.kind == "P":
        amps[i1] *= np.exp(1j * gate.angle)
        return
    m = gate.matrix()
    a0 = amps[i0]
    a1 = amps[i1]
    amps[i0] = m[0, 0] * a0 + m[0, 1] * a1
    amps[i1] = m[1, 0] * a0 + m[1, 1] * a1


def _check_fits(gate: Gate, n: int):
    if max(gate.qubits) >= n:
        raise CircuitError(f"{gate} out of range for {n} qubits")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    _check_fits(gate, state.num_qubits)
    out = state.copy()
    _apply_inplace(out.amplitudes, gate, state.num_qubits)
    return out


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if state.num_qubits != circuit.num_qubits:
        raise CircuitError(
            f"state has {state.num_qubits} qubits, circuit has {circuit.num_qubits}"
        )
    out = state.copy()
    for g in circuit.gates:
        _apply_inplace(out.amplitudes, g, circuit.num_qubits)
    return out


def apply_circuit_array(amps: np.ndarray, circuit: Circuit) -> np.ndarray:
    """Apply to a raw amplitude array (1-D, or 2-D with states in columns)."""
    out = np.array(amps, dtype=np.complex128, copy=True)
    for g in circuit.gates:
        _apply_inplace(out, g, circuit.num_qubits)
    return out


def circuit_unitary(circuit: Circuit, limit: int = UNITARY_QUBIT_LIMIT) -> np.ndarray:
    """Dense unitary; column j is the circuit applied to basis state j."""
    n = circuit.num_qubits
    if n > limit:
        raise CircuitError(f"{n} qubits exceeds the dense unitary limit of {limit}")
    return apply_circuit_array(np.eye(1 << n, dtype=np.complex128), circuit)


def gate_sparse(gate: Gate, n: int) -> sp.csr_matrix:
    dim = 1 << n
    i0, i1 = _pair_indices(n, gate.targets, gate.controls)
    touched = np.zeros(dim, dtype=bool)
    touched[i0] = True
    touched[i1] = True
    rest = np.flatnonzero(~touched)
    if gate.kind == "SWAP":
        m = np.array([[0, 1], [1, 0]], dtype=complex)
    else:
        m = gate.matrix()
    rows = [rest, i0, i0, i1, i1]
    cols = [rest, i0, i1, i0, i1]
    vals = [
        np.ones(rest.size, dtype=complex),
        np.full(i0.size, m[0, 0]),
        np.full(i0.size, m[0, 1]),
        np.full(i0.size, m[1, 0]),
        np.full(i0.size, m[1, 1]),
    ]
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    mat.eliminate_zeros()
    return mat


def circuit_sparse_unitary(circuit: Circuit) -> sp.csr_matrix:
    """Exact sparse unitary built as a product of per-gate sparse matrices.

    Runs of diagonal gates (Z, P) are folded into one diagonal first, which
    keeps large phase oracles cheap.
    """
    n = circuit.num_qubits
    dim = 1 << n
    u = sp.identity(dim, dtype=complex, format="csr")
    diag = None
    for g in circuit.gates:
        if g.kind in ("Z", "P"):
            if diag is None:
                diag = np.ones(dim, dtype=complex)
            _apply_inplace(diag, g, n)
            continue
        if diag is not None:
            u = (sp.diags(diag, format="csr") @ u).tocsr()
            diag = None
        u = gate_sparse(g, n) @ u
        u.eliminate_zeros()
    if diag is not None:
        u = (sp.diags(diag, format="csr") @ u).tocsr()
    return u


# --- measurement ----------------------------------------------------------

def marginal_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Probability of each outcome; outcome bit j is the value of qubits[j]."""
    if not qubits:
        raise CircuitError("no qubits to measure")
    n = state.num_qubits
    for q in qubits:
        if not 0 <= q < n:
            raise CircuitError(f"qubit {q} out of range")
    idx = np.arange(1 << n)
    outcome = np.zeros_like(idx)
    for j, q in enumerate(qubits):
        outcome |= ((idx >> q) & 1) << j
    return np.bincount(outcome, weights=state.probabilities(), minlength=1 << len(qubits))


def measure_register(
    state: StateVector, qubits: Sequence[int], seed: int
) -> tuple[str, StateVector]:
    """Sample one outcome and collapse.

    The returned bitstring lists qubits[-1] first, so it reads as a binary
    number whose bit j is qubits[j].
    """
    probs = marginal_probabilities(state, qubits)
    rng = np.random.default_rng(seed)
    k = int(rng.choice(probs.size, p=probs / probs.sum()))
    n = state.num_qubits
    idx = np.arange(1 << n)
    match = np.ones(idx.shape, dtype=bool)
    for j, q in enumerate(qubits):
        match &= ((idx >> q) & 1) == ((k >> j) & 1)
    amps = np.where(match, state.amplitudes, 0)
    amps = amps / np.sqrt(probs[k])
    return format(k, f"0{len(qubits)}b"), StateVector(n, amps)


# --- multi-controlled X lowering -----------------------------------------

def _toffoli(a, b, t):
    return x(t, ((a, ON_1), (b, ON_1)))


def _vchain(ctrls: list[int], anc: list[int], t: int) -> list[Gate]:
    # Barenco et al. Lemma 7.2: 4(k-2) Toffolis, borrowed ancillas restored.
    k = len(ctrls)
    up = [_toffoli(ctrls[i], anc[i - 2], anc[i - 1]) for i in range(k - 2, 1, -1)]
    down = [_toffoli(ctrls[i], anc[i - 2], anc[i - 1]) for i in range(2, k - 1)]
    base = _toffoli(ctrls[0], ctrls[1], anc[0])
    top = _toffoli(ctrls[k - 1], anc[k - 3], t)
    return [top, *up, base, *down, top, *up, base, *down]


def _mcx_positive(ctrls: list[int], t: int, free: list[int]) -> list[Gate]:
    k = len(ctrls)
    if k == 0:
        return [x(t)]
    if k == 1:
        return [x(t, ((ctrls[0], ON_1),))]
    if k == 2:
        return [_toffoli(ctrls[0], ctrls[1], t)]
    if len(free) >= k - 2:
        return _vchain(ctrls, free[: k - 2], t)
    if not free:
        raise CircuitError(f"{k}-control X needs at least one ancilla")
    # Lemma 7.3: split around one borrowed qubit; halves borrow each other.
    a = free[0]
    m1 = (k + 1) // 2
    c1, c2 = ctrls[:m1], ctrls[m1:]
    first = _mcx_positive(c1, a, c2 + [t] + free[1:])
    second = _mcx_positive(c2 + [a], t, c1 + free[1:])
    return first + second + first + second


def decompose_mcx(
    controls: Sequence[tuple[int, int]], target: int, ancillas: Sequence[int]
) -> Circuit:
    """Linear-size Toffoli network for a multi-controlled X.

    Ancillas are borrowed: they may hold any state and are returned
    unchanged, so the whole circuit equals the multi-controlled X tensored
    with identity on the ancillas.
    """
    ctrl_q = [int(q) for q, _ in controls]
    every = ctrl_q + [int(target)] + [int(a) for a in ancillas]
    if len(set(every)) != len(every):
        raise CircuitError("controls, target and ancillas must be disjoint")
    n = max(every) + 1
    flips = [x(q) for q, pol in controls if pol == ON_0]
    body = _mcx_positive(ctrl_q, int(target), [int(a) for a in ancillas])
    return Circuit(n, flips + body + flips)


def is_elementary(g: Gate) -> bool:
    if g.kind == "X":
        return len(g.controls) <= 2
    return len(g.controls) <= 1


def lower_circuit(circuit: Circuit, ancillas: Sequence[int] = ()) -> Circuit:
    """Rewrite every multi-controlled gate into elementary gates.

    Elementary means Toffoli/CNOT/X, or any other kind with at most one
    control. Idle qubits of each gate are borrowed as dirty ancillas, so
    ``ancillas`` only matters when a gate touches every other qubit.
    """
    n = circuit.num_qubits
    out: list[Gate] = []

    def mcx(ctrls, t):
        busy = {q for q, _ in ctrls} | {t}
        free = [q for q in ancillas if q not in busy]
        free += [q for q in range(n) if q not in busy and q not in free]
        return decompose_mcx(ctrls, t, free).gates

    for g in circuit.gates:
        if is_elementary(g):
            out.append(g)
        elif g.kind == "X":
            out += mcx(g.controls, g.targets[0])
        elif g.kind == "Z":
            t = g.targets[0]
            out += [h(t), *mcx(g.controls, t), h(t)]
        elif g.kind == "RY":
            t = g.targets[0]
            half = g.angle / 2
            out += [ry(half, t), *mcx(g.controls, t), ry(-half, t), *mcx(g.controls, t)]
        elif g.kind == "SWAP":
            a, b = g.targets
            out += [x(a, ((b, ON_1),)), *mcx(g.controls + ((a, ON_1),), b), x(a, ((b, ON_1),))]
        else:
            raise CircuitError(f"no lowering for multi-controlled {g.kind}")
    return Circuit(n, out, dict(circuit.registers))


def mcx_matrix(n: int, controls: Sequence[tuple[int, int]], target: int) -> np.ndarray:
    """Brute-force permutation matrix of a multi-controlled X."""
    dim = 1 << n
    u = np.zeros((dim, dim))
    for i in range(dim):
        fire = all(((i >> q) & 1) == p for q, p in controls)
        u[i ^ (1 << target) if fire else i, i] = 1
    return u
