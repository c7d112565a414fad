"""Circuit builders for the coined walk on a tailed binary tree.

Register layout shared by every builder: the walker register W holds qubits
``0 .. n-1`` (qubit ``k`` = bit ``k`` of the vertex label, so the leaf
guard is qubit ``n-1``), and the coin register C holds ``c0 = n`` and
``c1 = n+1``. Coin symbols are ``|c1 c0>``: down = 00, left = 10,
right = 11.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .sim import ON_0, ON_1, Circuit, CircuitError, Gate, ry, swap, x, z
from .tree import TreeShape

COIN_CODES = {"down": 0b00, "left": 0b10, "right": 0b11}
COIN_NAMES = {v: k for k, v in COIN_CODES.items()}

IGNORE = -1
THETA1 = -math.acos(1 / 3)
THETA2 = math.acos(-1 / 3) + math.pi


def theta(num_leaves: int) -> float:
    r = math.sqrt(num_leaves)
    return 2 * (2 * math.pi - math.acos((2 - r) / r))


def basis_index(vertex: int, coin: str | int, walker_qubits: int) -> int:
    code = COIN_CODES[coin] if isinstance(coin, str) else int(coin)
    return vertex | (code << walker_qubits)


def split_index(index: int, walker_qubits: int) -> tuple[int, int]:
    return index & ((1 << walker_qubits) - 1), index >> walker_qubits


def walk_registers(n: int) -> dict[str, tuple[int, int]]:
    return {"W": (0, n), "C": (n, n + 2)}


# --- arithmetic on the walker register -----------------------------------

def build_increment(n: int) -> Circuit:
    """P: |v> -> |v+1 mod 2^n>, a cascade of multi-controlled X from the top bit down."""
    if n < 1:
        raise CircuitError("increment needs at least one qubit")
    gates = [x(k, [(j, ON_1) for j in range(k)]) for k in range(n - 1, -1, -1)]
    return Circuit(n, gates, {"W": (0, n)})


def build_decrement(n: int) -> Circuit:
    if n < 1:
        raise CircuitError("decrement needs at least one qubit")
    return build_increment(n).inverse()


def build_rotate_left(n: int) -> Circuit:
    """M: cyclic left shift, which doubles any label whose top bit is clear."""
    if n < 2:
        raise CircuitError("rotation needs at least two qubits")
    return Circuit(n, [swap(0, k) for k in range(1, n)], {"W": (0, n)})


def build_rotate_right(n: int) -> Circuit:
    if n < 2:
        raise CircuitError("rotation needs at least two qubits")
    return build_rotate_left(n).inverse()


def _embed(sub: Circuit, qubits: Sequence[int], controls, total: int) -> list[Gate]:
    mapping = dict(enumerate(qubits))
    return [g.remap(mapping).with_controls(controls) for g in sub.gates]


def build_walk_step(shape: TreeShape) -> Circuit:
    """Shift operator: |2k,down> <-> |k,left>, |2k+1,down> <-> |k,right>."""
    n = shape.walker_qubits
    w = list(range(n))
    c0, c1 = n, n + 1
    gates: list[Gate] = []
    gates += _embed(build_rotate_left(n), w, [(c1, ON_1)], n + 2)
    gates += _embed(build_increment(n), w, [(c1, ON_1), (c0, ON_1)], n + 2)
    gates.append(x(c1))
    gates.append(x(c0, [(0, ON_1), (c1, ON_1)]))
    gates += _embed(build_decrement(n), w, [(c1, ON_1), (c0, ON_1)], n + 2)
    gates += _embed(build_rotate_right(n), w, [(c1, ON_1)], n + 2)
    gates.append(x(c1))
    gates.append(x(c0, [(0, ON_1), (c1, ON_1)]))
    gates.append(x(c1))
    return Circuit(n + 2, gates, walk_registers(n))


def walk_step_image(vertex: int, coin: str, walker_qubits: int) -> tuple[int, str] | None:
    """Where the shift sends a basis pair, or None outside its defined domain."""
    top = 1 << walker_qubits
    if coin == "down":
        return vertex // 2, ("left" if vertex % 2 == 0 else "right")
    if coin in ("left", "right"):
        child = 2 * vertex + (coin == "right")
        return (child, "down") if child < top else None
    return None


def valid_walk_pairs(walker_qubits: int) -> list[tuple[int, str]]:
    return [
        (v, c)
        for v in range(1 << walker_qubits)
        for c in ("down", "left", "right")
        if walk_step_image(v, c, walker_qubits) is not None
    ]


# --- coin reflections (2-qubit circuits: qubit 0 = c0, qubit 1 = c1) -------

def build_reflection_u() -> Circuit:
    """2|u><u| - I on span{down, left, right}, |u> the uniform superposition."""
    c0, c1 = 0, 1
    gates = [
        x(c1),
        ry(-math.pi / 2, c0, [(c1, ON_0)]),
        ry(THETA2 - math.pi, c1),
        z(c1, [(c0, ON_0)]),
        ry(math.pi - THETA1, c1),
        ry(math.pi / 2, c0, [(c1, ON_0)]),
        x(c1),
    ]
    return Circuit(2, gates, {"C": (0, 2)})


def build_reflection_uprime(num_leaves: int) -> Circuit:
    """2|u'><u'| - I on span{down, left} with |u'> = N^-1/4 |down> + sqrt(1 - N^-1/2) |left>."""
    if num_leaves < 2:
        raise CircuitError("reflection needs N >= 2")
    c0, c1 = 0, 1
    gates = [
        z(c0, [(c1, ON_1)]),
        z(c1),
        z(c0),
        x(c0),
        # negated: the printed angle reflects about the wrong-sign state
        ry(-theta(num_leaves), c1, [(c0, ON_1)]),
        x(c0),
    ]
    return Circuit(2, gates, {"C": (0, 2)})


# --- oracle ---------------------------------------------------------------

@dataclass(frozen=True)
class OracleSpec:
    """Leaf oracle, either exact leaf bits or a list of control masks.

    A mask holds one trit per walker qubit below the top one, indexed by
    qubit: 1 = control on |1>, 0 = control on |0>, IGNORE = no control.
    Each mask is one Z on the top walker qubit, which doubles as the leaf
    guard.
    """

    exact_leaves: tuple[int, ...] | None = None
    masks: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if (self.exact_leaves is None) == (self.masks is None):
            raise CircuitError("oracle needs exactly one of exact_leaves / masks")
        if self.exact_leaves is not None:
            object.__setattr__(self, "exact_leaves", tuple(int(b) for b in self.exact_leaves))
        else:
            object.__setattr__(
                self, "masks", tuple(tuple(int(t) for t in m) for m in self.masks)
            )

    @classmethod
    def exact(cls, leaves) -> OracleSpec:
        if isinstance(leaves, str):
            leaves = [int(c) for c in leaves]
        return cls(exact_leaves=tuple(leaves))

    @classmethod
    def from_masks(cls, masks) -> OracleSpec:
        return cls(masks=tuple(tuple(m) for m in masks))

    def check(self, shape: TreeShape) -> None:
        n = shape.walker_qubits
        if self.exact_leaves is not None:
            if len(self.exact_leaves) != shape.num_leaves:
                raise CircuitError(
                    f"expected {shape.num_leaves} leaf bits, got {len(self.exact_leaves)}"
                )
            if any(b not in (0, 1) for b in self.exact_leaves):
                raise CircuitError("leaf values must be bits")
            return
        for m in self.masks:
            if len(m) != n - 1:
                raise CircuitError(f"mask {m} must have {n - 1} trits")
            if any(t not in (ON_0, ON_1, IGNORE) for t in m):
                raise CircuitError(f"mask {m} has an invalid trit")
            if m[n - 2] != IGNORE:
                raise CircuitError("masks may not control on the second most significant qubit")

    def to_dict(self) -> dict:
        if self.exact_leaves is not None:
            return {"exact_leaves": "".join(map(str, self.exact_leaves))}
        return {"masks": [list(m) for m in self.masks]}


def _mask_matches(mask: Sequence[int], label: int) -> bool:
    return all(t == IGNORE or ((label >> q) & 1) == t for q, t in enumerate(mask))


def oracle_leaf_values(spec: OracleSpec, shape: TreeShape) -> tuple[int, ...]:
    """The leaf bits whose phase the oracle flips."""
    spec.check(shape)
    if spec.exact_leaves is not None:
        return spec.exact_leaves
    return tuple(
        sum(_mask_matches(m, label) for m in spec.masks) % 2 for label in shape.leaf_labels()
    )


def build_oracle(spec: OracleSpec, shape: TreeShape) -> Circuit:
    spec.check(shape)
    n = shape.walker_qubits
    msb = n - 1
    gates = []
    if spec.exact_leaves is not None:
        for i, bit in enumerate(spec.exact_leaves):
            if bit:
                label = shape.leaf_label(i)
                gates.append(z(msb, [(q, (label >> q) & 1) for q in range(msb)]))
    else:
        for m in spec.masks:
            gates.append(z(msb, [(q, t) for q, t in enumerate(m) if t != IGNORE]))
    return Circuit(n, gates, {"W": (0, n)})


# --- diffusion and the full walk operator ---------------------------------

def build_diffusion(shape: TreeShape, spec: OracleSpec) -> Circuit:
    """Oracle phase on leaves, R|u> at internal vertices, R|u'> at r', identity at r''."""
    n = shape.walker_qubits
    msb = n - 1
    coin = [n, n + 1]
    ru = build_reflection_u()
    gates = list(build_oracle(spec, shape).gates)
    # R|u> wherever the top bit is clear, then undo it on labels 0 and 1
    gates += _embed(ru, coin, [(msb, ON_0)], n + 2)
    low_two = [(q, ON_0) for q in range(1, n)]
    gates += _embed(ru.inverse(), coin, low_two, n + 2)
    gates += _embed(
        build_reflection_uprime(shape.num_leaves), coin, low_two + [(0, ON_1)], n + 2
    )
    return Circuit(n + 2, gates, walk_registers(n))


def build_walk_operator(shape: TreeShape, spec: OracleSpec) -> Circuit:
    diffusion = build_diffusion(shape, spec)
    step = build_walk_step(shape)
    return Circuit(diffusion.num_qubits, diffusion.gates + step.gates, walk_registers(shape.walker_qubits))


def structured_gate_count(circuit: Circuit) -> int:
    return len(circuit.gates)


BUILDERS = (
    "increment",
    "decrement",
    "rotate-left",
    "rotate-right",
    "walk-step",
    "reflection-u",
    "reflection-uprime",
    "oracle",
    "diffusion",
    "walk-operator",
)
