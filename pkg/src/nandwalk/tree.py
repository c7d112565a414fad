"""Balanced binary NAND trees with the two-vertex tail.

Labels: the tail root r'' is 0, the tail vertex r' is 1, the tree root is 2,
and the children of ``v`` are ``2v`` and ``2v + 1``. Leaf ``i`` of the
leaf bitstring sits at label ``2**L + i``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterator


class TreeError(ValueError):
    pass


class VertexClass(str, Enum):
    TAIL_ROOT = "tail_root"
    TAIL = "tail"
    INTERNAL = "internal"
    LEAF = "leaf"


@dataclass(frozen=True)
class TreeShape:
    levels: int

    def __post_init__(self):
        if self.levels < 2:
            raise TreeError(f"need at least 2 levels, got {self.levels}")

    @property
    def num_leaves(self) -> int:
        return 1 << (self.levels - 1)

    @property
    def walker_qubits(self) -> int:
        return self.levels + 1

    @property
    def num_labels(self) -> int:
        return 1 << self.walker_qubits

    @property
    def first_leaf(self) -> int:
        return 1 << self.levels

    def leaf_label(self, i: int) -> int:
        if not 0 <= i < self.num_leaves:
            raise TreeError(f"leaf index {i} out of range")
        return self.first_leaf + i

    def leaf_labels(self) -> range:
        return range(self.first_leaf, self.first_leaf + self.num_leaves)


def _check_label(v: int, shape: TreeShape | None):
    if v < 0 or (shape is not None and v >= shape.num_labels):
        raise TreeError(f"label {v} outside the tailed range")


def child_left(v: int, shape: TreeShape | None = None) -> int:
    _check_label(v, shape)
    c = 2 * v
    _check_label(c, shape)
    return c


def child_right(v: int, shape: TreeShape | None = None) -> int:
    _check_label(v, shape)
    c = 2 * v + 1
    _check_label(c, shape)
    return c


def parent(v: int, shape: TreeShape | None = None) -> int:
    _check_label(v, shape)
    if v == 0:
        raise TreeError("the tail root has no parent")
    return v // 2


def classify(v: int, shape: TreeShape) -> VertexClass:
    _check_label(v, shape)
    if v == 0:
        return VertexClass.TAIL_ROOT
    if v == 1:
        return VertexClass.TAIL
    if (v >> shape.levels) & 1:
        return VertexClass.LEAF
    return VertexClass.INTERNAL


def tree_labels(shape: TreeShape) -> list[int]:
    """Labels reachable from the tree root through the child maps."""
    out, frontier = [], [2]
    for _ in range(shape.levels):
        out += frontier
        frontier = [c for v in frontier for c in (2 * v, 2 * v + 1)]
    return out


def parse_leaves(text: str) -> tuple[int, ...]:
    if not text or set(text) - {"0", "1"}:
        raise TreeError(f"leaves must be a non-empty 0/1 string, got {text!r}")
    return tuple(int(c) for c in text)


@dataclass(frozen=True)
class TailedTree:
    shape: TreeShape
    leaves: tuple[int, ...]

    def __post_init__(self):
        leaves = self.leaves
        if isinstance(leaves, str):
            leaves = parse_leaves(leaves)
        leaves = tuple(int(b) for b in leaves)
        if any(b not in (0, 1) for b in leaves):
            raise TreeError("leaf values must be bits")
        if len(leaves) != self.shape.num_leaves:
            raise TreeError(
                f"{self.shape.levels} levels need {self.shape.num_leaves} leaves, got {len(leaves)}"
            )
        object.__setattr__(self, "leaves", leaves)

    @classmethod
    def from_leaves(cls, leaves) -> TailedTree:
        if isinstance(leaves, str):
            leaves = parse_leaves(leaves)
        n = len(leaves)
        if n < 2 or n & (n - 1):
            raise TreeError(f"leaf count must be a power of two >= 2, got {n}")
        return cls(TreeShape(n.bit_length()), tuple(leaves))

    @property
    def bitstring(self) -> str:
        return "".join(map(str, self.leaves))

    def to_json(self) -> str:
        return json.dumps({"levels": self.shape.levels, "leaves": self.bitstring})

    @classmethod
    def from_json(cls, text: str) -> TailedTree:
        d = json.loads(text)
        return cls(TreeShape(int(d["levels"])), parse_leaves(d["leaves"]))


def eval_nand_classical(tree: TailedTree) -> int:
    layer = list(tree.leaves)
    while len(layer) > 1:
        layer = [1 - (layer[i] & layer[i + 1]) for i in range(0, len(layer), 2)]
    return layer[0]


def eval_minmax_classical(tree: TailedTree, root_is_max: bool = True) -> int:
    """Alternating OR (max) / AND (min) fold; the root takes ``root_is_max``."""
    layer = list(tree.leaves)
    depth = tree.shape.levels - 1
    for d in range(depth, 0, -1):
        # the parents of this layer sit at depth d-1 below the root
        is_max = root_is_max if (d - 1) % 2 == 0 else not root_is_max
        op = max if is_max else min
        layer = [op(layer[i], layer[i + 1]) for i in range(0, len(layer), 2)]
    return layer[0]


MAX_ENUM_LEAVES = 20


def enumerate_assignments(shape: TreeShape | int) -> Iterator[tuple[int, ...]]:
    """All leaf bitstrings in lexicographic order (accepts a shape or a leaf count)."""
    n = shape.num_leaves if isinstance(shape, TreeShape) else int(shape)
    if n < 1:
        raise TreeError("need at least one leaf")
    if n > MAX_ENUM_LEAVES:
        raise TreeError(f"{n} leaves is too many to enumerate")
    return itertools.product((0, 1), repeat=n)
