import pytest
from hypothesis import given
from hypothesis import strategies as st

from nandwalk.tree import (
    TailedTree,
    TreeError,
    TreeShape,
    VertexClass,
    child_left,
    child_right,
    classify,
    enumerate_assignments,
    eval_minmax_classical,
    eval_nand_classical,
    parent,
    parse_leaves,
    tree_labels,
)


def test_label_arithmetic():
    assert child_left(2) == 4
    assert parent(5) == 2
    assert child_right(0) == 1
    with pytest.raises(TreeError):
        parent(0)
    with pytest.raises(TreeError):
        child_left(4, TreeShape(2))


@given(st.integers(1, 10_000))
def test_parent_inverts_children(v):
    assert parent(child_left(v)) == v
    assert parent(child_right(v)) == v


def test_classify_examples():
    assert classify(4, TreeShape(2)) == VertexClass.LEAF
    assert classify(1, TreeShape(2)) == VertexClass.TAIL
    assert classify(0, TreeShape(2)) == VertexClass.TAIL_ROOT
    assert classify(5, TreeShape(3)) == VertexClass.INTERNAL


@pytest.mark.parametrize("levels", [2, 3, 4, 5])
def test_classify_is_total_and_tree_labels_match(levels):
    shape = TreeShape(levels)
    for v in range(shape.num_labels):
        classify(v, shape)
    labels = tree_labels(shape)
    leaves = [v for v in labels if classify(v, shape) == VertexClass.LEAF]
    assert leaves == list(shape.leaf_labels())
    assert len(labels) == 2 * shape.num_leaves - 1


def test_nand_examples():
    assert eval_nand_classical(TailedTree(TreeShape(2), (1, 1))) == 0
    assert eval_nand_classical(TailedTree(TreeShape(2), (0, 0))) == 1
    assert eval_nand_classical(TailedTree(TreeShape(3), (1, 1, 0, 1))) == 1


def test_minmax_examples():
    t = TailedTree(TreeShape(2), (0, 1))
    assert eval_minmax_classical(t, root_is_max=True) == 1
    assert eval_minmax_classical(t, root_is_max=False) == 0


def _game_solve(leaves, maximizing):
    # brute-force two-player solve over a list of leaf payoffs
    if len(leaves) == 1:
        return leaves[0]
    half = len(leaves) // 2
    vals = [_game_solve(leaves[:half], not maximizing), _game_solve(leaves[half:], not maximizing)]
    return max(vals) if maximizing else min(vals)


@given(st.integers(2, 6), st.data(), st.booleans())
def test_minmax_matches_game_solve(levels, data, root_max):
    shape = TreeShape(levels)
    leaves = data.draw(st.lists(st.integers(0, 1), min_size=shape.num_leaves, max_size=shape.num_leaves))
    t = TailedTree(shape, tuple(leaves))
    assert eval_minmax_classical(t, root_max) == _game_solve(leaves, root_max)


def test_minmax_two_ply_example():
    t = TailedTree(TreeShape(3), (1, 0, 0, 0))
    assert eval_minmax_classical(t, True) == _game_solve([1, 0, 0, 0], True) == 0


@given(st.integers(2, 6), st.data())
def test_nand_tree_is_or_and_tree(levels, data):
    # NAND(a, b) = OR(not a, not b), and not NAND = AND: unrolled, the root is an OR
    # and the leaves come in negated exactly when the depth is odd
    shape = TreeShape(levels)
    leaves = data.draw(st.lists(st.integers(0, 1), min_size=shape.num_leaves, max_size=shape.num_leaves))
    depth = levels - 1
    flipped = tuple(1 - b for b in leaves) if depth % 2 else tuple(leaves)
    minmax = eval_minmax_classical(TailedTree(shape, flipped), root_is_max=True)
    assert eval_nand_classical(TailedTree(shape, tuple(leaves))) == minmax


def test_enumerate_assignments():
    assert set(enumerate_assignments(1)) == {(0,), (1,)}
    assert len(list(enumerate_assignments(2))) == 4
    sixteen = list(enumerate_assignments(TreeShape(3)))
    assert len(sixteen) == len(set(sixteen)) == 16
    with pytest.raises(TreeError):
        enumerate_assignments(21)


def test_tree_validation_and_json():
    with pytest.raises(TreeError):
        TailedTree(TreeShape(2), (1, 0, 1))
    with pytest.raises(TreeError):
        parse_leaves("10a1")
    with pytest.raises(TreeError):
        TreeShape(1)
    with pytest.raises(TreeError):
        TailedTree.from_leaves("101")
    t = TailedTree.from_leaves("1101")
    assert t.shape.levels == 3
    assert TailedTree.from_json(t.to_json()) == t
