import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nandwalk.circuits import (
    COIN_CODES,
    IGNORE,
    THETA1,
    THETA2,
    OracleSpec,
    basis_index,
    build_decrement,
    build_diffusion,
    build_increment,
    build_oracle,
    build_reflection_u,
    build_reflection_uprime,
    build_rotate_left,
    build_rotate_right,
    build_walk_operator,
    build_walk_step,
    oracle_leaf_values,
    structured_gate_count,
    theta,
    valid_walk_pairs,
    walk_step_image,
)
from nandwalk.sim import ON_0, ON_1, CircuitError, StateVector, apply_circuit, circuit_unitary
from nandwalk.tree import TreeShape, enumerate_assignments

# coin-register indices inside the 2-qubit reflection circuits (c0 = bit 0, c1 = bit 1)
DOWN, LEFT, RIGHT = COIN_CODES["down"], COIN_CODES["left"], COIN_CODES["right"]


def _perm(n, f):
    u = np.zeros((1 << n, 1 << n))
    for v in range(1 << n):
        u[f(v), v] = 1
    return u


def test_constants():
    assert theta(4) == pytest.approx(3 * math.pi, abs=1e-12)
    assert THETA1 == pytest.approx(-1.23095941, abs=1e-8)
    assert THETA2 == pytest.approx(math.acos(-1 / 3) + math.pi, abs=1e-15)
    assert THETA2 == pytest.approx(5.05222589, abs=1e-8)


def test_increment_examples():
    u = circuit_unitary(build_increment(3))
    assert u[0b110, 0b101] == 1
    assert u[0b000, 0b111] == 1
    assert circuit_unitary(build_decrement(3))[0b101, 0b110] == 1


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_arithmetic_permutations(n):
    top = 1 << n
    rot_l = lambda v: ((v << 1) | (v >> (n - 1))) & (top - 1)
    rot_r = lambda v: (v >> 1) | ((v & 1) << (n - 1))
    assert np.array_equal(circuit_unitary(build_increment(n)).real, _perm(n, lambda v: (v + 1) % top))
    assert np.array_equal(circuit_unitary(build_decrement(n)).real, _perm(n, lambda v: (v - 1) % top))
    assert np.array_equal(circuit_unitary(build_rotate_left(n)).real, _perm(n, rot_l))
    assert np.array_equal(circuit_unitary(build_rotate_right(n)).real, _perm(n, rot_r))


def test_rotation_examples():
    left = circuit_unitary(build_rotate_left(3))
    right = circuit_unitary(build_rotate_right(3))
    assert left[0b110, 0b011] == 1
    assert left[0b001, 0b100] == 1
    assert right[0b011, 0b110] == 1
    assert right[0b110, 0b101] == 1


def _apply(circ, vertex, coin, n):
    s = StateVector.basis(circ.num_qubits, basis_index(vertex, coin, n))
    return apply_circuit(s, circ).amplitudes


def test_walk_step_examples():
    shape = TreeShape(2)
    n = shape.walker_qubits
    step = build_walk_step(shape)
    for (v, c), (w, d) in [((4, "down"), (2, "left")), ((2, "right"), (5, "down")), ((1, "down"), (0, "right"))]:
        out = _apply(step, v, c, n)
        assert abs(out[basis_index(w, d, n)]) == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("levels", [2, 3, 4])
def test_walk_step_realizes_shift_exactly(levels):
    shape = TreeShape(levels)
    n = shape.walker_qubits
    u = circuit_unitary(build_walk_step(shape))
    for v, c in valid_walk_pairs(n):
        w, d = walk_step_image(v, c, n)
        assert abs(abs(u[basis_index(w, d, n), basis_index(v, c, n)]) - 1) <= 1e-10
        # involution on the valid domain
        assert walk_step_image(w, d, n) == (v, c)
    # applying the step twice returns every valid basis state exactly
    u2 = u @ u
    for v, c in valid_walk_pairs(n):
        i = basis_index(v, c, n)
        assert u2[i, i] == 1


def test_walk_step_gate_count_is_affine():
    xs = [TreeShape(L).walker_qubits for L in range(2, 7)]
    ys = [structured_gate_count(build_walk_step(TreeShape(L))) for L in range(2, 7)]
    slope, icpt = np.polyfit(xs, ys, 1)
    assert np.max(np.abs(np.polyval([slope, icpt], xs) - ys)) < 1e-9
    assert ys == [4 * x + 3 for x in xs]


def test_reflection_u():
    u = circuit_unitary(build_reflection_u())
    idx = [DOWN, LEFT, RIGHT]
    block = u[np.ix_(idx, idx)]
    vec = np.ones(3) / math.sqrt(3)
    assert np.abs(block - (2 * np.outer(vec, vec) - np.eye(3))).max() <= 1e-10
    assert np.allclose(block[:, 0], [-1 / 3, 2 / 3, 2 / 3])
    assert np.allclose(block @ vec, vec)
    assert np.allclose(block @ block, np.eye(3))


@pytest.mark.parametrize("n_leaves", [2, 4, 16, 64])
def test_reflection_uprime(n_leaves):
    u = circuit_unitary(build_reflection_uprime(n_leaves))
    idx = [DOWN, LEFT]
    block = u[np.ix_(idx, idx)]
    vec = np.array([n_leaves ** -0.25, math.sqrt(1 - n_leaves ** -0.5)])
    assert np.abs(block - (2 * np.outer(vec, vec) - np.eye(2))).max() <= 1e-10
    assert np.allclose(block @ block, np.eye(2))


def test_reflection_uprime_n4_sends_down_to_left():
    u = circuit_unitary(build_reflection_uprime(4))
    assert u[LEFT, DOWN] == pytest.approx(1, abs=1e-12)
    with pytest.raises(CircuitError):
        build_reflection_uprime(1)


def test_oracle_examples():
    s2 = TreeShape(2)
    d = np.diag(circuit_unitary(build_oracle(OracleSpec.exact((1, 0)), s2)))
    assert np.allclose(d, [1, 1, 1, 1, -1, 1, 1, 1])
    assert np.allclose(circuit_unitary(build_oracle(OracleSpec.exact((0, 0)), s2)), np.eye(8))
    d3 = np.diag(circuit_unitary(build_oracle(OracleSpec.exact((1, 1, 0, 1)), TreeShape(3))))
    assert set(np.flatnonzero(d3 < 0)) == {8, 9, 11}


@st.composite
def mask_oracles(draw):
    levels = draw(st.integers(2, 4))
    shape = TreeShape(levels)
    n = shape.walker_qubits
    trit = st.sampled_from([IGNORE, ON_0, ON_1])
    masks = draw(st.lists(st.lists(trit, min_size=n - 2, max_size=n - 2), max_size=4))
    return shape, OracleSpec.from_masks([m + [IGNORE] for m in masks])


@settings(max_examples=50, deadline=None)
@given(mask_oracles())
def test_mask_oracle_is_diagonal_and_matches_leaf_values(case):
    shape, spec = case
    u = circuit_unitary(build_oracle(spec, shape))
    assert np.allclose(u, np.diag(np.diag(u)))
    d = np.diag(u).real
    assert set(np.round(d).astype(int)) <= {-1, 1}
    bits = oracle_leaf_values(spec, shape)
    assert [int(d[v] < 0) for v in shape.leaf_labels()] == list(bits)
    # never touches labels with the top bit clear
    assert np.all(d[: shape.first_leaf] == 1)


def test_oracle_spec_validation():
    shape = TreeShape(3)
    with pytest.raises(CircuitError):
        build_oracle(OracleSpec.exact((1, 0)), shape)
    with pytest.raises(CircuitError):
        build_oracle(OracleSpec.from_masks([[ON_1, IGNORE, ON_1]]), shape)
    with pytest.raises(CircuitError):
        OracleSpec()


def test_diffusion_examples():
    shape = TreeShape(2)
    n = shape.walker_qubits
    ru = circuit_unitary(build_reflection_u())
    rup = circuit_unitary(build_reflection_uprime(shape.num_leaves))
    diff = build_diffusion(shape, OracleSpec.exact((0, 0)))
    out = _apply(diff, 2, "down", n)
    for coin in ("down", "left", "right"):
        assert out[basis_index(2, coin, n)] == pytest.approx(ru[COIN_CODES[coin], DOWN], abs=1e-12)
    for leaves in enumerate_assignments(shape):
        out = _apply(build_diffusion(shape, OracleSpec.exact(leaves)), 1, "down", n)
        for coin in ("down", "left"):
            assert out[basis_index(1, coin, n)] == pytest.approx(rup[COIN_CODES[coin], DOWN], abs=1e-12)
    flip = build_diffusion(shape, OracleSpec.exact((1, 0)))
    for code in range(4):
        out = _apply(flip, 4, code, n)
        assert out[basis_index(4, code, n)] == pytest.approx(-1, abs=1e-12)
    # identity at the tail root
    for coin in ("down", "left", "right"):
        out = _apply(diff, 0, coin, n)
        assert out[basis_index(0, coin, n)] == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("levels", [2, 3])
def test_walk_operator_composition_and_unitarity(levels):
    shape = TreeShape(levels)
    for leaves in list(enumerate_assignments(shape))[:4]:
        spec = OracleSpec.exact(leaves)
        w = circuit_unitary(build_walk_operator(shape, spec))
        d = circuit_unitary(build_diffusion(shape, spec))
        s = circuit_unitary(build_walk_step(shape))
        assert np.abs(w - s @ d).max() <= 1e-10
        assert np.abs(w.conj().T @ w - np.eye(w.shape[0])).max() <= 1e-10
    if levels == 2:
        assert w.shape == (32, 32)


def test_walk_preserves_norm_and_never_populates_coin_01():
    shape = TreeShape(3)
    n = shape.walker_qubits
    op = build_walk_operator(shape, OracleSpec.exact((1, 0, 1, 1)))
    s = StateVector.basis(op.num_qubits, basis_index(0, "right", n))
    bad = [i for i in range(1 << op.num_qubits) if (i >> n) == 0b01]
    for _ in range(100):
        s = apply_circuit(s, op)
        assert abs(s.norm() - 1) < 1e-10
        assert np.abs(s.amplitudes[bad]).max() < 1e-12
