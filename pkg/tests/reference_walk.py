"""Independent walk reference: the coined walk written directly on tree arcs, no circuits."""

import math

import numpy as np
import scipy.linalg as sl

COINS = ("down", "left", "right")


def reference_walk(levels, leaves):
    """Walk operator S*D on the reachable arc states, and the tail-edge start vector."""
    n_leaves = 1 << (levels - 1)
    internal, frontier = [], [2]
    for _ in range(levels - 1):
        internal += frontier
        frontier = [c for v in frontier for c in (2 * v, 2 * v + 1)]
    states = [(0, "right"), (1, "down"), (1, "left")]
    states += [(v, c) for v in internal for c in COINS]
    states += [(v, "down") for v in frontier]
    idx = {s: i for i, s in enumerate(states)}
    dim = len(states)

    diffusion = np.zeros((dim, dim))
    diffusion[idx[(0, "right")], idx[(0, "right")]] = 1
    up = np.array([n_leaves ** -0.25, math.sqrt(1 - n_leaves ** -0.5)])
    block = [idx[(1, "down")], idx[(1, "left")]]
    diffusion[np.ix_(block, block)] = 2 * np.outer(up, up) - np.eye(2)
    u = np.ones(3) / math.sqrt(3)
    for v in internal:
        block = [idx[(v, c)] for c in COINS]
        diffusion[np.ix_(block, block)] = 2 * np.outer(u, u) - np.eye(3)
    for bit, v in zip(leaves, frontier):
        diffusion[idx[(v, "down")], idx[(v, "down")]] = -1 if bit else 1

    shift = np.zeros((dim, dim))
    for (v, c), i in idx.items():
        if c == "down":
            image = (v // 2, "left" if v % 2 == 0 else "right")
        else:
            image = (2 * v + (c == "right"), "down")
        shift[idx[image], i] = 1

    psi = np.zeros(dim)
    psi[idx[(0, "right")]] = 1
    return shift @ diffusion, psi


def pm_i_mass(levels, leaves):
    """Start-state weight on the eigenspaces at eigenvalues +i and -i."""
    walk, psi = reference_walk(levels, leaves)
    mass = 0.0
    for lam in (1j, -1j):
        q = sl.null_space(walk - lam * np.eye(len(psi)), rcond=1e-9)
        mass += float(np.linalg.norm(q.conj().T @ psi) ** 2)
    return mass
