"""The add-1-or-2 counting game and its NAND game trees.

Players alternately add 1 or 2 to a shared counter; whoever lands exactly
on the target wins and overshooting is illegal. The player to move loses
under perfect play iff the remaining distance is a multiple of 3.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

from .circuits import OracleSpec
from .tree import TreeShape

AGENT = "agent"
OPPONENT = "opponent"
ACTIONS = (1, 2)


class GameError(ValueError):
    pass


@dataclass(frozen=True)
class GameState:
    counter: int
    player_to_move: str
    target: int = 10

    def __post_init__(self):
        if self.target < 1:
            raise GameError("target must be positive")
        if not 0 <= self.counter <= self.target:
            raise GameError(f"counter {self.counter} outside 0..{self.target}")
        if self.player_to_move not in (AGENT, OPPONENT):
            raise GameError(f"unknown player {self.player_to_move!r}")

    @property
    def remaining(self) -> int:
        return self.target - self.counter

    @property
    def terminal(self) -> bool:
        return self.counter == self.target

    @property
    def winner(self) -> str | None:
        """The player who made the last move, once the target is reached."""
        if not self.terminal:
            return None
        return other(self.player_to_move)

    def legal_actions(self) -> tuple[int, ...]:
        if self.terminal:
            return ()
        return tuple(a for a in ACTIONS if a <= self.remaining)

    def play(self, action: int) -> GameState:
        if action not in self.legal_actions():
            raise GameError(f"illegal action {action} at counter {self.counter}")
        return replace(self, counter=self.counter + action, player_to_move=other(self.player_to_move))


def other(player: str) -> str:
    return OPPONENT if player == AGENT else AGENT


def mover_wins(state: GameState) -> bool:
    """Perfect-play value for the player to move (closed form)."""
    return state.remaining % 3 != 0


def minimax_mover_wins(state: GameState) -> bool:
    """Same value by explicit search; used to check the closed form."""
    if state.terminal:
        return False
    return any(not minimax_mover_wins(state.play(a)) for a in state.legal_actions())


def perfect_actions(state: GameState) -> tuple[int, ...]:
    """Moves that keep a won position won; every legal move when already lost."""
    good = tuple(a for a in state.legal_actions() if not mover_wins(state.play(a)))
    return good or state.legal_actions()


def action_tree_shape(horizon: int) -> TreeShape:
    if horizon < 1:
        raise GameError("horizon must be at least 1")
    return TreeShape(horizon + 1)


def _padded(value_of_mover: int, depth: int) -> list[int]:
    # constant leaves that fold back to the required value over `depth` NAND levels
    bit = value_of_mover if depth % 2 == 0 else 1 - value_of_mover
    return [bit] * (1 << depth)


def _subtree(state: GameState, depth: int, cutoff: Callable[[GameState], bool]) -> list[int]:
    """Leaves of a depth-`depth` NAND tree whose value is the mover's result."""
    if state.terminal:
        return _padded(0, depth)
    if depth == 0:
        return [int(cutoff(state))]
    moves = state.legal_actions()
    if len(moves) == 1:
        moves = moves * 2
    out: list[int] = []
    for a in moves:
        out += _subtree(state.play(a), depth - 1, cutoff)
    return out


def action_tree_leaves(
    state: GameState,
    action: int,
    horizon: int,
    cutoff: Callable[[GameState], bool] = mover_wins,
) -> tuple[int, ...]:
    """Leaf bits for the tree deciding `action`; the root value is 1 iff the move wins.

    The root's two children are both the position after `action`, so the
    root computes NOT of the opponent's value there. Below that the tree
    follows legal moves (a lone move is duplicated), terminal positions are
    padded with constant leaves, and positions still open at the horizon
    take ``cutoff`` (the closed-form value by default).
    """
    if action not in state.legal_actions():
        raise GameError(f"illegal action {action} at counter {state.counter}")
    action_tree_shape(horizon)
    child = _subtree(state.play(action), horizon - 1, cutoff)
    return tuple(child + child)


def exact_game_oracle(state: GameState, action: int, horizon: int) -> OracleSpec:
    return OracleSpec.exact(action_tree_leaves(state, action, horizon))
