"""Neuroevolved agent: a network predicts oracle masks, NAND evaluation picks the move.

For each legal action the network emits a mask-form oracle over the leaves
of that action's game tree. The walk-based evaluator reads the tree value;
actions that evaluate to 1 are winning and one of them is played. A plain
genetic algorithm (k-best selection, windowed uniform crossover, Gaussian
mutation) trains the weights.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .circuits import IGNORE, OracleSpec
from .evaluator import EvalConfig, evaluate_formula
from .game import (
    ACTIONS,
    AGENT,
    OPPONENT,
    GameState,
    action_tree_shape,
    exact_game_oracle,
    perfect_actions,
)
from .sim import ON_0, ON_1

NUM_FEATURES = 3
# logit order per qubit; argmax takes the first maximum, so ties go to "ignore"
TRIT_ORDER = (IGNORE, ON_1, ON_0)
FULL_SCALE_HIDDEN = (80,) * 6
LOG_HEADER = "# nandwalk fitness log v1"

OracleFn = Callable[[GameState, int, int], OracleSpec]


@dataclass(frozen=True)
class NetworkShape:
    hidden: tuple[int, ...] = (16, 16)
    horizon: int = 2
    masks: int = 4

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden layer sizes must be positive")
        if self.masks < 1:
            raise ValueError("need at least one mask")
        action_tree_shape(self.horizon)

    @property
    def walker_qubits(self) -> int:
        return action_tree_shape(self.horizon).walker_qubits

    @property
    def output_size(self) -> int:
        return len(ACTIONS) * self.masks * self.walker_qubits * 3

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (NUM_FEATURES, *self.hidden, self.output_size)

    @property
    def num_weights(self) -> int:
        s = self.layer_sizes
        return sum((a + 1) * b for a, b in zip(s[:-1], s[1:]))


@dataclass
class AgentGenome:
    shape: NetworkShape
    weights: np.ndarray
    fitness: float | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.shape.num_weights,):
            raise ValueError(
                f"expected {self.shape.num_weights} weights, got {self.weights.shape}"
            )

    @classmethod
    def random(cls, shape: NetworkShape, rng: np.random.Generator) -> AgentGenome:
        parts = []
        s = shape.layer_sizes
        for a, b in zip(s[:-1], s[1:]):
            parts.append(rng.normal(0.0, 1.0 / math.sqrt(a), size=a * b))
            parts.append(np.zeros(b))
        return cls(shape, np.concatenate(parts))

    @classmethod
    def zeros(cls, shape: NetworkShape) -> AgentGenome:
        return cls(shape, np.zeros(shape.num_weights))

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        out, pos = [], 0
        s = self.shape.layer_sizes
        for a, b in zip(s[:-1], s[1:]):
            w = self.weights[pos : pos + a * b].reshape(a, b)
            pos += a * b
            out.append((w, self.weights[pos : pos + b]))
            pos += b
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "shape": asdict(self.shape),
                "weights": [float(w) for w in self.weights],
                "fitness": self.fitness,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> AgentGenome:
        d = json.loads(text)
        return cls(NetworkShape(**d["shape"]), np.array(d["weights"]), d.get("fitness"))


def features(state: GameState) -> np.ndarray:
    """(counter/K, remaining/K, agent-to-move), each mapped onto [-1, 1]."""
    k = state.target
    raw = np.array(
        [state.counter / k, state.remaining / k, 1.0 if state.player_to_move == AGENT else 0.0]
    )
    return 2.0 * raw - 1.0


def network_output(genome: AgentGenome, state: GameState) -> np.ndarray:
    a = features(state)
    layers = genome.layers()
    for w, b in layers[:-1]:
        a = np.tanh(a @ w + b)
    w, b = layers[-1]
    return a @ w + b


def decode_masks(logits: np.ndarray, shape: NetworkShape) -> dict[int, OracleSpec]:
    """Per-action mask oracles from the flat output via per-qubit argmax."""
    n = shape.walker_qubits
    trits = np.argmax(logits.reshape(len(ACTIONS), shape.masks, n, 3), axis=-1)
    out = {}
    for i, action in enumerate(ACTIONS):
        masks = []
        for m in trits[i]:
            # the top qubit is the leaf guard; the next one is never controlled
            mask = [TRIT_ORDER[t] for t in m[: n - 1]]
            mask[n - 2] = IGNORE
            masks.append(tuple(mask))
        out[action] = OracleSpec.from_masks(masks)
    return out


def forward(genome: AgentGenome, state: GameState) -> dict[int, OracleSpec]:
    specs = decode_masks(network_output(genome, state), genome.shape)
    return {a: specs[a] for a in state.legal_actions()}


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def action_values(
    genome: AgentGenome | None,
    state: GameState,
    horizon: int,
    config: EvalConfig | None = None,
    oracle: OracleFn | None = None,
) -> dict[int, int]:
    """NAND value of each legal action's tree; 1 means the move is judged winning."""
    shape = action_tree_shape(horizon)
    config = config or EvalConfig(exact=True)
    if oracle is None:
        if genome is None:
            raise ValueError("need a genome or an oracle")
        if genome.shape.horizon != horizon:
            raise ValueError("genome was built for a different horizon")
        specs = forward(genome, state)
    else:
        specs = {a: oracle(state, a, horizon) for a in state.legal_actions()}
    return {a: evaluate_formula(shape, spec, config) for a, spec in specs.items()}


def choose(values: dict[int, int], rng: np.random.Generator) -> int:
    winning = [a for a, v in values.items() if v == 1]
    pool = winning or list(values)
    return int(pool[rng.integers(len(pool))])


def act(
    genome: AgentGenome | None,
    state: GameState,
    horizon: int,
    config: EvalConfig | None = None,
    seed=None,
    oracle: OracleFn | None = None,
) -> int:
    """Seeded uniform pick among winning actions, or among all legal ones if none win."""
    if state.terminal:
        raise ValueError("no move from a finished game")
    return choose(action_values(genome, state, horizon, config, oracle), _rng(seed))


class AgentPolicy:
    """Caches action values per position; the random pick stays per call."""

    def __init__(self, genome=None, horizon=2, config=None, oracle=None):
        self.genome = genome
        self.horizon = genome.shape.horizon if genome is not None and oracle is None else horizon
        self.config = config or EvalConfig(exact=True)
        self.oracle = oracle
        self._values: dict[tuple[int, int], dict[int, int]] = {}

    def values(self, state: GameState) -> dict[int, int]:
        # the network sees the game from its own side
        me = GameState(state.counter, AGENT, state.target)
        key = (state.counter, state.target)
        if key not in self._values:
            self._values[key] = action_values(
                self.genome, me, self.horizon, self.config, self.oracle
            )
        return self._values[key]

    def __call__(self, state: GameState, rng: np.random.Generator) -> int:
        return choose(self.values(state), rng)


def random_policy(state: GameState, rng: np.random.Generator) -> int:
    legal = state.legal_actions()
    return int(legal[rng.integers(len(legal))])


def perfect_policy(state: GameState, rng: np.random.Generator) -> int:
    good = perfect_actions(state)
    return int(good[rng.integers(len(good))])


OPPONENTS = {"random": random_policy, "perfect": perfect_policy}


def _as_policy(player, horizon: int, config) -> Callable:
    if isinstance(player, str):
        if player not in OPPONENTS:
            raise ValueError(f"unknown opponent {player!r}")
        return OPPONENTS[player]
    if isinstance(player, AgentGenome):
        return AgentPolicy(player, config=config)
    return player


@dataclass
class MatchRecord:
    score: float
    winner: str
    moves: list[tuple[str, int, int]] = field(default_factory=list)

    def transcript(self) -> str:
        lines = [f"{who} {before} +{a} -> {before + a}" for who, before, a in self.moves]
        lines.append(f"winner {self.winner} score {self.score:.6f}")
        return "\n".join(lines)


def play_game(
    agent,
    opponent="random",
    gamma: float = 0.99,
    seed=None,
    target: int = 10,
    horizon: int = 2,
    config: EvalConfig | None = None,
) -> MatchRecord:
    """One full game; the starting player is a seeded coin flip."""
    rng = _rng(seed)
    me = _as_policy(agent, horizon, config)
    them = _as_policy(opponent, horizon, config)
    first = AGENT if rng.random() < 0.5 else OPPONENT
    state = GameState(0, first, target)
    moves = []
    while not state.terminal:
        policy = me if state.player_to_move == AGENT else them
        a = policy(state, rng)
        moves.append((state.player_to_move, state.counter, a))
        state = state.play(a)
    r = 1.0 if state.winner == AGENT else -1.0
    return MatchRecord(gamma ** len(moves) * r, state.winner, moves)


def play_match(agent, opponent="random", gamma: float = 0.99, seed=None, **kw) -> float:
    return play_game(agent, opponent, gamma, seed, **kw).score


def win_rate(agent, opponent="random", games: int = 1000, seed: int = 0, **kw) -> float:
    wins = 0
    for g in range(games):
        rec = play_game(agent, opponent, seed=_game_seed(seed, 0, g), **kw)
        wins += rec.winner == AGENT
    return wins / games


def _game_seed(seed: int, generation: int, game: int) -> int:
    return int(np.random.SeedSequence([seed, generation, game]).generate_state(1)[0])


@dataclass(frozen=True)
class EvolutionConfig:
    population: int = 64
    selection: int = 6
    mutation_prob: float = 1.0
    mutation_std: float = 0.1
    crossover_window: int = 600
    generations: int = 60
    games: int = 25
    gamma: float = 0.99
    seed: int = 0
    target: int = 10
    horizon: int = 2
    hidden: tuple[int, ...] = (16, 16)
    masks: int = 4
    opponent: str = "random"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.population < 2:
            raise ValueError("population must be at least 2")
        # k = P is allowed so the degenerate keep-everyone config stays expressible
        if not 1 <= self.selection <= self.population:
            raise ValueError("selection k must lie in [1, P]")
        if not 0.0 <= self.mutation_std <= 0.1:
            raise ValueError("mutation std must lie in [0, 0.1]")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation probability must lie in [0, 1]")
        if self.crossover_window < 1:
            raise ValueError("crossover window must be positive")
        if self.generations < 1 or self.games < 1:
            raise ValueError("need at least one generation and one game")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.opponent not in OPPONENTS:
            raise ValueError(f"unknown opponent {self.opponent!r}")

    @property
    def network(self) -> NetworkShape:
        return NetworkShape(self.hidden, self.horizon, self.masks)

    def window(self) -> int:
        return max(1, min(self.crossover_window, self.network.num_weights // 4))


def selection_k(portion: float, population: int) -> int:
    return max(1, min(population // 2, round(portion * population)))


def preset(name: str, **overrides) -> EvolutionConfig:
    """Named GA settings (mutation prob., selection portion, sigma, window) at desk scale."""
    rows = {
        "table1-row1": (1.0, 0.1, 0.1, 600),
        "table1-row2": (0.5, 0.2, 0.05, 300),
        "table1-row3": (0.1, 0.5, 0.01, 1200),
    }
    if name not in rows:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(rows)}")
    p, portion, sigma, window = rows[name]
    population = overrides.pop("population", 64)
    base = dict(
        population=population,
        selection=selection_k(portion, population),
        mutation_prob=p,
        mutation_std=sigma,
        crossover_window=window,
    )
    base.update(overrides)
    return EvolutionConfig(**base)


PRESETS = ("table1-row1", "table1-row2", "table1-row3")


def crossover(a: np.ndarray, b: np.ndarray, window: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform crossover over consecutive windows of genes."""
    starts = np.arange(0, a.size, window)
    pick = rng.random(starts.size) < 0.5
    child = a.copy()
    for s, from_b in zip(starts, pick):
        if from_b:
            child[s : s + window] = b[s : s + window]
    return child


def mutate(w: np.ndarray, prob: float, std: float, rng: np.random.Generator) -> np.ndarray:
    hit = rng.random(w.size) < prob
    return w + hit * rng.normal(0.0, std, w.size)


def evaluate_genome(genome: AgentGenome, config: EvolutionConfig, generation: int) -> float:
    policy = AgentPolicy(genome)
    total = 0.0
    for g in range(config.games):
        total += play_match(
            policy,
            config.opponent,
            config.gamma,
            seed=_game_seed(config.seed, generation, g),
            target=config.target,
        )
    return total / config.games


@dataclass
class EvolutionResult:
    best: AgentGenome
    log: list[tuple[int, float, float]]
    # per generation: every genome's fitness, and the indices kept as parents
    fitness: list[list[float]] = field(default_factory=list)
    survivors: list[list[int]] = field(default_factory=list)
    population: list[AgentGenome] = field(default_factory=list)

    def log_csv(self) -> str:
        buf = io.StringIO()
        buf.write(LOG_HEADER + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["generation", "best", "mean"])
        for gen, best, mean in self.log:
            w.writerow([gen, repr(best), repr(mean)])
        return buf.getvalue()


def evolve(config: EvolutionConfig, progress: Callable[[int, float, float], None] | None = None) -> EvolutionResult:
    """Seeded k-best GA; every genome in a generation plays the same game seeds."""
    rng = np.random.default_rng(config.seed)
    shape = config.network
    window = config.window()
    population = [AgentGenome.random(shape, rng) for _ in range(config.population)]
    log: list[tuple[int, float, float]] = []
    history: list[list[float]] = []
    kept: list[list[int]] = []
    for gen in range(config.generations):
        for g in population:
            g.fitness = evaluate_genome(g, config, gen)
        fits = np.array([g.fitness for g in population])
        log.append((gen, float(fits.max()), float(fits.mean())))
        history.append([float(f) for f in fits])
        if progress:
            progress(*log[-1])
        order = np.argsort(-fits, kind="stable")
        survivors = [population[i] for i in order[: config.selection]]
        kept.append([int(i) for i in order[: config.selection]])
        if gen == config.generations - 1:
            break
        children = []
        while len(survivors) + len(children) < config.population:
            i, j = rng.integers(len(survivors), size=2)
            w = crossover(survivors[i].weights, survivors[j].weights, window, rng)
            children.append(AgentGenome(shape, mutate(w, config.mutation_prob, config.mutation_std, rng)))
        population = [AgentGenome(shape, s.weights.copy(), s.fitness) for s in survivors] + children
    best = max(population, key=lambda g: g.fitness)
    return EvolutionResult(best, log, history, kept, population)


def parse_log(text: str) -> list[tuple[int, float, float]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    return [(int(r["generation"]), float(r["best"]), float(r["mean"])) for r in rows]


def exact_oracle_policy(horizon: int | None = None, config: EvalConfig | None = None) -> Callable:
    """Policy that feeds the exact game-tree oracle to the evaluator instead of the network.

    With ``horizon=None`` each position uses its remaining depth.
    """

    def oracle(state: GameState, action: int, h: int) -> OracleSpec:
        return exact_game_oracle(state, action, h)

    def policy(state: GameState, rng: np.random.Generator) -> int:
        h = horizon or max(1, state.remaining)
        me = GameState(state.counter, AGENT, state.target)
        return choose(action_values(None, me, h, config, oracle), rng)

    return policy

