"""Command-line entry point: ``nandwalk <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 evaluation or calibration failure.
The default seed comes from ``NANDWALK_SEED`` when ``--seed`` is absent.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import agent as ag
from .circuits import (
    BUILDERS,
    COIN_CODES,
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
)
from .evaluator import (
    ALL_CENTERS,
    CENTERS,
    INITIAL_STATES,
    DecisionRule,
    EvalConfig,
    EvaluationError,
    calibrate_decision_rule,
    default_rule,
    exact_eval,
    qpe_eval,
    spectral_eval,
)
from .game import GameError
from .sim import Circuit, CircuitError, StateVector, apply_circuit, lower_circuit
from .tree import TreeError, TreeShape, parse_leaves

SEED_ENV = "NANDWALK_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _shape(args) -> TreeShape:
    if args.levels is None:
        if args.leaves is None:
            raise UsageError("give --levels or --leaves")
        n = len(args.leaves)
        if n < 2 or n & (n - 1):
            raise UsageError(f"leaf count must be a power of two >= 2, got {n}")
        return TreeShape(n.bit_length())
    return TreeShape(args.levels)


def _oracle(args, shape: TreeShape) -> OracleSpec:
    if getattr(args, "masks", None):
        return OracleSpec.from_masks(json.loads(args.masks))
    if args.leaves is None:
        raise UsageError("give --leaves (or --masks)")
    leaves = parse_leaves(args.leaves)
    if len(leaves) != shape.num_leaves:
        raise UsageError(f"{shape.levels} levels need {shape.num_leaves} leaves, got {len(leaves)}")
    return OracleSpec.exact(leaves)


def _rule(args) -> DecisionRule | None:
    if getattr(args, "rule", None):
        return DecisionRule.from_json(Path(args.rule).read_text())
    return None


# --- subcommands ----------------------------------------------------------

def cmd_build(args) -> int:
    shape = _shape(args)
    n = shape.walker_qubits
    name = args.builder
    if name == "increment":
        c = build_increment(n)
    elif name == "decrement":
        c = build_decrement(n)
    elif name == "rotate-left":
        c = build_rotate_left(n)
    elif name == "rotate-right":
        c = build_rotate_right(n)
    elif name == "walk-step":
        c = build_walk_step(shape)
    elif name == "reflection-u":
        c = build_reflection_u()
    elif name == "reflection-uprime":
        c = build_reflection_uprime(shape.num_leaves)
    elif name == "oracle":
        c = build_oracle(_oracle(args, shape), shape)
    elif name == "diffusion":
        c = build_diffusion(shape, _oracle(args, shape))
    else:
        c = build_walk_operator(shape, _oracle(args, shape))
    if args.lower:
        extra = args.ancillas
        if extra:
            regs = dict(c.registers)
            if regs:
                regs["anc"] = (c.num_qubits, c.num_qubits + extra)
            c = Circuit(c.num_qubits + extra, list(c.gates), regs)
        c = lower_circuit(c, list(range(c.num_qubits - extra, c.num_qubits)))
    _emit(c.to_json(), args.out)
    return 0


def cmd_simulate(args) -> int:
    text = sys.stdin.read() if args.circuit == "-" else Path(args.circuit).read_text()
    circ = Circuit.from_json(text)
    if args.vertex is not None:
        if "W" not in circ.registers:
            raise UsageError("--vertex needs a circuit with a walker register")
        lo, hi = circ.registers["W"]
        index = basis_index(args.vertex, args.coin, hi - lo)
    else:
        index = args.index
    if not 0 <= index < 1 << circ.num_qubits:
        raise UsageError(f"basis index {index} out of range")
    final = apply_circuit(StateVector.basis(circ.num_qubits, index), circ)
    amps = final.amplitudes
    nz = np.flatnonzero(np.abs(amps) > args.cutoff)
    if args.format == "csv":
        lines = ["index,real,imag,probability"]
        lines += [f"{i},{amps[i].real!r},{amps[i].imag!r},{abs(amps[i]) ** 2!r}" for i in nz]
        _emit("\n".join(lines), args.out)
    else:
        payload = {
            "num_qubits": circ.num_qubits,
            "initial_index": index,
            "amplitudes": {str(int(i)): [float(amps[i].real), float(amps[i].imag)] for i in nz},
        }
        _emit(json.dumps(payload), args.out)
    return 0


def _eval_config(args) -> EvalConfig:
    return EvalConfig(
        phase_bits=args.phase_bits,
        shots=args.shots,
        seed=args.seed,
        rule=_rule(args),
        exact=args.exact,
        initial=INITIAL_STATES[args.initial],
    )


def cmd_eval(args) -> int:
    shape = _shape(args)
    spec = _oracle(args, shape)
    cfg = _eval_config(args)
    rule = cfg.rule or default_rule(shape.levels)
    if cfg.exact:
        report = exact_eval(shape, spec_bits(spec, shape), rule, cfg.initial)
    else:
        cfg.rule = rule
        report = qpe_eval(shape, spec_bits(spec, shape), cfg)
    if args.format == "json":
        _emit(json.dumps(report.to_dict()), args.out)
    else:
        _emit(str(report.value), args.out)
    return 0


def spec_bits(spec: OracleSpec, shape: TreeShape):
    return oracle_leaf_values(spec, shape)


def cmd_spectrum(args) -> int:
    shape = _shape(args)
    spec = _oracle(args, shape)
    rule = _rule(args) or default_rule(shape.levels)
    report = spectral_eval(shape, spec_bits(spec, shape), rule, INITIAL_STATES[args.initial])
    if args.format == "csv":
        lines = ["phase,overlap"] + [f"{p!r},{o!r}" for p, o in report.spectrum]
        _emit("\n".join(lines), args.out)
    else:
        _emit(json.dumps(report.to_dict()), args.out)
    return 0


def cmd_calibrate(args) -> int:
    shape = _shape(args)
    centers = ALL_CENTERS if args.all_centers else CENTERS
    rule = calibrate_decision_rule(shape, INITIAL_STATES[args.initial], centers=centers)
    _emit(rule.to_json(), args.out)
    return 0


def cmd_train(args) -> int:
    overrides = {"seed": args.seed}
    for key in ("generations", "population", "games", "target", "horizon"):
        v = getattr(args, key)
        if v is not None:
            overrides[key] = v
    if args.hidden:
        overrides["hidden"] = tuple(int(h) for h in args.hidden.split(","))
    config = ag.preset(args.preset, **overrides)
    progress = None
    if args.verbose:
        progress = lambda g, b, m: print(f"gen {g} best {b:.4f} mean {m:.4f}", file=sys.stderr)
    result = ag.evolve(config, progress)
    if args.out:
        Path(args.out).write_text(result.best.to_json() + "\n")
    if args.log:
        Path(args.log).write_text(result.log_csv())
    if not args.log:
        sys.stdout.write(result.log_csv())
    if args.win_games:
        rate = ag.win_rate(result.best, config.opponent, args.win_games, args.seed, target=config.target)
        print(f"win_rate {rate:.4f}", file=sys.stderr)
    return 0


def _player(name: str, horizon: int | None = None):
    if name in ag.OPPONENTS:
        return name
    if name == "exact":
        return ag.exact_oracle_policy(horizon)
    path = Path(name)
    if not path.exists():
        raise UsageError(f"player must be random, perfect, exact or a genome file, got {name!r}")
    return ag.AgentGenome.from_json(path.read_text())


def cmd_play(args) -> int:
    horizon = args.horizon or None
    me = _player(args.agent, horizon)
    them = _player(args.opponent, horizon)
    if args.games > 1:
        rate = ag.win_rate(me, them, args.games, args.seed, target=args.target)
        _emit(json.dumps({"games": args.games, "win_rate": rate}), args.out)
        return 0
    rec = ag.play_game(me, them, seed=args.seed, target=args.target)
    if args.format == "json":
        _emit(
            json.dumps(
                {
                    "winner": rec.winner,
                    "score": rec.score,
                    "moves": [{"player": p, "counter": c, "action": a} for p, c, a in rec.moves],
                }
            ),
            args.out,
        )
    else:
        _emit(rec.transcript(), args.out)
    return 0


# --- parser ---------------------------------------------------------------

def _common(p, tree=True, fmt=("json", "csv"), default_fmt="json"):
    if tree:
        p.add_argument("--levels", type=int, help="tree levels L (leaves = 2^(L-1))")
        p.add_argument("--leaves", help="leaf bitstring, e.g. 0110")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")
    p.add_argument("--format", choices=fmt, default=default_fmt)
    p.add_argument("--out", help="write the primary output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nandwalk", description="Quantum-walk NAND tree evaluation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="emit a circuit as JSON")
    p.add_argument("builder", choices=BUILDERS)
    _common(p, fmt=("json",))
    p.add_argument("--masks", help="oracle masks as JSON list of trit lists (-1 = ignore)")
    p.add_argument("--lower", action="store_true", help="decompose multi-controlled gates")
    p.add_argument("--ancillas", type=int, default=0, help="extra borrowed qubits for --lower")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("simulate", help="run a circuit JSON on a basis state")
    p.add_argument("circuit", help="circuit JSON file, or - for stdin")
    p.add_argument("--index", type=int, default=0, help="initial basis index")
    p.add_argument("--vertex", type=int, help="initial walker vertex (with --coin)")
    p.add_argument("--coin", choices=sorted(COIN_CODES), default="right")
    p.add_argument("--cutoff", type=float, default=1e-12)
    _common(p, tree=False)
    p.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("eval", cmd_eval, "evaluate a NAND formula with the walk"),
        ("spectrum", cmd_spectrum, "eigenphases and start-state overlaps of the walk operator"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p, fmt=("text", "json") if name == "eval" else ("json", "csv"),
                default_fmt="text" if name == "eval" else "json")
        p.add_argument("--masks", help="oracle masks as JSON list of trit lists (-1 = ignore)")
        p.add_argument("--rule", help="decision rule JSON from `calibrate`")
        p.add_argument("--initial", choices=sorted(INITIAL_STATES), default="tail-edge")
        if name == "eval":
            p.add_argument("--exact", action="store_true", help="spectral mode instead of sampled QPE")
            p.add_argument("--phase-bits", type=int, default=6)
            p.add_argument("--shots", type=int, default=1000)
        p.set_defaults(func=func)

    p = sub.add_parser("calibrate", help="fit the phase decision rule on all assignments")
    _common(p, fmt=("json",))
    p.add_argument("--initial", choices=sorted(INITIAL_STATES), default="tail-edge")
    p.add_argument("--all-centers", action="store_true", help="also try phases 0 and pi")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train", help="neuroevolve an agent on the counting game")
    p.add_argument("--preset", choices=ag.PRESETS, default="table1-row1")
    p.add_argument("--generations", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--games", type=int)
    p.add_argument("--target", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--hidden", help="comma-separated hidden layer sizes")
    p.add_argument("--log", help="fitness CSV path")
    p.add_argument("--win-games", type=int, default=0, help="report win rate over this many games")
    p.add_argument("--verbose", action="store_true")
    _common(p, tree=False, fmt=("csv",), default_fmt="csv")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("play", help="play the counting game and print the transcript")
    p.add_argument("--agent", default="exact", help="genome JSON, or random / perfect / exact")
    p.add_argument("--opponent", default="random", help="genome JSON, or random / perfect")
    p.add_argument("--target", type=int, default=10)
    p.add_argument("--games", type=int, default=1)
    p.add_argument(
        "--horizon", type=int, default=2,
        help="look-ahead of the exact agent; 0 searches to the end of the game",
    )
    _common(p, tree=False, fmt=("text", "json"), default_fmt="text")
    p.set_defaults(func=cmd_play)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except UsageError as e:
        print(f"nandwalk: error: {e}", file=sys.stderr)
        return 1
    except EvaluationError as e:
        print(f"nandwalk: evaluation failed: {e}", file=sys.stderr)
        return 2
    except (TreeError, CircuitError, GameError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"nandwalk: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
