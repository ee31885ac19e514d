"""Command-line interface: ``robustmdp <command> ...``.

Exit codes are 0 on success, 1 when a solver fails and 2 for bad input.
With ``--json`` results go to stdout (or ``--out``) as JSON and errors to
stderr as ``{"error": ..., "message": ...}``.
"""

import argparse
import json
import logging
import sys

import numpy as np

from robustmdp import bench, io
from robustmdp.bisim import (
    bisim_fixed_point,
    bisim_table_via_rpi,
    bisim_table_via_rvi,
)
from robustmdp.errors import (
    ActionMismatch,
    EmptyUncertainty,
    InvalidLayout,
    IterationCapExceeded,
    ModelError,
    NumericalFailure,
)
from robustmdp.frozen_lake import STANDARD_4X4, frozen_lake_mdp, layout_rows, resolve_layout
from robustmdp.games import game_solution
from robustmdp.model import DiscountedGame, Mdp, Policy
from robustmdp.robust_eval import evaluate_policy, robust_q_values
from robustmdp.solvers import (
    SolverConfig,
    robust_policy_iteration,
    robust_value_iteration,
    threshold_decision,
)
from robustmdp.uncertainty import validate_rmdp

# ValueError covers argument checks such as an out-of-range slip
INPUT_ERRORS = (ModelError, ActionMismatch, InvalidLayout, EmptyUncertainty, KeyError, OSError,
                ValueError)
SOLVER_ERRORS = (NumericalFailure, IterationCapExceeded)


class InputError(ModelError):
    """Bad command-line arguments detected after parsing."""


def disjoint_union(m1, m2):
    """One MDP holding both inputs, with states renamed ``1:s`` and ``2:s``.

    Actions are matched by name; the initial state is that of ``m1``.
    """
    if m1.discount != m2.discount:
        raise ModelError("both MDPs must use the same discount")
    actions = list(m1.actions) + [a for a in m2.actions if a not in m1.actions]
    n1, n2 = m1.n_states, m2.n_states
    S, A = n1 + n2, len(actions)
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    enabled = []
    for offset, m in ((0, m1), (n1, m2)):
        remap = [actions.index(a) for a in m.actions]
        for s, acts in enumerate(m.enabled):
            enabled.append([remap[a] for a in acts])
            for a in acts:
                P[offset + s, remap[a], offset:offset + m.n_states] = m.transition[s, a]
                R[offset + s, remap[a]] = m.reward[s, a]
    states = [f"1:{s}" for s in m1.states] + [f"2:{s}" for s in m2.states]
    return Mdp(states, actions, P, R, m1.initial_state, m1.discount, enabled)


def _emit(args, payload, text):
    out = io.dumps(payload) if args.json else text.rstrip("\n") + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _config(args, **extra):
    kw = {"eps": getattr(args, "eps", 1e-6)}
    if getattr(args, "seed", None) is not None:
        kw.update(initial_policy="seeded", seed=args.seed)
    kw.update(extra)
    return SolverConfig(**kw)


def _values_table(model, values):
    return {name: float(v) for name, v in zip(model.states, values)}


def _greedy_policy(rmdp, values):
    q = robust_q_values(rmdp, values)
    return Policy([max(acts, key=lambda a: (q[s, a], -a)) for s, acts in enumerate(rmdp.enabled)])


def cmd_solve(args):
    model = io.load_model(args.model)
    rmdp = io.to_rmdp(model)
    init = rmdp.states[rmdp.initial_state]
    if args.kappa is not None:
        if args.algo == "rvi":
            raise InputError("threshold mode needs an exact solver (--algo rpi or rpiot)")
        res = threshold_decision(rmdp, args.kappa,
                                 _config(args, use_optimality_test=args.algo == "rpiot"))
        payload = {"kappa": args.kappa, "decision": "yes" if res else "no"}
        if res:
            payload.update(value=res.value, policy=res.policy.named(rmdp))
            text = f"yes: value {res.value!r} at {init} >= {args.kappa!r}"
        else:
            payload.update(bound=res.bound)
            text = f"no: optimal value at {init} is {res.bound!r} < {args.kappa!r}"
        _emit(args, payload, text)
        return 0
    if args.algo == "rvi":
        vf = robust_value_iteration(rmdp, _config(args))
        policy = _greedy_policy(rmdp, vf.values)
        iterations = vf.certificate.iterations
    else:
        policy, vf, trace = robust_policy_iteration(
            rmdp, _config(args, use_optimality_test=args.algo == "rpiot"))
        iterations = trace.iterations
    named = policy.named(rmdp)
    payload = {"algorithm": args.algo, "initial": init, "value": vf[rmdp.initial_state],
               "values": _values_table(rmdp, vf.values), "policy": named,
               "iterations": iterations}
    if not vf.exact:
        payload["lower"] = _values_table(rmdp, vf.certificate.lower)
        payload["upper"] = _values_table(rmdp, vf.certificate.upper)
    lines = [f"value {vf[rmdp.initial_state]!r} at {init} ({args.algo}, {iterations} iterations)"]
    lines += [f"  {s}: {a}" for s, a in named.items()]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_eval(args):
    rmdp = io.to_rmdp(io.load_model(args.model))
    policy = io.parse_policy(io.load_json(args.policy), rmdp)
    vf = evaluate_policy(rmdp, policy)
    table = _values_table(rmdp, vf.values)
    _emit(args, {"values": table}, "\n".join(f"{s} {v!r}" for s, v in table.items()))
    return 0


def _split_pair(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise InputError("--pair expects two state names separated by a comma")
    return parts


def cmd_bisim(args):
    mdp = io.load_model(args.model)
    if not isinstance(mdp, Mdp):
        raise InputError("bisim needs a model of kind 'mdp'")
    pair = None
    if args.union:
        other = io.load_model(args.union)
        if not isinstance(other, Mdp):
            raise InputError("--union needs a model of kind 'mdp'")
        left, right = (_split_pair(args.pair) if args.pair
                       else (mdp.states[mdp.initial_state], other.states[other.initial_state]))
        mdp = disjoint_union(mdp, other)
        pair = (mdp.state_index(f"1:{left}"), mdp.state_index(f"2:{right}"))
    elif args.pair:
        pair = tuple(mdp.state_index(s) for s in _split_pair(args.pair))
    config = SolverConfig(eps=args.eps)
    if args.engine == "fixpoint":
        metric = bisim_fixed_point(mdp, eps=args.eps)
    elif args.engine == "rpi":
        metric, _ = bisim_table_via_rpi(mdp, config=config)
    else:
        metric, _ = bisim_table_via_rvi(mdp, config=config)
    payload = {"engine": args.engine, "iterations": metric.iterations}
    if pair is not None:
        names = (mdp.states[pair[0]], mdp.states[pair[1]])
        value = metric[pair]
        payload.update(pair=list(names), distance=value)
        text = f"d({names[0]}, {names[1]}) = {value!r}"
    else:
        payload["states"] = list(mdp.states)
        payload["table"] = metric.table.tolist()
        width = max(len(s) for s in mdp.states)
        text = "\n".join(f"{s:>{width}} " + " ".join(f"{v:.6f}" for v in row)
                         for s, row in zip(mdp.states, metric.table))
    _emit(args, payload, text)
    return 0


def cmd_convert(args):
    rmdp = io.to_rmdp(io.load_model(args.model))
    doc = io.render_model(rmdp)
    args.json = True
    _emit(args, doc, "")
    return 0


def cmd_game_solve(args):
    game = io.load_model(args.model)
    if not isinstance(game, DiscountedGame):
        raise InputError("game-solve needs a model of kind 'game'")
    policy, vf = game_solution(game, _config(args))
    named = policy.named(game)
    init = game.states[game.initial_state]
    payload = {"initial": init, "value": vf[game.initial_state],
               "values": _values_table(game, vf.values), "policy": named}
    lines = [f"value {vf[game.initial_state]!r} at {init}"]
    lines += [f"  {s}: {a}" for s, a in named.items()]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_validate(args):
    rmdp = io.to_rmdp(io.load_model(args.model))
    reports = validate_rmdp(rmdp)
    bad = {k: r for k, r in reports.items() if not r.ok}
    items = [{"state": rmdp.states[s], "action": rmdp.actions[a], "feasible": r.feasible,
              "bounded": r.bounded, "in_simplex": r.in_simplex} for (s, a), r in bad.items()]
    payload = {"ok": not bad, "checked": len(reports), "problems": items}
    if bad:
        text = "\n".join(f"{i['state']} {i['action']}: feasible={i['feasible']} "
                         f"bounded={i['bounded']} in_simplex={i['in_simplex']}" for i in items)
    else:
        text = f"ok: {len(reports)} polytopes validated"
    _emit(args, payload, text)
    return 0 if not bad else 2


def cmd_frozen_lake(args):
    if args.layout_seed is not None:
        layout = args.layout_seed
    elif args.map:
        layout = args.map.split(",")
    else:
        layout = STANDARD_4X4 if args.size == 4 else None
    mdp = frozen_lake_mdp(args.size, args.slip, layout, gamma=args.gamma)
    doc = io.render_model(mdp)
    doc["layout"] = list(layout_rows(resolve_layout(args.size, layout)))
    args.json = True
    _emit(args, doc, "")
    return 0


def cmd_bench(args):
    sizes = [int(s) for s in args.sizes.split(",")]
    seeds = list(range(args.seeds))
    algorithms = tuple(a.upper() for a in args.algorithms.split(","))
    if set(algorithms) - set(bench.ALGORITHMS):
        raise InputError(f"algorithms must be among {', '.join(bench.ALGORITHMS)}")

    def progress(run):
        logging.getLogger("robustmdp.bench").info(
            "%s size=%d seed=%s value=%s time=%s iterations=%s %s", run.algorithm, run.size,
            run.seed, run.value, run.time_s, run.iterations, run.status)

    runs = bench.run_benchmark(sizes, seeds, args.eps, args.timeout_s, algorithms,
                               slip=args.slip, layout_seed=args.layout_seed, progress=progress)
    timing = not args.no_timing
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(bench.report_csv(runs, timing))
    report = bench.report_json(runs, timing)
    lines = []
    for row in report["summary"]:
        if "value_mean" in row:
            t = f" time {row['time_mean']:.2f}s +/- {row['time_sd']:.2f}" if timing else ""
            lines.append(f"{row['size']}x{row['size']} {row['algorithm']:6s} value "
                         f"{row['value_mean']:.6f}{t} iterations {row['iterations_mean']:.1f} "
                         f"[{row['iterations_min']},{row['iterations_max']}]")
        else:
            lines.append(f"{row['size']}x{row['size']} {row['algorithm']:6s} all runs failed")
    _emit(args, report, "\n".join(lines))
    return 0 if not any(r.status.startswith("error") for r in runs) else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", help="write the result to this path instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="robustmdp",
                                     description="Exact solvers for polytopic robust MDPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="optimal robust value and policy")
    p.add_argument("model")
    p.add_argument("--algo", choices=("rpi", "rpiot", "rvi"), default="rpi")
    p.add_argument("--eps", type=float, default=1e-6, help="value iteration precision")
    p.add_argument("--seed", type=int, help="seeded random initial policy")
    p.add_argument("--kappa", type=float, help="decide whether the value reaches kappa")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", parents=[common], help="robust value of a fixed policy")
    p.add_argument("model")
    p.add_argument("--policy", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bisim", parents=[common], help="bisimulation metric")
    p.add_argument("model")
    p.add_argument("--engine", choices=("rpi", "rvi", "fixpoint"), default="rpi")
    p.add_argument("--pair", help="two state names, comma separated")
    p.add_argument("--union", metavar="MODEL",
                   help="compare against a second MDP through their disjoint union")
    p.add_argument("--eps", type=float, default=1e-6)
    p.set_defaults(func=cmd_bisim)

    p = sub.add_parser("convert", parents=[common], help="rewrite any model as rmdp-polytope")
    p.add_argument("model")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("game-solve", parents=[common], help="value of a discounted-sum game")
    p.add_argument("model")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_game_solve)

    p = sub.add_parser("validate", parents=[common], help="check every uncertainty polytope")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("frozen-lake", parents=[common], help="write a Frozen Lake MDP file")
    p.add_argument("--size", type=int, default=4)
    p.add_argument("--slip", type=float, default=1.0 / 3.0)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--layout-seed", type=int, help="random holes at density 0.2")
    p.add_argument("--map", help="rows of S/F/H/G cells, comma separated")
    p.set_defaults(func=cmd_frozen_lake)

    p = sub.add_parser("bench", help="benchmarks")
    bsub = p.add_subparsers(dest="suite", required=True)
    b = bsub.add_parser("frozen-lake", parents=[common],
                        help="bisimulation on Frozen Lake: BVI vs RPI vs RPIOT")
    b.add_argument("--sizes", default="4", help="comma separated map sides")
    b.add_argument("--seeds", type=int, default=10, help="number of RPI seeds")
    b.add_argument("--timeout-s", type=float, default=7200.0)
    b.add_argument("--eps", type=float, default=1e-6)
    b.add_argument("--slip", type=float, default=1.0 / 3.0)
    b.add_argument("--layout-seed", type=int, default=0)
    b.add_argument("--algorithms", default="BVI,RPI,RPIOT")
    b.add_argument("--csv", help="also write per-run rows as CSV")
    b.add_argument("--no-timing", action="store_true",
                   help="omit wall times so reports are reproducible byte for byte")
    b.set_defaults(func=cmd_bench)
    return parser


def _fail(args, code, exc):
    kind = type(exc).__name__
    if getattr(args, "json", False):
        sys.stderr.write(json.dumps({"error": kind, "message": str(exc)}) + "\n")
    else:
        sys.stderr.write(f"robustmdp: {kind}: {exc}\n")
    return code


def run_command(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except SOLVER_ERRORS as exc:
        return _fail(args, 1, exc)
    except INPUT_ERRORS as exc:
        return _fail(args, 2, exc)


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
