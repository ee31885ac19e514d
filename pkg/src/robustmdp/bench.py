"""Frozen Lake bisimulation benchmark: bounded value iteration versus policy iteration.

For each map size the product RMDP of the Frozen Lake MDP is solved once by
robust bounded value iteration (``BVI``) and, for every seed, by robust policy
iteration without (``RPI``) and with (``RPIOT``) the suboptimality test, each
from a seeded random initial policy. Every run executes in a child process so a
timeout can stop it.
"""

import csv
import io
import multiprocessing as mp
import statistics
import time
from dataclasses import asdict, dataclass
from typing import Optional

from robustmdp.bisim import build_bisim_rmdp
from robustmdp.frozen_lake import STANDARD_4X4, frozen_lake_mdp
from robustmdp.solvers import SolverConfig, robust_policy_iteration, robust_value_iteration

CSV_COLUMNS = ("algorithm", "size", "seed", "value", "time_s", "iterations")
ALGORITHMS = ("BVI", "RPI", "RPIOT")


@dataclass
class BenchRun:
    algorithm: str
    size: int
    seed: Optional[int]
    value: Optional[float]
    time_s: Optional[float]
    iterations: Optional[int]
    status: str = "ok"


def bench_mdp(size, slip=1.0 / 3.0, layout_seed=0):
    """The Frozen Lake map used for ``size``: the standard map at 4, seeded holes otherwise."""
    layout = STANDARD_4X4 if size == 4 else layout_seed
    return frozen_lake_mdp(size, slip, layout)


def _solve(algorithm, size, seed, eps, pair, slip, layout_seed):
    mdp = bench_mdp(size, slip, layout_seed)
    rmdp = build_bisim_rmdp(mdp, *pair)
    start = time.perf_counter()
    if algorithm == "BVI":
        vf = robust_value_iteration(rmdp, SolverConfig(eps=eps))
        iterations = vf.certificate.iterations
    else:
        config = SolverConfig(eps=eps, initial_policy="seeded", seed=seed,
                              use_optimality_test=algorithm == "RPIOT")
        _, vf, trace = robust_policy_iteration(rmdp, config)
        iterations = trace.iterations
    elapsed = time.perf_counter() - start
    return vf[rmdp.initial_state], elapsed, iterations


def _child(queue, args):
    try:
        queue.put(("ok", _solve(*args)))
    except Exception as exc:  # reported back to the parent as a failed run
        queue.put(("error", f"{type(exc).__name__}: {exc}"))


def run_one(algorithm, size, seed, eps=1e-6, pair=None, slip=1.0 / 3.0, layout_seed=0,
            timeout_s=None):
    """Run one benchmark configuration in a child process; returns a :class:`BenchRun`."""
    pair = pair or (0, size * size - 1)
    args = (algorithm, size, seed, eps, pair, slip, layout_seed)
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    queue = ctx.Queue()
    proc = ctx.Process(target=_child, args=(queue, args), daemon=True)
    proc.start()
    try:
        status, payload = queue.get(timeout=timeout_s)
    except Exception:
        proc.terminate()
        proc.join()
        return BenchRun(algorithm, size, seed, None, None, None, "timeout")
    proc.join()
    if status != "ok":
        return BenchRun(algorithm, size, seed, None, None, None, f"error: {payload}")
    value, elapsed, iterations = payload
    return BenchRun(algorithm, size, seed, value, elapsed, iterations)


def run_benchmark(sizes, seeds, eps=1e-6, timeout_s=7200.0, algorithms=ALGORITHMS, pair=None,
                  slip=1.0 / 3.0, layout_seed=0, progress=None):
    """All runs for the given sizes and seed list, in a fixed order."""
    runs = []
    for size in sizes:
        for algorithm in algorithms:
            for seed in ([None] if algorithm == "BVI" else seeds):
                run = run_one(algorithm, size, seed, eps, pair, slip, layout_seed, timeout_s)
                runs.append(run)
                if progress:
                    progress(run)
    return runs


def summarize(runs):
    """Mean and standard deviation per (size, algorithm) over the successful runs."""
    groups = {}
    for run in runs:
        groups.setdefault((run.size, run.algorithm), []).append(run)
    out = []
    for (size, algorithm), group in groups.items():
        ok = [r for r in group if r.status == "ok"]
        row = {"algorithm": algorithm, "size": size, "runs": len(group),
               "failed": len(group) - len(ok)}
        if ok:
            values = [r.value for r in ok]
            times = [r.time_s for r in ok]
            iters = [r.iterations for r in ok]
            row.update(
                value_mean=statistics.fmean(values),
                time_mean=statistics.fmean(times),
                time_sd=statistics.stdev(times) if len(times) > 1 else 0.0,
                iterations_mean=statistics.fmean(iters),
                iterations_min=min(iters),
                iterations_max=max(iters),
            )
        out.append(row)
    return out


def _strip_timing(row):
    return {k: v for k, v in row.items() if not k.startswith("time")}


def report_json(runs, timing=True):
    """Report document; with ``timing=False`` it is identical across repeated runs."""
    rows = [asdict(r) for r in runs]
    summary = summarize(runs)
    if not timing:
        rows = [_strip_timing(r) for r in rows]
        summary = [_strip_timing(r) for r in summary]
    return {"format_version": "1", "kind": "bench-report", "runs": rows, "summary": summary}


def report_csv(runs, timing=True):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in runs:
        value = "" if r.value is None else repr(r.value)
        elapsed = "" if r.time_s is None or not timing else f"{r.time_s:.6f}"
        writer.writerow([r.algorithm, r.size, "" if r.seed is None else r.seed, value, elapsed,
                         "" if r.iterations is None else r.iterations])
    return buf.getvalue()
