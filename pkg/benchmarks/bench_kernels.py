"""Compare the compiled simplex kernel against the pure-Python fallback.

Times three workloads under each kernel:

* many small LPs (inner minimizations over interval polytopes),
* one robust policy evaluation LP on a random interval MDP,
* a few dozen Kantorovich LPs on a Frozen Lake map.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from robustmdp import lp
from robustmdp.bisim import Pseudometric, kantorovich_distance
from robustmdp.frozen_lake import frozen_lake_mdp
from robustmdp.model import Policy, Rmdp, Skeleton
from robustmdp.robust_eval import inner_min, robust_policy_evaluation
from robustmdp.uncertainty import imdp_to_polytope


def random_imdp(rng, S, A, width=0.1):
    P = rng.dirichlet(np.ones(S), size=(S, A))
    unc = {(s, a): imdp_to_polytope(np.clip(P[s, a] - width, 0, 1), np.clip(P[s, a] + width, 0, 1))
           for s in range(S) for a in range(A)}
    skel = Skeleton([f"s{i}" for i in range(S)], [f"a{i}" for i in range(A)],
                    rng.normal(size=(S, A)), 0, 0.9)
    return Rmdp(skel, unc)


def small_lps(rng):
    polys = [imdp_to_polytope(*(lambda p: (np.clip(p - 0.2, 0, 1), np.clip(p + 0.2, 0, 1)))(
        rng.dirichlet(np.ones(8)))) for _ in range(300)]
    vs = rng.normal(size=(300, 8))
    return lambda: [inner_min(p, v) for p, v in zip(polys, vs)]


def evaluation_lp(rng):
    rmdp = random_imdp(rng, 20, 3)
    policy = Policy([0] * 20)
    return lambda: robust_policy_evaluation(rmdp, policy)


def kantorovich(rng):
    mdp = frozen_lake_mdp()
    d = Pseudometric(rng.random((16, 16)))
    pairs = [(i, j) for i in range(16) for j in range(16) if i < j][:60]
    return lambda: [kantorovich_distance(d, mdp.transition[i, 1], mdp.transition[j, 1])
                    for i, j in pairs]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    kernels = ["python"] + (["cython"] if lp.cython_available() else [])
    print(f"{'workload':<16}" + "".join(f"{k:>12}" for k in kernels) + "    speedup")
    for name, make in (("small LPs", small_lps), ("evaluation LP", evaluation_lp),
                       ("Kantorovich", kantorovich)):
        times = []
        for kernel in kernels:
            prev = lp.use_kernel(kernel)
            try:
                job = make(np.random.default_rng(0))
                best = np.inf
                for _ in range(args.repeat):
                    t0 = time.perf_counter()
                    job()
                    best = min(best, time.perf_counter() - t0)
                times.append(best)
            finally:
                lp.use_kernel(prev)
        speedup = f"{times[0] / times[1]:9.1f}x" if len(times) == 2 else "        -"
        print(f"{name:<16}" + "".join(f"{t:11.3f}s" for t in times) + "  " + speedup)


if __name__ == "__main__":
    main()
