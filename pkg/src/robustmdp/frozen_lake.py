"""Frozen Lake grid worlds.

The agent starts in the top-left cell and tries to reach the goal in the
bottom-right cell without falling into a hole. A move goes in the intended
direction with probability ``1 - slip`` and to each perpendicular direction
with probability ``slip / 2``; moves off the grid leave the agent in place.
The goal and holes are absorbing with reward 0. Elsewhere the reward of a
state-action pair is the expected reward of the cell it leads to: ``goal`` on
entering the goal, ``hole`` on entering a hole and ``step`` otherwise.
"""

from collections import deque

import numpy as np

from robustmdp.errors import InvalidLayout
from robustmdp.model import Mdp

ACTIONS = ("left", "down", "right", "up")
_MOVES = {0: (0, -1), 1: (1, 0), 2: (0, 1), 3: (-1, 0)}

STANDARD_4X4 = ("SFFF", "FHFH", "FFFH", "HFFG")
DEFAULT_REWARDS = (100.0, -1.0, -10.0)
DEFAULT_DENSITY = 0.2


def _from_rows(rows):
    rows = [str(r) for r in rows]
    n = len(rows)
    if n < 2 or any(len(r) != n for r in rows):
        raise InvalidLayout("layout must be a square grid of side at least 2")
    if set("".join(rows)) - set("SFHG"):
        raise InvalidLayout("layout cells must be one of S, F, H, G")
    if rows[0][0] != "S" or rows[-1][-1] != "G" or "".join(rows).count("S") != 1 \
            or "".join(rows).count("G") != 1:
        raise InvalidLayout("start must be the top-left cell and goal the bottom-right cell")
    return np.array([[c == "H" for c in r] for r in rows])


def _has_path(holes):
    n = holes.shape[0]
    seen = {(0, 0)}
    queue = deque([(0, 0)])
    while queue:
        r, c = queue.popleft()
        if (r, c) == (n - 1, n - 1):
            return True
        for dr, dc in _MOVES.values():
            nxt = (r + dr, c + dc)
            if 0 <= nxt[0] < n and 0 <= nxt[1] < n and nxt not in seen and not holes[nxt]:
                seen.add(nxt)
                queue.append(nxt)
    return False


def random_layout(n, seed, density=DEFAULT_DENSITY, max_tries=10_000):
    """Hole bitmap with each free cell a hole with probability ``density``.

    Resamples until the goal is reachable from the start.
    """
    if n < 2:
        raise InvalidLayout("grid side must be at least 2")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        holes = rng.random((n, n)) < density
        holes[0, 0] = holes[-1, -1] = False
        if _has_path(holes):
            return holes
    raise InvalidLayout(f"no solvable layout found at density {density}")


def layout_rows(holes):
    """Render a hole bitmap in the ``S/F/H/G`` text form."""
    n = holes.shape[0]
    rows = []
    for r in range(n):
        rows.append("".join("S" if (r, c) == (0, 0) else "G" if (r, c) == (n - 1, n - 1)
                            else "H" if holes[r, c] else "F" for c in range(n)))
    return tuple(rows)


def resolve_layout(n, layout):
    """Hole bitmap for ``layout``: None (no holes), an int seed, S/F/H/G rows, or a bitmap."""
    if layout is None:
        holes = np.zeros((n, n), dtype=bool)
    elif isinstance(layout, (int, np.integer)) and not isinstance(layout, bool):
        holes = random_layout(n, int(layout))
    elif len(layout) and isinstance(layout[0], str):
        holes = _from_rows(layout)
    else:
        holes = np.array(layout, dtype=bool)
        if holes.ndim != 2 or holes.shape[0] != holes.shape[1]:
            raise InvalidLayout("hole bitmap must be square")
    if holes.shape != (n, n):
        raise InvalidLayout(f"layout is {holes.shape[0]}x{holes.shape[1]}, expected {n}x{n}")
    if holes[0, 0] or holes[-1, -1]:
        raise InvalidLayout("start and goal cannot be holes")
    return holes


def frozen_lake_mdp(n=4, slip=1.0 / 3.0, layout=STANDARD_4X4, rewards=DEFAULT_REWARDS,
                    gamma=0.9):
    """Frozen Lake MDP on an ``n x n`` grid with states named ``r{row}c{col}``."""
    if n < 2:
        raise InvalidLayout("grid side must be at least 2")
    if not 0.0 <= slip <= 1.0:
        raise ValueError("slip must lie in [0, 1]")
    holes = resolve_layout(n, layout)
    goal_r, step_r, hole_r = (float(x) for x in rewards)
    S = n * n
    goal = S - 1
    P = np.zeros((S, 4, S))
    R = np.zeros((S, 4))

    def target(r, c, a):
        dr, dc = _MOVES[a]
        nr, nc = r + dr, c + dc
        return nr * n + nc if 0 <= nr < n and 0 <= nc < n else r * n + c

    for r in range(n):
        for c in range(n):
            s = r * n + c
            if s == goal or holes[r, c]:
                P[s, :, s] = 1.0
                continue
            for a in range(4):
                for b, p in ((a, 1.0 - slip), ((a + 1) % 4, slip / 2), ((a + 3) % 4, slip / 2)):
                    if p > 0.0:
                        P[s, a, target(r, c, b)] += p
                for t in np.flatnonzero(P[s, a]):
                    gain = goal_r if t == goal else hole_r if holes.flat[t] else step_r
                    R[s, a] += P[s, a, t] * gain
    states = [f"r{r}c{c}" for r in range(n) for c in range(n)]
    return Mdp(states, ACTIONS, P, R, 0, gamma)
