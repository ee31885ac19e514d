"""Dense two-phase revised simplex.

``solve_lp`` accepts problems of the form::

    min / max   c @ x
    subject to  A x <= b,   E x = d,   lower <= x <= upper

Variable bounds default to free. Equality rows are handled natively. The pivot
loop runs in a compiled kernel when one was built; set ``ROBUSTMDP_PURE_PYTHON=1``
to force the numpy fallback.
"""

import enum
import os
from dataclasses import dataclass, field

import numpy as np

from robustmdp.errors import NumericalFailure
from robustmdp.lp import _pykernel

if os.environ.get("ROBUSTMDP_PURE_PYTHON", "") == "1":
    _kernel = _pykernel
    KERNEL = "python"
else:
    try:
        from robustmdp.lp import _ckernel as _kernel

        KERNEL = "cython"
    except ImportError:  # extension not built
        _kernel = _pykernel
        KERNEL = "python"

__all__ = ["Sense", "Status", "LpProblem", "LpOutcome", "solve_lp", "KERNEL", "use_kernel",
           "cython_available"]

PIVOT_TOL = 1e-10
OPT_TOL = 1e-9
FEAS_TOL = 1e-9
REPORT_TOL = 1e-7
UNBOUNDED_RETRIES = 5


class Sense(enum.Enum):
    MINIMIZE = "min"
    MAXIMIZE = "max"


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(rows, n):
    if rows is None:
        return np.zeros((0, n))
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1 and rows.size == 0:
        return np.zeros((0, n))
    return rows.reshape(-1, n)


def _as_vector(v, m):
    if v is None:
        return np.zeros(m)
    return np.asarray(v, dtype=float).reshape(m)


def _as_bounds(bounds, n, default):
    if bounds is None:
        return np.full(n, default)
    out = np.array([default if b is None else b for b in bounds], dtype=float)
    return out.reshape(n)


@dataclass(frozen=True, eq=False)
class LpProblem:
    """A linear program. ``None`` bounds mean unbounded in that direction."""

    objective: np.ndarray
    sense: Sense = Sense.MINIMIZE
    ineq_rows: np.ndarray = None
    ineq_rhs: np.ndarray = None
    eq_rows: np.ndarray = None
    eq_rhs: np.ndarray = None
    lower_bounds: np.ndarray = None
    upper_bounds: np.ndarray = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        n = c.size
        A = _as_matrix(self.ineq_rows, n)
        E = _as_matrix(self.eq_rows, n)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "ineq_rows", A)
        object.__setattr__(self, "ineq_rhs", _as_vector(self.ineq_rhs, A.shape[0]))
        object.__setattr__(self, "eq_rows", E)
        object.__setattr__(self, "eq_rhs", _as_vector(self.eq_rhs, E.shape[0]))
        object.__setattr__(self, "lower_bounds", _as_bounds(self.lower_bounds, n, -np.inf))
        object.__setattr__(self, "upper_bounds", _as_bounds(self.upper_bounds, n, np.inf))
        for name in ("objective", "ineq_rows", "ineq_rhs", "eq_rows", "eq_rhs"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"LP {name} contains non-finite entries")
        if np.any(np.isnan(self.lower_bounds)) or np.any(np.isnan(self.upper_bounds)):
            raise ValueError("LP bounds contain NaN")

    @property
    def n_vars(self):
        return self.objective.size


@dataclass(frozen=True, eq=False)
class LpOutcome:
    status: Status
    solution: np.ndarray = None
    objective_value: float = None
    pivots: int = 0
    used_bland: bool = False

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL


@dataclass
class _Tableau:
    """Standard form state handed to the kernel."""

    A: np.ndarray
    aux_row: np.ndarray
    aux_sign: np.ndarray
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    x: np.ndarray
    state: np.ndarray
    basis: np.ndarray
    binv: np.ndarray
    artificial: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


def _standard_form(problem):
    c = problem.objective
    n = c.size
    A = np.asfortranarray(np.vstack([problem.ineq_rows, problem.eq_rows]))
    rhs = np.concatenate([problem.ineq_rhs, problem.eq_rhs])
    m_ineq = problem.ineq_rows.shape[0]
    m = A.shape[0]

    lo_s = problem.lower_bounds
    hi_s = problem.upper_bounds
    x_s = np.where(np.isfinite(lo_s), lo_s, np.where(np.isfinite(hi_s), hi_s, 0.0))
    st_s = np.full(n, _pykernel.AT_LOWER, dtype=np.int8)
    st_s[~np.isfinite(lo_s) & np.isfinite(hi_s)] = _pykernel.AT_UPPER
    st_s[~np.isfinite(lo_s) & ~np.isfinite(hi_s)] = _pykernel.FREE
    st_s[lo_s == hi_s] = _pykernel.FIXED

    resid = rhs - (A @ x_s if n else np.zeros(m))
    needs_art = np.ones(m, dtype=bool)
    needs_art[:m_ineq] = resid[:m_ineq] < 0.0
    art_rows = np.flatnonzero(needs_art)
    art_sign = np.where(resid[art_rows] >= 0.0, 1.0, -1.0)

    aux_row = np.concatenate([np.arange(m_ineq), art_rows]).astype(np.int64)
    aux_sign = np.concatenate([np.ones(m_ineq), art_sign])
    n_aux = aux_row.size
    lo = np.concatenate([lo_s, np.zeros(n_aux)])
    hi = np.concatenate([hi_s, np.full(n_aux, np.inf)])
    x = np.concatenate([x_s, np.zeros(n_aux)])
    state = np.concatenate([st_s, np.full(n_aux, _pykernel.AT_LOWER, dtype=np.int8)])

    basis = np.empty(m, dtype=np.int64)
    slack_basic = np.flatnonzero(~needs_art[:m_ineq])
    basis[slack_basic] = n + slack_basic
    art_index = n + m_ineq + np.arange(art_rows.size)
    basis[art_rows] = art_index
    state[basis] = _pykernel.BASIC
    x[n + slack_basic] = resid[slack_basic]
    x[art_index] = np.abs(resid[art_rows])
    binv = np.diag(aux_sign[basis - n]).astype(float)
    return _Tableau(A, aux_row, aux_sign, rhs, lo, hi, x, state, basis, binv, art_index)


def _run(tab, cost, problem_size):
    m, n = tab.A.shape
    bland_after = 2 * problem_size
    max_iter = 50 * (m + tab.x.size) + 1000
    refactor_every = 100 if m <= 500 else m // 5
    return _kernel.iterate(
        tab.A, tab.aux_row, tab.aux_sign, tab.rhs, cost, tab.lo, tab.hi, tab.x,
        tab.state, tab.basis, tab.binv, OPT_TOL, PIVOT_TOL, FEAS_TOL, max_iter, bland_after,
        refactor_every,
    )


def _refresh(tab):
    """Replace the running inverse by a fresh one and recompute the basic values."""
    if not tab.A.shape[0]:
        return
    fresh = _pykernel.refactor(tab.A, tab.aux_row, tab.aux_sign, tab.basis)
    if fresh is None:
        raise NumericalFailure("basis became numerically singular in phase 2")
    tab.binv[...] = fresh
    _pykernel.basic_values(tab.A, tab.aux_row, tab.aux_sign, tab.rhs, tab.x, tab.state,
                           tab.basis, tab.binv)


def _check_status(status, what):
    if status == _pykernel.ITERATION_LIMIT:
        raise NumericalFailure(f"simplex iteration limit reached in {what}")
    if status == _pykernel.SINGULAR:
        raise NumericalFailure(f"basis became numerically singular in {what}")


def _max_violation(problem, x):
    viol = 0.0
    if problem.ineq_rows.shape[0]:
        viol = max(viol, float(np.max(problem.ineq_rows @ x - problem.ineq_rhs)))
    if problem.eq_rows.shape[0]:
        viol = max(viol, float(np.max(np.abs(problem.eq_rows @ x - problem.eq_rhs))))
    viol = max(viol, float(np.max(problem.lower_bounds - x, initial=0.0)))
    viol = max(viol, float(np.max(x - problem.upper_bounds, initial=0.0)))
    return viol


def solve_lp(problem):
    """Solve ``problem`` and return an :class:`LpOutcome`.

    Raises :class:`NumericalFailure` if the basis cannot be kept nonsingular or
    the final point violates a constraint by more than ``1e-7``.
    """
    n = problem.n_vars
    if np.any(problem.lower_bounds > problem.upper_bounds):
        return LpOutcome(Status.INFEASIBLE)
    tab = _standard_form(problem)
    m = tab.A.shape[0]
    n_total = tab.x.size
    pivots = 0
    used_bland = False

    if tab.artificial.size:
        cost1 = np.zeros(n_total)
        cost1[tab.artificial] = 1.0
        status, it, bl = _run(tab, cost1, m + n)
        pivots += it
        used_bland |= bl
        _check_status(status, "phase 1")
        infeas = float(tab.x[tab.artificial].sum())
        if infeas > FEAS_TOL * (1.0 + float(np.abs(tab.rhs).max(initial=0.0))):
            return LpOutcome(Status.INFEASIBLE, pivots=pivots, used_bland=used_bland)
        tab.hi[tab.artificial] = 0.0
        nonbasic = tab.artificial[tab.state[tab.artificial] != _pykernel.BASIC]
        tab.state[nonbasic] = _pykernel.FIXED
        tab.x[nonbasic] = 0.0

    cost2 = np.zeros(n_total)
    cost2[:n] = problem.objective if problem.sense is Sense.MINIMIZE else -problem.objective
    status, it, bl = _run(tab, cost2, m + n)
    pivots += it
    used_bland |= bl
    # a ray found with a drifted inverse may be spurious: confirm it from a fresh
    # factorization, where the kernel must report it before any pivot
    for _ in range(UNBOUNDED_RETRIES):
        if status != _pykernel.UNBOUNDED or it == 0:
            break
        _refresh(tab)
        status, it, bl = _run(tab, cost2, m + n)
        pivots += it
        used_bland |= bl
    if status == _pykernel.UNBOUNDED:
        return LpOutcome(Status.UNBOUNDED, pivots=pivots, used_bland=used_bland)
    _check_status(status, "phase 2")

    if m:
        fresh = _pykernel.refactor(tab.A, tab.aux_row, tab.aux_sign, tab.basis)
        if fresh is None:
            raise NumericalFailure("optimal basis is numerically singular")
        _pykernel.basic_values(tab.A, tab.aux_row, tab.aux_sign, tab.rhs, tab.x,
                               tab.state, tab.basis, fresh)
    x = tab.x[:n].copy()
    viol = _max_violation(problem, x)
    if viol > REPORT_TOL:
        raise NumericalFailure(f"solution violates constraints by {viol:.3g}")
    return LpOutcome(Status.OPTIMAL, x, float(problem.objective @ x), pivots, used_bland)


def use_kernel(name):
    """Switch the active kernel (``"cython"`` or ``"python"``); returns the previous name."""
    global _kernel, KERNEL
    previous = KERNEL
    if name == "python":
        _kernel = _pykernel
    elif name == "cython":
        from robustmdp.lp import _ckernel

        _kernel = _ckernel
    else:
        raise ValueError(f"unknown kernel {name!r}")
    KERNEL = name
    return previous


def cython_available():
    """Whether the compiled kernel can be imported."""
    try:
        from robustmdp.lp import _ckernel  # noqa: F401
    except ImportError:
        return False
    return True
