"""Halfspace polytopes for the standard uncertainty-set families.

Every constructor stores equalities as native equality rows and leaves
nonnegativity implicit (see :class:`robustmdp.model.Polytope`), so the halfspace
count of a result is ``len(rows) + 2 * len(eq_rows)``.
"""

from dataclasses import dataclass

import numpy as np

from robustmdp.errors import EmptyUncertainty, ModelError, NumericalFailure
from robustmdp.lp import LpProblem, Sense, Status, solve_lp
from robustmdp.model import Polytope, Rmdp

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ImdpSpec:
    """Interval bounds on the successor distribution of one state-action pair."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ModelError("interval bounds must be vectors of equal length")
        if np.any(lo < 0.0) or np.any(hi > 1.0) or np.any(lo > hi):
            raise ModelError("interval bounds must satisfy 0 <= lower <= upper <= 1")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)


@dataclass(frozen=True, eq=False)
class BallSpec:
    """A norm ball of radius ``radius`` around the distribution ``center``."""

    center: np.ndarray
    radius: float
    norm: str = "l1"

    def __post_init__(self):
        if self.norm not in ("l1", "linf"):
            raise ModelError(f"unknown norm {self.norm!r}")
        if self.radius < 0:
            raise ModelError("radius must be nonnegative")
        object.__setattr__(self, "center", _distribution(self.center))

    def to_polytope(self):
        if self.norm == "l1":
            return l1_to_lifted_polytope(self.center, self.radius)
        return imdp_to_polytope(*linf_to_imdp(self.center, self.radius))


@dataclass(frozen=True, eq=False)
class ImdpModel:
    """An interval MDP: a skeleton plus one :class:`ImdpSpec` per enabled pair."""

    skeleton: object
    specs: dict

    def __eq__(self, other):
        if not isinstance(other, ImdpModel):
            return NotImplemented
        return self.skeleton == other.skeleton and self.specs.keys() == other.specs.keys() and all(
            np.array_equal(v.lower, other.specs[k].lower)
            and np.array_equal(v.upper, other.specs[k].upper)
            for k, v in self.specs.items()
        )

    __hash__ = None

    def to_rmdp(self):
        return Rmdp(self.skeleton, {k: imdp_to_polytope(v.lower, v.upper)
                                    for k, v in self.specs.items()})


@dataclass(frozen=True, eq=False)
class BallModel:
    """A norm-ball RMDP: a skeleton plus one :class:`BallSpec` per enabled pair."""

    skeleton: object
    specs: dict

    def __eq__(self, other):
        if not isinstance(other, BallModel):
            return NotImplemented
        return self.skeleton == other.skeleton and self.specs.keys() == other.specs.keys() and all(
            np.array_equal(v.center, other.specs[k].center)
            and v.radius == other.specs[k].radius and v.norm == other.specs[k].norm
            for k, v in self.specs.items()
        )

    __hash__ = None

    def to_rmdp(self):
        return Rmdp(self.skeleton, {k: v.to_polytope() for k, v in self.specs.items()})


def _distribution(p):
    p = np.asarray(p, dtype=float).reshape(-1)
    if np.any(p < 0.0) or abs(p.sum() - 1.0) > SIMPLEX_TOL:
        raise ModelError("center must be a probability vector")
    return p


def halfspace_count(poly):
    """Number of halfspaces when equalities are written as inequality pairs."""
    return poly.rows.shape[0] + 2 * poly.eq_rows.shape[0]


def imdp_to_polytope(lower, upper):
    """Interval bounds to ``{u >= 0 : sum(u) = 1, lower <= u <= upper}``."""
    spec = ImdpSpec(lower, upper)
    k = spec.lower.size
    if spec.lower.sum() > 1.0 + SIMPLEX_TOL or spec.upper.sum() < 1.0 - SIMPLEX_TOL:
        raise EmptyUncertainty(
            f"interval bounds admit no distribution (sum lower={spec.lower.sum():.6g}, "
            f"sum upper={spec.upper.sum():.6g})"
        )
    eye = np.eye(k)
    return Polytope(k, np.vstack([-eye, eye]), np.concatenate([-spec.lower, spec.upper]),
                    np.ones((1, k)), np.ones(1))


def linf_to_imdp(center, radius):
    """Clamp an L-infinity ball to interval bounds; returns ``(lower, upper)``."""
    p = _distribution(center)
    if radius < 0:
        raise ModelError("radius must be nonnegative")
    return np.maximum(p - radius, 0.0), np.minimum(p + radius, 1.0)


def l1_to_lifted_polytope(center, radius):
    """L1 ball around ``center`` intersected with the simplex, lifted to ``(u, t)``.

    The auxiliary coordinates ``t`` bound ``|u - center|`` componentwise, which
    keeps the row count linear in the dimension.
    """
    p = _distribution(center)
    if radius < 0:
        raise ModelError("radius must be nonnegative")
    k = p.size
    eye = np.eye(k)
    rows = np.vstack([
        np.concatenate([np.zeros(k), np.ones(k)])[None, :],
        np.hstack([eye, -eye]),
        np.hstack([-eye, -eye]),
    ])
    rhs = np.concatenate([[radius], p, -p])
    eq_rows = np.concatenate([np.ones(k), np.zeros(k)])[None, :]
    return Polytope(k, rows, rhs, eq_rows, np.ones(1), n_aux=k)


def coupling_polytope(mu, nu, restrict_support=False):
    """Couplings of ``mu`` and ``nu``: nonnegative ``k x k`` matrices, flattened row-major.

    Row sums equal ``mu``, column sums equal ``nu`` and the total mass is one.
    With ``restrict_support`` the coordinates outside ``supp(mu) x supp(nu)``,
    which every coupling sets to zero anyway, are dropped from the columns.
    """
    mu = _distribution(mu)
    nu = _distribution(nu)
    if mu.size != nu.size:
        raise ModelError("coupled distributions must have equal length")
    k = mu.size
    if not restrict_support:
        c_row = np.kron(np.eye(k), np.ones((1, k)))
        c_col = np.kron(np.ones((1, k)), np.eye(k))
        eq_rows = np.vstack([c_row, c_col, np.ones((1, k * k))])
        eq_rhs = np.concatenate([mu, nu, [1.0]])
        return Polytope(k * k, np.zeros((0, k * k)), np.zeros(0), eq_rows, eq_rhs)
    rs = np.flatnonzero(mu > 0.0)
    cs = np.flatnonzero(nu > 0.0)
    support = (rs[:, None] * k + cs[None, :]).ravel()
    nr, nc = rs.size, cs.size
    c_row = np.kron(np.eye(nr), np.ones((1, nc)))
    c_col = np.kron(np.ones((1, nr)), np.eye(nc))
    eq_rows = np.vstack([c_row, c_col, np.ones((1, nr * nc))])
    eq_rhs = np.concatenate([mu[rs], nu[cs], [1.0]])
    return Polytope(k * k, np.zeros((0, support.size)), np.zeros(0), eq_rows, eq_rhs,
                    support=tuple(support))


def simplex_over_support(support, dim):
    """All distributions over ``dim`` states that put mass only on ``support``."""
    support = sorted(set(int(s) for s in support))
    if not support:
        raise ModelError("support must be nonempty")
    n = len(support)
    return Polytope(dim, np.zeros((0, n)), np.zeros(0), np.ones((1, n)), np.ones(1),
                    support=tuple(support))


def polytope_lp(poly, real_cost, sense=Sense.MINIMIZE, fix_real=None, relax=0.0):
    """LP over the polytope columns with cost ``real_cost`` on real coordinates.

    ``fix_real`` pins the real coordinates (support entries) to given values;
    ``relax`` loosens every constraint by that amount.
    """
    sup = poly.support_indices
    cost = np.zeros(poly.n_cols)
    if real_cost is not None:
        cost[: sup.size] = np.asarray(real_cost, dtype=float)[sup]
    lo = np.zeros(poly.n_cols) - relax
    hi = np.full(poly.n_cols, np.inf)
    if fix_real is not None:
        lo[: sup.size] = fix_real[sup]
        hi[: sup.size] = fix_real[sup]
    ineq_rows, ineq_rhs = poly.rows, poly.rhs + relax
    eq_rows, eq_rhs = poly.eq_rows, poly.eq_rhs
    if relax > 0.0 and eq_rows.shape[0]:
        ineq_rows = np.vstack([ineq_rows, eq_rows, -eq_rows])
        ineq_rhs = np.concatenate([ineq_rhs, eq_rhs + relax, -eq_rhs + relax])
        eq_rows, eq_rhs = None, None
    return LpProblem(cost, sense, ineq_rows, ineq_rhs, eq_rows, eq_rhs, lo, hi)


def contains_point(poly, u, tol=SIMPLEX_TOL, use_lp=False):
    """Whether ``u`` (a point over the real coordinates) lies in the polytope's projection.

    Plain polytopes are checked row by row unless ``use_lp`` asks for an LP
    feasibility test; lifted ones always need the LP.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != poly.dim:
        raise ModelError("point dimension does not match the polytope")
    sup = poly.support_indices
    outside = np.ones(poly.dim, dtype=bool)
    outside[sup] = False
    if np.any(np.abs(u[outside]) > tol) or np.any(u < -tol):
        return False
    if not (poly.lifted or use_lp):
        x = u[sup]
        if poly.rows.shape[0] and np.any(poly.rows @ x > poly.rhs + tol):
            return False
        return not (poly.eq_rows.shape[0] and np.any(np.abs(poly.eq_rows @ x - poly.eq_rhs) > tol))
    out = solve_lp(polytope_lp(poly, None, fix_real=u, relax=tol))
    return out.status is Status.OPTIMAL


@dataclass(frozen=True)
class ValidationReport:
    feasible: bool
    bounded: bool
    in_simplex: bool

    @property
    def ok(self):
        return self.feasible and self.bounded and self.in_simplex


def validate_polytope(poly, tol=1e-7):
    """Check feasibility, boundedness and simplex containment of the real projection."""
    if solve_lp(polytope_lp(poly, None)).status is not Status.OPTIMAL:
        return ValidationReport(False, False, False)
    sup = poly.support_indices
    bounded = True
    in_simplex = True
    for i in sup:
        cost = np.zeros(poly.dim)
        cost[i] = 1.0
        for sense in (Sense.MINIMIZE, Sense.MAXIMIZE):
            out = solve_lp(polytope_lp(poly, cost, sense))
            if out.status is Status.UNBOUNDED:
                bounded = False
                in_simplex = False
            elif out.status is not Status.OPTIMAL:
                raise NumericalFailure("coordinate extremum LP failed on a feasible polytope")
            elif not -tol <= out.objective_value <= 1.0 + tol:
                in_simplex = False
    if bounded:
        ones = np.ones(poly.dim)
        for sense in (Sense.MINIMIZE, Sense.MAXIMIZE):
            total = solve_lp(polytope_lp(poly, ones, sense)).objective_value
            if abs(total - 1.0) > tol:
                in_simplex = False
    return ValidationReport(True, bounded, in_simplex)


def validate_rmdp(rmdp):
    """Validate every polytope of an RMDP; returns ``{(s, a): ValidationReport}``."""
    return {key: validate_polytope(p) for key, p in rmdp.uncertainty.items()}
