import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustmdp.errors import EmptyUncertainty, ModelError
from robustmdp.lp import Status, solve_lp
from robustmdp.model import Polytope
from robustmdp.uncertainty import (
    BallSpec,
    ImdpSpec,
    contains_point,
    coupling_polytope,
    halfspace_count,
    imdp_to_polytope,
    l1_to_lifted_polytope,
    linf_to_imdp,
    polytope_lp,
    simplex_over_support,
    validate_polytope,
)


def test_imdp_membership():
    poly = imdp_to_polytope([0.3, 0.3], [0.7, 0.7])
    assert contains_point(poly, [0.5, 0.5])
    assert not contains_point(poly, [0.2, 0.8])


def test_imdp_degenerate_intervals():
    p = np.array([0.2, 0.5, 0.3])
    poly = imdp_to_polytope(p, p)
    assert contains_point(poly, p)
    assert not contains_point(poly, [0.25, 0.45, 0.3])


def test_imdp_shape():
    poly = imdp_to_polytope(np.zeros(3), np.ones(3))
    assert halfspace_count(poly) == 8
    assert poly.n_cols == 3


def test_imdp_empty():
    with pytest.raises(EmptyUncertainty):
        imdp_to_polytope([0.6, 0.6], [0.7, 0.7])
    with pytest.raises(EmptyUncertainty):
        imdp_to_polytope([0.0, 0.0], [0.3, 0.3])


def test_imdp_spec_validation():
    with pytest.raises(ModelError):
        ImdpSpec([0.5], [0.4])
    with pytest.raises(ModelError):
        ImdpSpec([-0.1], [0.4])


def test_linf_clamping():
    lo, hi = linf_to_imdp([0.9, 0.1], 0.2)
    assert np.allclose(lo, [0.7, 0.0])
    assert np.allclose(hi, [1.0, 0.3])


def test_linf_extremes():
    p = np.array([0.3, 0.7])
    lo, hi = linf_to_imdp(p, 0.0)
    assert np.array_equal(lo, p) and np.array_equal(hi, p)
    lo, hi = linf_to_imdp(p, 1.0)
    assert np.array_equal(lo, [0, 0]) and np.array_equal(hi, [1, 1])


def test_l1_shape():
    poly = l1_to_lifted_polytope([0.2, 0.3, 0.5], 0.1)
    assert halfspace_count(poly) == 2 * 3 + 3
    assert poly.n_cols == 6 and poly.lifted_split == 3


def test_l1_zero_radius_is_a_point():
    p = np.array([0.2, 0.3, 0.5])
    poly = l1_to_lifted_polytope(p, 0.0)
    assert contains_point(poly, p)
    assert not contains_point(poly, [0.25, 0.25, 0.5])


def test_l1_radius_two_is_the_simplex():
    poly = l1_to_lifted_polytope([1.0, 0.0, 0.0], 2.0)
    for u in ([0, 1, 0], [0, 0, 1], [1 / 3] * 3):
        assert contains_point(poly, u)
    assert not contains_point(poly, [0.5, 0.6, 0.0])


def test_l1_example_points():
    poly = l1_to_lifted_polytope([0.5, 0.5], 0.4)
    assert contains_point(poly, [0.7, 0.3])
    assert not contains_point(poly, [0.8, 0.2])


def test_ball_spec():
    assert BallSpec([0.5, 0.5], 0.1, "linf").to_polytope().lifted is False
    assert BallSpec([0.5, 0.5], 0.1).to_polytope().lifted is True
    with pytest.raises(ModelError):
        BallSpec([0.5, 0.6], 0.1)
    with pytest.raises(ModelError):
        BallSpec([0.5, 0.5], 0.1, "l2")


def _vertex_of(poly, cost):
    out = solve_lp(polytope_lp(poly, cost))
    assert out.status is Status.OPTIMAL
    lam = np.zeros(poly.dim)
    lam[poly.support_indices] = out.solution
    return lam


def test_coupling_point_masses():
    lam = _vertex_of(coupling_polytope([1, 0], [1, 0]), np.zeros(4)).reshape(2, 2)
    assert np.allclose(lam, [[1, 0], [0, 0]])
    lam = _vertex_of(coupling_polytope([1, 0], [0, 1]), np.zeros(4)).reshape(2, 2)
    assert np.allclose(lam, [[0, 1], [0, 0]])


def test_coupling_row_count():
    poly = coupling_polytope([0.5, 0.5, 0.0], [0.2, 0.3, 0.5])
    assert halfspace_count(poly) == 4 * 3 + 2


@pytest.mark.parametrize("restrict", [False, True])
def test_coupling_vertices_have_the_right_marginals(restrict):
    rng = np.random.default_rng(8)
    for _ in range(50):
        k = int(rng.integers(2, 6))
        mu = rng.dirichlet(np.ones(k))
        nu = rng.dirichlet(np.ones(k))
        if rng.random() < 0.5:
            mu[rng.integers(k)] = 0.0
            mu /= mu.sum()
        poly = coupling_polytope(mu, nu, restrict_support=restrict)
        lam = _vertex_of(poly, rng.normal(size=k * k)).reshape(k, k)
        assert np.allclose(lam.sum(axis=1), mu, atol=1e-9)
        assert np.allclose(lam.sum(axis=0), nu, atol=1e-9)
        assert lam.sum() == pytest.approx(1.0, abs=1e-9)
        assert lam.min() >= -1e-12


def test_simplex_over_support():
    assert contains_point(simplex_over_support([1], 3), [0, 1, 0])
    poly = simplex_over_support([0, 1], 3)
    assert contains_point(poly, [0.5, 0.5, 0.0])
    assert not contains_point(poly, [0.4, 0.4, 0.2])
    verts = {tuple(_vertex_of(poly, c)) for c in ([1, 0, 0], [0, 1, 0])}
    assert verts == {(0.0, 1.0, 0.0), (1.0, 0.0, 0.0)}


def test_validate_good_polytopes():
    for poly in (imdp_to_polytope([0.1, 0.2], [0.8, 0.9]),
                 l1_to_lifted_polytope([0.3, 0.7], 0.2),
                 coupling_polytope([0.5, 0.5], [0.1, 0.9], restrict_support=True),
                 simplex_over_support([0, 2], 3)):
        assert validate_polytope(poly).ok


def test_validate_unbounded():
    # x >= 0 only (written as a vacuous row), no upper bound
    poly = Polytope(2, [[-1.0, 0.0]], [0.0])
    report = validate_polytope(poly)
    assert report.feasible and not report.bounded


def test_validate_infeasible():
    poly = Polytope(2, np.vstack([-np.eye(2), np.eye(2)]), [-0.6, -0.6, 0.7, 0.7],
                    np.ones((1, 2)), [1.0])
    assert not validate_polytope(poly).feasible


def test_validate_outside_simplex():
    poly = Polytope(2, np.eye(2), [0.5, 0.5])
    report = validate_polytope(poly)
    assert report.feasible and report.bounded and not report.in_simplex


def _near(rng, p, eps):
    q = rng.dirichlet(np.ones(p.size))
    u = p + rng.uniform(0.0, 1.5) * eps * (q - p) / max(np.abs(q - p).max(), 1e-12)
    u = np.clip(u, 0.0, None)
    return u / u.sum()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.floats(0.0, 1.0))
def test_linf_membership_equivalence(seed, k, eps):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(k))
    poly = imdp_to_polytope(*linf_to_imdp(p, eps))
    for _ in range(25):
        u = _near(rng, p, eps)
        dist = np.abs(u - p).max()
        if abs(dist - eps) < 1e-8:
            continue
        assert contains_point(poly, u, use_lp=True) == (dist <= eps)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.floats(0.0, 2.0))
def test_l1_membership_equivalence(seed, k, eps):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(k))
    poly = l1_to_lifted_polytope(p, eps)
    for _ in range(25):
        u = _near(rng, p, eps / 2)
        dist = np.abs(u - p).sum()
        if abs(dist - eps) < 1e-7:
            continue
        assert contains_point(poly, u) == (dist <= eps)
