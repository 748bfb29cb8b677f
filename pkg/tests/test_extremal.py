import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracsob import oracles
from fracsob.extremal import (
    ExtremalOptions,
    ExtremalSolution,
    InvalidInitError,
    el_residual_field,
    euler_lagrange_residual,
    log_rayleigh,
    log_rayleigh_grad,
    solve_extremal,
)
from fracsob.geometry import Interval, Rectangle, build_domain
from fracsob.nonlocal_ops import SeminormParams, gagliardo_seminorm_log, seminorm_power_log
from fracsob.weights import build_xi, log_geometric_mean, weight_from_spec

# lattice search with zoom refinement, 3 interior nodes, uniform weight, s=0.5, p=2
TINY_LAMBDA = 7.305443749276035
TINY_U = np.array([0.9794742992615422, 1.0423508102891859, 0.9794743035033026])


@pytest.fixture(scope="module")
def tiny():
    d = build_domain(Interval(0.0, 1.0), 3)
    w = weight_from_spec("uniform", d)
    prm = SeminormParams(0.5, 2.0)
    return d, w, prm, solve_extremal(d, w, prm)


def test_tiny_problem_matches_lattice_search(tiny):
    _, _, _, sol = tiny
    assert sol.converged
    assert math.exp(sol.log_lambda) == pytest.approx(TINY_LAMBDA, rel=1e-4)
    assert np.max(np.abs(sol.u_p - TINY_U)) <= 1e-3


def test_tiny_oracle_is_live():
    d = build_domain(Interval(0.0, 1.0), 3)
    w = weight_from_spec("uniform", d)
    lam, u = oracles.extremal_oracle_1d(3, 0.0, 1.0, 0.5, 2.0, w.values)
    assert lam == pytest.approx(TINY_LAMBDA, rel=1e-10)


def test_residual_at_oracle_minimizer(tiny):
    d, w, prm, _ = tiny
    log_lam = math.log(TINY_LAMBDA)
    assert np.max(el_residual_field(TINY_U, log_lam, d, w, prm)) <= 1e-4


def test_residual_large_off_constraint(tiny):
    d, w, prm, sol = tiny
    assert np.max(el_residual_field(2 * sol.u_p, sol.log_lambda, d, w, prm)) > 0.1


def test_solution_invariants(tiny):
    d, w, prm, sol = tiny
    assert abs(log_geometric_mean(sol.u_p, w)) <= 1e-10
    assert sol.log_lambda == pytest.approx(prm.p * gagliardo_seminorm_log(sol.u_p, d, prm), abs=1e-12)
    assert np.all(sol.u_p > 0)
    assert euler_lagrange_residual(sol, d, w, prm) == sol.el_residual
    assert sol.lambda_root == pytest.approx(math.sqrt(TINY_LAMBDA), rel=1e-4)


def test_translation_invariance(unit101):
    d, w = unit101
    prm = SeminormParams(0.5, 4.0)
    rng = np.random.default_rng(0)
    wl = rng.normal(size=d.n)
    assert log_rayleigh(wl + 3, d, w, prm) == pytest.approx(log_rayleigh(wl, d, w, prm), abs=1e-12)


def test_rayleigh_at_xi(unit101):
    d, w = unit101
    prm = SeminormParams(0.5, 6.0)
    xi = build_xi(w, d.delta, d).xi
    assert log_rayleigh(np.log(xi), d, w, prm) == pytest.approx(gagliardo_seminorm_log(xi, d, prm), abs=1e-10)


@pytest.mark.parametrize("dom", ["interval", "square"])
@pytest.mark.parametrize("p", [2.0, 7.0, 40.0])
def test_gradient_vs_finite_differences(dom, p):
    if dom == "interval":
        d = build_domain(Interval(0.0, 1.0), 40)
        w = weight_from_spec({"type": "power", "alpha": 1.0}, d)
    else:
        d = build_domain(Rectangle(0.0, 1.0, 0.0, 1.0), 6)
        w = weight_from_spec("uniform", d)
    prm = SeminormParams(0.5, p)
    rng = np.random.default_rng(int(p))
    wl = np.log(d.delta**0.5) + 0.1 * rng.normal(size=d.n)
    _, g = log_rayleigh_grad(wl, d, w, prm)
    step = 1e-5
    for i in rng.choice(d.n, size=10, replace=False):
        e = np.zeros(d.n)
        e[i] = step
        fd = (log_rayleigh(wl + e, d, w, prm) - log_rayleigh(wl - e, d, w, prm)) / (2 * step)
        assert fd == pytest.approx(g[i], rel=1e-5, abs=1e-9)


def test_scaled_init_gives_same_solution(unit101):
    d, w = unit101
    prm = SeminormParams(0.5, 8.0)
    xi = build_xi(w, d.delta, d).xi
    a = solve_extremal(d, w, prm, ExtremalOptions(init=xi))
    b = solve_extremal(d, w, prm, ExtremalOptions(init=3 * xi))
    assert a.log_lambda == pytest.approx(b.log_lambda, abs=1e-8)
    assert np.max(np.abs(a.u_p - b.u_p)) <= 1e-8


@pytest.mark.parametrize("p", [2.0, 16.0])
def test_symmetric_solution(unit101, p):
    d, w = unit101
    sol = solve_extremal(d, w, SeminormParams(0.5, p))
    assert np.max(np.abs(sol.u_p - sol.u_p[d.reflect_index()])) <= 1e-6


def test_square_symmetry_and_upper_bound(square8):
    d, w = square8
    prm = SeminormParams(0.5, 4.0)
    sol = solve_extremal(d, w, prm)
    assert sol.converged
    for axis in (0, 1):
        assert np.max(np.abs(sol.u_p - sol.u_p[d.reflect_index(axis)])) <= 1e-6
    xi = build_xi(w, d.delta, d).xi
    assert sol.log_lambda <= prm.p * gagliardo_seminorm_log(xi, d, prm)


def test_upper_bound_by_xi_and_grad_history(unit101):
    d, w = unit101
    xi = build_xi(w, d.delta, d).xi
    init = "xi"
    for p in (4.0, 8.0, 16.0, 32.0, 64.0):
        prm = SeminormParams(0.5, p)
        sol = solve_extremal(d, w, prm, ExtremalOptions(init=init))
        assert sol.converged and not sol.degenerate
        assert sol.log_lambda <= p * gagliardo_seminorm_log(xi, d, prm)
        tail = sol.grad_history[-11:]
        assert all(b < a for a, b in zip(tail, tail[1:]))
        init = sol.u_p


def test_minimality_against_random_fields(unit101):
    d, w = unit101
    prm = SeminormParams(0.5, 6.0)
    sol = solve_extremal(d, w, prm)
    rng = np.random.default_rng(11)
    for _ in range(50):
        v = np.exp(rng.normal(scale=0.3, size=d.n)) * d.delta ** rng.uniform(0.3, 1.0)
        rhs = seminorm_power_log(v, d, prm) - prm.p * log_geometric_mean(v, w)
        assert sol.log_lambda <= rhs + 1e-8


def test_invalid_init(unit9):
    d, w = unit9
    prm = SeminormParams(0.5, 2.0)
    bad = np.ones(d.n)
    bad[3] = 0.0
    for init in (bad, -np.ones(d.n), np.ones(d.n + 1), "nope"):
        with pytest.raises(InvalidInitError):
            solve_extremal(d, w, prm, ExtremalOptions(init=init))


def test_iteration_cap_flags_nonconvergence(unit101):
    d, w = unit101
    sol = solve_extremal(d, w, SeminormParams(0.5, 8.0), ExtremalOptions(max_iter=2))
    assert isinstance(sol, ExtremalSolution)
    assert not sol.converged
    assert sol.iterations == 2
    assert abs(log_geometric_mean(sol.u_p, w)) <= 1e-10


def test_degenerate_weight_is_flagged_not_fatal():
    d = build_domain(Interval(0.0, 1.0), 21)
    raw = (np.abs(d.interior[:, 0] - 0.5) < 0.2).astype(float)
    w = weight_from_spec({"type": "values", "values": list(raw)}, d)
    sol = solve_extremal(d, w, SeminormParams(0.5, 2.0), ExtremalOptions(init="delta_s", max_iter=3000))
    assert np.all(np.isfinite(sol.u_p))
    assert abs(log_geometric_mean(sol.u_p, w)) <= 1e-10


@settings(max_examples=15, deadline=None)
@given(arrays(np.float64, 9, elements=st.floats(-2, 2)), st.floats(-5, 5))
def test_rayleigh_translation_property(wl, c):
    d = build_domain(Interval(0.0, 1.0), 9)
    w = weight_from_spec({"type": "power", "alpha": 0.7}, d)
    prm = SeminormParams(0.4, 3.0)
    assert log_rayleigh(wl + c, d, w, prm) == pytest.approx(log_rayleigh(wl, d, w, prm), abs=1e-11)
