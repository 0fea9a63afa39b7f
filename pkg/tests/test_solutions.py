import math

import numpy as np
import pytest

from finefp import jets as J
from finefp import solutions as S
from finefp.cli import default_grid
from finefp.group import SingularPointError

GRID = default_grid()


def max_rel(sol, pts=GRID):
    return max(S.residual(sol, p)[1] for p in pts)


def heat_points(n=20, seed=1):
    rng = np.random.default_rng(seed)
    return [(rng.uniform(0.0, 1.0), rng.uniform(-1.5, 1.5)) for _ in range(n)]


def invsq_points(n=20, seed=2):
    rng = np.random.default_rng(seed)
    return [(rng.uniform(0.0, 1.0), rng.uniform(0.3, 2.5)) for _ in range(n)]


def test_heat_polynomials_exact():
    assert S.heat_poly(2).value((0.3, 0.5)) == pytest.approx(0.25 + 0.6)
    assert S.heat_poly(3).value((0.3, 0.5)) == pytest.approx(0.125 + 6 * 0.3 * 0.5)
    for k in (1, 2):
        for p in heat_points():
            assert S.residual(S.heat_poly(k), p) == (0.0, 0.0)


@pytest.mark.parametrize("theta", [S.heat_kernel(1, 0), S.heat_kernel(0.5, 0.3), S.heat_poly(4), S.heat_expmode(0.7)])
def test_heat_family_residuals(theta):
    assert max(S.residual(theta, p)[1] for p in heat_points()) <= 1e-11


def test_kernel_domain():
    with pytest.raises(SingularPointError):
        S.heat_kernel(1.0, 0.0).value((-2.0, 0.0))


def test_stationary_powers():
    th = S.stationary_power(0.75, 1)
    assert th.value((0.2, 1.7)) == pytest.approx(1.7**1.5)
    for p in invsq_points():
        assert S.residual(th, p)[1] <= 1e-14
    assert S.stationary_power(0.0, 1).value((0.1, 0.9)) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        S.stationary_power(-1.0)


@pytest.mark.parametrize("mu_tilde", [0.75, -0.25, 2.0, 0.0])
def test_invsq_kernels(mu_tilde):
    for seed in (S.invsq_power(mu_tilde, 1, s0=1.0), S.invsq_power(mu_tilde, 1, poly=True)):
        assert max(S.residual(seed, p)[1] for p in invsq_points()) <= 1e-10


def test_darboux():
    zero = S.darboux_from(S.stationary_power(-0.25, 1))
    for p in invsq_points():
        assert abs(zero.value(p)) <= 1e-15
    w = S.darboux_from(S.invsq_power(-0.25, 1, s0=1.0))
    assert w.mu_tilde == 0.75
    assert max(S.residual(w, p)[1] for p in invsq_points()) <= 1e-10
    with pytest.raises(ValueError):
        S.darboux_from(S.stationary_power(0.75))


def test_residual_examples():
    const = S.SolutionExpr("c", lambda t, x, y: 2.5 + 0.0 * x)
    assert S.residual(const, (0.1, 0.7, 0.2)) == (0.0, 0.0)
    lin = S.SolutionExpr("x", lambda t, x, y: x)
    assert S.residual(lin, (0.1, 0.7, 0.2)) == (0.0, 0.0)
    wit = S.SolutionExpr("y", lambda t, x, y: y)
    raw, rel = S.residual(wit, (0.1, 1.3, 0.2))
    assert raw == pytest.approx(1.3) and rel == 1.0


def test_degenerate_scale_uses_value():
    # u = x: terms vanish exactly, roundoff-free; make sure tiny roundoff does not read as 100%
    u = S.SolutionExpr("xlog", lambda t, x, y: x * J.exp(0.0 * t))
    assert S.residual(u, (0.3, -0.9, 0.4))[1] <= 1e-12


def test_linearity():
    f = S.sol_heat2(S.heat_kernel(1, 0))
    g = S.sol_heat2(S.heat_poly(2))
    h = f * 2.0 + g * (-3.0)
    for p in GRID[:10]:
        raw = S.residual(h, p)[0]
        assert raw == pytest.approx(2 * S.residual(f, p)[0] - 3 * S.residual(g, p)[0], abs=1e-12)


def test_sol_heat1():
    u = S.sol_heat1(S.heat_poly(1))
    t, x, y = 0.4, -0.8, 0.3
    assert u.value((t, x, y)) == pytest.approx(math.exp(-3 * t / 16) * abs(x) ** 0.25 * 2 * math.sqrt(abs(x)))
    assert max_rel(u) <= 1e-10
    assert max_rel(S.sol_heat1(S.heat_const(1.0))) <= 1e-10
    pos = S.sol_heat1(S.heat_kernel(1, 0), eps=1)
    assert max_rel(pos, [p for p in GRID if p[1] > 0]) <= 1e-9
    with pytest.raises(SingularPointError):
        pos.value((0.1, -0.5, 0.0))


def test_sol_heat2():
    u = S.sol_heat2(S.heat_const(1.0))
    assert u.value((0.4, 2.0, 0.1)) == pytest.approx(math.exp(-0.1) * math.sqrt(2.0))
    for theta in (S.heat_const(1.0), S.heat_expmode(1.0), S.heat_poly(2), S.heat_kernel(1, 0)):
        assert max_rel(S.sol_heat2(theta)) <= 1e-9


@pytest.mark.parametrize("mu", [0.0, -3 / 16, 0.5])
def test_sol_invsq(mu):
    mt = 4 * mu + 0.75
    for seed in (S.invsq_power(mt, 1, s0=1.0), S.invsq_power(mt, 1, poly=True)):
        assert max_rel(S.sol_invsq(mu, seed)) <= 1e-9


def test_sol_invsq_examples():
    u = S.sol_invsq(0.0, S.stationary_power(0.75, 1))
    x = -0.9
    assert u.value((0.2, x, 0.5)) == pytest.approx(abs(x) ** 0.25 * (2 * math.sqrt(abs(x))) ** 1.5)
    assert max_rel(u) <= 1e-10
    heat = S.sol_invsq(-3 / 16, S.as_invsq(S.heat_kernel(1, 0)))
    ref = S.sol_heat1(S.heat_kernel(1, 0))
    for p in GRID[:8]:
        assert heat.value(p) == pytest.approx(ref.value(p), rel=1e-14)
    with pytest.raises(ValueError):
        S.sol_invsq(0.5, S.stationary_power(0.75))


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("theta", [S.heat_kernel(1, 0), S.heat_poly(3)])
def test_gen_solution1(n, theta):
    u = S.gen_solution1(n, theta)
    assert max_rel(u) <= 1e-9
    # the y-derivative of order n vanishes and the one of order n - 1 does not
    for p in GRID[::6]:
        j = u.jet(p, n + 1)
        assert abs(j.derivative((0, 0, n))) <= 1e-10 * max(1.0, abs(j.value))
    j = u.jet(GRID[0], n + 1)
    assert abs(j.derivative((0, 0, n - 1))) > 1e-6


def test_gen_solution1_n1_is_sol_heat2():
    a, b = S.gen_solution1(1, S.heat_kernel(1, 0)), S.sol_heat2(S.heat_kernel(1, 0))
    for p in GRID:
        assert a.value(p) == b.value(p)


def test_hn_tuple():
    one = S.hn_tuple(1, S.heat_poly(2))
    assert len(one) == 1 and one[0].value((0.3, 0.4)) == S.heat_poly(2).value((0.3, 0.4))
    for eps in (1, -1):
        tup = S.hn_tuple(2, S.heat_poly(2), eps)
        for p in heat_points():
            assert all(r[1] <= 1e-10 for r in S.hn_residuals(tup, p, eps))
    zero = S.hn_tuple(3, S.heat_const(0.0))
    assert all(w.value((0.2, 0.1)) == 0.0 for w in zero)
    with pytest.raises(ValueError):
        S.hn_tuple(0, S.heat_poly(1))


def test_gen_solution2():
    for v in (S.invsq_power(-0.25, 1, s0=1.0), S.invsq_power(-0.25, 1, poly=True), S.stationary_power(-0.25, -1)):
        assert max_rel(S.gen_solution2(v)) <= 1e-9
    zero = S.gen_solution2(S.InvSqSolution("0", lambda z1, z2: 0.0 * z1 + 0.0 * z2, -0.25))
    assert all(zero.value(p) == 0.0 for p in GRID[:5])
    with pytest.raises(ValueError):
        S.gen_solution2(S.stationary_power(0.75))


def test_gen_solution2_time_coefficient_is_darboux_image():
    v = S.invsq_power(-0.25, 1, s0=1.0)
    u, w = S.gen_solution2(v), S.darboux_from(v)
    for x, y in [(0.8, 0.3), (-1.4, 0.6)]:
        z = (math.copysign(1, x) * y, 2 * math.sqrt(abs(x)))
        slope = u.value((1.0, x, y)) - u.value((0.0, x, y))
        assert slope == pytest.approx(abs(x) ** 0.25 * w.value(z), rel=1e-12)


@pytest.mark.parametrize("text", ["kernel(1,0)", "poly(3)", "expmode(lam=0.5)", "power(mu=0.75,s0=1)", "darboux(s0=1)"])
def test_parse_seed(text):
    seed = S.parse_seed(text)
    pts = invsq_points() if isinstance(seed, S.InvSqSolution) else heat_points()
    assert max(S.residual(seed, p)[1] for p in pts) <= 1e-10


@pytest.mark.parametrize("bad", ["kernel(", "poly(1.5)", "nope(1)", "kernel(s0=1,s0=2)", "kernel(q=1)", "poly()"])
def test_parse_seed_errors(bad):
    with pytest.raises(ValueError):
        S.parse_seed(bad)
