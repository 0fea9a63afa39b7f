"""Acceptance criteria 1-14.

Each test records a one-line verdict in RESULTS; conftest.py prints them at the
end of the session, and running this file directly prints them as it goes.
"""

import itertools
import math
import random
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from finefp import group as G
from finefp import jets as J
from finefp import lie as L
from finefp import ops as O
from finefp import reductions as R
from finefp import solutions as S
from finefp.cli import default_grid
from finefp.lie import BASIS, D, I, K, PT, PY, QPLUS, EssVector

RESULTS = {}
GRID = default_grid()
EPS = (-1.0, -0.3, 0.2, 1.0)


def verdict(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def max_rel(sol, pts=GRID):
    return max(S.fine_residual(sol, p)[1] for p in pts)


# 1 -------------------------------------------------------------------------

def test_criterion_01_bracket_table():
    table = {
        (PY, D): PY, (PY, K): 2 * D, (D, K): K,
    }
    bad = []
    for a, b in itertools.combinations(BASIS, 2):
        want = table.get((a, b), L.ZERO)
        got = L.bracket(a, b)
        if got != want or not all(isinstance(c, Fraction) or isinstance(c, int) for c in got.c):
            bad.append((str(a), str(b)))
    jac = 0
    for a, b, c in itertools.product(BASIS, repeat=3):
        j = L.bracket(a, L.bracket(b, c)) + L.bracket(b, L.bracket(c, a)) + L.bracket(c, L.bracket(a, b))
        jac += not j.is_zero()
    verdict(1, not bad and jac == 0, f"10 brackets exact, mismatches={bad}, Jacobi failures={jac}/125")


# 2 -------------------------------------------------------------------------

def closed_form_pushforwards(e):
    s, c = math.sin, math.cos
    return [
        ("Py(e)_*D = D - 2e Py", G.one_param("Py", e), D, D - 2 * e * PY),
        ("K(e)_*D = D + 2e K", G.one_param("K", e), D, D + 2 * e * K),
        ("D(e)_*Py = exp(2e) Py", G.one_param("D", e), PY, math.exp(2 * e) * PY),
        ("Py(e)_*K = K - e D + e^2 Py", G.one_param("Py", e), K, K - e * D + e * e * PY),
        ("K(e)_*Py = Py + e D + e^2 K", G.one_param("K", e), PY, PY + e * D + e * e * K),
        ("D(e)_*K = exp(-2e) K", G.one_param("D", e), K, math.exp(-2 * e) * K),
        ("J'_*Py = -Py", G.discrete("Jprime"), PY, -PY),
        ("J'_*K = -K", G.discrete("Jprime"), K, -K),
        ("Q+(e)_*Py", G.one_param("Qplus", e), PY, s(e) ** 2 * K + s(2 * e) * D + c(e) ** 2 * PY),
        ("Q+(e)_*D", G.one_param("Qplus", e), D, 0.5 * s(2 * e) * K + c(2 * e) * D - 0.5 * s(2 * e) * PY),
        ("Q+(e)_*K", G.one_param("Qplus", e), K, c(e) ** 2 * K - s(2 * e) * D + s(e) ** 2 * PY),
    ]


def identity_rows(e):
    rows = []
    gens = {"Py": PY, "D": D, "K": K}
    moved = {("Py", "D"), ("Py", "K"), ("K", "D"), ("K", "Py"), ("D", "Py"), ("D", "K")}
    for g in ("Py", "D", "K", "Pt", "I"):
        for name, v in list(gens.items()) + [("Pt", PT), ("I", I)]:
            if (g, name) not in moved:
                rows.append((f"{g}(e)_*{name} = {name}", G.one_param(g, e), v, v))
    for v, name in ((D, "D"), (PT, "Pt"), (I, "I")):
        rows.append((f"J'_*{name} = {name}", G.discrete("Jprime"), v, v))
    for v, name in ((PY, "Py"), (D, "D"), (K, "K"), (PT, "Pt"), (I, "I")):
        rows.append((f"I'_*{name} = {name}", G.discrete("Iprime"), v, v))
    return rows


def test_criterion_02_pushforward_table():
    failed = set()
    total = 0
    for e in EPS:
        for label, g, a, want in closed_form_pushforwards(e) + identity_rows(e):
            total += 1
            if not L.pushforward(g, a).isclose(want, 1e-12):
                failed.add(label)
    verdict(2, not failed, f"{total} rows checked; rows differing from the closed forms: {sorted(failed)}")


# 3 -------------------------------------------------------------------------

def test_criterion_03_normalizers():
    q = Fraction
    cases = []
    for mu in (q(0), q(1, 2), q(-3)):
        cases.append((f"s1.1 mu={mu}", L.template("s1.1").instantiate(mu=mu), BASIS))
        cases.append((f"s1.3 mu={mu}", L.template("s1.3").instantiate(mu=mu), (PY, PT, I)))
        for nu in (q(1), q(5, 2)):
            cases.append((f"s1.5 nu={nu} mu={mu}", L.template("s1.5").instantiate(nu=nu, mu=mu), (D, PT, I)))
            cases.append((f"s1.7 nu={nu} mu={mu}", L.template("s1.7").instantiate(nu=nu, mu=mu), (QPLUS, PT, I)))
    cases.append(("s1.4 delta=0", L.template("s1.4").instantiate(delta=0), (PY, D, PT, I)))
    cases.append(("s1.4 delta=1", L.template("s1.4").instantiate(delta=1), (PY, PT, I)))
    bad = [name for name, s, want in cases if not L.normalizer(s).same_span(L.span(*want))]
    verdict(3, not bad, f"{len(cases)} normalizers compared exactly; mismatches={bad}")


# 4 -------------------------------------------------------------------------

def draws_for(tpl):
    pools = {"real": [Fraction(0), Fraction(1, 2), Fraction(-7, 3)],
             "nonneg": [Fraction(0), Fraction(1, 3), Fraction(4)],
             "pos": [Fraction(1, 5), Fraction(1), Fraction(9, 2)],
             "delta01": [0, 1, 1],
             "sign": [-1, 0, 1]}
    for k in range(3):
        yield {name: pools[dom][(k + i) % 3] for i, (name, dom) in enumerate(tpl.params)}


def test_criterion_04_catalog_and_witnesses():
    open_ = []
    quad = []
    count = 0
    for tpl in L.catalog():
        for vals in draws_for(tpl):
            s = L.SubalgebraSpan(tuple(tpl.build(**vals)), tpl.label, vals)
            count += 1
            if not s.is_closed():
                open_.append(tpl.label)
            elif L.invariant_quadruple(s) != tuple(tpl.declared_quadruple(**vals)):
                quad.append(tpl.label)
    wit = []
    for pair in L.EQUIVALENCE_PAIRS:
        g, src, tgt = L.equivalence_witness(pair)
        if not L.push_span(g, src).same_span(tgt):
            wit.append(pair)
    ok = not open_ and not wit and not quad and len(L.EQUIVALENCE_PAIRS) == 7
    verdict(4, ok, f"{count} instances closed (failures={open_}, quadruple mismatches={quad}); "
                   f"7 J' witnesses (failures={wit})")


# 5 -------------------------------------------------------------------------

def test_criterion_05_pbw_engine():
    rng = random.Random(20240)
    disagree = 0
    for _ in range(200):
        w = tuple(rng.choice(O.PBW) for _ in range(rng.randint(0, 7)))
        a = O.normal_order(w, strategy="leftmost")
        b = O.normal_order(w, strategy="rightmost")
        c = O.normal_order(w, strategy="random", rng=rng)
        disagree += not (a == b == c)
    lemma = [n for n in range(1, 6) if O.lemma_product(n) != O.lemma_rhs(n)]
    cas = O.casimir()
    noncentral = [m for m in O.pbw_monomials(4) if not O.commutator(cas, O.OpPoly.monomial(*m)).is_zero()]
    ok = disagree == 0 and not lemma and not noncentral
    verdict(5, ok, f"confluence disagreements={disagree}/200, lemma failures n={lemma}, "
                   f"Casimir non-commuting monomials={len(noncentral)}/{len(O.pbw_monomials(4))}")


# 6 -------------------------------------------------------------------------

def smooth_functions():
    return [
        S.SolutionExpr("f1", lambda t, x, y: J.exp(x + 0.3 * y) * J.sin(t + x * y)),
        S.SolutionExpr("f2", lambda t, x, y: J.cos(2 * x - y) * (1.0 + t * t)),
        S.SolutionExpr("f3", lambda t, x, y: x**3 * y**2 - 2 * t * x + y),
        S.SolutionExpr("f4", lambda t, x, y: J.arctan(x * y + t) * J.exp(-y * y)),
        S.SolutionExpr("f5", lambda t, x, y: J.recip(2.5 + J.sin(x) + 0.5 * y) * J.exp(0.2 * t)),
    ]


def test_criterion_06_operator_realization():
    L6 = O.realize("Pt - D^2 + 1/2*(Py*K + K*Py)")
    rng = np.random.default_rng(6)
    worst = 0.0
    for f in smooth_functions():
        for _ in range(20):
            pt = (rng.uniform(-1, 1), rng.uniform(-2, 2), rng.uniform(-1, 1))
            j = f.jet(pt, 2)
            x = pt[1]
            terms = (j.derivative((1, 0, 0)), x * j.derivative((0, 0, 1)), -x * x * j.derivative((0, 2, 0)))
            scale = max(sum(abs(v) for v in terms), 1e-300)
            worst = max(worst, abs(O.apply(L6, f, pt).value - sum(terms)) / scale)
    verdict(6, worst <= 1e-10, f"max |L f - (f_t + x f_y - x^2 f_xx)|/scale = {worst:.2e} over 100 points")


# 7 -------------------------------------------------------------------------

def test_criterion_07_pbw_independence():
    ok, rep = O.symbol_independence_test(3, 200)
    verdict(7, ok and rep["smallest_singular_value"] > 1e-8,
            f"degree 3, 200 samples, 20 monomials, smallest normalized singular value "
            f"{rep['smallest_singular_value']:.3e}")


# 8 -------------------------------------------------------------------------

def criterion8_families():
    fams = {
        "sol_heat1": [S.sol_heat1(S.heat_kernel(1, 0)), S.sol_heat1(S.heat_poly(2))],
        "sol_heat2": [S.sol_heat2(S.heat_kernel(1, 0)), S.sol_heat2(S.heat_poly(3))],
    }
    for mu in (0.0, -3 / 16, 0.5):
        mt = 4 * mu + 0.75
        fams[f"sol_invsq mu={mu:g}"] = [S.sol_invsq(mu, S.invsq_power(mt, 1, s0=1.0)),
                                        S.sol_invsq(mu, S.invsq_power(mt, 1, poly=True))]
    for n in (1, 2, 3):
        fams[f"gen_solution1 n={n}"] = [S.gen_solution1(n, S.heat_kernel(1, 0)), S.gen_solution1(n, S.heat_poly(3))]
    fams["gen_solution2"] = [S.gen_solution2(S.invsq_power(-0.25, 1, s0=1.0)),
                             S.gen_solution2(S.invsq_power(-0.25, 1, poly=True))]
    return fams


def test_criterion_08_solution_residuals():
    worst = {}
    for name, sols in criterion8_families().items():
        worst[name] = max(max_rel(u) for u in sols)
    bad = {k: v for k, v in worst.items() if v > 1e-9}
    verdict(8, not bad, f"{len(worst)} families x 2 seeds on 48 points; worst={max(worst.values()):.2e}; over={bad}")


# 9 -------------------------------------------------------------------------

def test_criterion_09_generalized_constraint():
    bad = []
    for n in (1, 2, 3):
        for theta in (S.heat_kernel(1, 0), S.heat_poly(3), S.heat_kernel(2.0, 0.4)):
            u = S.gen_solution1(n, theta)
            top = 0.0
            for p in GRID:
                j = u.jet(p, n + 1)
                scale = max(1.0, max(abs(j.derivative((0, 0, k))) for k in range(n)))
                if abs(j.derivative((0, 0, n))) > 1e-12 * scale:
                    bad.append(("d_y^n", n, theta.name, p))
                top = max(top, abs(j.derivative((0, 0, n - 1))))
            if top == 0.0:
                bad.append(("degree", n, theta.name))
            for eps in (1, -1):
                tup = S.hn_tuple(n, theta, eps)
                for p in [(0.3, -0.7), (0.1, 0.4), (0.8, 1.1)]:
                    if any(r[1] > 1e-9 for r in S.hn_residuals(tup, p, eps)):
                        bad.append(("H_n", n, theta.name, eps, p))
    verdict(9, not bad, f"d_y^n u = 0 and y-degree n-1 on 48 points, H_n relations for n=1..3; failures={bad[:3]}")


# 10 ------------------------------------------------------------------------

def test_criterion_10_k_iteration():
    worst = 0.0
    for theta in (S.heat_kernel(1, 0), S.heat_poly(3)):
        for n in (1, 2, 3):
            gen = O.as_solution(O.realize(O.K ** (n - 1)), S.sol_heat2(theta))
            ref = S.gen_solution1(n, theta)
            for p in GRID:
                a, b = gen.value(p), ref.value(p)
                worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    verdict(10, worst <= 1e-8, f"max |K^(n-1) sol_heat2 - gen_solution1| = {worst:.2e} (n=1,2,3; kernel(1,0), poly(3); 48 points)")


# 11 ------------------------------------------------------------------------

GENS = ["Py", "D", "K", "Pt", "I", "Qplus"]


def random_element(rng, spread=0.5):
    g = G.identity()
    for _ in range(3):
        g = G.compose(g, G.one_param(GENS[rng.integers(len(GENS))], rng.uniform(-spread, spread)))
    if rng.random() < 0.25:
        g = G.compose(g, G.discrete("Jprime"))
    if rng.random() < 0.25:
        g = G.compose(g, G.discrete("Iprime"))
    return g


def test_criterion_11_group_engine():
    rng = np.random.default_rng(11)
    axiom = 0
    e = G.identity()
    for _ in range(100):
        a, b, c = (random_element(rng, 1.0) for _ in range(3))
        axiom += not G.compose(G.compose(a, b), c).isclose(G.compose(a, G.compose(b, c)), 1e-12)
        axiom += not G.compose(a, e).isclose(a, 1e-12)
        axiom += not G.compose(a, G.inverse(a)).isclose(e, 1e-12)
    elements = [random_element(rng) for _ in range(20)]
    worst, evaluated = 0.0, 0
    for sols in criterion8_families().values():
        for h in sols:
            for k, g in enumerate(elements):
                v = G.act_solution(g, h)
                for p in GRID[k % 6::12]:
                    try:
                        worst = max(worst, S.fine_residual(v, p)[1])
                        evaluated += 1
                    except G.SingularPointError:
                        pass
    h = S.sol_heat2(S.heat_kernel(1, 0))
    graph = 0.0
    for k in range(20):
        g = elements[k]
        p = GRID[2 * k]
        try:
            img = G.act_point(g, (*p, h.value(p)))
            graph = max(graph, abs(G.act_solution(g, h).value(img[:3]) - img[3]) / max(1.0, abs(img[3])))
        except G.SingularPointError:
            continue
    ok = axiom == 0 and worst <= 1e-9 and graph <= 1e-12
    verdict(11, ok, f"axiom failures={axiom}/300; transformed residual max={worst:.2e} over {evaluated} points; "
                    f"graph mismatch={graph:.1e}")


# 12 ------------------------------------------------------------------------

def test_criterion_12_slpm_factorization():
    rng = np.random.default_rng(12)
    nu = np.diag([1.0, -1.0])
    mats, bad = [], 0
    for _ in range(100):
        b, c, a = (float(v) for v in rng.integers(-4, 5, 3))
        m = np.array([[1.0, b], [0.0, 1.0]]) @ np.array([[1.0, 0.0], [c, 1.0]]) @ np.array([[1.0, a], [0.0, 1.0]])
        if rng.random() < 0.5:
            m = m @ nu
        mats.append(m)
        msl, d = G.factor_slpm(m)
        bad += not (np.array_equal(msl @ np.linalg.matrix_power(nu, d), m) and round(np.linalg.det(msl)) == 1
                    and d == (0 if np.linalg.det(m) > 0 else 1))
    additive = sum(G.factor_slpm(m1 @ m2)[1] != (G.factor_slpm(m1)[1] + G.factor_slpm(m2)[1]) % 2
                   for m1, m2 in zip(mats, mats[1:]))
    inv = 0
    for _ in range(20):
        a, b, c, d = rng.normal(size=4)
        inv += not np.array_equal(nu @ np.array([[a, b], [c, d]]) @ nu, np.array([[a, -b], [-c, d]]))
    verdict(12, bad == 0 and additive == 0 and inv == 0,
            f"round-trip failures={bad}/100, d additivity failures={additive}/99, involution failures={inv}/20")


# 13 ------------------------------------------------------------------------

def branch_points(cmap, side, n=6):
    lo, hi = cmap.interval(side)
    if math.isinf(hi):
        return [lo + d for d in np.geomspace(0.02, 30.0, n)]
    if math.isinf(lo):
        return [hi - d for d in np.geomspace(0.02, 30.0, n)]
    return list(np.linspace(lo, hi, n + 2)[1:-1])


def test_criterion_13_reductions():
    lifted = {}
    for cmap in R.case_table():
        u = R.ansatz_lift(cmap.case, R.canonical_pull(cmap, R.parse_canonical_seed(cmap, "stationary(lam=0.5)")))
        vals = []
        for p in GRID:
            try:
                vals.append(S.fine_residual(u, p)[1])
            except G.SingularPointError:
                pass
        lifted[cmap.label()] = (max(vals) if vals else math.inf, len(vals))
    bad = {k: v for k, v in lifted.items() if v[0] > 1e-9 or v[1] < 3}
    chain = 0.0
    for cid, ref in (("1.1:mu=-0.1875", S.sol_heat1), ("1.4:delta=0", S.sol_heat2)):
        cmap = R.canonical_map(R.parse_case(cid))
        for theta in (S.heat_kernel(1, 0), S.heat_poly(3)):
            u = R.ansatz_lift(cmap.case, R.canonical_pull(cmap, theta))
            r = ref(theta)
            for p in GRID:
                chain = max(chain, abs(u.value(p) - r.value(p)) / max(1.0, abs(r.value(p))))
    inv = 0.0
    for cmap in R.case_table():
        for side in cmap.sides():
            for z2 in branch_points(cmap, side):
                zt = cmap.Z(z2)
                inv = max(inv, abs(cmap.Z(cmap.inverse(zt, side)) - zt) / max(1.0, abs(zt)))
    ok = not bad and chain <= 1e-9 and inv <= 1e-12
    verdict(13, ok, f"{len(lifted)} branches lifted, worst residual {max(v[0] for v in lifted.values()):.2e} "
                    f"(over={bad}); chains {chain:.1e}; Z inverse {inv:.1e}")


# 14 ------------------------------------------------------------------------

def test_criterion_14_determinism():
    commands = [
        ["verify", "--family", "gensol1", "--n", "3", "--seed", "poly(3)"],
        ["reduce", "1.7:nu=1,mu=0.5", "--canonical-seed", "stationary(lam=0.5)"],
        ["generate", "--by", "K(0.3)*Py(1)", "--seed", "sol-heat2:kernel(1,0)"],
        ["algebra", "independence"],
    ]
    differ = []
    for argv in commands:
        outs = [subprocess.run([sys.executable, "-m", "finefp", *argv], capture_output=True).stdout for _ in range(2)]
        if outs[0] != outs[1] or not outs[0]:
            differ.append(argv[0])
    verdict(14, not differ, f"{len(commands)} commands run twice; differing outputs={differ}")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
