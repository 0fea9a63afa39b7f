"""finefp command line: verify, algebra, generate, classify, reduce."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time

import numpy as np
from scipy.stats import qmc

from . import group as G
from . import lie
from . import ops as O
from . import reductions as R
from . import solutions as S

SCHEMA = 1
DEFAULT_SEED = 42
DEFAULT_POINTS = 24


class UsageError(ValueError):
    pass


# -- grid ----------------------------------------------------------------------

def default_grid(points=DEFAULT_POINTS, seed=DEFAULT_SEED, signs="both"):
    """Scrambled Halton points: t, y in [-1, 1], |x| in [0.2, 2], `points` per sign of x."""
    raw = qmc.Halton(d=3, scramble=True, seed=seed).random(2 * points)
    lo, hi = np.array([-1.0, 0.2, -1.0]), np.array([1.0, 2.0, 1.0])
    pts = qmc.scale(raw, lo, hi)
    out = []
    if signs in ("both", "pos"):
        out += [(t, x, y) for t, x, y in pts[:points]]
    if signs in ("both", "neg"):
        out += [(t, -x, y) for t, x, y in pts[points:]]
    return [tuple(float(v) for v in p) for p in out]


def grid_spec(points, seed, signs):
    return {"kind": "scrambled-halton", "points_per_sign": points, "signs": signs,
            "t": [-1.0, 1.0], "x_abs": [0.2, 2.0], "y": [-1.0, 1.0]}


# -- families --------------------------------------------------------------------

def _split_spec(text):
    """'gensol1:n=2:kernel(1,0)' -> ('gensol1', {'n': 2.0}, 'kernel(1,0)')."""
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == ":" and depth == 0:
            parts.append(cur)
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    parts.append(cur)
    name, params, seed = parts[0].strip(), {}, None
    for p in parts[1:]:
        p = p.strip()
        if "(" in p:
            if seed is not None:
                raise UsageError(f"two seeds in {text!r}")
            seed = p
            continue
        for item in filter(None, (s.strip() for s in p.split(","))):
            k, eq, v = item.partition("=")
            if not eq:
                raise UsageError(f"family parameter {item!r} must be name=value")
            try:
                params[k.strip()] = float(v)
            except ValueError:
                raise UsageError(f"family parameter {k.strip()!r} is not a number: {v!r}") from None
    return name, params, seed


FAMILIES = ("sol-heat1", "sol-heat2", "sol-invsq", "gensol1", "gensol2", "const", "witness-y")


def build_family(name, params=None, seed=None):
    """SolutionExpr for a named family; returns (solution, subject dict)."""
    params = dict(params or {})

    def take(key, default=None, required=False):
        if key in params:
            return params.pop(key)
        if required:
            raise UsageError(f"family {name} needs --{key}")
        return default

    if name in ("sol-heat1", "sol-heat2"):
        seed = seed or "kernel(s0=1,x0=0)"
        theta = S.parse_seed(seed)
        sol = S.sol_heat1(theta) if name == "sol-heat1" else S.sol_heat2(theta)
    elif name == "sol-invsq":
        mu = take("mu", required=True)
        seed = seed or f"power(mu={4 * mu + 0.75!r})"
        sol = S.sol_invsq(mu, S.parse_seed(seed))
        params_out = {"mu": mu}
    elif name == "gensol1":
        n = take("n", required=True)
        if not float(n).is_integer() or n < 1:
            raise UsageError("gensol1 needs an integer n >= 1")
        seed = seed or "kernel(s0=1,x0=0)"
        sol = S.gen_solution1(int(n), S.parse_seed(seed))
        params_out = {"n": int(n)}
    elif name == "gensol2":
        seed = seed or "power(mu=-0.25,s0=1)"
        sol = S.gen_solution2(S.parse_seed(seed))
    elif name == "const":
        c = take("value", 1.0)
        sol = S.SolutionExpr(f"const({c:g})", lambda t, x, y, c=c: c + 0.0 * x)
        params_out = {"value": c}
        seed = None
    elif name == "witness-y":
        sol = S.SolutionExpr("y", lambda t, x, y: y + 0.0 * x)
        seed = None
    else:
        raise UsageError(f"unknown family {name!r}; expected one of {', '.join(FAMILIES)}")
    if params:
        raise UsageError(f"family {name} has no parameter(s) {', '.join(sorted(params))}")
    subject = {"family": name}
    if name in ("sol-invsq", "gensol1", "const"):
        subject["params"] = params_out
    if seed is not None:
        subject["seed"] = seed
    return sol, subject


def parse_family_spec(text):
    name, params, seed = _split_spec(text)
    return build_family(name, params, seed)


# -- evaluation ------------------------------------------------------------------

def evaluate(sol, pts, skip=()):
    rows = []
    for p in pts:
        try:
            raw, rel = S.fine_residual(sol, p)
        except skip:
            continue
        rows.append((p, float(raw), float(rel)))
    return rows


def make_report(subject, grid, rows, tol, seed, wall_ms=None, extra=None):
    max_abs = max((abs(r[1]) for r in rows), default=None)
    max_rel = max((r[2] for r in rows), default=None)
    ok = bool(rows) and all(math.isfinite(r[2]) for r in rows) and max_rel <= tol
    rep = {
        "schema": SCHEMA,
        "subject": subject,
        "grid": grid,
        "points_evaluated": len(rows),
        "max_abs_residual": max_abs,
        "max_relative_residual": max_rel,
        "tolerance": tol,
        "pass": ok,
        "wall_time_ms": wall_ms,
        "seed": seed,
    }
    if extra:
        rep.update(extra)
    return rep


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "y", "raw", "relative"])
        for (t, x, y), raw, rel in rows:
            w.writerow([repr(t), repr(x), repr(y), repr(raw), repr(rel)])


def emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _timer(args):
    start = time.perf_counter()
    return lambda: round((time.perf_counter() - start) * 1000.0, 3) if args.timing else None


# -- commands --------------------------------------------------------------------

def cmd_verify(args):
    stop = _timer(args)
    params = {}
    for key in ("mu", "n", "value"):
        v = getattr(args, key)
        if v is not None:
            params[key] = v
    sol, subject = build_family(args.family, params, args.seed)
    pts = default_grid(args.points, args.grid_seed, args.signs)
    rows = evaluate(sol, pts)
    if args.csv:
        write_csv(args.csv, rows)
    rep = make_report(subject, grid_spec(args.points, args.grid_seed, args.signs), rows, args.tol,
                      args.grid_seed, stop())
    emit(rep)
    return 0 if rep["pass"] else 1


def _normal(text):
    return O.parse_op(text)


def cmd_algebra(args):
    sub = args.algebra_cmd
    if sub == "normal-order":
        print(_normal(args.expr))
        return 0
    if sub == "commutator":
        print(O.commutator(_normal(args.a), _normal(args.b)))
        return 0
    if sub == "casimir-check":
        c = O.casimir()
        bad = [m for m in O.pbw_monomials(args.degree) if not O.commutator(c, O.OpPoly.monomial(*m)).is_zero()]
        print(f"casimir: {c}")
        print(f"central: {'true' if not bad else 'false'}")
        return 0 if not bad else 1
    if sub == "lemma-check":
        if args.n < 1:
            raise UsageError("--n must be at least 1")
        lhs, rhs = O.lemma_product(args.n), O.lemma_rhs(args.n)
        if lhs == rhs:
            print("identity holds (exact)")
            return 0
        print(f"identity fails: difference {lhs - rhs}")
        return 1
    if sub == "independence":
        ok, rep = O.symbol_independence_test(args.degree, args.samples, args.rng_seed)
        emit({"independent": ok, **rep})
        return 0 if ok else 1
    raise UsageError(f"unknown algebra subcommand {sub!r}")


def _parse_group(text):
    if text.strip() == "identity":
        return G.identity()
    return G.parse_element(text)


def cmd_generate(args):
    stop = _timer(args)
    seed_sol, seed_subject = parse_family_spec(args.seed)
    if args.by_op is not None:
        op = O.realize(args.by_op)
        gen = O.as_solution(op, seed_sol)
        how = {"by_op": str(op)}
    else:
        g = _parse_group(args.by or "identity")
        gen = G.act_solution(g, seed_sol) if args.by not in (None, "identity") else seed_sol
        how = {"by": args.by or "identity", "element": g.as_dict()}
    pts = default_grid(args.points, args.grid_seed, args.signs)
    seed_rows = evaluate(seed_sol, pts, skip=(G.SingularPointError,))
    rows = evaluate(gen, pts, skip=(G.SingularPointError,))
    extra = {
        "seed_max_relative_residual": max((r[2] for r in seed_rows), default=None),
        "seed_pass": bool(seed_rows) and max(r[2] for r in seed_rows) <= args.tol,
    }
    if args.compare:
        other, _ = parse_family_spec(args.compare)
        diffs, sizes = [], []
        for p in pts:
            try:
                a, b = gen.value(p), other.value(p)
            except G.SingularPointError:
                continue
            diffs.append(abs(a - b))
            sizes.append(abs(b))
        scale = max([1.0] + sizes)
        extra["compare"] = {"against": args.compare, "max_abs_difference": max(diffs, default=None),
                            "tolerance": args.compare_tol,
                            "equal": bool(diffs) and max(diffs) <= args.compare_tol * scale}
    if args.csv:
        write_csv(args.csv, rows)
    subject = {"generated": how, "seed_solution": seed_subject}
    rep = make_report(subject, grid_spec(args.points, args.grid_seed, args.signs), rows, args.tol,
                      args.grid_seed, stop(), extra)
    rep["pass"] = rep["pass"] and extra["seed_pass"] and extra.get("compare", {}).get("equal", True)
    emit(rep)
    return 0 if rep["pass"] else 1


def cmd_classify(args):
    sub = args.classify_cmd
    if sub == "list":
        items = []
        for t in lie.catalog(args.dim):
            items.append({"label": t.label, "dim": t.dim, "params": [{"name": n, "domain": d} for n, d in t.params]})
        emit({"families": items, "count": len(items)})
        return 0
    if sub == "normalizer":
        s = lie.parse_catalog_id(args.id)
        n = lie.normalizer(s)
        emit({"subalgebra": lie.catalog_id(s), "span": [str(v) for v in s.basis],
              "normalizer": [str(v) for v in n.basis]})
        return 0
    if sub == "quadruple":
        s = lie.parse_catalog_id(args.id)
        emit({"subalgebra": lie.catalog_id(s), "quadruple": list(lie.invariant_quadruple(s))})
        return 0
    if sub == "witness":
        params = {}
        for item in args.param or []:
            k, _, v = item.partition("=")
            params[k.strip()] = v.strip()
        g, src, tgt = lie.equivalence_witness(args.pair, **params)
        img = lie.push_span(g, src)
        emit({"pair": args.pair, "element": g.as_dict(), "source": [str(v) for v in src.basis],
              "target": [str(v) for v in tgt.basis], "image": [str(v) for v in img.basis],
              "maps_onto": img.same_span(tgt)})
        return 0 if img.same_span(tgt) else 1
    raise UsageError(f"unknown classify subcommand {sub!r}")


def cmd_reduce(args):
    stop = _timer(args)
    case = R.parse_case(args.case)
    cmap = R.canonical_map(case, args.branch)
    seed = R.parse_canonical_seed(cmap, args.canonical_seed)
    w = R.canonical_pull(cmap, seed)
    sol = R.ansatz_lift(case, w)
    pts = default_grid(args.points, args.grid_seed, args.signs)
    rows = evaluate(sol, pts, skip=(G.SingularPointError,))
    if args.csv:
        write_csv(args.csv, rows)
    subject = {"case": case.label(), "branch": cmap.branch, "canonical_seed": args.canonical_seed}
    notes = []
    if cmap.is_free_heat():
        notes.append("free heat")
    notes += [f"differs from reference map: {d}" for d in cmap.deviations()]
    if notes:
        subject["note"] = "; ".join(notes)
    rep = make_report(subject, grid_spec(args.points, args.grid_seed, args.signs), rows, args.tol,
                      args.grid_seed, stop())
    emit(rep)
    return 0 if rep["pass"] else 1


# -- parser --------------------------------------------------------------------------

def _common(p):
    p.add_argument("--tol", type=float, default=1e-9, help="relative residual tolerance")
    p.add_argument("--grid-seed", type=int, default=DEFAULT_SEED, help="seed of the quasi-random grid")
    p.add_argument("--points", type=int, default=DEFAULT_POINTS, help="grid points per sign of x")
    p.add_argument("--signs", choices=("both", "pos", "neg"), default="both", help="which signs of x to sample")
    p.add_argument("--csv", help="write per-point residuals to this file")
    p.add_argument("--timing", action="store_true", help="record wall time (reports stop being byte-stable)")


def build_parser():
    ap = argparse.ArgumentParser(prog="finefp", description="Verification tools for u_t + x u_y = x^2 u_xx.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("verify", help="residual check of a solution family on the default grid")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--seed", help="seed expression, e.g. kernel(s0=1,x0=0)")
    p.add_argument("--mu", type=float)
    p.add_argument("--n", type=float)
    p.add_argument("--value", type=float)
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("algebra", help="operator algebra utilities")
    asub = p.add_subparsers(dest="algebra_cmd", required=True)
    q = asub.add_parser("normal-order")
    q.add_argument("expr")
    q = asub.add_parser("commutator")
    q.add_argument("a")
    q.add_argument("b")
    q = asub.add_parser("casimir-check")
    q.add_argument("--degree", type=int, default=4)
    q = asub.add_parser("lemma-check")
    q.add_argument("--n", type=int, default=5)
    q = asub.add_parser("independence")
    q.add_argument("--degree", type=int, default=3)
    q.add_argument("--samples", type=int, default=200)
    q.add_argument("--rng-seed", type=int, default=0)
    p.set_defaults(func=cmd_algebra)

    p = sub.add_parser("generate", help="new solutions by a group element or an operator")
    how = p.add_mutually_exclusive_group()
    how.add_argument("--by", help="group element, e.g. 'K(0.3)*Py(1)' or identity")
    how.add_argument("--by-op", help="operator expression over Py, D, K, Pt, I, L")
    p.add_argument("--seed", required=True, help="seed solution, e.g. sol-heat2:kernel(1,0)")
    p.add_argument("--compare", help="family spec to compare the result with pointwise")
    p.add_argument("--compare-tol", type=float, default=1e-8)
    _common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("classify", help="subalgebra catalog queries")
    csub = p.add_subparsers(dest="classify_cmd", required=True)
    q = csub.add_parser("list")
    q.add_argument("--dim", type=int)
    q = csub.add_parser("normalizer")
    q.add_argument("id")
    q = csub.add_parser("quadruple")
    q.add_argument("id")
    q = csub.add_parser("witness")
    q.add_argument("pair")
    q.add_argument("--param", action="append", help="name=value")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("reduce", help="lift a canonical-form seed through a Lie reduction")
    p.add_argument("case", help="case id, e.g. 1.5:nu=1,mu=0.5")
    p.add_argument("--canonical-seed", required=True)
    p.add_argument("--branch", choices=("lo", "hi", "zero", "main"))
    _common(p)
    p.set_defaults(func=cmd_reduce)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args)
    except ValueError as exc:
        sys.stderr.write(f"finefp: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
