"""Codimension-one Lie reductions and their maps to heat equations with potentials.

A case fixes u = A(t, x, y) w(z1, z2) and a reduced equation written as

    a(z2) w_1 = z2^2 w_22 + b(z2) w_2 + c(z2) w.

A canonical map sends w to w~(z~1, z~2) = W(z1, z2) w with z~1 = s z1 and
z~2 = Z(z2), where w~ solves w~_1 = w~_22 + V w~.  V is written here in terms
of z2, which is recovered from z~2 by a bracketed root search on the monotone
piece of Z that carries the point (its "side", the sign of z2).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import jets as J
from . import solutions as S
from .group import SingularPointError

__all__ = [
    "ReductionCase",
    "CanonicalMap",
    "OutOfBranchError",
    "BRANCHES",
    "parse_case",
    "ansatz_lift",
    "reduced_residual",
    "canonical_map",
    "canonical_pull",
    "canonical_residual",
    "push",
    "stationary_seed",
    "parse_canonical_seed",
    "case_table",
    "case_subalgebra",
    "generator_field",
]


class OutOfBranchError(SingularPointError):
    """Point outside the monotone branch of a canonical map."""


def _is_jet(v):
    return isinstance(v, J.Jet)


def _val(v):
    return v.value if _is_jet(v) else float(v)


def _sqrt(v):
    return J.sqrt(v) if _is_jet(v) else math.sqrt(v)


def _log(v):
    return J.log(v) if _is_jet(v) else math.log(v)


def _abs(v):
    return J.absj(v) if _is_jet(v) else abs(v)


def _atan(v):
    return J.arctan(v) if _is_jet(v) else math.atan(v)


def _exp(v):
    return J.exp(v) if _is_jet(v) else math.exp(v)


def _pow(v, r):
    return J.power(v, r) if _is_jet(v) else v ** r


def _odd_tail(q, sign, terms=40):
    """sum_{k>=1} sign^(k+1) q^(2k+1)/(2k+1); avoids the cancellation in 2q - 2 atanh q
    and 2q - 2 atan q near q = 0."""
    q2 = q * q
    acc = 0.0
    for k in range(terms, 0, -1):
        acc = acc * q2 + sign ** (k + 1) / (2 * k + 1)
    return acc * q2 * q


# -- cases -------------------------------------------------------------------

_PARAMS = {"1.1": ("mu",), "1.3": ("mu",), "1.4": ("delta",), "1.5": ("nu", "mu"), "1.7": ("nu", "mu")}


@dataclass(frozen=True)
class ReductionCase:
    id: str
    params: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.id not in _PARAMS:
            raise ValueError(f"unknown reduction case {self.id!r}; expected one of {', '.join(_PARAMS)}")
        names = _PARAMS[self.id]
        extra = set(self.params) - set(names)
        if extra:
            raise ValueError(f"case {self.id} has no parameter(s) {', '.join(sorted(extra))}")
        p = {n: float(self.params.get(n, 0.0)) for n in names}
        if self.id == "1.4" and p["delta"] not in (0.0, 1.0):
            raise ValueError("case 1.4 needs delta in {0, 1}")
        if self.id in ("1.5", "1.7"):
            if p["nu"] < 0:
                raise ValueError(f"case {self.id} needs nu >= 0")
            if p["nu"] == 0 and p["mu"] < 0:
                raise ValueError(f"case {self.id} with nu = 0 needs mu >= 0")
        object.__setattr__(self, "params", p)

    def __getattr__(self, name):
        try:
            return self.__dict__["params"][name]
        except KeyError:
            raise AttributeError(name) from None

    def label(self):
        return f"{self.id}:" + ",".join(f"{k}={v:g}" for k, v in self.params.items())

    # ansatz
    def invariants(self, t, x, y):
        if self.id in ("1.1",):
            return y, x
        if self.id == "1.3":
            return t - y, x
        if self.id == "1.4":
            return t, x
        if self.id == "1.5":
            if _val(y) == 0:
                raise SingularPointError("case 1.5 is singular on y = 0")
            return t - self.nu * _log(_abs(y)), x / y
        return t - self.nu * _atan(y), x / (y * y + 1.0)

    def multiplier(self, t, x, y):
        if self.id in ("1.1", "1.3"):
            return _exp(self.mu * t)
        if self.id == "1.4":
            return _exp(self.delta * y)
        if self.id == "1.5":
            if _val(y) == 0:
                raise SingularPointError("case 1.5 is singular on y = 0")
            return _pow(_abs(y), self.mu)
        return _exp(self.mu * _atan(y) - x * y / (y * y + 1.0))

    # reduced equation a w_1 = z2^2 w_22 + b w_2 + c w
    def coefficients(self, z2):
        i = self.id
        if i == "1.1":
            return z2, 0.0, -self.mu
        if i == "1.3":
            return 1.0 - z2, 0.0, -self.mu
        if i == "1.4":
            return 1.0, 0.0, -self.delta * z2
        if i == "1.5":
            return 1.0 - self.nu * z2, z2 * z2, -self.mu * z2
        return 1.0 - self.nu * z2, 0.0, z2 * (z2 - self.mu)


def parse_case(text: str) -> ReductionCase:
    """'1.1:mu=-0.1875', '1.4:delta=0', '1.5:nu=1,mu=0.5'."""
    m = re.fullmatch(r"\s*(1\.[13457])\s*(?::\s*(.*?))?\s*", text)
    if not m:
        raise ValueError(f"malformed case id {text!r}; expected e.g. 1.5:nu=1,mu=0.5")
    params = {}
    for item in filter(None, (p.strip() for p in (m.group(2) or "").split(","))):
        k, eq, v = item.partition("=")
        if not eq:
            raise ValueError(f"case parameter {item!r} must be name=value")
        try:
            params[k.strip()] = float(v)
        except ValueError:
            raise ValueError(f"case parameter {k.strip()!r} has non-numeric value {v!r}") from None
    return ReductionCase(m.group(1), params)


def ansatz_lift(case: ReductionCase, w) -> S.SolutionExpr:
    """u = A(t, x, y) w(z1, z2)."""
    f = w.fn

    def fn(t, x, y):
        if _val(x) == 0:
            raise SingularPointError("reductions are evaluated off x = 0")
        z1, z2 = case.invariants(t, x, y)
        return case.multiplier(t, x, y) * f(z1, z2)

    return S.SolutionExpr(f"lift[{case.label()}]({w.name})", fn, note=f"case {case.id}")


def reduced_residual(case: ReductionCase, w, at):
    """(raw, relative) of a w_1 - z2^2 w_22 - b w_2 - c w at (z1, z2)."""
    j = w.jet(tuple(at), 2)
    z2 = float(at[1])
    a, b, c = case.coefficients(z2)
    terms = (a * j.derivative((1, 0)), -z2 * z2 * j.derivative((0, 2)), -b * j.derivative((0, 1)), -c * j.value)
    raw = sum(terms)
    return raw, S._ratio(raw, sum(abs(v) for v in terms), j.value)


# -- canonical maps ------------------------------------------------------------

BRANCHES = (
    ("1.1", "main"), ("1.3", "lo"), ("1.3", "hi"), ("1.4", "main"),
    ("1.5", "lo"), ("1.5", "hi"), ("1.5", "zero"),
    ("1.7", "lo"), ("1.7", "hi"), ("1.7", "zero"),
)

_LOG_MAP = {("1.4", "main"), ("1.5", "zero"), ("1.7", "zero")}


@dataclass(frozen=True)
class CanonicalMap:
    case: ReductionCase
    branch: str

    def __post_init__(self):
        if (self.case.id, self.branch) not in BRANCHES:
            raise ValueError(f"case {self.case.id} has no branch {self.branch!r}")
        if self.case.id in ("1.5", "1.7"):
            if (self.case.nu == 0) != (self.branch == "zero"):
                raise ValueError(f"case {self.case.id}: branch 'zero' is used exactly when nu = 0")

    @property
    def nu(self):
        return 1.0 if self.case.id == "1.3" else self.case.params.get("nu", 0.0)

    @property
    def kind(self):
        if self.case.id == "1.1":
            return "sqrt"
        if (self.case.id, self.branch) in _LOG_MAP:
            return "log"
        return self.branch

    def label(self):
        return f"{self.case.label()}/{self.branch}"

    def is_free_heat(self):
        c = self.case
        return (c.id == "1.1" and c.mu == -0.1875) or (c.id == "1.4" and c.delta == 0)

    def mu_tilde(self):
        if self.case.id != "1.1":
            raise ValueError("only case 1.1 maps to an inverse-square potential")
        return 4.0 * self.case.mu + 0.75

    # domain
    def interval(self, side):
        """Open z2-interval of the monotone piece with sign `side`."""
        nu = self.nu
        if self.kind in ("sqrt", "log"):
            return (0.0, math.inf) if side > 0 else (-math.inf, 0.0)
        if self.kind == "lo":
            return (0.0, 1.0 / nu) if side > 0 else (-math.inf, 0.0)
        if side < 0:
            raise OutOfBranchError("the hi branch has z2 > 0 only")
        return (1.0 / nu, math.inf)

    def sides(self):
        return (1,) if self.kind == "hi" else (1, -1)

    def side_of(self, z2):
        z2 = _val(z2)
        if z2 == 0:
            raise SingularPointError("canonical maps are singular at z2 = 0")
        side = 1 if z2 > 0 else -1
        if side not in self.sides():
            raise OutOfBranchError(f"z2 = {z2!r} is outside the {self.branch} branch")
        lo, hi = self.interval(side)
        if not lo < z2 < hi:
            raise OutOfBranchError(f"z2 = {z2!r} is outside the {self.branch} branch ({lo}, {hi})")
        return side

    def z1_sign(self, side):
        if self.kind == "sqrt":
            return side
        return -1 if self.kind == "hi" else 1

    # forward map
    def Z(self, z2):
        nu = self.nu
        if self.kind == "sqrt":
            return 2.0 * _sqrt(_abs(z2))
        if self.kind == "log":
            return _log(_abs(z2))
        if self.kind == "lo":
            q = _sqrt(1.0 - nu * z2)
            if _val(q) < 0.5:
                return -2.0 * _odd_tail(q, 1.0)
            return 2.0 * q + _log(_abs((q - 1.0) / (q + 1.0)))
        q = _sqrt(nu * z2 - 1.0)
        if _val(q) < 0.5:
            return 2.0 * _odd_tail(q, -1.0)
        return 2.0 * q - 2.0 * _atan(q)

    def dZ(self, z2):
        """dZ/dz2 at a float."""
        if self.kind == "sqrt":
            return math.copysign(1.0, z2) / math.sqrt(abs(z2))
        if self.kind == "log":
            return 1.0 / z2
        return math.sqrt(abs(1.0 - self.nu * z2)) / z2

    def W(self, z1, z2):
        c, nu = self.case, self.nu
        if self.kind == "sqrt":
            return _pow(_abs(z2), -0.25)
        if self.kind == "log":
            extra = 0.5 * z2 if c.id == "1.5" else 0.0
            return _exp(z1 / 4.0 + extra) * _pow(_abs(z2), -0.5)
        r = 1.0 - nu * z2 if self.kind == "lo" else nu * z2 - 1.0
        out = _pow(r, 0.25) * _pow(_abs(z2), -0.5)
        if c.id == "1.5":
            out = out * _exp(0.5 * z2)
        return out

    # potentials
    def _numerator(self, z1, z2, reference):
        c = self.case
        if c.id == "1.3":
            return 16.0 * c.mu + 3.0
        if c.id == "1.5":
            return 4.0 * z2 * z2 + 16.0 * c.mu * z2 + 3.0
        return 16.0 * (z1 if reference else z2) * (c.mu - z2) + 3.0

    def _P(self, z1, z2, reference=False):
        s = self.nu * z2 - 1.0
        return self._numerator(z1, z2, reference) / s - 6.0 / (s * s) - 5.0 / (s * s * s)

    def potential(self, z2, side=None):
        """V as a function of z2 (float or jet)."""
        c = self.case
        if self.kind == "sqrt":
            side = side if side is not None else self.side_of(z2)
            return -self.mu_tilde() / (4.0 * side * z2)
        if self.kind == "log":
            if c.id == "1.4":
                return -c.delta * z2
            if c.id == "1.5":
                return -(c.mu * z2 + 0.25 * z2 * z2)
            return z2 * z2 - c.mu * z2
        sign = 1.0 if self.kind == "lo" else -1.0
        return sign * self._P(None, z2) / 16.0

    def reference_potential(self, z1, z2, side=None):
        """Uncorrected reference form of V, kept to show where `potential` departs from it."""
        if self.kind in ("sqrt", "log"):
            return self.potential(z2, side)
        if self.case.id == "1.3":
            sign = -1.0 if self.kind == "lo" else 1.0
            return sign * self._P(z1, z2) / 16.0
        sign = 1.0 if self.kind == "lo" else -1.0
        return sign * self._P(z1, z2, reference=True) / 16.0

    def reference_z1_sign(self, side):
        if self.case.id == "1.7" and self.kind == "hi":
            return 1
        return self.z1_sign(side)

    def deviations(self):
        """Where the verified map departs from the reference form."""
        out = []
        c = self.case.id
        if c == "1.3" and self.kind in ("lo", "hi"):
            out.append("potential sign")
        if c == "1.7" and self.kind in ("lo", "hi"):
            out.append("potential numerator uses z2 in place of z1")
        if c == "1.7" and self.kind == "hi":
            out.append("z~1 = -z1")
        return out

    # inverse of Z
    def _param(self, side):
        lo, hi = self.interval(side)
        if math.isinf(lo) and math.isinf(hi):
            raise AssertionError
        if math.isinf(hi):
            return lambda s: lo + math.exp(s)
        if math.isinf(lo):
            return lambda s: hi - math.exp(s)
        return lambda s: lo + (hi - lo) / (1.0 + math.exp(-s))

    def inverse(self, zt2, side, tol=1e-12):
        """z2 on the given side with Z(z2) = zt2."""
        zt2 = float(zt2)
        z_of = self._param(side)

        def f(s):
            return self.Z(z_of(s)) - zt2

        a, b = -1.0, 1.0
        fa, fb = f(a), f(b)
        while fa * fb > 0:
            a, b = 2.0 * a, 2.0 * b
            if b > 700:
                raise OutOfBranchError(
                    f"z~2 = {zt2!r} is not in the range of Z on the {self.branch} branch, side {side:+d}")
            try:
                fa, fb = f(a), f(b)
            except (ValueError, OverflowError, ZeroDivisionError):
                raise OutOfBranchError(f"root bracket for z~2 = {zt2!r} left the branch") from None
        s = brentq(f, a, b, xtol=1e-15, rtol=1e-15, maxiter=500)
        z2 = z_of(s)
        for _ in range(3):
            r = self.Z(z2) - zt2
            if abs(r) <= tol * 1e-3:
                break
            z2 = z2 - r / self.dZ(z2)
        if abs(self.Z(z2) - zt2) > tol * max(1.0, abs(zt2)):
            raise ArithmeticError(f"inverse of Z did not converge at z~2 = {zt2!r}")
        return z2

    def inverse_jet(self, zt2, side):
        """Jet of z2 = Z^{-1}(z~2) from the jet z~2 (Newton iteration on jets)."""
        z0 = self.inverse(zt2.value, side)
        d = self.dZ(z0)
        z = zt2 * 0.0 + z0
        for _ in range(zt2.order + 2):
            z = z - (self.Z(z) - zt2) / d
        return z


def canonical_map(case: ReductionCase, branch=None) -> CanonicalMap:
    if branch is None:
        if case.id in ("1.5", "1.7") and case.nu == 0:
            branch = "zero"
        elif case.id in ("1.3", "1.5", "1.7"):
            branch = "lo"
        else:
            branch = "main"
    elif case.id in ("1.5", "1.7") and case.nu == 0 and branch in ("lo", "hi"):
        raise ValueError(f"case {case.id} with nu = 0 has a single branch")
    elif case.id in ("1.1", "1.4") and branch in ("lo", "hi"):
        raise ValueError(f"case {case.id} has a single branch")
    return CanonicalMap(case, branch)


def _by_side(seed, side):
    if isinstance(seed, dict):
        if side not in seed:
            raise OutOfBranchError(f"no canonical seed for side {side:+d}")
        return seed[side]
    return seed


def canonical_pull(cmap: CanonicalMap, seed) -> S.JetFunction:
    """w(z1, z2) = w~(s z1, Z(z2)) / W(z1, z2); `seed` is a function or {side: function}."""

    def fn(z1, z2):
        side = cmap.side_of(z2)
        wt = _by_side(seed, side)
        return wt.fn(cmap.z1_sign(side) * z1, cmap.Z(z2)) / cmap.W(z1, z2)

    name = seed.name if not isinstance(seed, dict) else "|".join(v.name for v in seed.values())
    return S.JetFunction(f"pull[{cmap.label()}]({name})", fn)


def push(cmap: CanonicalMap, w, side) -> S.JetFunction:
    """w~(z~1, z~2) = W w at z1 = s z~1, z2 = Z^{-1}(z~2) on the given side."""
    s = cmap.z1_sign(side)

    def fn(zt1, zt2):
        z2 = cmap.inverse_jet(zt2, side) if _is_jet(zt2) else cmap.inverse(zt2, side)
        z1 = s * zt1
        return cmap.W(z1, z2) * w.fn(z1, z2)

    return S.JetFunction(f"push[{cmap.label()}]({w.name})", fn)


def canonical_residual(cmap: CanonicalMap, wt, at, side, reference=False):
    """(raw, relative) of w~_1 - w~_22 - V w~ at (z~1, z~2)."""
    j = wt.jet(tuple(at), 2)
    z2 = cmap.inverse(at[1], side)
    if reference:
        z1 = cmap.reference_z1_sign(side) * float(at[0])
        V = cmap.reference_potential(z1, z2, side)
    else:
        V = cmap.potential(z2, side)
    terms = (j.derivative((1, 0)), -j.derivative((0, 2)), -V * j.value)
    raw = sum(terms)
    return raw, S._ratio(raw, sum(abs(v) for v in terms), j.value)


# -- canonical seeds -----------------------------------------------------------

def _reference(cmap, side):
    lo, hi = cmap.interval(side)
    if cmap.kind == "lo" and side > 0:
        return 0.5 * hi
    if cmap.kind == "hi":
        return 2.0 * lo
    return float(side)


def stationary_seed(cmap: CanonicalMap, side, lam=0.0) -> S.JetFunction:
    """w~ = exp(lam z~1) phi(z~2) with phi'' = (lam - V) phi.

    phi is normalised by phi = 1, phi' = 0 at a reference point of the side and
    carried to the evaluation point by integrating in z2; its Taylor jet there
    follows from the ODE with the jet of V(Z^{-1}(z~2)).
    """
    lam = float(lam)
    side = 1 if side > 0 else -1
    ref = _reference(cmap, side)

    def rhs(z2, state):
        phi, dphi = state
        d = cmap.dZ(z2)
        return [dphi * d, (lam - cmap.potential(z2, side)) * phi * d]

    @lru_cache(maxsize=4096)
    def data(z2):
        if z2 == ref:
            return 1.0, 0.0
        sol = solve_ivp(rhs, (ref, z2), [1.0, 0.0], method="DOP853", rtol=1e-13, atol=1e-15)
        if not sol.success:
            raise ArithmeticError(f"stationary seed integration failed: {sol.message}")
        return float(sol.y[0, -1]), float(sol.y[1, -1])

    def fn(zt1, zt2):
        n = min(a.order for a in (zt1, zt2) if _is_jet(a))
        zt = _val(zt2)
        z2 = cmap.inverse(zt, side)
        phi, dphi = data(z2)
        s = J.seed((zt,), n, ("s",))[0]
        v = cmap.potential(cmap.inverse_jet(s, side), side)
        vk = v.coeffs if _is_jet(v) else np.r_[float(v), np.zeros(n)]
        a = np.zeros(n + 1)
        a[0] = phi
        if n >= 1:
            a[1] = dphi
        for k in range(n - 1):
            a[k + 2] = (lam * a[k] - np.dot(vk[: k + 1], a[k::-1])) / ((k + 2) * (k + 1))
        series = J.Jet(a, n, ("s",), (zt,))
        return J.exp(lam * zt1) * series.compose([zt2])

    return S.JetFunction(f"stationary(lam={lam:g},side={side:+d})", fn)


def parse_canonical_seed(cmap: CanonicalMap, text: str):
    """Canonical seed from text: a heat seed when V = 0, power(...) for case 1.1,
    stationary(lam) anywhere.  Returns a function or {side: function}."""
    name, pos, kw = S._parse_call(text)
    if name == "stationary":
        v = S._bind(name, pos, kw, [("lam", 0.0)])
        return {s: stationary_seed(cmap, s, v["lam"]) for s in cmap.sides()}
    if name in ("kernel", "poly", "expmode"):
        if not cmap.is_free_heat():
            raise ValueError(f"heat seed {name}() needs a free-heat branch (V = 0); use stationary(lam)")
        return S.parse_seed(text)
    if name in ("power", "darboux"):
        theta = S.parse_seed(text)
        if cmap.case.id != "1.1" or abs(theta.mu_tilde - cmap.mu_tilde()) > 1e-12:
            want = f"{cmap.mu_tilde():g}" if cmap.case.id == "1.1" else "no inverse-square seed"
            raise ValueError(f"seed has mu_tilde = {theta.mu_tilde:g}; this branch needs {want}")
        return theta
    raise ValueError(f"unknown canonical seed {name!r}")


# -- table and linkage -----------------------------------------------------------

_SAMPLE = {"1.1": {"mu": 0.5}, "1.3": {"mu": 0.4}, "1.4": {"delta": 1.0},
           "1.5": {"nu": 1.0, "mu": 0.5}, "1.7": {"nu": 1.0, "mu": 0.5}}


def case_table():
    """All cases with their canonical branches, each instantiated at sample parameters."""
    out = []
    for cid, branch in BRANCHES:
        params = dict(_SAMPLE[cid])
        if branch == "zero":
            params["nu"] = 0.0
        cmap = CanonicalMap(ReductionCase(cid, params), branch)
        out.append(cmap)
    return out


def case_subalgebra(case: ReductionCase):
    """Catalog subalgebra whose invariants give the ansatz of `case`."""
    from fractions import Fraction

    from . import lie

    def q(v):
        return Fraction(v).limit_denominator(10**12)

    c = case
    if c.id == "1.1":
        return lie.template("s1.1").instantiate(mu=q(c.mu))
    if c.id == "1.3":
        return lie.template("s1.3").instantiate(mu=q(c.mu))
    if c.id == "1.4":
        return lie.template("s1.4").instantiate(delta=q(c.delta))
    if c.id == "1.5":
        if c.nu == 0:
            return lie.template("s1.6").instantiate(nu=q(c.mu))
        return lie.template("s1.5").instantiate(nu=q(c.nu), mu=q(c.mu))
    if c.nu == 0:
        return lie.template("s1.7_0").instantiate(nu=q(c.mu))
    return lie.template("s1.7").instantiate(nu=q(c.nu), mu=q(c.mu))


def generator_field(v):
    """(tau, xi, eta, c) of the point vector field of an essential algebra element:
    tau d_t + xi d_x + eta d_y + c(x) u d_u, evaluated at (t, x, y)."""
    py, d, k, pt, i = (float(a) for a in v.c)

    def field_at(t, x, y):
        return (pt, d * x + 2.0 * k * x * y, py + d * y + k * y * y, i - k * x)

    return field_at


def invariance_defects(case: ReductionCase, at):
    """Q(z1), Q(z2) and Q(ln|A|) - c at a point for the case's generator Q."""
    s = case_subalgebra(case)
    field_at = generator_field(s.basis[0])
    t, x, y = J.seed(tuple(at), 1, J.TXY)
    z1, z2 = case.invariants(t, x, y)
    lnA = J.log(J.absj(case.multiplier(t, x, y)))
    tau, xi, eta, c = field_at(*(float(a) for a in at))

    def Q(f):
        return tau * f.derivative((1, 0, 0)) + xi * f.derivative((0, 1, 0)) + eta * f.derivative((0, 0, 1))

    return Q(z1), Q(z2), Q(lnA) - c
