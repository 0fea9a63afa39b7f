"""Closed-form solutions and residual evaluators.

Every solution is a jet-evaluable function: it receives coordinate jets and
returns a jet, so derivatives of any order come for free.  Functions of the
canonical variables (z1, z2) are composed with jets in (t, x, y) directly.
"""

from __future__ import annotations

import math

from . import jets as J
from .group import SingularPointError

__all__ = [
    "JetFunction",
    "SolutionExpr",
    "HeatSolution",
    "InvSqSolution",
    "partial",
    "heat_kernel",
    "heat_poly",
    "heat_expmode",
    "heat_const",
    "shifted",
    "stationary_power",
    "invsq_power",
    "darboux_from",
    "as_invsq",
    "fine_residual",
    "heat_residual",
    "invsq_residual",
    "residual",
    "sol_heat1",
    "sol_heat2",
    "sol_invsq",
    "hn_tuple",
    "hn_residuals",
    "gen_solution1",
    "gen_solution2",
    "parse_seed",
]


class JetFunction:
    """A named function evaluated on jets.

    `fn(*jets) -> Jet`.  Adding, subtracting and scaling produce new functions.
    """

    names = ("z1", "z2")

    def __init__(self, name, fn, depth=0, note=""):
        self.name = name
        self.fn = fn
        self.depth = depth
        self.note = note

    def jet(self, point, order=J.DEFAULT_ORDER):
        args = J.seed(point, order + self.depth, self.names)
        out = self.fn(*args)
        if not isinstance(out, J.Jet):
            out = J.Jet.constant(float(out), order, self.names, tuple(point))
        return out.truncate(order)

    def value(self, point):
        return self.jet(point, 0).value

    def __call__(self, *args):
        return self.fn(*args)

    def _new(self, name, fn):
        return type(self)._rebuild(self, name, fn)

    @staticmethod
    def _rebuild(proto, name, fn):
        obj = object.__new__(type(proto))
        obj.__dict__.update(proto.__dict__)
        obj.name, obj.fn, obj.depth = name, fn, 0
        return obj

    def __add__(self, other):
        f, g = self.fn, other.fn
        return self._new(f"({self.name} + {other.name})", lambda *a: f(*a) + g(*a))

    def __sub__(self, other):
        f, g = self.fn, other.fn
        return self._new(f"({self.name} - {other.name})", lambda *a: f(*a) - g(*a))

    def __mul__(self, c):
        f, c = self.fn, float(c)
        return self._new(f"{c!r}*{self.name}", lambda *a: c * f(*a))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class SolutionExpr(JetFunction):
    """Function of (t, x, y) claimed to solve u_t + x u_y = x^2 u_xx."""

    names = J.TXY

    def __init__(self, name, fn, depth=0, note="", pde="fine"):
        super().__init__(name, fn, depth, note)
        self.pde = pde


class HeatSolution(JetFunction):
    """theta(z1, z2) with theta_1 = theta_22."""


class InvSqSolution(JetFunction):
    """vartheta(z1, z2) with vartheta_1 = vartheta_22 - mu_tilde z2^-2 vartheta."""

    def __init__(self, name, fn, mu_tilde, depth=0, note=""):
        super().__init__(name, fn, depth, note)
        self.mu_tilde = float(mu_tilde)

    def __add__(self, other):
        _same_mu(self, other)
        return super().__add__(other)

    def __sub__(self, other):
        _same_mu(self, other)
        return super().__sub__(other)


def _same_mu(a, b):
    if not isinstance(b, InvSqSolution) or abs(a.mu_tilde - b.mu_tilde) > 1e-12:
        raise ValueError("cannot combine inverse-square solutions with different potentials")


def _jets(args):
    return [a for a in args if isinstance(a, J.Jet)]


def partial(f: JetFunction, var: int, name=None) -> JetFunction:
    """d f / d(var-th argument), as a function that composes with any argument jets."""

    def fn(*args):
        js = _jets(args)
        n = min(a.order for a in js)
        base = tuple(a.value if isinstance(a, J.Jet) else float(a) for a in args)
        inner = f.fn(*J.seed(base, n + 1 + f.depth, f.names)).diff(var)
        return inner.truncate(n).compose(list(args))

    return f._new(name or f"d{var + 1}({f.name})", fn)


# -- heat solutions ----------------------------------------------------------

def heat_kernel(s0=1.0, x0=0.0) -> HeatSolution:
    s0, x0 = float(s0), float(x0)

    def fn(z1, z2):
        T = z1 + s0
        if T.value <= 0:
            raise SingularPointError(f"heat kernel needs z1 + s0 > 0 (got {T.value!r})")
        return J.power(T, -0.5) * J.exp(-((z2 - x0) ** 2) / (4.0 * T))

    return HeatSolution(f"kernel(s0={s0:g},x0={x0:g})", fn)


def _heat_poly_terms(k):
    # H_k = sum_j k!/(j!(k-2j)!) z1^j z2^(k-2j)
    return [(math.factorial(k) / (math.factorial(j) * math.factorial(k - 2 * j)), j, k - 2 * j)
            for j in range(k // 2 + 1)]


def heat_poly(k: int) -> HeatSolution:
    if k < 0 or int(k) != k:
        raise ValueError("heat polynomial degree must be a nonnegative integer")
    terms = _heat_poly_terms(int(k))

    def fn(z1, z2):
        out = 0.0
        for c, a, b in terms:
            out = out + c * (z1 ** a) * (z2 ** b)
        return out

    return HeatSolution(f"poly({int(k)})", fn)


def heat_const(c=1.0) -> HeatSolution:
    c = float(c)
    return HeatSolution(f"const({c:g})", lambda z1, z2: c + 0.0 * z1)


def heat_expmode(lam) -> HeatSolution:
    lam = float(lam)
    return HeatSolution(f"expmode({lam:g})", lambda z1, z2: J.exp(lam * lam * z1 + lam * z2))


def shifted(theta: JetFunction, dz1=0.0, dz2=0.0) -> JetFunction:
    f = theta.fn
    return theta._new(f"{theta.name}(z1-{dz1:g},z2-{dz2:g})", lambda z1, z2: f(z1 - dz1, z2 - dz2))


# -- inverse-square potential ------------------------------------------------

def _exponent(mu_tilde, branch):
    disc = 1.0 + 4.0 * mu_tilde
    if disc < 0:
        raise ValueError(f"1 + 4*mu_tilde = {disc!r} is negative; no real power solution")
    return (1.0 + (1 if branch >= 0 else -1) * math.sqrt(disc)) / 2.0


def _positive_z2(z2):
    if z2.value <= 0:
        raise SingularPointError("inverse-square solutions are evaluated at z2 > 0")


def stationary_power(mu_tilde, branch=1) -> InvSqSolution:
    p = _exponent(float(mu_tilde), branch)

    def fn(z1, z2):
        _positive_z2(z2)
        return J.power(z2, p) + 0.0 * z1

    return InvSqSolution(f"power(mu={mu_tilde:g},branch={'+' if branch >= 0 else '-'})", fn, mu_tilde)


def invsq_power(mu_tilde, branch=1, s0=None, poly=False) -> InvSqSolution:
    """z2^p times a radial heat solution in dimension 2p + 1.

    With p(p - 1) = mu_tilde:  s0 given -> z2^p T^(-p-1/2) exp(-z2^2/(4T)), T = z1 + s0;
    poly -> z2^p (z2^2 + 2(2p + 1) z1); neither -> the stationary power z2^p.
    """
    if s0 is None and not poly:
        return stationary_power(mu_tilde, branch)
    p = _exponent(float(mu_tilde), branch)
    sign = "+" if branch >= 0 else "-"
    if s0 is not None:
        s0 = float(s0)

        def fn(z1, z2):
            _positive_z2(z2)
            T = z1 + s0
            if T.value <= 0:
                raise SingularPointError("radial kernel needs z1 + s0 > 0")
            return J.power(z2, p) * J.power(T, -p - 0.5) * J.exp(-(z2 * z2) / (4.0 * T))

        return InvSqSolution(f"power(mu={mu_tilde:g},branch={sign},s0={s0:g})", fn, mu_tilde)

    def fn(z1, z2):
        _positive_z2(z2)
        return J.power(z2, p) * (z2 * z2 + 2.0 * (2 * p + 1) * z1)

    return InvSqSolution(f"power(mu={mu_tilde:g},branch={sign},poly=1)", fn, mu_tilde)


def as_invsq(theta: HeatSolution) -> InvSqSolution:
    """A free-heat solution viewed as the mu_tilde = 0 member of the inverse-square class."""
    return InvSqSolution(theta.name, theta.fn, 0.0, theta.depth)


def darboux_from(v: InvSqSolution) -> InvSqSolution:
    """w = v_2 - v/(2 z2): maps v_1 = v_22 + z2^-2 v/4 to w_1 = w_22 - (3/4) z2^-2 w."""
    if abs(v.mu_tilde + 0.25) > 1e-12:
        raise ValueError("darboux_from needs a seed of the mu_tilde = -1/4 equation")
    v2 = partial(v, 1)
    f, g = v.fn, v2.fn

    def fn(z1, z2):
        _positive_z2(z2)
        return g(z1, z2) - f(z1, z2) / (2.0 * z2)

    return InvSqSolution(f"darboux({v.name})", fn, 0.75)


# -- residuals ---------------------------------------------------------------

DEGENERATE = 1e-10


def _ratio(raw, scale, ref=0.0):
    """|raw| / scale; when every term is roundoff-sized next to the function value
    (e.g. u linear in x, all terms zero in exact arithmetic) the value sets the scale."""
    ref = abs(ref)
    if scale <= DEGENERATE * ref:
        scale = ref
    return 0.0 if scale == 0 else abs(raw) / scale


def fine_residual(f: SolutionExpr, at):
    """(raw, relative) residual of u_t + x u_y - x^2 u_xx at (t, x, y)."""
    u = f.jet(at, 2)
    x = float(at[1])
    terms = (u.derivative((1, 0, 0)), x * u.derivative((0, 0, 1)), -x * x * u.derivative((0, 2, 0)))
    raw = sum(terms)
    return raw, _ratio(raw, sum(abs(v) for v in terms), u.value)


def heat_residual(f: JetFunction, at):
    w = f.jet(at, 2)
    terms = (w.derivative((1, 0)), -w.derivative((0, 2)))
    raw = sum(terms)
    return raw, _ratio(raw, sum(abs(v) for v in terms), w.value)


def invsq_residual(f: InvSqSolution, at, mu_tilde=None):
    mu = f.mu_tilde if mu_tilde is None else float(mu_tilde)
    w = f.jet(at, 2)
    z2 = float(at[1])
    terms = (w.derivative((1, 0)), -w.derivative((0, 2)), mu * w.value / (z2 * z2))
    raw = sum(terms)
    return raw, _ratio(raw, sum(abs(v) for v in terms), w.value)


def residual(f, at):
    if isinstance(f, SolutionExpr):
        return fine_residual(f, at)
    if isinstance(f, InvSqSolution):
        return invsq_residual(f, at)
    if isinstance(f, HeatSolution):
        return heat_residual(f, at)
    raise TypeError(f"no residual defined for {type(f).__name__}")


# -- solutions of the fine equation ------------------------------------------

def _branch(x, eps):
    s = J.sgn(x)
    if eps is not None and s != eps:
        raise SingularPointError(f"point with sgn(x) = {s:+g} lies outside the branch eps = {eps:+g}")
    return s


def sol_heat1(theta: JetFunction, eps=None) -> SolutionExpr:
    """u = exp(-3t/16) |x|^(1/4) theta(eps y, 2 sqrt|x|), eps = sgn x."""
    f = theta.fn

    def fn(t, x, y):
        e = _branch(x, eps)
        ax = J.absj(x)
        return J.exp(-3.0 * t / 16.0) * J.power(ax, 0.25) * f(e * y, 2.0 * J.sqrt(ax))

    return SolutionExpr(f"sol_heat1({theta.name})", fn, note="heat-1")


def sol_heat2(theta: JetFunction) -> SolutionExpr:
    """u = exp(-t/4) |x|^(1/2) theta(t, ln|x|)."""
    f = theta.fn

    def fn(t, x, y):
        ax = J.absj(x)
        return J.exp(-t / 4.0) * J.sqrt(ax) * f(t, J.log(ax))

    return SolutionExpr(f"sol_heat2({theta.name})", fn, note="heat-2")


def sol_invsq(mu, vartheta: InvSqSolution, eps=None) -> SolutionExpr:
    """u = exp(mu t) |x|^(1/4) vartheta(eps y, 2 sqrt|x|) with mu_tilde = 4 mu + 3/4."""
    mu = float(mu)
    if abs(vartheta.mu_tilde - (4.0 * mu + 0.75)) > 1e-12:
        raise ValueError(f"seed has mu_tilde = {vartheta.mu_tilde!r}, expected 4*mu + 3/4 = {4 * mu + 0.75!r}")
    f = vartheta.fn

    def fn(t, x, y):
        e = _branch(x, eps)
        ax = J.absj(x)
        return J.exp(mu * t) * J.power(ax, 0.25) * f(e * y, 2.0 * J.sqrt(ax))

    return SolutionExpr(f"sol_invsq(mu={mu:g},{vartheta.name})", fn, note="inverse-square")


def hn_tuple(n: int, theta: JetFunction, eps=1):
    """(w~^0, ..., w~^(n-1)), w~^s = eps^s e^((n-s-1) z2) prod_{k=n-s}^{n-1} (2k d2 + k^2) theta."""
    if n < 1:
        raise ValueError("n must be at least 1")
    eps = 1 if eps >= 0 else -1
    out = []
    for s in range(n):
        g = theta
        for k in range(n - s, n):
            dg = partial(g, 1)
            a, b, kk = dg.fn, g.fn, k
            g = theta._new(f"(2*{k}*d2+{k * k})[{g.name}]",
                           lambda z1, z2, a=a, b=b, kk=kk: 2.0 * kk * a(z1, z2) + kk * kk * b(z1, z2))
        inner, c, m = g.fn, float(eps ** s), n - s - 1

        def fn(z1, z2, inner=inner, c=c, m=m):
            return c * J.exp(m * z2) * inner(z1, z2)

        out.append(HeatSolution(f"w~{s}[n={n}]({theta.name})", fn))
    return out


def hn_residuals(tup, at, eps=1):
    """Relative residuals of w~^s_1 - w~^s_22 + eps e^{z2} w~^(s+1) for each s."""
    res = []
    z2 = float(at[1])
    for s, w in enumerate(tup):
        j = w.jet(at, 2)
        nxt = tup[s + 1].value(at) if s + 1 < len(tup) else 0.0
        terms = (j.derivative((1, 0)), -j.derivative((0, 2)), eps * math.exp(z2) * nxt)
        raw = sum(terms)
        res.append((raw, _ratio(raw, sum(abs(v) for v in terms), j.value)))
    return res


def gen_solution1(n: int, theta: JetFunction) -> SolutionExpr:
    """u = eps^(n-1) sum_s y^s/s! e^(-t/4) |x|^(1/2) w~^s(t, ln|x|), eps = sgn x.

    The factor eps^(n-1) makes u equal to K^(n-1) sol_heat2(theta) on both
    half-planes; equivalently u = e^(-t/4) |x|^(1/2) sum_s y^s x^(n-1-s)/s! (...)theta.
    """
    tuples = {1: hn_tuple(n, theta, 1), -1: hn_tuple(n, theta, -1)}

    def fn(t, x, y):
        e = int(J.sgn(x))
        ax = J.absj(x)
        z2 = J.log(ax)
        pref = J.exp(-t / 4.0) * J.sqrt(ax)
        total = 0.0
        for s, w in enumerate(tuples[e]):
            total = total + (y ** s) * (1.0 / math.factorial(s)) * w.fn(t, z2)
        return (e ** (n - 1)) * pref * total

    return SolutionExpr(f"gen_solution1(n={n},{theta.name})", fn, note="generalized-1")


def gen_solution2(v: InvSqSolution) -> SolutionExpr:
    """u = |x|^(1/4) (t v_2 - (t/4 + 1) |x|^(-1/2) v) at (eps y, 2 sqrt|x|).

    v solves v_1 = v_22 + z2^-2 v/4; then u solves the fine equation and the
    t-coefficient is the Darboux image v_2 - v/(2 z2).
    """
    if abs(v.mu_tilde + 0.25) > 1e-12:
        raise ValueError("gen_solution2 needs a seed of the mu_tilde = -1/4 equation")
    f, f2 = v.fn, partial(v, 1).fn

    def fn(t, x, y):
        e = J.sgn(x)
        ax = J.absj(x)
        z1, z2 = e * y, 2.0 * J.sqrt(ax)
        return J.power(ax, 0.25) * (t * f2(z1, z2) - (t / 4.0 + 1.0) * J.power(ax, -0.5) * f(z1, z2))

    return SolutionExpr(f"gen_solution2({v.name})", fn, note="generalized-2")


# -- seed mini-language ------------------------------------------------------

def _parse_call(text):
    import re

    m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*\(\s*(.*?)\s*\)\s*", text)
    if not m:
        raise ValueError(f"malformed seed {text!r}; expected name(args)")
    name, body = m.group(1), m.group(2)
    pos, kw = [], {}
    num = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
    if body:
        for item in body.split(","):
            item = item.strip()
            mm = re.fullmatch(rf"([A-Za-z_][A-Za-z_0-9]*)\s*=\s*({num})", item)
            if mm:
                if mm.group(1) in kw:
                    raise ValueError(f"argument {mm.group(1)!r} given twice in {text!r}")
                kw[mm.group(1)] = float(mm.group(2))
            elif re.fullmatch(num, item):
                if kw:
                    raise ValueError(f"positional argument after keyword in {text!r}")
                pos.append(float(item))
            else:
                raise ValueError(f"bad seed argument {item!r} in {text!r}")
    return name, pos, kw


def _bind(name, pos, kw, spec):
    names = [n for n, _ in spec]
    if len(pos) > len(names):
        raise ValueError(f"{name}() takes at most {len(names)} arguments")
    vals = dict(zip(names, pos))
    for k, v in kw.items():
        if k not in names:
            raise ValueError(f"{name}() has no argument {k!r}")
        if k in vals:
            raise ValueError(f"{name}(): argument {k!r} given twice")
        vals[k] = v
    for n, default in spec:
        if n not in vals:
            if default is _REQUIRED:
                raise ValueError(f"{name}(): missing argument {n!r}")
            vals[n] = default
    return vals


_REQUIRED = object()


def parse_seed(text: str) -> JetFunction:
    """kernel(s0,x0) | poly(k) | expmode(lam) | power(mu,branch,s0,poly) | darboux(s0,poly)."""
    name, pos, kw = _parse_call(text)
    if name == "kernel":
        v = _bind(name, pos, kw, [("s0", 1.0), ("x0", 0.0)])
        return heat_kernel(v["s0"], v["x0"])
    if name == "poly":
        v = _bind(name, pos, kw, [("k", _REQUIRED)])
        if not float(v["k"]).is_integer():
            raise ValueError("poly(k) needs an integer degree")
        return heat_poly(int(v["k"]))
    if name == "expmode":
        v = _bind(name, pos, kw, [("lam", _REQUIRED)])
        return heat_expmode(v["lam"])
    if name == "power":
        v = _bind(name, pos, kw, [("mu", _REQUIRED), ("branch", 1.0), ("s0", None), ("poly", 0.0)])
        return invsq_power(v["mu"], int(v["branch"]), v["s0"], bool(v["poly"]))
    if name == "darboux":
        v = _bind(name, pos, kw, [("s0", None), ("poly", 0.0)])
        return darboux_from(invsq_power(-0.25, 1, v["s0"], bool(v["poly"])))
    raise ValueError(f"unknown seed family {name!r}; expected kernel, poly, expmode, power or darboux")
