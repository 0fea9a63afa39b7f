"""Truncated multivariate Taylor arithmetic ("jets") in up to three variables.

A jet of order N at a base point stores the Taylor coefficients
c[a] = d^a f(base) / a!  for every multi-index a with |a| <= N, in dense
graded order.  Arithmetic on jets is arithmetic on truncated power series,
so every derivative needed by a residual is exact up to roundoff.
"""

from __future__ import annotations

import math
from functools import lru_cache
from numbers import Real

import numpy as np

__all__ = [
    "Jet",
    "JetDomainError",
    "JetOrderError",
    "DEFAULT_ORDER",
    "jet_var",
    "seed",
    "jet_apply_elem",
    "jet_derivative",
    "exp",
    "log",
    "sqrt",
    "power",
    "sin",
    "cos",
    "arctan",
    "recip",
    "absj",
    "sgn",
]

DEFAULT_ORDER = 6
TXY = ("t", "x", "y")
Z12 = ("z1", "z2")


class JetDomainError(ValueError):
    """Elementary function applied outside its real domain."""


class JetOrderError(ValueError):
    """Derivative requested beyond the order the jet was built with."""


# -- index tables ------------------------------------------------------------

@lru_cache(maxsize=None)
def _indices(arity: int, order: int):
    out = []
    for deg in range(order + 1):
        out.extend(_of_degree(arity, deg))
    return tuple(out)


def _of_degree(arity, deg):
    if arity == 1:
        return [(deg,)]
    res = []
    for first in range(deg, -1, -1):
        for rest in _of_degree(arity - 1, deg - first):
            res.append((first,) + rest)
    return res


@lru_cache(maxsize=None)
def _position(arity: int, order: int):
    return {a: i for i, a in enumerate(_indices(arity, order))}


@lru_cache(maxsize=None)
def _product_table(arity: int, order: int):
    idx = _indices(arity, order)
    pos = _position(arity, order)
    ii, jj, kk = [], [], []
    for i, a in enumerate(idx):
        da = sum(a)
        for j, b in enumerate(idx):
            if da + sum(b) > order:
                continue
            ii.append(i)
            jj.append(j)
            kk.append(pos[tuple(p + q for p, q in zip(a, b))])
    return np.array(ii), np.array(jj), np.array(kk)


@lru_cache(maxsize=None)
def _diff_table(arity: int, order: int, var: int):
    # (d/dv f)[b] = (b_v + 1) * f[b + e_v]; result has order - 1
    src = _position(arity, order)
    dst = _indices(arity, order - 1)
    take, fac = [], []
    for b in dst:
        a = list(b)
        a[var] += 1
        take.append(src[tuple(a)])
        fac.append(b[var] + 1)
    return np.array(take, dtype=int), np.array(fac, dtype=float)


@lru_cache(maxsize=None)
def _factorials(arity: int, order: int):
    return np.array([math.prod(math.factorial(k) for k in a) for a in _indices(arity, order)], dtype=float)


def _size(arity, order):
    return math.comb(order + arity, arity)


# -- the jet type ------------------------------------------------------------

class Jet:
    """Order-N Taylor jet over named variables.

    Instances are immutable by convention; every operation returns a new jet.
    Binary operations between jets of different orders truncate to the
    smaller order.
    """

    __slots__ = ("coeffs", "order", "names", "base")
    __array_priority__ = 1000

    def __init__(self, coeffs, order, names=TXY, base=None):
        self.names = tuple(names)
        self.order = int(order)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (_size(len(self.names), self.order),):
            raise ValueError("coefficient vector has the wrong length for this arity/order")
        self.coeffs = coeffs
        self.base = tuple(base) if base is not None else (None,) * len(self.names)

    # construction helpers
    @classmethod
    def constant(cls, value, order, names=TXY, base=None):
        c = np.zeros(_size(len(names), order))
        c[0] = value
        return cls(c, order, names, base)

    @property
    def arity(self):
        return len(self.names)

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def _like(self, coeffs, order=None, base=None):
        return Jet(coeffs, self.order if order is None else order, self.names,
                   self.base if base is None else base)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetOrderError(f"cannot raise a jet of order {self.order} to order {order}")
        if order == self.order:
            return self
        return self._like(self.coeffs[: _size(self.arity, order)].copy(), order)

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.names != self.names:
                raise ValueError(f"jets over different variables: {self.names} vs {other.names}")
            base = _merge_base(self.base, other.base)
            n = min(self.order, other.order)
            return self.truncate(n), other.truncate(n), base
        if isinstance(other, Real):
            return self, None, self.base
        return NotImplemented

    # arithmetic
    def __add__(self, other):
        co = self._coerce(other)
        if co is NotImplemented:
            return NotImplemented
        a, b, base = co
        if b is None:
            c = a.coeffs.copy()
            c[0] += float(other)
            return a._like(c, base=base)
        return a._like(a.coeffs + b.coeffs, base=base)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        co = self._coerce(other)
        if co is NotImplemented:
            return NotImplemented
        a, b, base = co
        if b is None:
            return a._like(a.coeffs * float(other), base=base)
        i, j, k = _product_table(a.arity, a.order)
        c = np.bincount(k, weights=a.coeffs[i] * b.coeffs[j], minlength=a.coeffs.size)
        return a._like(c, base=base)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * recip(other)
        if isinstance(other, Real):
            return self * (1.0 / float(other))
        return NotImplemented

    def __rtruediv__(self, other):
        return recip(self) * other

    def __pow__(self, r):
        if isinstance(r, int) and r >= 0:
            out = Jet.constant(1.0, self.order, self.names, self.base)
            b = self
            while r:
                if r & 1:
                    out = out * b
                r >>= 1
                if r:
                    b = b * b
            return out
        return power(self, r)

    # calculus
    def diff(self, var) -> "Jet":
        """Partial derivative as a jet of order N - 1."""
        v = self._var_index(var)
        if self.order < 1:
            raise JetOrderError("cannot differentiate an order-0 jet")
        take, fac = _diff_table(self.arity, self.order, v)
        return self._like(self.coeffs[take] * fac, order=self.order - 1)

    def derivative(self, alpha) -> float:
        return jet_derivative(self, alpha)

    def _var_index(self, var):
        if isinstance(var, int):
            if not 0 <= var < self.arity:
                raise ValueError(f"variable index {var} out of range")
            return var
        try:
            return self.names.index(var)
        except ValueError:
            raise ValueError(f"unknown variable {var!r}; jet variables are {self.names}") from None

    def compose(self, args) -> "Jet":
        """Substitute jets `args` (one per variable of self) into this Taylor polynomial.

        The constant terms of `args` are taken to be the base point of self.
        """
        if len(args) != self.arity:
            raise ValueError("compose needs one argument per variable")
        ref = next(a for a in args if isinstance(a, Jet))
        n = min(self.order, min(a.order for a in args if isinstance(a, Jet)))
        hs = []
        for a in args:
            if isinstance(a, Jet):
                a = a.truncate(n)
                hs.append(a - a.value)
            else:
                hs.append(Jet.constant(0.0, n, ref.names, ref.base))
        powers = []
        for h in hs:
            p = [Jet.constant(1.0, n, ref.names, ref.base)]
            for _ in range(n):
                p.append(p[-1] * h)
            powers.append(p)
        out = np.zeros(_size(ref.arity, n))
        for c, alpha in zip(self.coeffs, _indices(self.arity, self.order)):
            if c == 0.0 or sum(alpha) > n:
                continue
            term = powers[0][alpha[0]]
            for v in range(1, self.arity):
                if alpha[v]:
                    term = term * powers[v][alpha[v]]
            out += c * term.coeffs
        return Jet(out, n, ref.names, ref.base)

    def __repr__(self):
        return f"Jet(order={self.order}, names={self.names}, value={self.value!r})"


def _merge_base(a, b):
    out = []
    for p, q in zip(a, b):
        if p is None:
            out.append(q)
        elif q is None or p == q:
            out.append(p)
        else:
            raise ValueError("jets at different base points")
    return tuple(out)


# -- constructors ------------------------------------------------------------

def jet_var(which, value, order=DEFAULT_ORDER, names=TXY):
    """Jet of the coordinate function `which` with constant term `value`."""
    if order < 2:
        raise ValueError("jet order must be at least 2")
    names = tuple(names)
    if which not in names:
        raise ValueError(f"unknown variable {which!r}; expected one of {names}")
    v = names.index(which)
    c = np.zeros(_size(len(names), order))
    c[0] = value
    e = [0] * len(names)
    e[v] = 1
    c[_position(len(names), order)[tuple(e)]] = 1.0
    base = tuple(float(value) if i == v else None for i in range(len(names)))
    return Jet(c, order, names, base)


def seed(point, order=DEFAULT_ORDER, names=None):
    """Coordinate jets for every variable at `point`."""
    point = tuple(float(p) for p in point)
    if names is None:
        names = TXY if len(point) == 3 else Z12 if len(point) == 2 else ("z",)
    if len(names) != len(point):
        raise ValueError("point and variable names differ in length")
    arity = len(names)
    out = []
    for i in range(arity):
        c = np.zeros(_size(arity, order))
        c[0] = point[i]
        if order >= 1:
            e = [0] * arity
            e[i] = 1
            c[_position(arity, order)[tuple(e)]] = 1.0
        out.append(Jet(c, order, names, point))
    return tuple(out)


def jet_derivative(a: Jet, alpha) -> float:
    """d^alpha a at the base point; alpha is a tuple of exponents or a dict name->count."""
    if isinstance(alpha, dict):
        t = [0] * a.arity
        for k, m in alpha.items():
            t[a._var_index(k)] += m
        alpha = tuple(t)
    alpha = tuple(alpha) + (0,) * (a.arity - len(tuple(alpha)))
    if len(alpha) != a.arity or any(k < 0 for k in alpha):
        raise ValueError(f"bad multi-index {alpha}")
    if sum(alpha) > a.order:
        raise JetOrderError(f"derivative of total order {sum(alpha)} requested from a jet of order {a.order}")
    i = _position(a.arity, a.order)[alpha]
    return float(a.coeffs[i] * math.prod(math.factorial(k) for k in alpha))


# -- elementary functions ----------------------------------------------------

def _series(name, a0, n, r=None):
    """Coefficients d_k = f^(k)(a0)/k!, k = 0..n, of a univariate function."""
    d = np.zeros(n + 1)
    if name == "exp":
        e = math.exp(a0)
        for k in range(n + 1):
            d[k] = e / math.factorial(k)
    elif name == "ln":
        if a0 <= 0:
            raise JetDomainError(f"ln: argument {a0!r} is not positive")
        d[0] = math.log(a0)
        for k in range(1, n + 1):
            d[k] = (-1) ** (k + 1) / (k * a0 ** k)
    elif name == "pow":
        integral = float(r).is_integer()
        if not integral and a0 <= 0:
            raise JetDomainError(f"pow({r}): argument {a0!r} is not positive")
        if a0 == 0 and (not integral or r < 0):
            raise JetDomainError(f"pow({r}): argument is zero")
        binom = 1.0
        for k in range(n + 1):
            if a0 == 0:
                d[k] = binom if k == r else 0.0
            else:
                d[k] = binom * a0 ** (r - k)
            binom *= (r - k) / (k + 1)
    elif name in ("sin", "cos"):
        s, c = math.sin(a0), math.cos(a0)
        for k in range(n + 1):
            # sin(a0+h) = s cos h + c sin h ; cos(a0+h) = c cos h - s sin h
            ch = (-1) ** (k // 2) / math.factorial(k) if k % 2 == 0 else 0.0
            sh = (-1) ** (k // 2) / math.factorial(k) if k % 2 == 1 else 0.0
            d[k] = s * ch + c * sh if name == "sin" else c * ch - s * sh
    elif name == "arctan":
        q0, q1 = 1 + a0 * a0, 2 * a0
        g = np.zeros(n)
        for m in range(n):
            acc = 0.0
            if m >= 1:
                acc += q1 * g[m - 1]
            if m >= 2:
                acc += g[m - 2]
            g[m] = (1.0 - acc) / q0 if m == 0 else -acc / q0
        d[0] = math.atan(a0)
        for k in range(1, n + 1):
            d[k] = g[k - 1] / k
    else:
        raise ValueError(f"unknown elementary function {name!r}")
    return d


def _compose_series(d, a: Jet) -> Jet:
    h = a - a.value
    out = Jet.constant(d[-1], a.order, a.names, a.base)
    for k in range(len(d) - 2, -1, -1):
        out = out * h + d[k]
    return out


def jet_apply_elem(f, a, r=None):
    """Apply an elementary function to a jet (or a plain number).

    `f` is one of exp, ln, sqrt, pow, sin, cos, arctan, recip; `pow` takes the
    real exponent `r`.
    """
    if f == "sqrt":
        f, r = "pow", 0.5
    elif f == "recip":
        f, r = "pow", -1
    if f == "pow" and r is None:
        raise ValueError("pow needs an exponent")
    if not isinstance(a, Jet):
        return float(_series(f, float(a), 0, r)[0])
    return _compose_series(_series(f, a.value, a.order, r), a)


def exp(a):
    return jet_apply_elem("exp", a)


def log(a):
    return jet_apply_elem("ln", a)


def sqrt(a):
    return jet_apply_elem("sqrt", a)


def power(a, r):
    return jet_apply_elem("pow", a, r)


def sin(a):
    return jet_apply_elem("sin", a)


def cos(a):
    return jet_apply_elem("cos", a)


def arctan(a):
    return jet_apply_elem("arctan", a)


def recip(a):
    if isinstance(a, Jet) and a.value == 0.0:
        raise JetDomainError("recip: jet has zero constant term")
    return jet_apply_elem("recip", a)


def sgn(a) -> float:
    v = a.value if isinstance(a, Jet) else float(a)
    if v == 0:
        raise JetDomainError("sgn: argument is zero")
    return 1.0 if v > 0 else -1.0


def absj(a):
    """|a| on the branch of the base value; zero base value is a domain error."""
    return a * sgn(a)
