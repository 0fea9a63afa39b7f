"""The essential Lie invariance algebra g^ess = <Py, D, K, Pt, I>.

Vectors are coefficient 5-tuples over the ordered basis (Py, D, K, Pt, I).
Coefficients may be ints/Fractions (exact) or floats.  The nonzero brackets
are [Py, D] = Py, [Py, K] = 2D, [D, K] = K; Pt and I are central.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational, Real

import numpy as np
import sympy

BASIS_NAMES = ("Py", "D", "K", "Pt", "I")
FLOAT_RANK_TOL = 1e-10


class SubalgebraError(ValueError):
    pass


class CatalogError(ValueError):
    pass


def _num(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (bool, np.integer)):
        return int(v)
    return v


def _is_exact(values):
    return all(isinstance(v, Rational) for v in values)


@dataclass(frozen=True)
class EssVector:
    c: tuple

    def __init__(self, *coeffs):
        if len(coeffs) == 1 and isinstance(coeffs[0], (tuple, list)):
            coeffs = tuple(coeffs[0])
        if len(coeffs) != 5:
            raise ValueError("an EssVector has exactly five coefficients")
        object.__setattr__(self, "c", tuple(_num(v) for v in coeffs))

    def __add__(self, other):
        return EssVector(tuple(a + b for a, b in zip(self.c, other.c)))

    def __sub__(self, other):
        return EssVector(tuple(a - b for a, b in zip(self.c, other.c)))

    def __neg__(self):
        return EssVector(tuple(-a for a in self.c))

    def __mul__(self, s):
        if not isinstance(s, Real):
            return NotImplemented
        return EssVector(tuple(_num(s) * a for a in self.c))

    __rmul__ = __mul__

    @property
    def f_part(self):
        return self.c[:3]

    @property
    def z_part(self):
        return self.c[3:]

    def is_zero(self, tol=0.0):
        return all(abs(a) <= tol for a in self.c)

    def isclose(self, other, tol=1e-12):
        return all(abs(a - b) <= tol for a, b in zip(self.c, other.c))

    def as_floats(self):
        return np.array([float(a) for a in self.c])

    def __str__(self):
        parts = []
        for coef, name in zip(self.c, BASIS_NAMES):
            if coef == 0:
                continue
            if coef == 1:
                parts.append(("+", name))
            elif coef == -1:
                parts.append(("-", name))
            else:
                sign = "-" if coef < 0 else "+"
                parts.append((sign, f"{_fmt(abs(coef))}*{name}"))
        if not parts:
            return "0"
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out


def _fmt(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return str(v.numerator)
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


PY = EssVector(1, 0, 0, 0, 0)
D = EssVector(0, 1, 0, 0, 0)
K = EssVector(0, 0, 1, 0, 0)
PT = EssVector(0, 0, 0, 1, 0)
I = EssVector(0, 0, 0, 0, 1)
ZERO = EssVector(0, 0, 0, 0, 0)
BASIS = (PY, D, K, PT, I)
QPLUS = PY + K
QMINUS = PY - K


def bracket(a: EssVector, b: EssVector) -> EssVector:
    p1, d1, k1 = a.f_part
    p2, d2, k2 = b.f_part
    return EssVector(
        p1 * d2 - d1 * p2,
        2 * (p1 * k2 - k1 * p2),
        d1 * k2 - k1 * d2,
        0,
        0,
    )


# -- sl(2) realization -------------------------------------------------------

_E = np.array([[0.0, 1.0], [0.0, 0.0]])
_H = np.array([[1.0, 0.0], [0.0, -1.0]])
_F = np.array([[0.0, 0.0], [1.0, 0.0]])
_S = np.diag([1.0, -1.0])


def sl2_realize(a: EssVector) -> np.ndarray:
    """Py -> e, D -> -h/2, K -> -f.  Bracket preserving."""
    if any(v != 0 for v in a.z_part):
        raise ValueError("sl2_realize: element has a nonzero central part")
    p, d, k = (float(v) for v in a.f_part)
    return p * _E - 0.5 * d * _H - k * _F


def sl2_unrealize(m) -> EssVector:
    m = np.asarray(m, dtype=float)
    if abs(m[0, 0] + m[1, 1]) > 1e-9 * max(1.0, np.abs(m).max()):
        raise ValueError("matrix is not trace free")
    return EssVector(m[0, 1], -2.0 * m[0, 0], -m[1, 0], 0.0, 0.0)


def flow_matrix(a: EssVector) -> np.ndarray:
    """Generator of the Moebius flow y -> (alpha y + beta)/(gamma y + delta) of a in f.

    This is the realization Py -> e, D -> h/2, K -> -f, which is an
    anti-homomorphism (left action); expm(eps * flow_matrix(X)) is the
    matrix of the one-parameter subgroup X(eps).
    """
    return -_S @ sl2_realize(a) @ _S


def pushforward(g, a: EssVector) -> EssVector:
    """Pushforward of a by the point transformation g (needs g.M; no additive part).

    Geometrically g_* X = d(Phi_g) X o Phi_g^{-1}.  In the fixed realization
    this is conjugation by S M S with S = diag(1, -1), i.e. by M with its
    off-diagonal entries negated.  Central components are untouched.
    """
    if getattr(g, "f", None) is not None:
        raise ValueError("pushforward is defined for essential elements only")
    M = np.asarray(g.M, dtype=float)
    Mp = _S @ M @ _S
    X = sl2_realize(EssVector(*a.f_part, 0, 0))
    Y = Mp @ X @ np.linalg.inv(Mp)
    y = sl2_unrealize(Y)
    return EssVector(*y.f_part, a.c[3], a.c[4])


# -- spans -------------------------------------------------------------------

def _matrix(vectors):
    return [list(v.c) for v in vectors]


def rank(vectors) -> int:
    vectors = list(vectors)
    if not vectors:
        return 0
    flat = [x for v in vectors for x in v.c]
    if _is_exact(flat):
        return sympy.Matrix([[sympy.Rational(x) for x in v.c] for v in vectors]).rank()
    arr = np.array([v.as_floats() for v in vectors])
    s = np.linalg.svd(arr, compute_uv=False)
    scale = max(1.0, s[0]) if s.size else 1.0
    return int(np.sum(s > FLOAT_RANK_TOL * scale))


def in_span(v: EssVector, vectors) -> bool:
    return rank(list(vectors) + [v]) == rank(vectors)


def _nullspace(rows, exact):
    """Basis of {x : rows @ x = 0} as a list of 5-tuples."""
    if not rows:
        return [tuple(1 if i == j else 0 for i in range(5)) for j in range(5)]
    if exact:
        m = sympy.Matrix([[sympy.Rational(x) for x in r] for r in rows])
        out = []
        for v in m.nullspace():
            out.append(tuple(Fraction(int(x.p), int(x.q)) for x in v))
        return out
    arr = np.array(rows, dtype=float)
    u, s, vt = np.linalg.svd(arr)
    scale = max(1.0, s[0]) if s.size else 1.0
    r = int(np.sum(s > FLOAT_RANK_TOL * scale))
    return [tuple(v) for v in vt[r:]]


@dataclass(frozen=True)
class SubalgebraSpan:
    basis: tuple
    label: str | None = None
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        basis = tuple(self.basis)
        object.__setattr__(self, "basis", basis)
        if rank(basis) != len(basis):
            raise SubalgebraError(f"basis of {self.label or 'span'} is linearly dependent")

    @property
    def dim(self):
        return len(self.basis)

    def is_closed(self) -> bool:
        b = self.basis
        return all(in_span(bracket(b[i], b[j]), b) for i in range(len(b)) for j in range(i + 1, len(b)))

    def require_closed(self):
        if not self.is_closed():
            raise SubalgebraError(f"{self.label or 'span'} is not closed under the bracket")
        return self

    def same_span(self, other) -> bool:
        r = rank(self.basis)
        return r == rank(other.basis) == rank(self.basis + other.basis)

    def __str__(self):
        inner = ", ".join(str(v) for v in self.basis)
        return f"<{inner}>"


def span(*vectors, label=None, params=None):
    return SubalgebraSpan(tuple(vectors), label, dict(params or {}))


def normalizer(s: SubalgebraSpan) -> SubalgebraSpan:
    s.require_closed()
    flat = [x for v in s.basis for x in v.c]
    exact = _is_exact(flat)
    # annihilator of span(s): rows n with n . v = 0
    ann = _nullspace(_matrix(s.basis), exact)
    rows = []
    for b in s.basis:
        # [x, b] is linear in x; column j is [e_j, b]
        cols = [bracket(e, b).c for e in BASIS]
        ad = [[cols[j][i] for j in range(5)] for i in range(5)]
        for n in ann:
            rows.append([sum(n[i] * ad[i][j] for i in range(5)) for j in range(5)])
    if exact:
        rows = [[Fraction(x) for x in r] for r in rows]
    sol = _nullspace([r for r in rows if any(x != 0 for x in r)], exact)
    return SubalgebraSpan(tuple(EssVector(v) for v in sol), label=f"N({s.label})" if s.label else None)


def invariant_quadruple(s: SubalgebraSpan):
    s.require_closed()
    n = s.dim
    n_hat = rank([EssVector(*v.f_part, 0, 0) for v in s.basis])
    m = rank([EssVector(0, 0, 0, *v.z_part) for v in s.basis])
    n_check = n - n_hat  # kernel of the projection onto f restricted to s is s cap z
    return (n, n_hat, n_check, m)


# -- catalog -----------------------------------------------------------------

_DOMAINS = {
    "real": (lambda v: True, "any real"),
    "nonneg": (lambda v: v >= 0, ">= 0"),
    "pos": (lambda v: v > 0, "> 0"),
    "delta01": (lambda v: v in (0, 1), "in {0, 1}"),
    "sign": (lambda v: v in (-1, 0, 1), "in {-1, 0, 1}"),
}


@dataclass(frozen=True)
class Template:
    label: str
    dim: int
    params: tuple  # ((name, domain), ...)
    build: object = field(repr=False)
    quad: object = field(repr=False)

    def instantiate(self, *args, **kwargs) -> SubalgebraSpan:
        values = self.bind(*args, **kwargs)
        basis = self.build(**values)
        return SubalgebraSpan(tuple(basis), self.label, values).require_closed()

    def bind(self, *args, **kwargs):
        names = [p for p, _ in self.params]
        if len(args) > len(names):
            raise CatalogError(f"{self.label} takes {len(names)} parameters")
        values = dict(zip(names, args))
        for k, v in kwargs.items():
            if k not in names:
                raise CatalogError(f"{self.label} has no parameter {k!r}")
            if k in values:
                raise CatalogError(f"parameter {k!r} given twice")
            values[k] = v
        missing = [n for n in names if n not in values]
        if missing:
            raise CatalogError(f"{self.label}: missing parameter(s) {', '.join(missing)}")
        for name, dom in self.params:
            values[name] = _num(values[name])
            ok, text = _DOMAINS[dom]
            if not ok(values[name]):
                raise CatalogError(f"{self.label}: parameter {name}={values[name]} must be {text}")
        return values

    def declared_quadruple(self, **values):
        return self.quad(**values)


def _nz(v):
    return 1 if v != 0 else 0


def _t(label, dim, params, build, quad):
    return Template(label, dim, tuple(params), build, quad)


_CATALOG = (
    # 1D
    _t("s1.1", 1, [("mu", "real")], lambda mu: [PT + mu * I], lambda mu: (1, 0, 1, 1)),
    _t("s1.2", 1, [], lambda: [I], lambda: (1, 0, 1, 1)),
    _t("s1.3", 1, [("mu", "real")], lambda mu: [PY + PT + mu * I], lambda mu: (1, 1, 0, 1)),
    _t("s1.4", 1, [("delta", "delta01")], lambda delta: [PY + delta * I], lambda delta: (1, 1, 0, _nz(delta))),
    _t("s1.5", 1, [("nu", "pos"), ("mu", "real")], lambda nu, mu: [D + nu * PT + mu * I], lambda nu, mu: (1, 1, 0, 1)),
    _t("s1.6", 1, [("nu", "nonneg")], lambda nu: [D + nu * I], lambda nu: (1, 1, 0, _nz(nu))),
    _t("s1.7", 1, [("nu", "pos"), ("mu", "real")], lambda nu, mu: [QPLUS + nu * PT + mu * I], lambda nu, mu: (1, 1, 0, 1)),
    _t("s1.7_0", 1, [("nu", "nonneg")], lambda nu: [QPLUS + nu * I], lambda nu: (1, 1, 0, _nz(nu))),
    # 2D
    _t("s2.1", 2, [], lambda: [PT, I], lambda: (2, 0, 2, 2)),
    _t("s2.2", 2, [("delta", "delta01"), ("mu", "real")], lambda delta, mu: [PY + delta * I, PT + mu * I],
       lambda delta, mu: (2, 1, 1, 1 + _nz(delta))),
    _t("s2.3", 2, [("delta", "delta01")], lambda delta: [PY + delta * PT, I], lambda delta: (2, 1, 1, 1 + _nz(delta))),
    _t("s2.4", 2, [("nu", "nonneg"), ("mu", "real")], lambda nu, mu: [D + nu * I, PT + mu * I],
       lambda nu, mu: (2, 1, 1, 1 + _nz(nu))),
    _t("s2.5", 2, [("nu", "nonneg")], lambda nu: [D + nu * PT, I], lambda nu: (2, 1, 1, 1 + _nz(nu))),
    _t("s2.6", 2, [("nu", "nonneg"), ("mu", "real")], lambda nu, mu: [QPLUS + nu * I, PT + mu * I],
       lambda nu, mu: (2, 1, 1, 1 + _nz(nu))),
    _t("s2.7", 2, [("nu", "nonneg")], lambda nu: [QPLUS + nu * PT, I], lambda nu: (2, 1, 1, 1 + _nz(nu))),
    _t("s2.8", 2, [("nu", "pos"), ("mu", "real")], lambda nu, mu: [PY, D + nu * PT + mu * I],
       lambda nu, mu: (2, 2, 0, 1)),
    _t("s2.9", 2, [("nu", "nonneg")], lambda nu: [PY, D + nu * I], lambda nu: (2, 2, 0, _nz(nu))),
    # 3D
    _t("s3.1", 3, [], lambda: [PY, PT, I], lambda: (3, 1, 2, 2)),
    _t("s3.2", 3, [], lambda: [D, PT, I], lambda: (3, 1, 2, 2)),
    _t("s3.3", 3, [], lambda: [QPLUS, PT, I], lambda: (3, 1, 2, 2)),
    _t("s3.4", 3, [("nu", "nonneg"), ("mu", "real")], lambda nu, mu: [PY, D + nu * I, PT + mu * I],
       lambda nu, mu: (3, 2, 1, 1 + _nz(nu))),
    _t("s3.5", 3, [("nu", "nonneg")], lambda nu: [PY, D + nu * PT, I], lambda nu: (3, 2, 1, 1 + _nz(nu))),
    _t("s3.6", 3, [], lambda: [PY, D, K], lambda: (3, 3, 0, 0)),
    # 4D
    _t("s4.1", 4, [], lambda: [PY, D, PT, I], lambda: (4, 2, 2, 2)),
    _t("s4.2", 4, [("mu", "real")], lambda mu: [PY, D, K, PT + mu * I], lambda mu: (4, 3, 1, 1)),
    _t("s4.3", 4, [], lambda: [PY, D, K, I], lambda: (4, 3, 1, 1)),
)

_BY_LABEL = {t.label: t for t in _CATALOG}


def catalog(dim=None):
    """Templates of the G^ess-inequivalent subalgebras, optionally of one dimension."""
    if dim is None:
        return list(_CATALOG)
    return [t for t in _CATALOG if t.dim == dim]


def template(label: str) -> Template:
    try:
        return _BY_LABEL[label]
    except KeyError:
        raise CatalogError(f"unknown catalog family {label!r}") from None


def parse_catalog_id(text: str) -> SubalgebraSpan:
    """Instantiate from ids such as 's1.1:mu=0.5', 's2.8:nu=1,mu=0' or 's1.4:0'."""
    label, _, rest = text.strip().partition(":")
    tpl = template(label)
    args, kwargs = [], {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        if "=" in item:
            k, v = item.split("=", 1)
            kwargs[k.strip()] = _parse_number(v)
        else:
            args.append(_parse_number(item))
    return tpl.instantiate(*args, **kwargs)


def _parse_number(text):
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise CatalogError(f"not a number: {text!r}") from None


def catalog_id(s: SubalgebraSpan) -> str:
    if not s.label:
        return str(s)
    if not s.params:
        return s.label
    return s.label + ":" + ",".join(f"{k}={_fmt(v)}" for k, v in s.params.items())


# -- equivalences by discrete symmetries -------------------------------------

# Families with a free sign parameter, used by the seven J' equivalences.
_SIGNED = {
    "s1.3": (lambda d, mu: [PY + d * PT + mu * I]),
    "s1.4": (lambda d: [PY + d * I]),
    "s1.7": (lambda mu, mu2: [QPLUS + mu * PT + mu2 * I]),
    "s2.2": (lambda d, mu: [PY + d * I, PT + mu * I]),
    "s2.3": (lambda d: [PY + d * PT, I]),
    "s2.6": (lambda mu, mu2: [QPLUS + mu * I, PT + mu2 * I]),
    "s2.7": (lambda mu: [QPLUS + mu * PT, I]),
}

# pair id -> (source args, target args) as functions of the free parameters
_PAIRS = {
    "s1.3": (("mu",), lambda mu: ((-1, -mu), (1, mu))),
    "s1.4": ((), lambda: ((-1,), (1,))),
    "s1.7": (("mu", "mu2"), lambda mu, mu2: ((-mu, -mu2), (mu, mu2))),
    "s2.2": (("mu",), lambda mu: ((-1, mu), (1, mu))),
    "s2.3": ((), lambda: ((-1,), (1,))),
    "s2.6": (("mu", "mu2"), lambda mu, mu2: ((-mu, mu2), (mu, mu2))),
    "s2.7": (("mu",), lambda mu: ((-mu,), (mu,))),
}

EQUIVALENCE_PAIRS = tuple(_PAIRS)


def equivalence_witness(pair_id: str, **params):
    """(J', source, target) with pushforward(J', source) spanning target."""
    from .group import discrete, identity

    if pair_id == "identity":
        s = parse_catalog_id(params.pop("of", "s3.6"))
        return identity(), s, s
    if pair_id not in _PAIRS:
        raise CatalogError(f"unknown equivalence {pair_id!r}; known: {', '.join(_PAIRS)}")
    names, fn = _PAIRS[pair_id]
    defaults = {"mu": Fraction(1, 2), "mu2": Fraction(-1, 3)}
    values = {n: _num(params.get(n, defaults[n])) for n in names}
    extra = set(params) - set(names)
    if extra:
        raise CatalogError(f"{pair_id}: unexpected parameter(s) {', '.join(sorted(extra))}")
    src_args, tgt_args = fn(**values)
    build = _SIGNED[pair_id]
    src = SubalgebraSpan(tuple(build(*src_args)), pair_id, dict(zip(("a", "b"), src_args)))
    tgt = SubalgebraSpan(tuple(build(*tgt_args)), pair_id, dict(zip(("a", "b"), tgt_args)))
    return discrete("Jprime"), src, tgt


def push_span(g, s: SubalgebraSpan) -> SubalgebraSpan:
    return SubalgebraSpan(tuple(pushforward(g, b) for b in s.basis))


def parse_vector(text: str) -> EssVector:
    """Parse linear combinations like 'Py + 2*D - 1/2*I'."""
    import re

    src = text.replace(" ", "")
    if not src:
        raise ValueError("empty vector expression")
    coeffs = [Fraction(0)] * 5
    pos = 0
    pat = re.compile(r"([+-]?)(?:(\d+(?:\.\d+)?(?:/\d+)?)\*?)?(Py|Pt|D|K|I)")
    while pos < len(src):
        m = pat.match(src, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse vector at position {pos}: {src[pos:]!r}")
        sign = -1 if m.group(1) == "-" else 1
        c = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        coeffs[BASIS_NAMES.index(m.group(3))] += sign * c
        pos = m.end()
    return EssVector(coeffs)


def close_enough(a: EssVector, b: EssVector, tol=1e-12) -> bool:
    return all(math.isclose(float(x), float(y), abs_tol=tol) for x, y in zip(a.c, b.c))
