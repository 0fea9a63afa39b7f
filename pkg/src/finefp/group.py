"""Essential point symmetries of u_t + x u_y = x^2 u_xx.

An element is (lambda, sigma, M) with M = [[a, b], [c, d]], det M = +-1, M ~ -M:

    t~ = t + lambda,  x~ = det(M) x / (c y + d)^2,  y~ = (a y + b)/(c y + d),
    u~ = sigma * exp(c x / (c y + d)) * (u + f(t, x, y)),

optionally carrying an additive solution f.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import jets as J

__all__ = [
    "GroupElement",
    "SingularLocus",
    "SingularPointError",
    "identity",
    "compose",
    "inverse",
    "act_point",
    "act_solution",
    "one_param",
    "discrete",
    "factor_slpm",
    "gess_decompose",
    "parse_element",
]

GENERATORS = ("Py", "D", "K", "Pt", "I", "Qplus", "Qminus")


class SingularPointError(ValueError):
    """Point on the singular locus of a transformation or solution."""


def _canonical(M):
    M = np.array(M, dtype=float).reshape(2, 2)
    det = np.linalg.det(M)
    if det == 0 or not np.isfinite(det):
        raise ValueError("group matrix must be invertible")
    M = M / math.sqrt(abs(det))
    for v in M.flat:
        if v != 0:
            if v < 0:
                M = -M
            break
    M[M == 0] = 0.0  # no negative zeros
    return M


@dataclass(frozen=True)
class SingularLocus:
    gamma: float
    delta: float

    def is_empty(self):
        return self.gamma == 0

    def contains(self, y, tol=0.0):
        return abs(self.gamma * y + self.delta) <= tol

    def __str__(self):
        if self.is_empty():
            return "empty"
        return f"{{y = {float(-self.delta / self.gamma)!r}}}"


class GroupElement:
    __slots__ = ("lam", "sigma", "M", "f")

    def __init__(self, lam=0.0, sigma=1.0, M=None, f=None):
        if sigma == 0:
            raise ValueError("sigma must be nonzero")
        self.lam = float(lam)
        self.sigma = float(sigma)
        self.M = _canonical(np.eye(2) if M is None else M)
        self.f = f

    @property
    def det(self):
        return 1.0 if np.linalg.det(self.M) > 0 else -1.0

    @property
    def abcd(self):
        (a, b), (c, d) = self.M
        return a, b, c, d

    @property
    def singular_locus(self):
        _, _, c, d = self.abcd
        return SingularLocus(c, d)

    def essential(self):
        return GroupElement(self.lam, self.sigma, self.M)

    def isclose(self, other, tol=1e-12):
        return (
            abs(self.lam - other.lam) <= tol
            and abs(self.sigma - other.sigma) <= tol * max(1.0, abs(self.sigma))
            and np.allclose(self.M, other.M, rtol=0, atol=tol)
            and (self.f is None) == (other.f is None)
        )

    def __mul__(self, other):
        return compose(self, other)

    def __repr__(self):
        a, b, c, d = self.abcd
        extra = ", f=..." if self.f is not None else ""
        return f"GroupElement(lambda={self.lam!r}, sigma={self.sigma!r}, M=[[{a!r}, {b!r}], [{c!r}, {d!r}]]{extra})"

    def as_dict(self):
        a, b, c, d = self.abcd
        return {"lambda": self.lam, "sigma": self.sigma, "a": a, "b": b, "c": c, "d": d,
                "f": None if self.f is None else getattr(self.f, "name", "solution")}


def identity():
    return GroupElement()


def compose(g1: GroupElement, g2: GroupElement) -> GroupElement:
    """g1 o g2: apply g2 first."""
    f = None
    if g1.f is not None or g2.f is not None:
        # u~ = s1 E1 (s2 E2 (u + f2) + f1 o Phi2) = s1 s2 E1 E2 (u + f2 + (f1 o Phi2)/(s2 E2))
        parts = [] if g2.f is None else [g2.f]
        if g1.f is not None:
            parts.append(act_solution(inverse(g2.essential()), g1.f))
        f = parts[0] if len(parts) == 1 else parts[0] + parts[1]
    return GroupElement(g1.lam + g2.lam, g1.sigma * g2.sigma, g1.M @ g2.M, f)


def inverse(g: GroupElement) -> GroupElement:
    if g.f is not None:
        raise NotImplementedError("inverse is provided for essential elements only")
    return GroupElement(-g.lam, 1.0 / g.sigma, np.linalg.inv(g.M))


def act_point(g: GroupElement, p):
    """Image (t~, x~, y~, u~) of the point p = (t, x, y, u)."""
    t, x, y, u = (float(v) for v in p)
    a, b, c, d = g.abcd
    den = c * y + d
    if den == 0:
        raise SingularPointError(f"point lies on the singular locus c*y + d = 0 ({g.singular_locus})")
    if g.f is not None:
        u = u + g.f.value((t, x, y))
    return (
        t + g.lam,
        g.det * x / den**2,
        (a * y + b) / den,
        g.sigma * math.exp(c * x / den) * u,
    )


def act_solution(g: GroupElement, h):
    """Image of the solution u = h(t, x, y) under g, as a new SolutionExpr.

    u~(t, x, y) = sigma exp(c x/(a - c y)) (h + f)(t - lambda, det x/(a - c y)^2, (d y - b)/(a - c y)).
    """
    from .solutions import SolutionExpr

    a, b, c, d = g.abcd
    det, lam, sigma, f = g.det, g.lam, g.sigma, g.f
    inner = h if f is None else h + f

    def fn(t, x, y):
        den = a - c * y
        if (den.value if isinstance(den, J.Jet) else den) == 0:
            raise SingularPointError("point lies on the image of the singular locus a - c*y = 0")
        told = t - lam
        xold = det * x / (den * den)
        yold = (d * y - b) / den
        return sigma * J.exp(c * x / den) * inner.fn(told, xold, yold)

    return SolutionExpr(f"g.({inner.name})", fn)


def one_param(gen: str, eps: float) -> GroupElement:
    eps = float(eps)
    if gen == "Py":
        return GroupElement(M=[[1.0, eps], [0.0, 1.0]])
    if gen == "D":
        return GroupElement(M=[[math.exp(eps / 2), 0.0], [0.0, math.exp(-eps / 2)]])
    if gen == "K":
        return GroupElement(M=[[1.0, 0.0], [-eps, 1.0]])
    if gen == "Pt":
        return GroupElement(lam=eps)
    if gen == "I":
        return GroupElement(sigma=math.exp(eps))
    if gen == "Qplus":
        c, s = math.cos(eps), math.sin(eps)
        return GroupElement(M=[[c, s], [-s, c]])
    if gen == "Qminus":
        c, s = math.cosh(eps), math.sinh(eps)
        return GroupElement(M=[[c, s], [s, c]])
    raise ValueError(f"unknown generator {gen!r}; expected one of {', '.join(GENERATORS)}")


def discrete(which: str) -> GroupElement:
    if which in ("Iprime", "I'"):
        return GroupElement(sigma=-1.0)
    if which in ("Jprime", "J'"):
        return GroupElement(M=[[-1.0, 0.0], [0.0, 1.0]])
    raise ValueError(f"unknown discrete symmetry {which!r}; expected Iprime or Jprime")


def factor_slpm(M):
    """M = M_sl . diag(1, -1)^d with det M_sl = 1."""
    M = np.array(M, dtype=float).reshape(2, 2)
    (a, b), (c, d) = M
    det = a * d - b * c
    if abs(abs(det) - 1.0) > 1e-12 * max(1.0, abs(a * d) + abs(b * c)):
        raise ValueError(f"|det M| must be 1, got {det!r}")
    if det > 0:
        return M.copy(), 0
    return M @ np.diag([1.0, -1.0]), 1


def gess_decompose(g: GroupElement):
    if g.f is not None:
        raise ValueError("decomposition is defined for essential elements only")
    return {
        "F": GroupElement(M=g.M),
        "Z": GroupElement(lam=g.lam, sigma=g.sigma),
        "H": GroupElement(sigma=abs(g.sigma), M=g.M),
        "P": GroupElement(lam=g.lam, sigma=math.copysign(1.0, g.sigma)),
    }


# -- textual syntax ----------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(elem)\(([^)]*)\)|(Py|Pt|D|K|I|Qplus|Qminus)\(([^)]*)\)|(I'|J'))\s*")


def parse_element(text: str) -> GroupElement:
    """Parse e.g. "Py(0.5)*K(-0.2)*I'" or "elem(lambda=1,sigma=2,a=1,b=0,c=0,d=1)".

    Factors are multiplied in the order written, so the rightmost factor acts first.
    """
    factors = [s for s in text.split("*")]
    if not text.strip() or any(not s.strip() for s in factors):
        raise ValueError(f"malformed group element {text!r}")
    out = identity()
    for item in factors:
        m = _TOKEN.fullmatch(item)
        if not m:
            raise ValueError(f"unknown group factor {item.strip()!r}")
        if m.group(1):
            kw = {}
            for pair in filter(None, (p.strip() for p in m.group(2).split(","))):
                k, _, v = pair.partition("=")
                kw[k.strip()] = float(v)
            unknown = set(kw) - {"lambda", "sigma", "a", "b", "c", "d"}
            if unknown:
                raise ValueError(f"unknown elem() field(s): {', '.join(sorted(unknown))}")
            g = GroupElement(kw.get("lambda", 0.0), kw.get("sigma", 1.0),
                             [[kw.get("a", 1.0), kw.get("b", 0.0)], [kw.get("c", 0.0), kw.get("d", 1.0)]])
        elif m.group(3):
            g = one_param(m.group(3), float(m.group(4)))
        else:
            g = discrete(m.group(5))
        out = compose(out, g)
    return out
