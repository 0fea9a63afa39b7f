"""Lie-symmetry operators of the fine equation as an associative algebra.

Abstract side: exact PBW normal forms in K, Py, D (monomials K^a Py^b D^c)
obtained by rewriting out-of-order neighbours XY -> YX + [X, Y].

Concrete side: the same letters (plus Pt, I and L) acting on jets,

    Py f = f_y,   D f = x f_x + y f_y,   K f = 2xy f_x + y^2 f_y + x f,
    Pt f = f_t,   I f = f,               L f = f_t + x f_y - x^2 f_xx.
"""

from __future__ import annotations

import random
import re
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import jets as J

__all__ = [
    "OpPoly",
    "ConcreteOperator",
    "ONE",
    "PY",
    "D",
    "K",
    "normal_order",
    "reorder",
    "op_multiply",
    "commutator",
    "casimir",
    "lemma_product",
    "lemma_rhs",
    "parse_op",
    "parse_words",
    "realize",
    "apply",
    "as_solution",
    "OrderBudgetError",
    "symbol_independence_test",
]

PBW = ("K", "Py", "D")

# [X, Y] for X after Y in some ordering; antisymmetry fills in the rest.
_BRACKET = {
    ("Py", "D"): {("Py",): Fraction(1)},
    ("Py", "K"): {("D",): Fraction(2)},
    ("D", "K"): {("K",): Fraction(1)},
}


def _bracket(x, y):
    if (x, y) in _BRACKET:
        return _BRACKET[(x, y)]
    if (y, x) in _BRACKET:
        return {w: -c for w, c in _BRACKET[(y, x)].items()}
    return {}


def _rank(order):
    if sorted(order) != sorted(PBW):
        raise ValueError(f"ordering must be a permutation of {PBW}")
    return {g: i for i, g in enumerate(order)}


def _descents(word, rank):
    return [i for i in range(len(word) - 1) if rank[word[i]] > rank[word[i + 1]]]


def _add(acc, word, c):
    v = acc.get(word, 0) + c
    if v:
        acc[word] = v
    else:
        acc.pop(word, None)


@lru_cache(maxsize=None)
def _nf_leftmost(word, order):
    rank = _rank(order)
    ds = _descents(word, rank)
    if not ds:
        return {word: Fraction(1)}
    i = ds[0]
    x, y = word[i], word[i + 1]
    out = {}
    for w, c in _nf_leftmost(word[:i] + (y, x) + word[i + 2:], order).items():
        _add(out, w, c)
    for z, cz in _bracket(x, y).items():
        for w, c in _nf_leftmost(word[:i] + z + word[i + 2:], order).items():
            _add(out, w, cz * c)
    return out


def normal_order(words, order=PBW, strategy="leftmost", rng=None):
    """Rewrite a linear combination of words {word: coeff} to ordered words.

    strategy "leftmost" (memoised), "rightmost" or "random" picks which
    out-of-order pair to rewrite next; all must agree (confluence).
    """
    order = tuple(order)
    rank = _rank(order)
    if isinstance(words, tuple):
        words = {words: Fraction(1)}
    if strategy == "leftmost":
        out = {}
        for w, c in words.items():
            for v, d in _nf_leftmost(tuple(w), order).items():
                _add(out, v, Fraction(c) * d)
        return out
    if strategy not in ("rightmost", "random"):
        raise ValueError(f"unknown rewrite strategy {strategy!r}")
    rng = rng or random.Random(0)
    todo = {}
    for w, c in words.items():
        _add(todo, tuple(w), Fraction(c))
    done = {}
    while todo:
        w, c = todo.popitem()
        ds = _descents(w, rank)
        if not ds:
            _add(done, w, c)
            continue
        i = ds[-1] if strategy == "rightmost" else rng.choice(ds)
        x, y = w[i], w[i + 1]
        _add(todo, w[:i] + (y, x) + w[i + 2:], c)
        for z, cz in _bracket(x, y).items():
            _add(todo, w[:i] + z + w[i + 2:], c * cz)
    return done


def _word(mono):
    a, b, c = mono
    return ("K",) * a + ("Py",) * b + ("D",) * c


def _mono(word):
    return (word.count("K"), word.count("Py"), word.count("D"))


class OpPoly:
    """Element of the enveloping algebra in PBW normal form.

    `terms` maps (a, b, c) -> Fraction for K^a Py^b D^c; zero coefficients
    are never stored.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for m, c in (terms or {}).items():
            m = tuple(int(e) for e in m)
            if len(m) != 3 or min(m) < 0:
                raise ValueError(f"bad monomial exponents {m!r}")
            c = Fraction(c)
            if c:
                clean[m] = clean.get(m, 0) + c
                if not clean[m]:
                    del clean[m]
        self.terms = clean

    @classmethod
    def from_words(cls, words, strategy="leftmost", rng=None):
        nf = normal_order(words, PBW, strategy, rng)
        return cls({_mono(w): c for w, c in nf.items()})

    @classmethod
    def scalar(cls, c):
        return cls({(0, 0, 0): c})

    @classmethod
    def monomial(cls, a, b, c, coeff=1):
        return cls({(a, b, c): coeff})

    def degree(self):
        return max((sum(m) for m in self.terms), default=0)

    def words(self):
        return {_word(m): c for m, c in self.terms.items()}

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = OpPoly.scalar(other)
        return isinstance(other, OpPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        other = _as_poly(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return OpPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return OpPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        if isinstance(other, OpPoly):
            return op_multiply(self, other)
        c = Fraction(other)
        return OpPoly({m: c * v for m, v in self.terms.items()})

    def __rmul__(self, other):
        return _as_poly(other) * self

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("operator powers must be nonnegative integers")
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    def __str__(self):
        return format_poly(self.terms)

    def __repr__(self):
        return f"OpPoly({self})"


def _as_poly(x):
    if isinstance(x, OpPoly):
        return x
    return OpPoly.scalar(x)


def _fmt_mono(m):
    parts = []
    for g, e in zip(PBW, m):
        if e == 1:
            parts.append(g)
        elif e > 1:
            parts.append(f"{g}^{e}")
    return "*".join(parts)


def format_poly(terms, key=None):
    """Graded order: higher total degree first; within a degree, higher D power, then Py."""
    if not terms:
        return "0"
    key = key or (lambda m: (-sum(m), -m[2], -m[1], -m[0]))
    out = []
    for m in sorted(terms, key=key):
        c = terms[m]
        body = "*".join(m) if m and isinstance(m[0], str) else _fmt_mono(m) if m else ""
        mag = abs(c)
        if not body:
            piece = str(mag)
        elif mag == 1:
            piece = body
        else:
            piece = f"{mag}*{body}"
        if not out:
            out.append(piece if c > 0 else f"-{piece}")
        else:
            out.append(("+ " if c > 0 else "- ") + piece)
    return " ".join(out)


def op_multiply(p: OpPoly, q: OpPoly) -> OpPoly:
    acc = {}
    for m1, c1 in p.terms.items():
        for m2, c2 in q.terms.items():
            for w, c in _nf_leftmost(_word(m1) + _word(m2), PBW).items():
                _add(acc, w, c1 * c2 * c)
    return OpPoly({_mono(w): c for w, c in acc.items()})


def commutator(p, q):
    return p * q - q * p


def reorder(p: OpPoly, order):
    """Express p in ordered monomials for another ordering of the generators.

    Returns {word: coeff}; words are tuples of generator names.
    """
    return normal_order(p.words(), tuple(order))


ONE = OpPoly.scalar(1)
K = OpPoly.monomial(1, 0, 0)
PY = OpPoly.monomial(0, 1, 0)
D = OpPoly.monomial(0, 0, 1)
GENS = {"K": K, "Py": PY, "D": D}


def casimir() -> OpPoly:
    """D^2 - D - K*Py, central in the algebra."""
    return OpPoly({(0, 0, 2): 1, (0, 0, 1): -1, (1, 1, 0): -1})


def lemma_product(n: int) -> OpPoly:
    """(prod_{k=1}^{n} (Py*K + 2k D + k^2 + k)) * Py, factors left to right in k."""
    if n < 0 or int(n) != n:
        raise ValueError("n must be a nonnegative integer")
    out = ONE
    for k in range(1, int(n) + 1):
        out = out * (PY * K + 2 * k * D + (k * k + k))
    return out * PY


def lemma_rhs(n: int) -> OpPoly:
    return PY ** (n + 1) * K ** n


# -- text syntax ---------------------------------------------------------------

_TOK = re.compile(r"\s*(?:(\d+(?:/\d+)?)|(Py|Pt|D|K|I|L)|([-+*^()]))")


def parse_words(text, letters=("Py", "D", "K")):
    """Parse an operator expression into {word: Fraction} (no reordering).

    Grammar: sums and differences of products of factors; a factor is a
    generator, a rational p/q, or a parenthesised expression, optionally
    raised to a nonnegative integer power with ^.
    """
    toks = []
    pos = 0
    text = str(text)
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOK.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse operator at position {pos}: {text[pos:pos + 10]!r}")
        toks.append((m.group(0).strip(), m.start() + len(m.group(0)) - len(m.group(0).lstrip())))
        pos = m.end()
    toks.append(("$", len(text)))
    i = 0

    def peek():
        return toks[i][0]

    def take(expected=None):
        nonlocal i
        tok, at = toks[i]
        if expected is not None and tok != expected:
            raise ValueError(f"expected {expected!r} at position {at}, found {tok!r}")
        i += 1
        return tok

    def mul(a, b):
        out = {}
        for w1, c1 in a.items():
            for w2, c2 in b.items():
                _add(out, w1 + w2, c1 * c2)
        return out

    def expr():
        sign = Fraction(1)
        if peek() in "+-":
            sign = Fraction(-1) if take() == "-" else sign
        acc = {w: sign * c for w, c in term().items()}
        while peek() in ("+", "-"):
            s = Fraction(-1) if take() == "-" else Fraction(1)
            for w, c in term().items():
                _add(acc, w, s * c)
        return acc

    def term():
        acc = power()
        while peek() == "*":
            take()
            acc = mul(acc, power())
        return acc

    def power():
        base = atom()
        if peek() == "^":
            take()
            tok, at = toks[i]
            if not tok.isdigit():
                raise ValueError(f"expected a nonnegative integer exponent at position {at}")
            take()
            out = {(): Fraction(1)}
            for _ in range(int(tok)):
                out = mul(out, base)
            return out
        return base

    def atom():
        tok, at = toks[i]
        if tok == "(":
            take()
            e = expr()
            take(")")
            return e
        if tok in letters:
            take()
            return {(tok,): Fraction(1)}
        if tok and tok[0].isdigit():
            take()
            return {(): Fraction(tok)}
        if tok in ("Py", "Pt", "D", "K", "I", "L"):
            raise ValueError(f"generator {tok!r} at position {at} is not allowed here")
        raise ValueError(f"unexpected {tok if tok != '$' else 'end of input'!r} at position {at}")

    out = expr()
    if peek() != "$":
        raise ValueError(f"unexpected {peek()!r} at position {toks[i][1]}")
    return out


def parse_op(text) -> OpPoly:
    return OpPoly.from_words(parse_words(text))


# -- concrete realization ------------------------------------------------------

class OrderBudgetError(J.JetOrderError):
    """A jet is too short for the requested operator and output order."""


_LETTER_DEGREE = {"Py": 1, "D": 1, "K": 1, "Pt": 1, "I": 0, "L": 2}


class ConcreteOperator:
    """Linear combination of words over {Py, D, K, Pt, I, L} acting on jets.

    A word acts right to left, so ("Py", "K") means Py(K f).
    """

    __slots__ = ("terms",)

    def __init__(self, terms):
        clean = {}
        for w, c in dict(terms).items():
            w = tuple(w)
            bad = [g for g in w if g not in _LETTER_DEGREE]
            if bad:
                raise ValueError(f"unknown operator letter(s) {bad}")
            _add(clean, w, Fraction(c))
        self.terms = clean

    @property
    def degree(self):
        return max((sum(_LETTER_DEGREE[g] for g in w) for w in self.terms), default=0)

    def __matmul__(self, other):
        out = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                _add(out, w1 + w2, c1 * c2)
        return ConcreteOperator(out)

    def __add__(self, other):
        out = dict(self.terms)
        for w, c in other.terms.items():
            _add(out, w, c)
        return ConcreteOperator(out)

    def __sub__(self, other):
        return self + ConcreteOperator({w: -c for w, c in other.terms.items()})

    def __rmul__(self, c):
        return ConcreteOperator({w: Fraction(c) * v for w, v in self.terms.items()})

    def __str__(self):
        return format_poly(self.terms, key=lambda w: (-len(w), w))

    def __repr__(self):
        return f"ConcreteOperator({self})"


def realize(p) -> ConcreteOperator:
    """OpPoly, generator name or expression text -> ConcreteOperator."""
    if isinstance(p, ConcreteOperator):
        return p
    if isinstance(p, OpPoly):
        return ConcreteOperator(p.words())
    if isinstance(p, str):
        return ConcreteOperator(parse_words(p, letters=tuple(_LETTER_DEGREE)))
    raise TypeError(f"cannot realize {type(p).__name__}")


def _letter(g, f, x, y):
    if g == "I":
        return f
    if g == "Py":
        return f.diff("y")
    if g == "Pt":
        return f.diff("t")
    fx, fy = f.diff("x"), f.diff("y")
    if g == "D":
        return x * fx + y * fy
    if g == "K":
        return 2.0 * x * y * fx + y * y * fy + x * f.truncate(f.order - 1)
    if g == "L":
        return f.diff("t").truncate(f.order - 2) + x * fy.truncate(f.order - 2) - x * x * fx.diff("x")
    raise ValueError(g)


def apply_jet(op: ConcreteOperator, f: J.Jet, out_order: int) -> J.Jet:
    """Apply op to the jet f of a function of (t, x, y)."""
    op = realize(op)
    if f.order < op.degree + out_order:
        raise OrderBudgetError(
            f"operator of degree {op.degree} needs a jet of order >= {op.degree + out_order}, got {f.order}")
    if f.names != J.TXY:
        raise ValueError("operators act on functions of (t, x, y)")
    point = tuple(b for b in f.base)
    if any(b is None for b in point):
        raise ValueError("jet must carry its base point")
    _, x, y = J.seed(point, f.order, J.TXY)
    total = None
    for w, c in op.terms.items():
        g = f
        for letter in reversed(w):
            g = _letter(letter, g, x, y)
        g = float(c) * g.truncate(out_order)
        total = g if total is None else total + g
    if total is None:
        total = J.Jet.constant(0.0, out_order, J.TXY, point)
    return total


def apply(op, f, at, out_order=0) -> J.Jet:
    """Jet of (op f) at `at` to order out_order; f is a jet-evaluable function of (t, x, y)."""
    op = realize(op)
    return apply_jet(op, f.jet(tuple(at), op.degree + out_order), out_order)


def as_solution(op, f):
    """(op f) as a SolutionExpr, so it can be fed to residual checks."""
    from .solutions import SolutionExpr

    op = realize(op)

    def fn(t, x, y):
        args = (t, x, y)
        n = min(a.order for a in args if isinstance(a, J.Jet))
        base = tuple(a.value if isinstance(a, J.Jet) else float(a) for a in args)
        out = apply(op, f, base, n)
        return out.compose(list(args))

    return SolutionExpr(f"({op})[{f.name}]", fn)


# -- symbol independence ---------------------------------------------------------

def pbw_monomials(max_degree):
    return [(a, b, c) for n in range(max_degree + 1)
            for a in range(n + 1) for b in range(n + 1 - a) for c in [n - a - b]]


def symbol_independence_test(max_degree=3, samples=200, seed=0, duplicate=False):
    """Rank test for the PBW monomials acting on exponentials.

    Column j holds (Q^alpha_j e^{mu x + nu y}) / e^{mu x + nu y} at random
    (x, y, mu, nu).  Returns (independent, report).
    """
    if max_degree > 4:
        raise ValueError("max_degree must be at most 4")
    monos = pbw_monomials(max_degree)
    ncols = len(monos) + (1 if duplicate else 0)
    if samples < ncols:
        raise ValueError(f"need at least {ncols} samples for {ncols} monomials")
    rng = np.random.default_rng(seed)
    draws = rng.uniform(-1.0, 1.0, size=(samples, 4))
    ops = [realize(OpPoly.monomial(*m)) for m in monos]
    A = np.empty((samples, ncols))
    for r, (x0, y0, mu, nu) in enumerate(draws):
        t, x, y = J.seed((0.0, x0, y0), max_degree, J.TXY)
        e = J.exp(mu * x + nu * y)
        for j, op in enumerate(ops):
            A[r, j] = apply_jet(op, e, 0).value / e.value
    if duplicate:
        A[:, -1] = A[:, min(1, len(monos) - 1)]
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    s = np.linalg.svd(A / norms, compute_uv=False)
    smallest = float(s[-1])
    return smallest > 1e-8, {
        "monomials": len(monos),
        "columns": ncols,
        "samples": samples,
        "smallest_singular_value": smallest,
        "largest_singular_value": float(s[0]),
        "condition": float(s[0] / smallest) if smallest > 0 else float("inf"),
    }
