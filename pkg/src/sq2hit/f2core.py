"""Monomials, homogeneous polynomials and weight vectors over F_2.

A monomial in ``m`` variables is a plain tuple of ``m`` non-negative ints
(its exponent vector).  Polynomials are immutable sets of such tuples.
"""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Iterable, Iterator, Tuple

Monomial = Tuple[int, ...]
WeightVector = Tuple[int, ...]


class ContractError(ValueError):
    """Raised when an operation is called outside its precondition."""


def degree(x: Monomial) -> int:
    return sum(x)


def alpha(n: int) -> int:
    """Number of ones in the binary expansion of ``n``."""
    return bin(n).count("1")


def weight_vector(x: Monomial) -> WeightVector:
    """Count, for each bit position, how many exponents have that bit set.

    The result is trimmed of trailing zeros, so the constant monomial has the
    empty weight vector.
    """
    top = max(x, default=0).bit_length()
    return tuple(sum((u >> t) & 1 for u in x) for t in range(top))


def weight_degree(w: Iterable[int]) -> int:
    return sum(c << t for t, c in enumerate(w))


def trim_weight(w: Iterable[int]) -> WeightVector:
    w = list(w)
    while w and w[-1] == 0:
        w.pop()
    return tuple(w)


def compare_weights(a: WeightVector, b: WeightVector) -> int:
    """Left-lexicographic comparison, padding the shorter vector with zeros."""
    size = max(len(a), len(b))
    pa = tuple(a) + (0,) * (size - len(a))
    pb = tuple(b) + (0,) * (size - len(b))
    return (pa > pb) - (pa < pb)


def order_key(x: Monomial, width: int = 0) -> tuple:
    """Sort key realising the weight-first, then exponent-lexicographic order.

    ``width`` pads the weight vector; any value at least the bit length of
    the largest exponent gives the same relative order.
    """
    w = weight_vector(x)
    if len(w) < width:
        w = w + (0,) * (width - len(w))
    return (w, tuple(x))


def compare(x: Monomial, y: Monomial) -> int:
    """Return -1, 0 or 1 as ``x`` is less than, equal to or greater than ``y``."""
    if len(x) != len(y):
        raise ContractError("monomials live in different numbers of variables")
    if degree(x) != degree(y):
        raise ContractError("monomials of different degrees are not comparable")
    c = compare_weights(weight_vector(x), weight_vector(y))
    if c:
        return c
    return (tuple(x) > tuple(y)) - (tuple(x) < tuple(y))


def is_full_support(x: Monomial) -> bool:
    return all(u > 0 for u in x)


def support(x: Monomial) -> Tuple[int, ...]:
    return tuple(j for j, u in enumerate(x) if u > 0)


def monomials(m: int, n: int) -> Iterator[Monomial]:
    """All monomials of degree ``n`` in ``m`` variables (no particular order)."""
    if m <= 0:
        if n == 0:
            yield ()
        return
    if m == 1:
        yield (n,)
        return
    for a in range(n, -1, -1):
        for rest in monomials(m - 1, n - a):
            yield (a,) + rest


def positive_monomials(m: int, n: int) -> Iterator[Monomial]:
    """Monomials of degree ``n`` with every exponent positive."""
    if m == 0:
        if n == 0:
            yield ()
        return
    for x in monomials(m, n - m):
        yield tuple(u + 1 for u in x)


def sorted_desc(xs: Iterable[Monomial]) -> list:
    xs = list(xs)
    width = max((max(x, default=0).bit_length() for x in xs), default=0)
    xs.sort(key=lambda x: order_key(x, width), reverse=True)
    return xs


@lru_cache(maxsize=None)
def xi(n: int) -> int:
    """Least number of terms ``2^d - 1`` (``d > 0``) summing to ``n``.

    Uses the classical test: ``n`` is a sum of ``k`` such terms iff
    ``alpha(n + k) <= k <= n``.
    """
    if n < 0:
        raise ContractError("xi is defined on non-negative integers")
    k = 0
    while True:
        if alpha(n + k) <= k <= n or n == 0:
            return k
        k += 1


class Polynomial:
    """Homogeneous polynomial over F_2, stored as a frozen set of monomials."""

    __slots__ = ("terms", "nvars", "_hash")

    def __init__(self, terms: Iterable[Monomial] = (), nvars: int | None = None):
        acc: set = set()
        for t in terms:
            t = tuple(t)
            if t in acc:
                acc.remove(t)
            else:
                acc.add(t)
        if nvars is None:
            nvars = len(next(iter(acc))) if acc else 0
        degs = {sum(t) for t in acc}
        if len(degs) > 1:
            raise ContractError("polynomial terms must share one degree")
        if any(len(t) != nvars for t in acc):
            raise ContractError("polynomial terms must have %d variables" % nvars)
        self.terms = frozenset(acc)
        self.nvars = nvars
        self._hash = None

    @classmethod
    def from_term_set(cls, terms: frozenset, nvars: int) -> "Polynomial":
        # trusted constructor for callers that already hold a mod-2 term set
        p = cls.__new__(cls)
        p.terms = terms
        p.nvars = nvars
        p._hash = None
        return p

    @property
    def degree(self) -> int | None:
        for t in self.terms:
            return sum(t)
        return None

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self.sorted_terms())

    def __contains__(self, x) -> bool:
        return tuple(x) in self.terms

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if not isinstance(other, Polynomial):
            return NotImplemented
        if self.terms and other.terms and self.degree != other.degree:
            raise ContractError("cannot add polynomials of different degrees")
        return Polynomial.from_term_set(self.terms ^ other.terms, max(self.nvars, other.nvars))

    __sub__ = __add__

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        # term-by-term product; only used to build test fixtures
        acc: set = set()
        for a in self.terms:
            for b in other.terms:
                t = tuple(u + v for u, v in zip(a, b))
                acc ^= {t}
        return Polynomial.from_term_set(frozenset(acc), max(self.nvars, other.nvars))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.terms)
        return self._hash

    def sorted_terms(self) -> list:
        return sorted_desc(self.terms)

    def leading_term(self) -> Monomial | None:
        ts = self.sorted_terms()
        return ts[0] if ts else None

    def square(self) -> "Polynomial":
        return Polynomial.from_term_set(
            frozenset(tuple(2 * u for u in t) for t in self.terms), self.nvars
        )

    def __repr__(self) -> str:
        return "Polynomial(%s)" % format_polynomial(self)

    def __str__(self) -> str:
        return format_polynomial(self)


def monomial_poly(x: Monomial) -> Polynomial:
    return Polynomial.from_term_set(frozenset([tuple(x)]), len(x))


def format_monomial(x: Monomial) -> str:
    return "[" + ",".join(str(u) for u in x) + "]"


def format_polynomial(p: Polynomial) -> str:
    if not p.terms:
        return "0"
    return "+".join(format_monomial(t) for t in p.sorted_terms())


_MONO_RE = re.compile(r"\[\s*(\d+(?:\s*,\s*\d+)*)?\s*\]")


def parse_monomial(text: str) -> Monomial:
    text = text.strip()
    m = _MONO_RE.fullmatch(text)
    if not m:
        raise ValueError("not a monomial: %r" % text)
    body = m.group(1)
    if not body:
        return ()
    return tuple(int(s) for s in body.split(","))


def parse_polynomial(text: str, nvars: int | None = None) -> Polynomial:
    """Parse ``[1,2]+[2,1]`` style text; ``0`` or the empty string is zero."""
    text = text.strip()
    if text in ("", "0"):
        return Polynomial((), nvars or 0)
    parts = [s for s in re.split(r"\+", text) if s.strip()]
    return Polynomial((parse_monomial(s) for s in parts), nvars)
