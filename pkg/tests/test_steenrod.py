from __future__ import annotations

import itertools
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sq2hit.f2core import Polynomial, monomials
from sq2hit.steenrod import (
    adem_normalize,
    binom_odd,
    is_admissible_word,
    sq_monomial,
    sq_poly,
    sq_terms,
    sq_word_action,
)


@lru_cache(maxsize=None)
def _cartan(k, x):
    """Sq^k(x) by peeling one linear factor at a time:
    Sq^k(x_j Y) = x_j Sq^k(Y) + x_j^2 Sq^(k-1)(Y)."""
    m = len(x)
    if k < 0:
        return frozenset()
    j = next((j for j, a in enumerate(x) if a), None)
    if j is None:
        return frozenset([x]) if k == 0 else frozenset()
    rest = x[:j] + (x[j] - 1,) + x[j + 1:]
    out = set()
    for t in _cartan(k, rest):
        out ^= {t[:j] + (t[j] + 1,) + t[j + 1:]}
    for t in _cartan(k - 1, rest):
        out ^= {t[:j] + (t[j] + 2,) + t[j + 1:]}
    return frozenset(out)


@pytest.mark.parametrize("m,maxdeg", [(1, 20), (2, 12), (3, 10)])
def test_sq_matches_literal_cartan(m, maxdeg):
    for n in range(maxdeg + 1):
        for x in monomials(m, n):
            for k in range(n + 2):
                assert frozenset(sq_terms(k, x)) == _cartan(k, x), (k, x)


def test_sq_examples():
    assert sq_monomial(1, (1,)) == Polynomial([(2,)], 1)
    assert sq_monomial(0, (2, 3)) == Polynomial([(2, 3)], 2)
    assert sq_monomial(2, (3,)) == Polynomial([(5,)], 1)
    assert sq_monomial(3, (1, 1)).is_zero()
    assert sq_poly(4, Polynomial((), 2)).is_zero()
    assert sq_poly(1, Polynomial([(1, 0), (0, 1)])) == Polynomial([(2, 0), (0, 2)])


def test_binom_parity_by_lucas():
    from math import comb

    for n in range(64):
        for k in range(-1, 66):
            expect = 0 <= k <= n and comb(n, k) % 2 == 1
            assert binom_odd(n, k) == expect


polys3 = st.integers(1, 7).flatmap(
    lambda d: st.lists(st.sampled_from(list(monomials(3, d))), max_size=6)
).map(lambda ts: Polynomial(ts, 3))


@settings(max_examples=150, deadline=None)
@given(polys3, st.integers(0, 9))
def test_unstable_vanishing_and_squaring(p, k):
    if p.is_zero():
        return
    d = p.degree
    if k > d:
        assert sq_poly(k, p).is_zero()
    assert sq_poly(d, p) == p.square()


@settings(max_examples=150, deadline=None)
@given(polys3, polys3, st.integers(0, 8))
def test_cartan_formula_on_products(p, q, k):
    lhs = sq_poly(k, p * q)
    rhs = Polynomial((), 3)
    for i in range(k + 1):
        rhs = rhs + sq_poly(i, p) * sq_poly(k - i, q)
    assert lhs == rhs


@settings(max_examples=100, deadline=None)
@given(polys3, polys3, st.integers(0, 8))
def test_additivity(p, q, k):
    if p.terms and q.terms and p.degree != q.degree:
        return
    assert sq_poly(k, p + q) == sq_poly(k, p) + sq_poly(k, q)


def test_adem_examples():
    assert adem_normalize((3, 1)) == {(3, 1)}
    assert adem_normalize((1, 1)) == frozenset()
    assert adem_normalize((1, 2)) == {(3,)}
    assert adem_normalize((2, 2)) == {(3, 1)}
    assert adem_normalize(()) == {()}
    assert adem_normalize((0, 2, 0)) == {(2,)}


def test_word_action_examples():
    p = Polynomial([(2, 1, 0), (1, 1, 1)], 3)
    assert sq_word_action((), p) == p
    x3 = Polynomial([(3,)], 1)
    assert sq_word_action((1, 2), x3) == sq_poly(3, x3)
    for n in range(13):
        for x in monomials(3, n):
            assert sq_word_action((1, 1), Polynomial([x], 3)).is_zero()


def _compositions(d):
    """Words of positive squares with total degree d."""
    if d == 0:
        yield ()
        return
    for first in range(1, d + 1):
        for rest in _compositions(d - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _act(word, x):
    """Word acting on one monomial, memoised on suffixes."""
    if not word:
        return frozenset([x])
    inner = _act(word[1:], x)
    out = set()
    for t in inner:
        out.symmetric_difference_update(sq_terms(word[0], t))
    return frozenset(out)


def test_adem_soundness_exhaustive():
    """Every word of degree <= 10 acts on P_3 (degree <= 12) like its admissible expansion."""
    sources = [x for n in range(13) for x in monomials(3, n)]
    checked = 0
    for d in range(1, 11):
        for word in _compositions(d):
            expansion = adem_normalize(word)
            assert all(is_admissible_word(w) for w in expansion)
            assert all(sum(w) == d for w in expansion)
            for x in sources:
                lhs = _act(word, x)
                rhs = set()
                for w in expansion:
                    rhs ^= _act(w, x)
                assert lhs == rhs, (word, x)
                checked += 1
    assert checked == 1023 * len(sources)


def test_admissible_words_are_fixed():
    for d in range(1, 16):
        for w in _compositions(d):
            if is_admissible_word(w):
                assert adem_normalize(w) == {w}
