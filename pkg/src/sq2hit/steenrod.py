"""Steenrod squares acting on F_2[x_1..x_m] and Adem normalisation."""

from __future__ import annotations

from typing import Dict, Iterable, List, Tuple

from .f2core import Monomial, Polynomial

SqWord = Tuple[int, ...]


def binom_odd(n: int, k: int) -> bool:
    """Parity of C(n, k) by Lucas: odd iff the bits of ``k`` lie inside ``n``."""
    if k < 0 or n < 0 or k > n:
        return False
    return (k & ~n) == 0


def sq_terms(k: int, x: Monomial) -> List[Monomial]:
    """Terms of Sq^k(x).

    On one variable Sq^j(x^a) = C(a, j) x^(a+j), and the Cartan formula sums
    over splittings k = s_1 + ... + s_m.  A splitting contributes iff every
    s_j is a bit-subset of the exponent a_j, and distinct splittings give
    distinct monomials, so nothing cancels.
    """
    if k == 0:
        return [tuple(x)]
    if k > sum(x):
        return []
    m = len(x)
    # per variable: the admissible increments, largest first
    choices = []
    for a in x:
        subs = []
        s = a
        while True:
            if s <= k:
                subs.append(s)
            if s == 0:
                break
            s = (s - 1) & a
        choices.append(subs)
    # suffix capacity prunes splittings that cannot reach k
    cap = [0] * (m + 1)
    for j in range(m - 1, -1, -1):
        cap[j] = cap[j + 1] + choices[j][0]
    if cap[0] < k:
        return []
    out: List[Monomial] = []
    cur = list(x)

    def rec(j: int, rem: int) -> None:
        if j == m - 1:
            s = rem
            a = x[j]
            if s & ~a == 0:
                cur[j] = a + s
                out.append(tuple(cur))
                cur[j] = a
            return
        a = x[j]
        rest = cap[j + 1]
        for s in choices[j]:
            if s <= rem and rem - s <= rest:
                cur[j] = a + s
                rec(j + 1, rem - s)
        cur[j] = a

    rec(0, k)
    return out


def sq_monomial(k: int, x: Monomial) -> Polynomial:
    return Polynomial.from_term_set(frozenset(sq_terms(k, x)), len(x))


def sq_poly(k: int, p: Polynomial) -> Polynomial:
    acc: set = set()
    for t in p.terms:
        acc.symmetric_difference_update(sq_terms(k, t))
    return Polynomial.from_term_set(frozenset(acc), p.nvars)


def sq_word_action(word: Iterable[int], p: Polynomial) -> Polynomial:
    """Apply Sq^{i_1} ... Sq^{i_r}, rightmost factor first."""
    for k in reversed(tuple(word)):
        if not p:
            break
        p = sq_poly(k, p)
    return p


def is_admissible_word(word: SqWord) -> bool:
    return all(word[j] >= 2 * word[j + 1] for j in range(len(word) - 1))


def adem_pair(a: int, b: int) -> List[SqWord]:
    """Sq^a Sq^b for 0 < a < 2b, as a list of admissible pairs (mod 2)."""
    out = []
    for t in range(a // 2 + 1):
        if binom_odd(b - t - 1, a - 2 * t):
            out.append((a + b - t, t) if t else (a + b,))
    return out


def _strip_zeros(word: Iterable[int]) -> SqWord:
    return tuple(i for i in word if i != 0)


def adem_normalize(word: Iterable[int]) -> frozenset:
    """Rewrite a composition of squares as a sum of admissible words.

    The leftmost inadmissible adjacent pair is replaced first.  The empty
    word stands for Sq^0 = 1, and the empty set is the zero element.
    """
    start = _strip_zeros(word)
    result: set = set()
    todo: Dict[SqWord, int] = {start: 1}
    while todo:
        w, c = todo.popitem()
        if not c & 1:
            continue
        j = next((j for j in range(len(w) - 1) if w[j] < 2 * w[j + 1]), None)
        if j is None:
            result ^= {w}
            continue
        for pair in adem_pair(w[j], w[j + 1]):
            nw = w[:j] + pair + w[j + 2:]
            todo[nw] = todo.get(nw, 0) + 1
    return frozenset(result)


def word_degree(word: Iterable[int]) -> int:
    return sum(word)
