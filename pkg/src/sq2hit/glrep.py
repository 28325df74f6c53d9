"""GL(m, F_2) acting on P_m by linear substitution, and its invariants on Q.

A :class:`LinearSubstitution` with matrix ``g`` sends ``x_j`` to
``sum_k g[j][k] x_k``.  Products compose substitutions: ``(g * h)(F)`` is
``g(h(F))``, so :func:`action_matrix` is multiplicative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

from .f2core import (
    ContractError,
    Monomial,
    Polynomial,
    WeightVector,
    compare_weights,
    weight_vector,
)
from .hitengine import QBasis, admissible_basis
from .linalg import BitMatrix, fixed_space


@dataclass(frozen=True)
class LinearSubstitution:
    """Invertible m x m matrix over F_2; ``rows[j]`` has bit ``k`` set iff x_k occurs in the image of x_j."""

    m: int
    rows: Tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.m or any(r < 0 or r >> self.m for r in self.rows):
            raise ContractError("expected %d rows of %d bits" % (self.m, self.m))
        if BitMatrix(self.m, self.rows).rank() != self.m:
            raise ContractError("substitution matrix is singular")

    @classmethod
    def from_lists(cls, mat: Sequence[Sequence[int]]) -> "LinearSubstitution":
        m = len(mat)
        rows = tuple(sum((int(v) & 1) << k for k, v in enumerate(row)) for row in mat)
        return cls(m, rows)

    @classmethod
    def identity(cls, m: int) -> "LinearSubstitution":
        return cls(m, tuple(1 << j for j in range(m)))

    def entry(self, j: int, k: int) -> int:
        return (self.rows[j] >> k) & 1

    def __mul__(self, other: "LinearSubstitution") -> "LinearSubstitution":
        # (self * other)(F) = self(other(F)); its matrix is other @ self
        if other.m != self.m:
            raise ContractError("substitutions act on different numbers of variables")
        prod = BitMatrix(self.m, other.rows) @ BitMatrix(self.m, self.rows)
        return LinearSubstitution(self.m, prod.rows)

    def to_lists(self) -> List[List[int]]:
        return [[self.entry(j, k) for k in range(self.m)] for j in range(self.m)]


def gl_generators(m: int) -> List[LinearSubstitution]:
    """The m-cycle, the transposition (1 2) and the transvection x_1 -> x_1 + x_2."""
    if m == 1:
        return [LinearSubstitution.identity(1)]
    cycle = tuple(1 << ((j + 1) % m) for j in range(m))
    swap = list(1 << j for j in range(m))
    swap[0], swap[1] = swap[1], swap[0]
    transvection = list(1 << j for j in range(m))
    transvection[0] = 0b11
    return [LinearSubstitution(m, cycle), LinearSubstitution(m, tuple(swap)),
            LinearSubstitution(m, tuple(transvection))]


def group_closure(gens: Sequence[LinearSubstitution]) -> set:
    """All products of the generators (the generated group, as row tuples)."""
    if not gens:
        return set()
    m = gens[0].m
    ident = LinearSubstitution.identity(m)
    seen = {ident.rows}
    frontier = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                p = g * h
                if p.rows not in seen:
                    seen.add(p.rows)
                    nxt.append(p)
        frontier = nxt
    return seen


def gl_order(m: int) -> int:
    out = 1
    for i in range(m):
        out *= 2**m - 2**i
    return out


# -- substitution on polynomials --------------------------------------------


class _Packed:
    """Monomials packed into ints so that multiplication is addition."""

    def __init__(self, m: int, degree: int):
        self.m = m
        self.shift = max(degree, 1).bit_length() + 1

    def pack(self, x: Monomial) -> int:
        v = 0
        for j, u in enumerate(x):
            v |= u << (self.shift * j)
        return v

    def unpack(self, v: int) -> Monomial:
        mask = (1 << self.shift) - 1
        return tuple((v >> (self.shift * j)) & mask for j in range(self.m))

    def var_power(self, k: int, e: int) -> int:
        return e << (self.shift * k)


def _mul(a: set, b: set) -> set:
    out: set = set()
    for s in a:
        for t in b:
            u = s + t
            if u in out:
                out.remove(u)
            else:
                out.add(u)
    return out


def _substitute_packed(g: LinearSubstitution, x: Monomial, pk: _Packed) -> set:
    result = {0}
    for j, u in enumerate(x):
        row = g.rows[j]
        b = 0
        while u >> b:
            if (u >> b) & 1:
                # (sum_k x_k)^(2^b) = sum_k x_k^(2^b) in characteristic 2
                lin = {pk.var_power(k, 1 << b) for k in range(g.m) if (row >> k) & 1}
                result = _mul(result, lin)
            b += 1
    return result


def substitute(g: LinearSubstitution, p) -> Polynomial:
    """Image of a monomial or polynomial under the substitution ``g``."""
    if isinstance(p, Polynomial):
        terms = p.terms
        nvars = p.nvars
    else:
        terms = [tuple(p)]
        nvars = len(p)
    if terms and nvars != g.m:
        raise ContractError("substitution on %d variables applied to %d" % (g.m, nvars))
    deg = max((sum(t) for t in terms), default=0)
    pk = _Packed(g.m, deg)
    acc: set = set()
    for t in terms:
        acc ^= _substitute_packed(g, t, pk)
    return Polynomial.from_term_set(frozenset(pk.unpack(v) for v in acc), g.m)


def action_matrix(g: LinearSubstitution, q: QBasis) -> BitMatrix:
    """Matrix of g on Q_n in the admissible basis (column i = image of admissible i)."""
    if g.m != q.m:
        raise ContractError("substitution and basis have different numbers of variables")
    cols = [q.normal_form(substitute(g, x)) for x in q.admissibles]
    return BitMatrix.from_columns(q.dim, cols)


def weight_blocks(q: QBasis) -> Dict[WeightVector, List[int]]:
    blocks: Dict[WeightVector, List[int]] = {}
    for i, x in enumerate(q.admissibles):
        blocks.setdefault(weight_vector(x), []).append(i)
    return blocks


def is_block_triangular(M: BitMatrix, q: QBasis) -> bool:
    """No entry maps an admissible to one of strictly larger weight."""
    wts = q.weights()
    cols = M.columns()
    for c, col in enumerate(cols):
        while col:
            r = col.bit_length() - 1
            if compare_weights(wts[r], wts[c]) > 0:
                return False
            col ^= 1 << r
    return True


def diagonal_block(M: BitMatrix, idx: Sequence[int]) -> BitMatrix:
    rows = []
    for r in idx:
        row = M.rows[r]
        rows.append(sum(((row >> c) & 1) << i for i, c in enumerate(idx)))
    return BitMatrix(len(idx), rows)


def _sort_key(w: WeightVector):
    return tuple(w) + (0,) * (64 - len(w))


def invariants_dim(m: int, n: int, level: str = "full", q: QBasis | None = None,
                   gens: Sequence[LinearSubstitution] | None = None, **kw) -> dict:
    """Dimension of the GL_m-fixed vectors of Q_n, globally or per weight block."""
    if level not in ("full", "per-omega"):
        raise ContractError("level must be 'full' or 'per-omega'")
    if q is None:
        q = admissible_basis(m, n, **kw)
    gens = list(gens) if gens is not None else gl_generators(m)
    mats = [action_matrix(g, q) for g in gens]
    report = {"m": m, "n": n, "dim": q.dim}
    if q.dim == 0:
        report["dimFull"] = 0
    else:
        report["dimFull"] = fixed_space(mats).rank
    if level == "per-omega":
        by = []
        for w, idx in sorted(weight_blocks(q).items(), key=lambda kv: _sort_key(kv[0])):
            blocks = [diagonal_block(M, idx) for M in mats]
            by.append({"omega": list(w), "dim": fixed_space(blocks).rank})
        report["byOmega"] = by
        total = sum(b["dim"] for b in by)
        report["sumOverOmega"] = total
        report["boundHolds"] = report["dimFull"] <= total
    return report


def verify_invariant(q: QBasis, p: Polynomial, omega: Sequence[int],
                     gens: Sequence[LinearSubstitution] | None = None) -> bool:
    """True iff [p]_omega is a nonzero class fixed by every generator.

    ``p`` must lie in P^{<=omega}; otherwise its weight class is undefined
    and the answer is False.
    """
    return check_invariant(q, p, omega, gens)["invariant"]


def check_invariant(q: QBasis, p: Polynomial, omega: Sequence[int],
                    gens: Sequence[LinearSubstitution] | None = None) -> dict:
    """Like :func:`verify_invariant` but also reports the reduced coordinates."""
    w = tuple(omega)
    while w and w[-1] == 0:
        w = w[:-1]
    gens = list(gens) if gens is not None else gl_generators(q.m)
    idx = [i for i, x in enumerate(q.admissibles) if weight_vector(x) == w]
    mask = sum(1 << i for i in idx)
    out = {"omega": list(w), "invariant": False, "coordinates": [], "moved": []}
    if any(compare_weights(weight_vector(t), w) > 0 for t in p.terms):
        out["reason"] = "polynomial has terms above the weight"
        return out
    base = q.normal_form(p) & mask
    out["coordinates"] = [str_mono(q.admissibles[i]) for i in idx if (base >> i) & 1]
    if not base:
        out["reason"] = "class is zero"
        return out
    for gi, g in enumerate(gens):
        if q.normal_form(substitute(g, p)) & mask != base:
            out["moved"].append(gi)
    out["invariant"] = not out["moved"]
    return out


def str_mono(x: Monomial) -> str:
    from .f2core import format_monomial

    return format_monomial(x)
