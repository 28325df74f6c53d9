"""Hit subspaces, admissible monomial bases and the Kameko homomorphism.

Every Steenrod square preserves the exact support of a monomial, so the
hit space of (P_m)_n splits into one block per support set.  Each block is
echelonised on its own; the pivots of a block are precisely the
inadmissible monomials of that support.
"""

from __future__ import annotations

import itertools
import logging
import time
from math import comb
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import backend
from .f2core import (
    ContractError,
    Monomial,
    Polynomial,
    WeightVector,
    alpha,
    compare_weights,
    is_full_support,
    monomials,
    positive_monomials,
    weight_vector,
    xi,
)
from .linalg import CoordinateFrame, EchelonSpace

log = logging.getLogger(__name__)


class ResourceError(MemoryError):
    """A computation would exceed the configured memory ceiling."""


def _embed(x: Monomial, supp: Sequence[int], m: int) -> Monomial:
    out = [0] * m
    for j, u in zip(supp, x):
        out[j] = u
    return tuple(out)


def support_monomials(m: int, n: int, supp: Sequence[int]) -> List[Monomial]:
    """Monomials of degree ``n`` in ``m`` variables whose support is exactly ``supp``."""
    return [_embed(x, supp, m) for x in positive_monomials(len(supp), n)]


def estimate_block_bytes(size: int, ngens: int = 0, nterms: int = 0) -> int:
    """Worst-case bytes for echelonising one block of ``size`` coordinates."""
    rows = size * (size + 128) // 16
    return rows + 8 * (nterms + 2 * ngens)


@dataclass
class HitBlock:
    support: Tuple[int, ...]
    frame: CoordinateFrame
    echelon: EchelonSpace

    @property
    def admissible_bits(self) -> List[int]:
        ech = self.echelon
        return [b for b in range(self.frame.size) if not ech.is_pivot(b)]


@dataclass
class HitSpace:
    """The hit elements of (P_m)_n, held as echelonised support blocks."""

    m: int
    n: int
    blocks: Dict[Tuple[int, ...], HitBlock]
    provenance: List[dict] = field(default_factory=list)
    split_support: bool = True

    @property
    def frame_size(self) -> int:
        return sum(b.frame.size for b in self.blocks.values())

    @property
    def rank(self) -> int:
        return sum(b.echelon.rank for b in self.blocks.values())

    @property
    def codimension(self) -> int:
        return self.frame_size - self.rank

    def block_for(self, x: Monomial) -> HitBlock:
        key = tuple(j for j, u in enumerate(x) if u > 0) if self.split_support else ()
        try:
            return self.blocks[key]
        except KeyError:
            raise ContractError("monomial %r is not in degree %d of P_%d" % (x, self.n, self.m)) from None

    def _check(self, p: Polynomial) -> None:
        for t in p.terms:
            if len(t) != self.m or sum(t) != self.n:
                raise ContractError("expected a polynomial of degree %d in %d variables" % (self.n, self.m))

    def split(self, p: Polynomial) -> Dict[Tuple[int, ...], int]:
        """Coordinates of ``p`` per block."""
        self._check(p)
        vecs: Dict[Tuple[int, ...], int] = {}
        for t in p.terms:
            blk = self.block_for(t)
            vecs[blk.support] = vecs.get(blk.support, 0) ^ (1 << blk.frame.bit(t))
        return vecs

    def reduce(self, p: Polynomial) -> Polynomial:
        """The representative of ``p`` modulo hits made of admissible monomials."""
        terms = []
        for key, v in self.split(p).items():
            blk = self.blocks[key]
            r = blk.echelon.reduce(v)
            while r:
                b = r.bit_length() - 1
                terms.append(blk.frame.monomial_at_bit(b))
                r ^= 1 << b
        return Polynomial.from_term_set(frozenset(terms), self.m)

    def contains(self, p: Polynomial) -> bool:
        return not self.reduce(p)

    def memory_bytes(self) -> int:
        return sum(b.echelon.memory_bytes() for b in self.blocks.values())


def _block_sources(m: int, n: int, supp: Optional[Sequence[int]]):
    """(k, sources) for every Sq^{2^i} feeding degree ``n``."""
    i = 0
    while (1 << i) <= n:
        k = 1 << i
        d = n - k
        if supp is None:
            srcs = list(monomials(m, d))
        else:
            srcs = support_monomials(m, d, supp)
        yield k, d, srcs
        i += 1


def _build_block(m: int, n: int, supp: Optional[Tuple[int, ...]], *, kernel: str | None,
                 max_bytes: Optional[int], provenance: List[dict],
                 checkpoint: Optional[Callable] = None, checkpoint_every: int = 0,
                 resume: Optional[Tuple[EchelonSpace, int]] = None) -> HitBlock:
    mons = list(monomials(m, n)) if supp is None else support_monomials(m, n, supp)
    frame = CoordinateFrame(m, n, mons)
    if max_bytes is not None and estimate_block_bytes(frame.size) > max_bytes:
        raise ResourceError(
            "frame of %d monomials (m=%d, n=%d, support %s) exceeds the memory ceiling of %.2f GB"
            % (frame.size, m, n, supp, max_bytes / 2**30)
        )
    impl = backend.get(kernel)
    sources: List[Monomial] = []
    ks: List[int] = []
    for k, d, srcs in _block_sources(m, n, supp):
        sources.extend(srcs)
        ks.extend([k] * len(srcs))
        provenance.append({"support": list(supp) if supp is not None else None,
                           "sq": k, "sourceDegree": d, "generators": len(srcs)})
    if impl is backend.python:
        flat, offsets, leads = impl.expand_generators(sources, ks, frame.index)
        order = sorted(range(len(leads)), key=leads.__getitem__)
    else:
        lex, binom = frame.lex_table()
        src = np.array(sources, dtype=np.int64).reshape(len(sources), m)
        flat, offsets, leads = impl.expand_generators(src, np.array(ks, dtype=np.int64), lex, binom)
        order = np.argsort(leads, kind="stable").astype(np.int64)
    if max_bytes is not None and estimate_block_bytes(frame.size, len(ks), len(flat)) > max_bytes:
        raise ResourceError(
            "frame of %d monomials with %d generators exceeds the memory ceiling of %.2f GB"
            % (frame.size, len(ks), max_bytes / 2**30)
        )
    # ascending leading monomial keeps the fully reduced rows short
    start = 0
    if resume is not None:
        echelon, start = resume
    else:
        echelon = EchelonSpace.over(frame, kernel)
    total = len(order)
    step = checkpoint_every if checkpoint_every and checkpoint else total or 1
    pos = start
    while pos < total:
        chunk = order[pos:pos + step]
        if impl is not backend.python:
            chunk = np.ascontiguousarray(chunk, dtype=np.int64)
        echelon.insert_batch(flat, offsets, chunk)
        pos += len(chunk)
        if checkpoint and pos < total:
            checkpoint(supp, echelon, pos)
    return HitBlock(tuple(supp) if supp is not None else (), frame, echelon)


def supports(m: int) -> List[Tuple[int, ...]]:
    """All support sets, the empty one first, then by size and lexicographically."""
    out = []
    for s in range(m + 1):
        out.extend(itertools.combinations(range(m), s))
    return out


def _block_monomials(m: int, n: int, supp) -> List[Monomial]:
    return list(monomials(m, n)) if supp is None else support_monomials(m, n, supp)


def _block_size(m: int, n: int, supp) -> int:
    if supp is None:
        return comb(n + m - 1, m - 1)
    if not supp:
        return 1 if n == 0 else 0
    if n < len(supp):
        return 0
    return comb(n - 1, len(supp) - 1)


def _source_provenance(m: int, n: int, supp) -> List[dict]:
    out = []
    i = 0
    while (1 << i) <= n:
        k = 1 << i
        out.append({"support": list(supp) if supp is not None else None,
                    "sq": k, "sourceDegree": n - k, "generators": _block_size(m, n - k, supp)})
        i += 1
    return out


def hit_space(m: int, n: int, *, split_support: bool = True, kernel: str | None = None,
              max_mem_gb: Optional[float] = None, store=None,
              checkpoint_every: int = 0, threads: int = 1) -> HitSpace:
    """Echelonised span of Sq^{2^i}(Y) over all monomials Y of degree n - 2^i.

    ``store`` (a :class:`sq2hit.store.Store`) enables caching and
    checkpointing of the block echelons.  With ``threads > 1`` independent
    support blocks are built concurrently; the result does not depend on it.
    """
    if m < 1 or n < 0:
        raise ContractError("need m >= 1 and n >= 0")
    if threads < 1:
        raise ContractError("threads must be at least 1")
    max_bytes = int(max_mem_gb * 2**30) if max_mem_gb else None
    keys: List[Optional[Tuple[int, ...]]] = list(supports(m)) if split_support else [None]
    keys = [s for s in keys if s is None or not (len(s) > n or (n > 0 and not s))]
    if max_bytes is not None:
        # refuse before doing any work if the largest block cannot fit
        for supp in keys:
            size = _block_size(m, n, supp)
            if estimate_block_bytes(size) > max_bytes:
                raise ResourceError(
                    "frame of %d monomials (m=%d, n=%d) exceeds the memory ceiling of %.2f GB"
                    % (size, m, n, max_bytes / 2**30))

    done: Dict[Optional[Tuple[int, ...]], HitBlock] = {}
    todo = []
    for supp in keys:
        recipe = _recipe(m, n, supp)
        cached = store.load_echelon(recipe) if store is not None else None
        if cached is not None:
            frame = CoordinateFrame(m, n, _block_monomials(m, n, supp))
            try:
                ech = EchelonSpace.from_bytes(cached, frame, kernel)
            except ValueError:
                log.warning("WARN: corrupt cached echelon for %s; recomputing", recipe)
                store.discard_echelon(recipe)
            else:
                done[supp] = HitBlock(supp if supp is not None else (), frame, ech)
                continue
        todo.append(supp)

    def build(supp) -> HitBlock:
        t0 = time.perf_counter()
        recipe = _recipe(m, n, supp)
        ckpt = resume = None
        if store is not None and checkpoint_every:
            ckpt = lambda s, e, pos, r=recipe: store.save_checkpoint(r, e, pos)
            saved = store.load_checkpoint(recipe, kernel)
            if saved is not None:
                frame = CoordinateFrame(m, n, _block_monomials(m, n, supp))
                try:
                    resume = (EchelonSpace.from_bytes(saved[0], frame, kernel), saved[1])
                except ValueError:
                    log.warning("WARN: corrupt checkpoint for %s; starting over", recipe)
        blk = _build_block(m, n, supp, kernel=kernel, max_bytes=max_bytes, provenance=[],
                           checkpoint=ckpt, checkpoint_every=checkpoint_every, resume=resume)
        log.debug("block %s: %d monomials, rank %d, %.2fs", supp, blk.frame.size,
                  blk.echelon.rank, time.perf_counter() - t0)
        if store is not None:
            store.save_echelon(recipe, blk.echelon)
            if checkpoint_every:
                store.clear_checkpoint(recipe)
        return blk

    if threads > 1 and len(todo) > 1:
        from concurrent.futures import ThreadPoolExecutor

        # largest blocks first so the pool drains evenly
        todo.sort(key=lambda s: -(len(s) if s is not None else m))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for supp, blk in zip(todo, pool.map(build, todo)):
                done[supp] = blk
    else:
        for supp in todo:
            done[supp] = build(supp)

    blocks: Dict[Tuple[int, ...], HitBlock] = {}
    provenance: List[dict] = []
    for supp in keys:
        blk = done[supp]
        blocks[blk.support] = blk
        provenance.extend(_source_provenance(m, n, supp))
    return HitSpace(m, n, blocks, provenance, split_support)


def _recipe(m: int, n: int, supp) -> str:
    tag = "all" if supp is None else ("s" + "-".join(map(str, supp)) if supp else "s")
    return "hit:m=%d:n=%d:%s:gens=sq2^i-all-monomials" % (m, n, tag)


# -- admissible bases --------------------------------------------------------


@dataclass
class QBasis:
    """Admissible monomials of (m, n) in descending order, with their hit space."""

    m: int
    n: int
    admissibles: List[Monomial]
    hit: HitSpace

    def __post_init__(self):
        self.position = {x: i for i, x in enumerate(self.admissibles)}

    @property
    def dim(self) -> int:
        return len(self.admissibles)

    def __len__(self) -> int:
        return len(self.admissibles)

    def is_positive(self, x: Monomial) -> bool:
        return is_full_support(x)

    @property
    def full_support_flags(self) -> List[bool]:
        return [is_full_support(x) for x in self.admissibles]

    def normal_form(self, p: Polynomial) -> int:
        """Coordinates over the admissibles: bit ``i`` is the coefficient of ``admissibles[i]``."""
        r = self.hit.reduce(p)
        pos = self.position
        v = 0
        for t in r.terms:
            v |= 1 << pos[t]
        return v

    def normal_form_polynomial(self, p: Polynomial) -> Polynomial:
        return self.hit.reduce(p)

    def coordinates(self, v: int) -> Polynomial:
        terms = [self.admissibles[i] for i in range(self.dim) if (v >> i) & 1]
        return Polynomial.from_term_set(frozenset(terms), self.m)

    def weights(self) -> List[WeightVector]:
        return [weight_vector(x) for x in self.admissibles]

    def of_weight(self, omega: Sequence[int], positive_only: bool = False) -> List[Monomial]:
        omega = _trim(omega)
        return [x for x in self.admissibles
                if weight_vector(x) == omega and (not positive_only or is_full_support(x))]


def _trim(w: Iterable[int]) -> WeightVector:
    w = list(w)
    while w and w[-1] == 0:
        w.pop()
    return tuple(w)


_MEMO: Dict[tuple, QBasis] = {}


def admissible_basis(m: int, n: int, *, split_support: bool = True, kernel: str | None = None,
                     max_mem_gb: Optional[float] = None, store=None, checkpoint_every: int = 0,
                     threads: int = 1, memo: bool = True) -> QBasis:
    """Admissible monomials: the frame monomials that are not pivots of the hit echelon."""
    key = (m, n, split_support, kernel or backend.NAME)
    if memo and key in _MEMO:
        return _MEMO[key]
    hit = hit_space(m, n, split_support=split_support, kernel=kernel, max_mem_gb=max_mem_gb,
                    store=store, checkpoint_every=checkpoint_every, threads=threads)
    adm = []
    for blk in hit.blocks.values():
        adm.extend(blk.frame.monomial_at_bit(b) for b in blk.admissible_bits)
    from .f2core import sorted_desc

    q = QBasis(m, n, sorted_desc(adm), hit)
    if memo:
        _MEMO[key] = q
    return q


def clear_memo() -> None:
    _MEMO.clear()


@dataclass(frozen=True)
class OmegaPiece:
    m: int
    n: int
    omega: WeightVector
    dim: int
    admissibles: Tuple[Monomial, ...]
    dim_zero: int
    dim_positive: int

    def as_json(self) -> dict:
        return {"omega": list(self.omega), "dim": self.dim,
                "dimZero": self.dim_zero, "dimPositive": self.dim_positive}


def omega_decomposition(q: QBasis) -> List[OmegaPiece]:
    """Admissibles grouped by exact weight vector, in ascending weight order."""
    groups: Dict[WeightVector, List[Monomial]] = {}
    for x in q.admissibles:
        groups.setdefault(weight_vector(x), []).append(x)
    pieces = []
    for w in sorted(groups, key=_weight_sort_key):
        xs = groups[w]
        pos = sum(1 for x in xs if is_full_support(x))
        pieces.append(OmegaPiece(q.m, q.n, w, len(xs), tuple(xs), len(xs) - pos, pos))
    return pieces


def _weight_sort_key(w: WeightVector):
    return tuple(w) + (0,) * (64 - len(w))


def zero_positive_split(q: QBasis) -> Tuple[int, int]:
    pos = sum(1 for x in q.admissibles if is_full_support(x))
    return q.dim - pos, pos


def zero_part_from_smaller(m: int, n: int, positive_dims: Dict[int, int]) -> int:
    """sum over 1 <= s < m of C(m, s) * dim (Q^{(s)}_n)^{>0}."""
    from math import comb

    total = 0
    for s in range(0, m):
        if s == 0:
            total += 1 if n == 0 else 0
        else:
            total += comb(m, s) * positive_dims[s]
    return total


def peterson_wood_trivial(m: int, n: int) -> bool:
    """Sufficient condition for Q_n in m variables to vanish: alpha(n + m) > m."""
    return alpha(n + m) > m


def kameko_iso_check(m: int, n: int) -> bool:
    """Whether the Kameko map out of degree ``n`` (onto degree (n - m)/2) is an isomorphism.

    True iff ``xi(n) == m``.
    """
    if n < m or (n - m) % 2:
        return False
    return xi(n) == m


@dataclass
class KamekoMap:
    domain: QBasis
    codomain: QBasis
    columns: List[int]  # column per domain admissible, as codomain coordinates
    rank: int

    @property
    def kernel_dim(self) -> int:
        return self.domain.dim - self.rank

    @property
    def is_epimorphism(self) -> bool:
        return self.rank == self.codomain.dim

    def kernel_basis(self) -> List[int]:
        """Kernel vectors over the domain admissibles (bit ``i`` = admissible ``i``)."""
        from .linalg import kernel_basis

        # rows of the transposed matrix: one per codomain coordinate
        rows = [0] * self.codomain.dim
        for i, col in enumerate(self.columns):
            while col:
                r = col.bit_length() - 1
                rows[r] |= 1 << i
                col ^= 1 << r
        return kernel_basis(rows, self.domain.dim)

    def as_json(self) -> dict:
        dom = self.domain
        non_odd = [x for x in dom.admissibles if not all(u & 1 for u in x)]
        weights: Dict[WeightVector, List[int]] = {}
        for x in non_odd:
            w = weights.setdefault(weight_vector(x), [0, 0])
            w[1 if is_full_support(x) else 0] += 1
        return {
            "m": dom.m,
            "domainDegree": dom.n,
            "codomainDegree": self.codomain.n,
            "domainDim": dom.dim,
            "codomainDim": self.codomain.dim,
            "rank": self.rank,
            "kernelDim": self.kernel_dim,
            "epimorphism": self.is_epimorphism,
            "isomorphismPredicted": kameko_iso_check(dom.m, dom.n),
            "evenExponentAdmissibles": [
                {"omega": list(w), "dimZero": c[0], "dimPositive": c[1]}
                for w, c in sorted(weights.items(), key=lambda kv: _weight_sort_key(kv[0]))
            ],
        }


def kameko_image(x: Monomial) -> Optional[Monomial]:
    if all(u & 1 for u in x):
        return tuple((u - 1) // 2 for u in x)
    return None


def kameko_matrix(m: int, n: int, *, domain: QBasis | None = None, codomain: QBasis | None = None,
                  **kw) -> KamekoMap:
    """Matrix of Q_{m+2n} -> Q_n sending [prod x_j^{a_j}] to [prod x_j^{(a_j-1)/2}] when all a_j are odd."""
    if n < 0:
        raise ContractError("codomain degree must be non-negative")
    if domain is None:
        domain = admissible_basis(m, m + 2 * n, **kw)
    if codomain is None:
        codomain = admissible_basis(m, n, **kw)
    if domain.m != m or codomain.m != m or domain.n != m + 2 * codomain.n or codomain.n != n:
        raise ContractError("domain degree must be m + 2n for codomain degree n")
    cols = []
    for x in domain.admissibles:
        y = kameko_image(x)
        cols.append(0 if y is None else codomain.normal_form(Polynomial.from_term_set(frozenset([y]), m)))
    from .linalg import echelonize

    rank = echelonize((c for c in cols if c), codomain.dim).rank
    return KamekoMap(domain, codomain, cols, rank)


# -- independent check of the weight-graded dimensions ----------------------


def omega_dims_direct(m: int, n: int, omegas: Optional[Iterable[Sequence[int]]] = None,
                      kernel: str | None = None) -> Dict[WeightVector, int]:
    """dim P^{<=w} / ((hit ∩ P^{<=w}) + P^{<w}) computed literally, one weight at a time.

    Columns are ordered (weight > w) > (weight = w) > (weight < w), and
    reverse-lexicographically inside each group, so the result does not lean
    on the weight-first order used by :func:`admissible_basis`.  Rows whose
    pivot lies outside the top group span hit ∩ P^{<=w}; those pivoting in the
    middle group give the rank of its image modulo P^{<w}.
    """
    mons = list(monomials(m, n))
    wts = {x: weight_vector(x) for x in mons}
    if omegas is None:
        omegas = sorted(set(wts.values()), key=_weight_sort_key)
    gens = []
    for k, d, srcs in _block_sources(m, n, None):
        from .steenrod import sq_terms

        for y in srcs:
            ts = sq_terms(k, y)
            if ts:
                gens.append(ts)
    out: Dict[WeightVector, int] = {}
    for w in omegas:
        w = _trim(w)
        lo = [x for x in mons if compare_weights(wts[x], w) < 0]
        mid = [x for x in mons if wts[x] == w]
        hi = [x for x in mons if compare_weights(wts[x], w) > 0]
        order = sorted(lo, reverse=True) + sorted(mid, reverse=True) + sorted(hi, reverse=True)
        bit = {x: i for i, x in enumerate(order)}
        space = EchelonSpace(len(order), kernel=kernel)
        for ts in gens:
            v = 0
            for t in ts:
                v ^= 1 << bit[t]
            space.insert(v)
        a, b = len(lo), len(lo) + len(mid)
        pivots_mid = sum(1 for p in space.pivots() if a <= p < b)
        out[w] = len(mid) - pivots_mid
    return out
