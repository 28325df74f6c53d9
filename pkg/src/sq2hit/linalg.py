"""Bit-packed F_2 linear algebra over monomial coordinates.

Coordinates are bits of Python ints.  A :class:`CoordinateFrame` lists its
monomials in descending order; internally bit ``i`` belongs to the ``i``-th
smallest monomial, so the pivot of a row (its highest bit) is the largest
monomial of the corresponding polynomial.
"""

from __future__ import annotations

import hashlib
import io
import struct
import zlib
from math import comb
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from . import backend
from .f2core import ContractError, Monomial, Polynomial, sorted_desc

MAGIC = b"SQ2HIT-ECH v1\n"


class CoordinateFrame:
    """An ordered monomial basis of (a support block of) (P_m)_n."""

    def __init__(self, m: int, n: int, monomials: Iterable[Monomial] | None = None):
        from .f2core import monomials as all_monomials

        self.m = m
        self.n = n
        mons = list(all_monomials(m, n)) if monomials is None else [tuple(x) for x in monomials]
        for x in mons:
            if len(x) != m or sum(x) != n:
                raise ContractError("monomial %r is not of degree %d in %d variables" % (x, n, m))
        self.monomials: List[Monomial] = sorted_desc(mons)
        if len(set(self.monomials)) != len(self.monomials):
            raise ContractError("frame monomials must be distinct")
        self.size = len(self.monomials)
        self._bit: Dict[Monomial, int] = {x: self.size - 1 - i for i, x in enumerate(self.monomials)}
        self._lex = None
        self._hash = None

    def __len__(self) -> int:
        return self.size

    def __contains__(self, x) -> bool:
        return tuple(x) in self._bit

    def bit(self, x: Monomial) -> int:
        return self._bit[tuple(x)]

    def position(self, x: Monomial) -> int:
        """Index of ``x`` in the descending monomial list."""
        return self.size - 1 - self._bit[tuple(x)]

    def monomial_at_bit(self, b: int) -> Monomial:
        return self.monomials[self.size - 1 - b]

    @property
    def index(self) -> Dict[Monomial, int]:
        return self._bit

    def vector(self, p: Polynomial | Iterable[Monomial]) -> int:
        terms = p.terms if isinstance(p, Polynomial) else p
        v = 0
        for t in terms:
            try:
                v ^= 1 << self._bit[tuple(t)]
            except KeyError:
                raise ContractError("monomial %r is outside the frame" % (t,)) from None
        return v

    def polynomial(self, v: int) -> Polynomial:
        terms = []
        while v:
            b = v.bit_length() - 1
            terms.append(self.monomial_at_bit(b))
            v ^= 1 << b
        return Polynomial.from_term_set(frozenset(terms), self.m)

    def lex_table(self) -> Tuple[np.ndarray, np.ndarray]:
        """Composition-rank lookup used by the compiled Sq expander."""
        if self._lex is None:
            m, n = self.m, self.n
            size = comb(n + m - 1, m - 1) if m > 0 else 1
            table = np.full(max(size, 1), -1, dtype=np.int64)
            width = max(m, 1)
            binom = np.zeros((n + m + 1, width + 1), dtype=np.int64)
            for i in range(n + m + 1):
                for j in range(width + 1):
                    binom[i, j] = comb(i, j)
            for x, b in self._bit.items():
                table[composition_rank(x)] = b
            self._lex = (np.ascontiguousarray(table), np.ascontiguousarray(binom))
        return self._lex

    def digest(self) -> str:
        if self._hash is None:
            h = hashlib.sha256()
            h.update(b"%d,%d;" % (self.m, self.n))
            for x in self.monomials:
                h.update(",".join(map(str, x)).encode() + b";")
            self._hash = h.hexdigest()
        return self._hash


def composition_rank(x: Sequence[int]) -> int:
    """Colex rank of the stars-and-bars positions of ``x`` (matches the kernel)."""
    pos = -1
    r = 0
    for j in range(len(x) - 1):
        pos += x[j] + 1
        r += comb(pos, j + 1)
    return r


class EchelonSpace:
    """A subspace of F_2^d kept in echelon form with highest-bit pivots.

    Rows are fully reduced against earlier pivots on insertion;
    :meth:`canonical_rows` returns the unique reduced row-echelon basis.
    """

    def __init__(self, ncols: int, frame: CoordinateFrame | None = None, kernel: str | None = None):
        if frame is not None and frame.size != ncols:
            raise ContractError("frame size %d does not match %d columns" % (frame.size, ncols))
        self.ncols = ncols
        self.frame = frame
        self._kernel_name = kernel
        self._impl = backend.get(kernel).Echelon(ncols)
        self._clean = True

    @classmethod
    def over(cls, frame: CoordinateFrame, kernel: str | None = None) -> "EchelonSpace":
        return cls(frame.size, frame, kernel)

    @property
    def rank(self) -> int:
        return self._impl.rank

    def _as_int(self, v) -> int:
        if isinstance(v, Polynomial):
            if self.frame is None:
                raise ContractError("polynomial input needs a coordinate frame")
            return self.frame.vector(v)
        if isinstance(v, (int, np.integer)):
            v = int(v)
            if v < 0 or v >> self.ncols:
                raise ContractError("vector does not fit %d coordinates" % self.ncols)
            return v
        raise TypeError("expected an int bit-vector or a Polynomial")

    def insert(self, v) -> bool:
        """Add ``v`` to the span; True iff the rank grew."""
        added = self._impl.insert_int(self._as_int(v))
        if added:
            self._clean = False
        return added

    def insert_batch(self, flat, offsets, order) -> int:
        added = self._impl.insert_batch(flat, offsets, order)
        if added:
            self._clean = False
        return added

    def reduce(self, v) -> int:
        """Unique representative of ``v + span`` with no pivot coordinate set."""
        return self._impl.reduce_int(self._as_int(v))

    def contains(self, v) -> bool:
        return self.reduce(v) == 0

    def pivots(self) -> List[int]:
        return self._impl.pivots()

    def is_pivot(self, c: int) -> bool:
        return self._impl.is_pivot(c)

    def _canonicalize(self) -> None:
        if not self._clean:
            self._impl.canonicalize()
            self._clean = True

    def canonical_rows(self) -> Dict[int, int]:
        self._canonicalize()
        return {p: self._impl.row_int(p) for p in self._impl.pivots()}

    def basis(self) -> List[int]:
        return list(self.canonical_rows().values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, EchelonSpace):
            return NotImplemented
        return self.ncols == other.ncols and self.canonical_rows() == other.canonical_rows()

    __hash__ = None

    def merge(self, other: "EchelonSpace") -> int:
        """Insert every row of ``other``; returns the rank gained."""
        if other.ncols != self.ncols:
            raise ContractError("cannot merge spaces of different dimension")
        gained = 0
        for p in other.pivots():
            gained += self.insert(other._impl.row_int(p))
        return gained

    def memory_bytes(self) -> int:
        return self._impl.memory_bytes()

    # -- serialisation ----------------------------------------------------

    def to_bytes(self) -> bytes:
        """``SQ2HIT-ECH v1`` payload: magic, header, zlib-compressed canonical rows."""
        rows = self.canonical_rows()
        frame = self.frame
        header = {
            "m": frame.m if frame else -1,
            "n": frame.n if frame else -1,
            "frame": frame.digest() if frame else "",
            "ncols": self.ncols,
            "rank": len(rows),
            "codec": "zlib",
        }
        buf = io.BytesIO()
        buf.write(MAGIC)
        text = ";".join("%s=%s" % kv for kv in header.items()).encode()
        buf.write(struct.pack("<I", len(text)))
        buf.write(text)
        z = zlib.compressobj(6)
        for p, r in rows.items():
            nbytes = p // 8 + 1
            buf.write(z.compress(struct.pack("<qI", p, nbytes)))
            buf.write(z.compress(r.to_bytes(nbytes, "little")))
        buf.write(z.flush())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, frame: CoordinateFrame | None = None,
                   kernel: str | None = None) -> "EchelonSpace":
        if not data.startswith(MAGIC):
            raise ValueError("not an SQ2HIT-ECH v1 payload")
        pos = len(MAGIC)
        try:
            (hlen,) = struct.unpack_from("<I", data, pos)
            pos += 4
            header = dict(kv.split("=", 1) for kv in data[pos:pos + hlen].decode().split(";"))
            pos += hlen
            body = data[pos:]
            if header.get("codec") == "zlib":
                body = zlib.decompress(body)
            ncols = int(header["ncols"])
            rank = int(header["rank"])
        except (struct.error, KeyError, ValueError, UnicodeDecodeError, zlib.error) as exc:
            raise ValueError("corrupt echelon payload: %s" % exc) from None
        if frame is not None and frame.digest() != header["frame"]:
            raise ValueError("payload was written for a different frame")
        space = cls(ncols, frame, kernel)
        pos = 0
        try:
            for _ in range(rank):
                p, nbytes = struct.unpack_from("<qI", body, pos)
                pos += 12
                row = int.from_bytes(body[pos:pos + nbytes], "little")
                pos += nbytes
                space._impl.set_row_int(p, row)
        except struct.error:
            raise ValueError("truncated echelon payload") from None
        if pos != len(body):
            raise ValueError("trailing bytes in echelon payload")
        space._clean = True
        return space


def echelonize(vectors: Iterable[int], ncols: int, kernel: str | None = None) -> EchelonSpace:
    space = EchelonSpace(ncols, kernel=kernel)
    for v in vectors:
        space.insert(v)
    return space


def echelonize_sharded(vectors: Sequence[int], ncols: int, shards: int = 1,
                       kernel: str | None = None) -> EchelonSpace:
    """Echelonise shards independently and merge them pairwise.

    The canonical rows do not depend on ``shards``.
    """
    shards = max(1, min(shards, len(vectors) or 1))
    parts = [echelonize(vectors[i::shards], ncols, kernel) for i in range(shards)]
    while len(parts) > 1:
        merged = []
        for a, b in zip(parts[0::2], parts[1::2]):
            a.merge(b)
            merged.append(a)
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


# -- square bit matrices ---------------------------------------------------


class BitMatrix:
    """Square F_2 matrix; ``rows[r]`` has bit ``c`` set iff entry (r, c) is 1."""

    __slots__ = ("size", "rows")

    def __init__(self, size: int, rows: Sequence[int]):
        if len(rows) != size:
            raise ContractError("expected %d rows" % size)
        for r in rows:
            if r < 0 or r >> size:
                raise ContractError("row does not fit %d columns" % size)
        self.size = size
        self.rows = tuple(int(r) for r in rows)

    @classmethod
    def identity(cls, size: int) -> "BitMatrix":
        return cls(size, [1 << i for i in range(size)])

    @classmethod
    def from_columns(cls, size: int, cols: Sequence[int]) -> "BitMatrix":
        rows = [0] * size
        for c, col in enumerate(cols):
            while col:
                r = col.bit_length() - 1
                rows[r] |= 1 << c
                col ^= 1 << r
        return cls(size, rows)

    def entry(self, r: int, c: int) -> int:
        return (self.rows[r] >> c) & 1

    def apply(self, v: int) -> int:
        out = 0
        for r, row in enumerate(self.rows):
            if bin(row & v).count("1") & 1:
                out |= 1 << r
        return out

    def columns(self) -> List[int]:
        cols = [0] * self.size
        for r, row in enumerate(self.rows):
            while row:
                c = row.bit_length() - 1
                cols[c] |= 1 << r
                row ^= 1 << c
        return cols

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if other.size != self.size:
            raise ContractError("matrix sizes differ")
        return BitMatrix.from_columns(self.size, [self.apply(c) for c in other.columns()])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def rank(self) -> int:
        return echelonize(self.rows, self.size).rank

    def __repr__(self) -> str:
        return "BitMatrix(%d, %r)" % (self.size, self.rows)


def kernel_basis(rows: Iterable[int], ncols: int) -> List[int]:
    """Basis of {v : r . v = 0 for every r in rows}."""
    space = echelonize(rows, ncols)
    canon = space.canonical_rows()
    pivots = set(canon)
    out = []
    for f in range(ncols):
        if f in pivots:
            continue
        v = 1 << f
        for p, r in canon.items():
            if (r >> f) & 1:
                v |= 1 << p
        out.append(v)
    return out


def fixed_space(mats: Sequence[BitMatrix]) -> EchelonSpace:
    """Common fixed vectors {v : M v = v for all M}."""
    if not mats:
        raise ContractError("need at least one matrix")
    d = mats[0].size
    if any(M.size != d for M in mats):
        raise ContractError("matrices must share one size")
    constraints = []
    for M in mats:
        for r, row in enumerate(M.rows):
            constraints.append(row ^ (1 << r))
    return echelonize(kernel_basis(constraints, d), d)
