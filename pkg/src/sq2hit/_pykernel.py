"""Pure-Python twin of the compiled kernel.

Vectors are Python ints; bit ``i`` is coordinate ``i`` and a row's pivot is
its highest set bit.  The interface mirrors ``_kernel`` exactly.
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

from .steenrod import sq_terms


class Echelon:
    def __init__(self, ncols: int, full_reduce: bool = True):
        if ncols < 0:
            raise ValueError("ncols must be non-negative")
        self.ncols = ncols
        self.nwords = (ncols + 63) // 64
        self.full_reduce = full_reduce
        self._rows: Dict[int, int] = {}

    @property
    def rank(self) -> int:
        return len(self._rows)

    def _check(self, v: int) -> None:
        if v < 0 or v >> self.ncols:
            raise ValueError("vector does not fit %d coordinates" % self.ncols)

    def _cols_to_int(self, cols) -> int:
        v = 0
        n = self.ncols
        for c in cols:
            c = int(c)
            if c < 0 or c >= n:
                raise ValueError("coordinate %d out of range" % c)
            v ^= 1 << c
        return v

    def _reduce(self, v: int, stop_at_free: bool) -> Tuple[int, int]:
        rows = self._rows
        free = 0
        top = -1
        while v:
            p = v.bit_length() - 1
            r = rows.get(p)
            if r is not None:
                v ^= r
            else:
                if top < 0:
                    top = p
                    if stop_at_free:
                        return v | free, top
                b = 1 << p
                free |= b
                v ^= b
        return free, top

    def _insert(self, v: int) -> bool:
        v, top = self._reduce(v, not self.full_reduce)
        if top < 0:
            return False
        self._rows[top] = v
        return True

    def insert_cols(self, cols) -> bool:
        return self._insert(self._cols_to_int(cols))

    def insert_int(self, v: int) -> bool:
        self._check(v)
        return self._insert(v)

    def insert_batch(self, flat: Sequence[int], offsets: Sequence[int], order: Sequence[int]) -> int:
        added = 0
        for g in order:
            g = int(g)
            v = 0
            for c in flat[offsets[g]:offsets[g + 1]]:
                v ^= 1 << int(c)
            if v and self._insert(v):
                added += 1
        return added

    def reduce_int(self, v: int) -> int:
        self._check(v)
        return self._reduce(v, False)[0]

    def reduce_cols(self, cols) -> int:
        return self._reduce(self._cols_to_int(cols), False)[0]

    def is_pivot(self, c: int) -> bool:
        if c < 0 or c >= self.ncols:
            raise IndexError(c)
        return c in self._rows

    def pivots(self) -> List[int]:
        return sorted(self._rows)

    def row_int(self, p: int) -> int:
        return self._rows[p]

    def set_row_int(self, p: int, v: int) -> None:
        if p < 0 or p >= self.ncols or v.bit_length() != p + 1:
            raise ValueError("row does not have pivot %d" % p)
        if p in self._rows:
            raise ValueError("pivot %d already present" % p)
        self._rows[p] = v

    def canonicalize(self) -> None:
        rows = self._rows
        for p in sorted(rows):
            r = rows[p]
            lead = 1 << p
            rest = r ^ lead
            out = 0
            while rest:
                q = rest.bit_length() - 1
                s = rows.get(q)
                if s is not None:
                    # s is already fully reduced
                    rest ^= s
                else:
                    b = 1 << q
                    out |= b
                    rest ^= b
            rows[p] = lead | out

    def memory_bytes(self) -> int:
        return sum((p // 64 + 1) * 8 for p in self._rows)


def expand_generators(sources: Sequence[tuple], ks: Sequence[int], index: Dict[tuple, int]):
    """Column sets of Sq^{ks[g]}(sources[g]); same triple as the compiled version."""
    flat: List[int] = []
    offsets = [0]
    leads: List[int] = []
    for x, k in zip(sources, ks):
        lead = -1
        for t in sq_terms(int(k), tuple(x)):
            try:
                c = index[t]
            except KeyError:
                raise ValueError("Sq image left the coordinate frame") from None
            flat.append(c)
            if c > lead:
                lead = c
        offsets.append(len(flat))
        leads.append(lead)
    return flat, offsets, leads
