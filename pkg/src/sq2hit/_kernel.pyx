# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: bit-packed echelon and Sq-generator expansion.

Bit ``i`` of a vector is coordinate ``i``; the pivot of a row is its highest
set bit.  A row with pivot ``p`` is stored in ``p // 64 + 1`` words since
nothing above the pivot is set.
"""

import numpy as np
cimport numpy as cnp

from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport calloc, malloc, free, realloc
from libc.string cimport memcpy, memset

cnp.import_array()

cdef extern from *:
    int __builtin_clzll(unsigned long long) nogil

DEF MAXVARS = 16


cdef inline int _top_bit(uint64_t x) noexcept nogil:
    return 63 - __builtin_clzll(x)


cdef inline uint64_t _low_mask(int lim) noexcept nogil:
    if lim >= 64:
        return <uint64_t> 0xFFFFFFFFFFFFFFFF
    return ((<uint64_t> 1) << lim) - 1


cdef class Echelon:
    """Incremental echelon basis over F_2 with highest-bit pivots."""

    cdef readonly Py_ssize_t ncols
    cdef readonly Py_ssize_t nwords
    cdef readonly Py_ssize_t rank
    cdef uint64_t **rows
    cdef uint64_t *work
    cdef public bint full_reduce

    def __cinit__(self, Py_ssize_t ncols, bint full_reduce=True):
        if ncols < 0:
            raise ValueError("ncols must be non-negative")
        self.ncols = ncols
        self.nwords = (ncols + 63) // 64
        self.rank = 0
        self.full_reduce = full_reduce
        self.rows = <uint64_t **> calloc(ncols + 1, sizeof(uint64_t *))
        self.work = <uint64_t *> calloc(self.nwords + 1, sizeof(uint64_t))
        if self.rows == NULL or self.work == NULL:
            raise MemoryError()

    def __dealloc__(self):
        cdef Py_ssize_t i
        if self.rows != NULL:
            for i in range(self.ncols):
                if self.rows[i] != NULL:
                    free(self.rows[i])
            free(self.rows)
        if self.work != NULL:
            free(self.work)

    cdef int _load_int(self, object v) except -1:
        cdef bytes raw
        cdef Py_ssize_t nbytes = self.nwords * 8
        if v < 0 or (v >> self.ncols) != 0:
            raise ValueError("vector does not fit %d coordinates" % self.ncols)
        raw = (<object> v).to_bytes(nbytes, "little")
        if nbytes:
            memcpy(self.work, <char *> raw, nbytes)
        return 0

    cdef object _as_int(self, uint64_t *words, Py_ssize_t n):
        if n == 0:
            return 0
        return int.from_bytes((<char *> words)[:n * 8], "little")

    cdef int _load_cols(self, const int64_t[::1] cols, Py_ssize_t lo, Py_ssize_t hi) except -1:
        cdef Py_ssize_t i
        cdef int64_t c
        memset(self.work, 0, self.nwords * 8)
        for i in range(lo, hi):
            c = cols[i]
            if c < 0 or c >= self.ncols:
                raise ValueError("coordinate %d out of range" % c)
            self.work[c >> 6] ^= (<uint64_t> 1) << (c & 63)
        return 0

    cdef Py_ssize_t _reduce_work(self, bint stop_at_free) noexcept nogil:
        # clears pivot coordinates top-down; returns highest survivor or -1
        cdef Py_ssize_t w, j, c, top = -1
        cdef uint64_t x
        cdef uint64_t *r
        cdef uint64_t *v = self.work
        cdef int b, lim
        w = self.nwords - 1
        while w >= 0:
            lim = 64
            while lim > 0:
                x = v[w] & _low_mask(lim)
                if x == 0:
                    break
                b = _top_bit(x)
                c = w * 64 + b
                r = self.rows[c]
                if r != NULL:
                    for j in range(w + 1):
                        v[j] ^= r[j]
                elif top < 0:
                    top = c
                    if stop_at_free:
                        return top
                lim = b
            w -= 1
        return top

    cdef int _store_work(self, Py_ssize_t top) except -1:
        cdef Py_ssize_t n = top // 64 + 1
        cdef uint64_t *row = <uint64_t *> malloc(n * sizeof(uint64_t))
        if row == NULL:
            raise MemoryError("echelon row store exhausted at rank %d" % self.rank)
        memcpy(row, self.work, n * sizeof(uint64_t))
        self.rows[top] = row
        self.rank += 1
        return 0

    cdef bint _insert_work(self) except -1:
        cdef Py_ssize_t top
        with nogil:
            top = self._reduce_work(not self.full_reduce)
        if top < 0:
            return False
        self._store_work(top)
        return True

    def insert_cols(self, cols):
        """Insert the vector whose set coordinates are ``cols`` (mod 2)."""
        cdef cnp.ndarray[int64_t, ndim=1, mode="c"] a = np.ascontiguousarray(cols, dtype=np.int64)
        self._load_cols(a, 0, a.shape[0])
        return self._insert_work()

    def insert_int(self, v):
        self._load_int(v)
        return self._insert_work()

    def insert_batch(self, const int64_t[::1] flat, const int64_t[::1] offsets, const int64_t[::1] order):
        """Insert generator ``order[i]`` (columns ``flat[offsets[g]:offsets[g+1]]``) in turn."""
        cdef Py_ssize_t i, g
        cdef Py_ssize_t added = 0
        for i in range(order.shape[0]):
            g = order[i]
            self._load_cols(flat, offsets[g], offsets[g + 1])
            if self._insert_work():
                added += 1
        return added

    def reduce_int(self, v):
        self._load_int(v)
        with nogil:
            self._reduce_work(False)
        return self._as_int(self.work, self.nwords)

    def reduce_cols(self, cols):
        cdef cnp.ndarray[int64_t, ndim=1, mode="c"] a = np.ascontiguousarray(cols, dtype=np.int64)
        self._load_cols(a, 0, a.shape[0])
        with nogil:
            self._reduce_work(False)
        return self._as_int(self.work, self.nwords)

    def is_pivot(self, Py_ssize_t c):
        if c < 0 or c >= self.ncols:
            raise IndexError(c)
        return self.rows[c] != NULL

    def pivots(self):
        cdef Py_ssize_t i
        return [i for i in range(self.ncols) if self.rows[i] != NULL]

    def row_int(self, Py_ssize_t p):
        if p < 0 or p >= self.ncols or self.rows[p] == NULL:
            raise KeyError(p)
        return self._as_int(self.rows[p], p // 64 + 1)

    def set_row_int(self, Py_ssize_t p, v):
        """Install ``v`` as the row of pivot ``p`` verbatim (deserialisation)."""
        if p < 0 or p >= self.ncols or v.bit_length() != p + 1:
            raise ValueError("row does not have pivot %d" % p)
        if self.rows[p] != NULL:
            raise ValueError("pivot %d already present" % p)
        self._load_int(v)
        self._store_work(p)

    def canonicalize(self):
        """Clear every non-leading pivot coordinate from every row, in place."""
        cdef Py_ssize_t p, w, j, c
        cdef uint64_t x
        cdef uint64_t *row
        cdef uint64_t *r
        cdef int b, lim
        with nogil:
            for p in range(self.ncols):
                row = self.rows[p]
                if row == NULL:
                    continue
                # rows with smaller pivots are already fully reduced
                w = p // 64
                lim = p & 63
                while w >= 0:
                    while lim > 0:
                        x = row[w] & _low_mask(lim)
                        if x == 0:
                            break
                        b = _top_bit(x)
                        c = w * 64 + b
                        r = self.rows[c]
                        if r != NULL:
                            for j in range(w + 1):
                                row[j] ^= r[j]
                        lim = b
                    w -= 1
                    lim = 64

    def memory_bytes(self):
        cdef Py_ssize_t i, total = 0
        for i in range(self.ncols):
            if self.rows[i] != NULL:
                total += (i // 64 + 1) * 8
        return total


# -- Sq^k expansion ------------------------------------------------------------

cdef struct _Expand:
    int m
    int64_t *a          # exponents of the source monomial
    int64_t *cur        # exponents of the term under construction
    int64_t *cap        # suffix sums of the largest usable increment
    const int64_t *lex  # composition rank -> column (or -1)
    const int64_t *binom
    int bstride
    int64_t *out
    Py_ssize_t nout
    Py_ssize_t capacity
    int bad


cdef inline int64_t _comp_rank(_Expand *e) noexcept nogil:
    # colex rank of the bar positions of the composition e.cur
    cdef int j
    cdef int64_t pos = -1, r = 0
    for j in range(e.m - 1):
        pos += e.cur[j] + 1
        r += e.binom[pos * e.bstride + j + 1]
    return r


cdef int _emit(_Expand *e) noexcept nogil:
    cdef int64_t col = e.lex[_comp_rank(e)]
    cdef int64_t *grown
    if col < 0:
        e.bad = 1
        return -1
    if e.nout == e.capacity:
        grown = <int64_t *> realloc(e.out, 2 * e.capacity * sizeof(int64_t))
        if grown == NULL:
            e.bad = 2
            return -1
        e.out = grown
        e.capacity *= 2
    e.out[e.nout] = col
    e.nout += 1
    return 0


cdef void _rec(_Expand *e, int j, int64_t rem) noexcept nogil:
    cdef int64_t a = e.a[j]
    cdef int64_t s
    if e.bad:
        return
    if j == e.m - 1:
        if rem & ~a == 0:
            e.cur[j] = a + rem
            _emit(e)
            e.cur[j] = a
        return
    s = a
    while True:
        if s <= rem and rem - s <= e.cap[j + 1]:
            e.cur[j] = a + s
            _rec(e, j + 1, rem - s)
        if s == 0:
            break
        s = (s - 1) & a
    e.cur[j] = a


cdef int64_t _largest_sub(int64_t a, int64_t k) noexcept nogil:
    cdef int64_t s = a
    while s > k:
        s = (s - 1) & a
    return s


def expand_generators(const int64_t[:, ::1] sources, const int64_t[::1] ks,
                      const int64_t[::1] lex_to_col, const int64_t[:, ::1] binom):
    """Column sets of Sq^{ks[g]}(sources[g]) for every g.

    Returns ``(flat, offsets, leads)``; generator ``g`` owns
    ``flat[offsets[g]:offsets[g+1]]`` and ``leads[g]`` is its largest column
    (``-1`` for a zero image).
    """
    cdef Py_ssize_t ng = sources.shape[0]
    cdef int m = sources.shape[1]
    cdef Py_ssize_t g, i, start
    cdef int j
    cdef int64_t k, tot, lead
    cdef int64_t a[MAXVARS]
    cdef int64_t cur[MAXVARS]
    cdef int64_t cap[MAXVARS + 1]
    cdef _Expand e
    if m > MAXVARS:
        raise ValueError("at most %d variables" % MAXVARS)
    if ks.shape[0] != ng:
        raise ValueError("sources and ks differ in length")
    offsets = np.zeros(ng + 1, dtype=np.int64)
    leads = np.empty(ng, dtype=np.int64)
    cdef int64_t[::1] off_v = offsets
    cdef int64_t[::1] lead_v = leads
    e.m = m
    e.a = a
    e.cur = cur
    e.cap = cap
    e.lex = &lex_to_col[0]
    e.binom = &binom[0, 0]
    e.bstride = binom.shape[1]
    e.capacity = 1 << 16
    e.out = <int64_t *> malloc(e.capacity * sizeof(int64_t))
    e.nout = 0
    e.bad = 0
    if e.out == NULL:
        raise MemoryError()
    try:
        with nogil:
            for g in range(ng):
                k = ks[g]
                tot = 0
                for j in range(m):
                    a[j] = sources[g, j]
                    cur[j] = a[j]
                    tot += a[j]
                start = e.nout
                if k == 0:
                    _emit(&e)
                elif k <= tot:
                    cap[m] = 0
                    for j in range(m - 1, -1, -1):
                        cap[j] = cap[j + 1] + _largest_sub(a[j], k)
                    if cap[0] >= k:
                        _rec(&e, 0, k)
                if e.bad:
                    break
                lead = -1
                for i in range(start, e.nout):
                    if e.out[i] > lead:
                        lead = e.out[i]
                lead_v[g] = lead
                off_v[g + 1] = e.nout
        if e.bad == 1:
            raise ValueError("Sq image left the coordinate frame")
        if e.bad == 2:
            raise MemoryError()
        flat = np.empty(e.nout, dtype=np.int64)
        if e.nout:
            memcpy(<void *> cnp.PyArray_DATA(flat), e.out, e.nout * sizeof(int64_t))
    finally:
        free(e.out)
    return flat, offsets, leads
