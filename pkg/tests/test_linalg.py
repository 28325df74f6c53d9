from __future__ import annotations

import itertools
import random

import numpy as np
import pytest

from sq2hit import backend
from sq2hit.f2core import ContractError, Polynomial
from sq2hit.linalg import (
    MAGIC,
    BitMatrix,
    CoordinateFrame,
    EchelonSpace,
    composition_rank,
    echelonize,
    echelonize_sharded,
    fixed_space,
    kernel_basis,
)


def _gauss_rank(vectors, ncols):
    """Textbook elimination on lists of 0/1 rows."""
    rows = [[(v >> c) & 1 for c in range(ncols)] for v in vectors]
    rank = 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][c]:
                rows[i] = [a ^ b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def test_insert_examples(kernel):
    s = EchelonSpace(3, kernel=kernel)
    assert s.insert(0) is False and s.rank == 0
    assert s.insert(0b001) is True
    assert s.insert(0b001) is False
    assert s.rank == 1
    full = EchelonSpace(3, kernel=kernel)
    for v in range(1, 8):
        full.insert(v)
    assert full.rank == 3


def test_reduce_examples(kernel):
    s = EchelonSpace(5, kernel=kernel)
    assert s.reduce(0b10110) == 0b10110
    for v in (0b10110, 0b01100):
        s.insert(v)
    for v in (0b10110, 0b01100):
        assert s.reduce(v) == 0
    r = s.reduce(0b11111)
    assert not any(s.is_pivot(p) for p in range(5) if (r >> p) & 1)


def test_dimension_checks(kernel):
    s = EchelonSpace(4, kernel=kernel)
    with pytest.raises(ContractError):
        s.insert(1 << 4)
    with pytest.raises(ContractError):
        EchelonSpace(3, CoordinateFrame(2, 3), kernel=kernel)


@pytest.mark.parametrize("seed", range(6))
def test_rank_matches_textbook_gauss(kernel, seed):
    rng = random.Random(seed)
    ncols = rng.choice([7, 64, 65, 130])
    vecs = [rng.getrandbits(ncols) & rng.getrandbits(ncols) for _ in range(rng.randint(1, 40))]
    assert echelonize(vecs, ncols, kernel).rank == _gauss_rank(vecs, ncols)


@pytest.mark.parametrize("seed", range(8))
def test_canonical_under_shuffles(kernel, seed):
    rng = random.Random(seed)
    ncols = 150
    vecs = [rng.getrandbits(ncols) for _ in range(60)]
    vecs += [a ^ b for a, b in zip(vecs[:20], vecs[20:40])]
    ref = echelonize(vecs, ncols, kernel).canonical_rows()
    for _ in range(4):
        rng.shuffle(vecs)
        assert echelonize(vecs, ncols, kernel).canonical_rows() == ref


@pytest.mark.parametrize("seed", range(5))
def test_reduce_is_linear_and_idempotent(kernel, seed):
    rng = random.Random(100 + seed)
    ncols = 97
    s = echelonize([rng.getrandbits(ncols) for _ in range(30)], ncols, kernel)
    for _ in range(25):
        u, v = rng.getrandbits(ncols), rng.getrandbits(ncols)
        assert s.reduce(u ^ v) == s.reduce(u) ^ s.reduce(v)
        assert s.reduce(s.reduce(u)) == s.reduce(u)
        assert s.contains(u ^ s.reduce(u))


def test_backends_agree():
    if backend.compiled is None:
        pytest.skip("compiled kernel not built")
    rng = random.Random(7)
    ncols = 300
    vecs = [rng.getrandbits(ncols) for _ in range(200)]
    a = echelonize(vecs, ncols, "python")
    b = echelonize(vecs, ncols, "compiled")
    assert a.canonical_rows() == b.canonical_rows()
    for _ in range(20):
        v = rng.getrandbits(ncols)
        assert a.reduce(v) == b.reduce(v)


def test_batch_insert_matches_single(kernel):
    rng = random.Random(3)
    ncols = 90
    sets = [sorted(rng.sample(range(ncols), rng.randint(1, 6))) for _ in range(70)]
    flat = np.array([c for s in sets for c in s], dtype=np.int64)
    offsets = np.array([0] + list(itertools.accumulate(len(s) for s in sets)), dtype=np.int64)
    order = np.arange(len(sets), dtype=np.int64)[::-1].copy()
    batch = EchelonSpace(ncols, kernel=kernel)
    batch.insert_batch(flat, offsets, order)
    single = echelonize([sum(1 << c for c in s) for s in sets], ncols, kernel)
    assert batch == single


@pytest.mark.parametrize("shards", [1, 2, 3, 5])
def test_sharded_merge_is_canonical(kernel, shards):
    rng = random.Random(11)
    ncols = 120
    vecs = [rng.getrandbits(ncols) for _ in range(90)]
    assert (echelonize_sharded(vecs, ncols, shards, kernel).canonical_rows()
            == echelonize(vecs, ncols, kernel).canonical_rows())


def test_serialisation_round_trip(kernel):
    frame = CoordinateFrame(3, 6)
    rng = random.Random(5)
    s = echelonize([rng.getrandbits(frame.size) for _ in range(12)], frame.size, kernel)
    s.frame = frame
    data = s.to_bytes()
    assert data.startswith(MAGIC)
    t = EchelonSpace.from_bytes(data, frame, kernel)
    assert t == s and t.rank == s.rank
    with pytest.raises(ValueError):
        EchelonSpace.from_bytes(data, CoordinateFrame(3, 7))
    with pytest.raises(ValueError):
        EchelonSpace.from_bytes(data[:-3], frame)
    with pytest.raises(ValueError):
        EchelonSpace.from_bytes(b"junk" + data, frame)


def test_frame_coordinates():
    frame = CoordinateFrame(3, 4)
    assert frame.size == 15
    p = Polynomial([(1, 3, 0), (4, 0, 0), (1, 1, 2)], 3)
    assert frame.polynomial(frame.vector(p)) == p
    # the pivot bit of a vector is its largest monomial
    v = frame.vector(p)
    assert frame.monomial_at_bit(v.bit_length() - 1) == p.leading_term()
    assert frame.position(frame.monomials[0]) == 0
    with pytest.raises(ContractError):
        frame.vector(Polynomial([(5, 0, 0)], 3))


def test_composition_rank_is_a_bijection():
    from math import comb

    for m, n in [(3, 5), (4, 7), (5, 6)]:
        ranks = sorted(composition_rank(x) for x in CoordinateFrame(m, n).monomials)
        assert ranks == list(range(comb(n + m - 1, m - 1)))


def _perm_matrix(perm):
    # column i is e_{perm[i]}
    return BitMatrix.from_columns(len(perm), [1 << p for p in perm])


def _fixed_brute(mats, d):
    return sum(1 for v in range(1, 2**d) if all(M.apply(v) == v for M in mats))


def test_fixed_space_examples():
    for d in range(1, 7):
        assert fixed_space([BitMatrix.identity(d)]).rank == d
        cyc = _perm_matrix([(i + 1) % d for i in range(d)])
        fs = fixed_space([cyc])
        assert fs.rank == 1
        assert fs.basis() == [2**d - 1]
        assert _fixed_brute([cyc], d) == 1


def test_fixed_space_brute_force_random():
    rng = random.Random(17)
    zero_seen = False
    for _ in range(60):
        d = 4
        mats = []
        for _ in range(rng.randint(1, 2)):
            while True:
                M = BitMatrix(d, [rng.getrandbits(d) for _ in range(d)])
                if M.rank() == d:
                    break
            mats.append(M)
        fs = fixed_space(mats)
        ones = _fixed_brute(mats, d)
        assert 2**fs.rank - 1 == ones
        zero_seen |= fs.rank == 0
    assert zero_seen


def test_fixed_space_size_mismatch():
    with pytest.raises(ContractError):
        fixed_space([BitMatrix.identity(2), BitMatrix.identity(3)])


def test_kernel_basis_spans_kernel():
    rng = random.Random(23)
    for _ in range(20):
        ncols = rng.randint(1, 8)
        rows = [rng.getrandbits(ncols) for _ in range(rng.randint(0, 6))]
        ker = kernel_basis(rows, ncols)
        brute = [v for v in range(2**ncols)
                 if all(bin(r & v).count("1") % 2 == 0 for r in rows)]
        assert len(brute) == 2 ** len(ker)
        assert echelonize(ker, ncols).rank == len(ker)
        for v in ker:
            assert v in brute


def test_matrix_product_is_composition():
    rng = random.Random(29)
    for _ in range(20):
        d = 5
        A = BitMatrix(d, [rng.getrandbits(d) for _ in range(d)])
        B = BitMatrix(d, [rng.getrandbits(d) for _ in range(d)])
        for _ in range(5):
            v = rng.getrandbits(d)
            assert (A @ B).apply(v) == A.apply(B.apply(v))
