from __future__ import annotations

import json
import logging
import os

import pytest

from sq2hit.hitengine import admissible_basis, hit_space
from sq2hit.store import (
    CacheLocked,
    RunConfig,
    Store,
    cache_gc,
    content_key,
    default_cache_dir,
)


@pytest.fixture
def store(tmp_path):
    with Store(tmp_path / "cache") as st:
        yield st


def test_run_config_validation(tmp_path):
    with pytest.raises(ValueError):
        RunConfig(cache_dir=tmp_path, max_mem_gb=0)
    with pytest.raises(ValueError):
        RunConfig(cache_dir=tmp_path, threads=0)
    with pytest.raises(ValueError):
        RunConfig(cache_dir=tmp_path, output_format="xml")
    cfg = RunConfig(cache_dir=str(tmp_path))
    assert cfg.cache_dir == tmp_path


def test_cache_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("SQ2HIT_CACHE", str(tmp_path / "x"))
    assert default_cache_dir() == tmp_path / "x"
    assert RunConfig().cache_dir == tmp_path / "x"


def test_key_covers_every_input():
    base = content_key("dim", 5, 18, {"a": 1}, "1.0")
    assert base == content_key("dim", 5, 18, {"a": 1}, "1.0")
    others = [content_key("basis", 5, 18, {"a": 1}, "1.0"), content_key("dim", 4, 18, {"a": 1}, "1.0"),
              content_key("dim", 5, 17, {"a": 1}, "1.0"), content_key("dim", 5, 18, {"a": 2}, "1.0"),
              content_key("dim", 5, 18, {"a": 1}, "1.1")]
    assert len({base, *others}) == 6


def test_results_round_trip_and_immutability(store):
    text = json.dumps({"dim": 3}) + "\n"
    m1 = store.put_result("dim", 2, 5, {}, text, {"dim": 3})
    assert store.get_result("dim", 2, 5, {}) == text
    m2 = store.put_result("dim", 2, 5, {}, json.dumps({"dim": 4}))
    assert m2 == m1
    assert store.get_result("dim", 2, 5, {}) == text
    assert store.manifest(m1.key).dims == {"dim": 3}


def test_corrupt_entry_is_recomputed(store, caplog):
    store.put_result("dim", 2, 5, {}, '{"dim": 3}\n')
    man = store.manifests()[0]
    path = store.root / "artifacts" / man.artifacts["result"]
    path.write_text('{"dim": 9}\n')
    with caplog.at_level(logging.WARNING, logger="sq2hit.store"):
        assert store.get_result("dim", 2, 5, {}) is None
    assert any("WARN" in r.getMessage() for r in caplog.records)
    store.put_result("dim", 2, 5, {}, '{"dim": 3}\n')
    assert store.get_result("dim", 2, 5, {}) == '{"dim": 3}\n'


def test_corrupt_echelon_is_recomputed(store, caplog):
    ref = admissible_basis(4, 11, memo=False, store=store).admissibles
    for p in (store.root / "artifacts").glob("*.ech"):
        data = bytearray(p.read_bytes())
        data[-5] ^= 0xFF
        p.write_bytes(bytes(data))
    with caplog.at_level(logging.WARNING):
        again = admissible_basis(4, 11, memo=False, store=store).admissibles
    assert again == ref
    assert any("WARN" in r.getMessage() for r in caplog.records)


def test_cache_soundness(store):
    fresh = admissible_basis(5, 12, memo=False)
    admissible_basis(5, 12, memo=False, store=store)
    n_files = len(list((store.root / "artifacts").iterdir()))
    cached = admissible_basis(5, 12, memo=False, store=store)
    assert cached.admissibles == fresh.admissibles
    for a, b in zip(fresh.hit.blocks.values(), cached.hit.blocks.values()):
        assert a.echelon == b.echelon
    # the second run created nothing new
    assert len(list((store.root / "artifacts").iterdir())) == n_files


def test_gc_empty_and_version_bump(tmp_path):
    cfg = RunConfig(cache_dir=tmp_path / "c")
    assert cache_gc(cfg) == 0
    with Store(cfg.cache_dir, version="old") as st:
        admissible_basis(3, 9, memo=False, store=st)
        st.put_result("dim", 3, 9, {}, '{"dim": 1}\n')
        assert st.gc() == 0
    with Store(cfg.cache_dir, version="new") as st:
        before = st.size_bytes()
        freed = st.gc()
        assert freed > 0
        assert not list((st.root / "artifacts").iterdir())
        assert not list((st.root / "manifests").iterdir())
        assert st.size_bytes() == before - freed


def test_gc_removes_orphans(store):
    (store.root / "artifacts" / "deadbeef.json").write_text("{}")
    store.put_result("dim", 1, 1, {}, '{"dim": 1}\n')
    assert store.gc() == 2
    assert store.get_result("dim", 1, 1, {}) is not None


def test_lock_excludes_second_owner(tmp_path):
    with Store(tmp_path / "c"):
        with pytest.raises(CacheLocked):
            Store(tmp_path / "c", lock_timeout=0.2).open()
    with Store(tmp_path / "c") as st:
        assert (st.root / "lock").read_text().strip() == str(os.getpid())


class _Stop(Exception):
    pass


def test_checkpoint_resume(tmp_path):
    ref = admissible_basis(4, 13, memo=False).admissibles
    with Store(tmp_path / "c") as st:
        calls = []
        original = st.save_checkpoint

        def interrupt(recipe, ech, pos):
            original(recipe, ech, pos)
            calls.append(pos)
            if len(calls) == 3:
                raise _Stop

        st.save_checkpoint = interrupt
        with pytest.raises(_Stop):
            hit_space(4, 13, store=st, checkpoint_every=40)
        assert list((st.root / "checkpoints").glob("*.ckpt"))
        st.save_checkpoint = original
        resumed = []
        orig_load = st.load_checkpoint

        def spy(recipe, kernel=None):
            got = orig_load(recipe, kernel)
            if got is not None:
                resumed.append(got[1])
            return got

        st.load_checkpoint = spy
        again = admissible_basis(4, 13, memo=False, store=st, checkpoint_every=40)
        assert resumed and resumed[0] > 0
        assert again.admissibles == ref
        assert not list((st.root / "checkpoints").glob("*.ckpt"))
