"""Run configuration and a content-addressed cache directory.

Layout under the cache root::

    lock                      held by the owning process (fcntl)
    manifests/<key>.json      immutable, one per computation
    artifacts/<sha256>.<ext>  content-addressed payloads
    checkpoints/<key>.ckpt    partial echelons of interrupted block builds

A manifest key is the sha256 of the canonical JSON of (operation, m, n,
options, code version).  Artifacts are named by the sha256 of their bytes,
so a damaged file is detected on read and recomputed.
"""

from __future__ import annotations

import errno
import fcntl
import hashlib
import json
import logging
import os
import struct
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from . import __version__

log = logging.getLogger("sq2hit.store")

FORMATS = ("json", "text", "csv")


def default_cache_dir() -> Path:
    env = os.environ.get("SQ2HIT_CACHE")
    if env:
        return Path(env).expanduser()
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "sq2hit"


@dataclass(frozen=True)
class RunConfig:
    cache_dir: Optional[Path] = None
    max_mem_gb: float = 6.0
    threads: int = 1
    checkpoint_every: int = 0
    output_format: str = "json"
    use_cache: bool = True

    def __post_init__(self):
        if not self.max_mem_gb > 0:
            raise ValueError("memory ceiling must be positive")
        if int(self.threads) != self.threads or self.threads < 1:
            raise ValueError("thread count must be a positive integer")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint interval must be non-negative")
        if self.output_format not in FORMATS:
            raise ValueError("output format must be one of %s" % ", ".join(FORMATS))
        if self.cache_dir is None:
            object.__setattr__(self, "cache_dir", default_cache_dir())
        else:
            object.__setattr__(self, "cache_dir", Path(self.cache_dir))


@dataclass(frozen=True)
class ComputationManifest:
    key: str
    operation: str
    m: int
    n: int
    options: Dict[str, Any]
    version: str
    created_at: str
    dims: Dict[str, Any] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "key": self.key, "operation": self.operation, "m": self.m, "n": self.n,
            "options": self.options, "version": self.version, "createdAt": self.created_at,
            "dims": self.dims, "artifacts": self.artifacts,
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ComputationManifest":
        d = json.loads(text)
        return cls(d["key"], d["operation"], d["m"], d["n"], d["options"], d["version"],
                   d["createdAt"], d.get("dims", {}), d.get("artifacts", {}))


def content_key(operation: str, m: int, n: int, options: Dict[str, Any] | None = None,
                version: str = __version__) -> str:
    blob = json.dumps({"operation": operation, "m": m, "n": n, "options": options or {},
                       "version": version}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class CacheLocked(RuntimeError):
    pass


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


class Store:
    """A cache directory owned by one process while open."""

    def __init__(self, root: os.PathLike | str, version: str = __version__,
                 lock_timeout: float = 10.0):
        self.root = Path(root)
        self.version = version
        self.lock_timeout = lock_timeout
        self._lock_fh = None
        self._mutex = threading.RLock()

    # -- ownership ----------------------------------------------------------

    def open(self) -> "Store":
        for sub in ("manifests", "artifacts", "checkpoints"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        fh = open(self.root / "lock", "a+")
        deadline = time.monotonic() + self.lock_timeout
        while True:
            try:
                fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
                break
            except OSError as exc:
                if exc.errno not in (errno.EAGAIN, errno.EACCES) or time.monotonic() > deadline:
                    fh.close()
                    raise CacheLocked("cache directory %s is in use" % self.root) from None
                time.sleep(0.05)
        fh.seek(0)
        fh.truncate()
        fh.write("%d\n" % os.getpid())
        fh.flush()
        self._lock_fh = fh
        return self

    def close(self) -> None:
        if self._lock_fh is not None:
            fcntl.flock(self._lock_fh.fileno(), fcntl.LOCK_UN)
            self._lock_fh.close()
            self._lock_fh = None

    def __enter__(self) -> "Store":
        return self.open() if self._lock_fh is None else self

    def __exit__(self, *exc) -> None:
        self.close()

    def _require_open(self) -> None:
        if self._lock_fh is None:
            raise RuntimeError("store is not open")

    # -- primitives ---------------------------------------------------------

    def key(self, operation: str, m: int, n: int, options: Dict[str, Any] | None = None) -> str:
        return content_key(operation, m, n, options, self.version)

    def _manifest_path(self, key: str) -> Path:
        return self.root / "manifests" / (key + ".json")

    def _write_artifact(self, data: bytes, ext: str) -> str:
        name = hashlib.sha256(data).hexdigest() + "." + ext
        path = self.root / "artifacts" / name
        if self._read_artifact(name) is None:
            _atomic_write(path, data)
        return name

    def _read_artifact(self, name: str) -> Optional[bytes]:
        path = self.root / "artifacts" / name
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            return None
        if hashlib.sha256(data).hexdigest() != name.split(".", 1)[0]:
            return None
        return data

    def manifest(self, key: str) -> Optional[ComputationManifest]:
        try:
            return ComputationManifest.from_json(self._manifest_path(key).read_text())
        except FileNotFoundError:
            return None
        except (ValueError, KeyError, TypeError):
            log.warning("WARN: unreadable manifest %s; recomputing", key)
            self._drop(key)
            return None

    def _drop(self, key: str) -> None:
        try:
            self._manifest_path(key).unlink()
        except FileNotFoundError:
            pass

    def put(self, operation: str, m: int, n: int, options: Dict[str, Any],
            payloads: Dict[str, Tuple[bytes, str]], dims: Dict[str, Any] | None = None) -> ComputationManifest:
        """Record a computation; an existing manifest is left untouched."""
        self._require_open()
        with self._mutex:
            key = self.key(operation, m, n, options)
            old = self.manifest(key)
            if old is not None and all(self._read_artifact(a) is not None for a in old.artifacts.values()):
                return old
            refs = {role: self._write_artifact(data, ext) for role, (data, ext) in payloads.items()}
            man = ComputationManifest(key, operation, m, n, dict(options), self.version,
                                      time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                                      dict(dims or {}), refs)
            _atomic_write(self._manifest_path(key), man.to_json().encode())
            return man

    def get(self, operation: str, m: int, n: int, options: Dict[str, Any],
            role: str) -> Optional[bytes]:
        """Payload ``role`` of a cached computation, or None (corrupt entries are dropped)."""
        self._require_open()
        with self._mutex:
            key = self.key(operation, m, n, options)
            man = self.manifest(key)
            if man is None or role not in man.artifacts:
                return None
            data = self._read_artifact(man.artifacts[role])
            if data is None:
                log.warning("WARN: cache entry %s (%s m=%d n=%d) is corrupt; recomputing",
                            key[:12], operation, m, n)
                self._drop(key)
                try:
                    (self.root / "artifacts" / man.artifacts[role]).unlink()
                except FileNotFoundError:
                    pass
            return data

    # -- JSON results -------------------------------------------------------

    def get_result(self, operation: str, m: int, n: int, options: Dict[str, Any]) -> Optional[str]:
        data = self.get(operation, m, n, options, "result")
        if data is None:
            return None
        try:
            text = data.decode()
            json.loads(text)
        except ValueError:
            log.warning("WARN: cached result for %s m=%d n=%d is not JSON; recomputing",
                        operation, m, n)
            self._drop(self.key(operation, m, n, options))
            return None
        return text

    def put_result(self, operation: str, m: int, n: int, options: Dict[str, Any], text: str,
                   dims: Dict[str, Any] | None = None) -> ComputationManifest:
        return self.put(operation, m, n, options, {"result": (text.encode(), "json")}, dims)

    # -- block echelons (used by hitengine) -------------------------------

    @staticmethod
    def _recipe_args(recipe: str):
        return "echelon", 0, 0, {"recipe": recipe}

    def load_echelon(self, recipe: str) -> Optional[bytes]:
        return self.get(*self._recipe_args(recipe), "echelon")

    def save_echelon(self, recipe: str, echelon) -> None:
        self.put(*self._recipe_args(recipe), {"echelon": (echelon.to_bytes(), "ech")},
                 {"rank": echelon.rank, "ncols": echelon.ncols})

    def discard_echelon(self, recipe: str) -> None:
        with self._mutex:
            self._drop(self.key(*self._recipe_args(recipe)))

    def _ckpt_path(self, recipe: str) -> Path:
        return self.root / "checkpoints" / (self.key(*self._recipe_args(recipe)) + ".ckpt")

    def save_checkpoint(self, recipe: str, echelon, pos: int) -> None:
        self._require_open()
        head = json.dumps({"version": self.version, "recipe": recipe, "pos": pos}).encode()
        with self._mutex:
            _atomic_write(self._ckpt_path(recipe),
                          struct.pack("<I", len(head)) + head + echelon.to_bytes())

    def load_checkpoint(self, recipe: str, kernel: str | None = None) -> Optional[Tuple[bytes, int]]:
        """(echelon payload, generators consumed) of a saved partial build, or None."""
        try:
            raw = self._ckpt_path(recipe).read_bytes()
            (hlen,) = struct.unpack_from("<I", raw, 0)
            head = json.loads(raw[4:4 + hlen])
        except FileNotFoundError:
            return None
        except (struct.error, ValueError):
            log.warning("WARN: unreadable checkpoint for %s; starting over", recipe)
            self.clear_checkpoint(recipe)
            return None
        if head.get("recipe") != recipe or head.get("version") != self.version:
            return None
        return raw[4 + hlen:], int(head["pos"])

    def clear_checkpoint(self, recipe: str) -> None:
        try:
            self._ckpt_path(recipe).unlink()
        except FileNotFoundError:
            pass

    # -- garbage collection -------------------------------------------------

    def manifests(self) -> List[ComputationManifest]:
        out = []
        for p in sorted((self.root / "manifests").glob("*.json")):
            man = self.manifest(p.stem)
            if man is not None:
                out.append(man)
        return out

    def gc(self) -> int:
        """Drop stale-version manifests and every unreferenced artifact; returns bytes freed."""
        self._require_open()
        freed = 0
        with self._mutex:
            live = set()
            for p in sorted((self.root / "manifests").glob("*.json")):
                man = self.manifest(p.stem)
                if man is None:
                    continue
                if man.version != self.version:
                    freed += p.stat().st_size
                    p.unlink()
                    continue
                live.update(man.artifacts.values())
            for p in sorted((self.root / "artifacts").iterdir()):
                if p.name not in live:
                    freed += p.stat().st_size
                    p.unlink()
            for p in sorted((self.root / "checkpoints").glob("*.ckpt")):
                try:
                    raw = p.read_bytes()
                    (hlen,) = struct.unpack_from("<I", raw, 0)
                    stale = json.loads(raw[4:4 + hlen]).get("version") != self.version
                except (struct.error, ValueError):
                    stale = True
                if stale:
                    freed += p.stat().st_size
                    p.unlink()
        return freed

    def size_bytes(self) -> int:
        return sum(p.stat().st_size for p in self.root.rglob("*") if p.is_file())


def open_store(config: RunConfig) -> Optional[Store]:
    if not config.use_cache:
        return None
    return Store(config.cache_dir).open()


def cache_gc(config: RunConfig) -> int:
    """Collect unreferenced artifacts of the configured cache; returns bytes freed."""
    root = Path(config.cache_dir)
    if not root.exists():
        return 0
    with Store(root) as st:
        return st.gc()
