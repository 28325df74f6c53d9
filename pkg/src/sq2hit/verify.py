"""Reproduction report: named claims with expected and computed values.

The quick profile stays below 20,000 frame monomials per case.  The full
profile adds degree 41 in five variables and the Kameko map onto degree 18.
"""

from __future__ import annotations

import logging
import resource
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from . import backend
from .f2core import Polynomial, is_full_support, weight_vector, xi
from .glrep import check_invariant, invariants_dim
from .hitengine import (
    ResourceError,
    admissible_basis,
    kameko_iso_check,
    kameko_matrix,
    omega_decomposition,
    zero_part_from_smaller,
    zero_positive_split,
)

log = logging.getLogger("sq2hit.verify")

PASS, FAIL, SKIPPED = "PASS", "FAIL", "SKIPPED"

# weights of (Q^5)_18 in ascending order with their dimensions
OMEGA_18 = [((2, 2, 1, 1), 300), ((2, 2, 3), 15), ((2, 4, 2), 10),
            ((4, 1, 1, 1), 110), ((4, 1, 3), 15), ((4, 3, 2), 280)]
ZERO_18 = [((2, 2, 3), 0), ((2, 4, 2), 0)]
INVARIANTS_18 = [0, 0, 0, 1, 0, 0]
OMEGA_41_POSITIVE = (3, 3, 2, 1, 1)

# twelve-term GL_5-invariant of weight (4,1,1,1) in degree 18
INVARIANT_18_TERMS = [
    (1, 1, 1, 1, 14), (1, 1, 1, 14, 1), (1, 1, 14, 1, 1), (1, 3, 1, 1, 12),
    (1, 3, 1, 12, 1), (1, 3, 12, 1, 1), (3, 1, 1, 1, 12), (3, 1, 1, 12, 1),
    (3, 1, 12, 1, 1), (3, 5, 1, 1, 8), (3, 5, 1, 8, 1), (3, 5, 8, 1, 1),
]


def invariant_18() -> Polynomial:
    return Polynomial(INVARIANT_18_TERMS, 5)


@dataclass
class Claim:
    name: str
    expected: Any
    computed: Any = None
    status: str = SKIPPED
    reason: str = ""
    seconds: float = 0.0

    def as_json(self) -> dict:
        d = {"name": self.name, "status": self.status, "expected": self.expected,
             "computed": self.computed, "seconds": round(self.seconds, 3)}
        if self.reason:
            d["reason"] = self.reason
        return d

    def line(self) -> str:
        tail = " (%s)" % self.reason if self.reason else ""
        return "%-7s %s: expected %s, computed %s%s" % (
            self.status, self.name, _fmt(self.expected), _fmt(self.computed), tail)


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return "(" + ",".join(_fmt(u) for u in v) + ")"
    return str(v)


def _as_plain(v):
    if isinstance(v, tuple):
        return [_as_plain(u) for u in v]
    if isinstance(v, list):
        return [_as_plain(u) for u in v]
    return v


@dataclass
class Report:
    profile: str
    claims: List[Claim] = field(default_factory=list)
    backend: str = backend.NAME
    seconds: float = 0.0
    peak_rss_mb: float = 0.0

    def counts(self) -> Dict[str, int]:
        out = {PASS: 0, FAIL: 0, SKIPPED: 0}
        for c in self.claims:
            out[c.status] += 1
        return out

    @property
    def exit_code(self) -> int:
        c = self.counts()
        if c[FAIL]:
            return 1
        if c[SKIPPED]:
            return 2
        return 0

    def as_json(self) -> dict:
        c = self.counts()
        return {"profile": self.profile, "backend": self.backend,
                "claims": [x.as_json() for x in self.claims],
                "summary": {"pass": c[PASS], "fail": c[FAIL], "skipped": c[SKIPPED]},
                "exitCode": self.exit_code}

    def text(self) -> str:
        c = self.counts()
        lines = [x.line() for x in self.claims]
        lines.append("%d passed, %d failed, %d skipped (%s backend, %.1fs, peak RSS %.0f MB)"
                     % (c[PASS], c[FAIL], c[SKIPPED], self.backend, self.seconds, self.peak_rss_mb))
        return "\n".join(lines)


class _Runner:
    def __init__(self, report: Report, budget_s: Optional[float]):
        self.report = report
        self.budget_s = budget_s

    def group(self, names_expected: List[tuple], compute: Callable[[], List[Any]]) -> List[Claim]:
        """Evaluate several claims sharing one computation."""
        claims = [Claim(n, _as_plain(e)) for n, e in names_expected]
        self.report.claims.extend(claims)
        t0 = time.perf_counter()
        try:
            values = compute()
        except (ResourceError, MemoryError) as exc:
            for c in claims:
                c.status, c.reason = SKIPPED, "resource limit: %s" % exc
            return claims
        dt = time.perf_counter() - t0
        over = self.budget_s is not None and dt > self.budget_s
        for c, v in zip(claims, values):
            c.computed = _as_plain(v)
            c.seconds = dt
            if over:
                c.status, c.reason = SKIPPED, "wall budget of %.0fs exceeded (%.0fs)" % (self.budget_s, dt)
            else:
                c.status = PASS if c.computed == c.expected else FAIL
        return claims


def verify_paper(profile: str = "quick", *, max_mem_gb: Optional[float] = None, store=None,
                 threads: int = 1, full_budget_s: float = 1800.0,
                 kernel: str | None = None) -> Report:
    """Run every named claim of ``profile`` (``quick`` or ``full``)."""
    if profile not in ("quick", "full"):
        raise ValueError("profile must be 'quick' or 'full'")
    t_start = time.perf_counter()
    report = Report(profile)
    run = _Runner(report, None)
    kw = dict(max_mem_gb=max_mem_gb, store=store, threads=threads, kernel=kernel)

    # xi and the Kameko isomorphism criterion
    tdeg = [23 * 2**t - 5 for t in (2, 3, 4)]
    run.group([("xi(41)", 3)] + [("xi(%d)" % d, 5) for d in tdeg],
              lambda: [xi(41)] + [xi(d) for d in tdeg])
    run.group([("kameko_iso_check(5,%d)" % d, True) for d in tdeg],
              lambda: [kameko_iso_check(5, d) for d in tdeg])

    # degree 18 in five variables
    def deg18():
        q = admissible_basis(5, 18, **kw)
        pieces = {p.omega: p for p in omega_decomposition(q)}
        vals = [q.dim, [list(p.omega) for p in omega_decomposition(q)]]
        vals += [pieces[w].dim if w in pieces else 0 for w, _ in OMEGA_18]
        vals += [pieces[w].dim_zero if w in pieces else 0 for w, _ in ZERO_18]
        return vals

    run.group([("dim Q(5,18)", 730),
               ("weights of Q(5,18)", [list(w) for w, _ in OMEGA_18])]
              + [("dim Q(5,18) at omega=%s" % _fmt(w), d) for w, d in OMEGA_18]
              + [("zero-support dim Q(5,18) at omega=%s" % _fmt(w), d) for w, d in ZERO_18],
              deg18)

    # degree 41 in at most four variables
    def small41():
        q1 = admissible_basis(1, 41, **kw)
        q2 = admissible_basis(2, 41, **kw)
        p3 = zero_positive_split(admissible_basis(3, 41, **kw))[1]
        p4 = zero_positive_split(admissible_basis(4, 41, **kw))[1]
        pos = {1: zero_positive_split(q1)[1], 2: zero_positive_split(q2)[1], 3: p3, 4: p4}
        return [q1.dim, q2.dim, p3, p4, zero_part_from_smaller(5, 41, pos)]

    run.group([("dim Q(1,41)", 0), ("dim Q(2,41)", 0), ("positive dim Q(3,41)", 15),
               ("positive dim Q(4,41)", 165), ("zero-part of Q(5,41) from m<5", 975)], small41)

    # invariants in degree 18
    def inv18():
        q = admissible_basis(5, 18, **kw)
        rep = invariants_dim(5, 18, "per-omega", q=q)
        chk = check_invariant(q, invariant_18(), (4, 1, 1, 1))
        return [[b["dim"] for b in rep["byOmega"]], rep["dimFull"], rep["boundHolds"],
                chk["invariant"]]

    run.group([("GL5-invariants of Q(5,18) per omega", INVARIANTS_18),
               ("GL5-invariants of Q(5,18)", 1),
               ("full invariants bounded by the per-omega sum", True),
               ("twelve-term class of weight (4,1,1,1) is GL5-invariant", True)], inv18)

    if profile == "full":
        full = _Runner(report, full_budget_s)

        def deg41():
            q = admissible_basis(5, 41, **kw)
            zero, pos = zero_positive_split(q)
            pos_at = sum(1 for x in q.admissibles
                         if is_full_support(x) and weight_vector(x) == OMEGA_41_POSITIVE)
            km = kameko_matrix(5, 18, domain=q, codomain=admissible_basis(5, 18, **kw))
            kernel_weights = set()
            for v in km.kernel_basis():
                while v:
                    i = v.bit_length() - 1
                    x = q.admissibles[i]
                    if is_full_support(x):
                        kernel_weights.add(weight_vector(x))
                    v ^= 1 << i
            return [zero, pos_at, q.dim, km.rank, km.is_epimorphism, km.kernel_dim,
                    sorted(list(w) for w in kernel_weights)]

        full.group([("zero-part dim Q(5,41)", 975),
                    ("positive dim Q(5,41) at omega=(3,3,2,1,1)", 925),
                    ("dim Q(5,41)", 2630),
                    ("rank of Kameko map Q(5,41) -> Q(5,18)", 730),
                    ("Kameko map Q(5,41) -> Q(5,18) is onto", True),
                    ("kernel of Kameko map Q(5,41) -> Q(5,18)", 1900),
                    ("weights of positive kernel classes", [list(OMEGA_41_POSITIVE)])], deg41)

    report.seconds = time.perf_counter() - t_start
    report.peak_rss_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
    return report
