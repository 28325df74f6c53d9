"""``sq2hit`` command-line interface.

Exit status: 0 when everything asked for holds, 1 when a check fails or the
input is rejected, 2 when a resource limit forced a skip.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import sys
from typing import Callable, List, Optional

from . import __version__, backend
from .f2core import (
    ContractError,
    Polynomial,
    format_monomial,
    format_polynomial,
    parse_polynomial,
    weight_vector,
)
from .hitengine import ResourceError, admissible_basis, kameko_matrix, omega_decomposition
from .steenrod import adem_normalize, sq_poly
from .store import CacheLocked, RunConfig, cache_gc, open_store

log = logging.getLogger("sq2hit")

EXIT_OK, EXIT_FAIL, EXIT_SKIP = 0, 1, 2


def _int_list(text: str) -> List[int]:
    text = text.strip().strip("()[]")
    if not text:
        return []
    try:
        return [int(s) for s in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers, got %r" % text) from None


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _read_polynomial(text: str, nvars: Optional[int] = None) -> Polynomial:
    """Monomials separated by '+' or newlines; '#' starts a comment."""
    lines = [ln.split("#", 1)[0] for ln in text.splitlines()]
    body = "+".join(s.strip() for s in lines if s.strip())
    body = re.sub(r"\+\s*\+", "+", body)
    return parse_polynomial(body, nvars)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# -- command bodies: each returns (json object, text rendering, exit code) ----


class Context:
    def __init__(self, args):
        fmt = args.format
        if getattr(args, "text", False):
            fmt = "text"
        self.config = RunConfig(
            cache_dir=args.cache_dir,
            max_mem_gb=args.max_mem_gb,
            threads=args.threads,
            checkpoint_every=args.checkpoint_every,
            output_format=fmt or "json",
            use_cache=not args.no_cache,
        )
        self.format_given = fmt is not None
        self.kernel = args.backend
        self._store = None

    @property
    def store(self):
        if self._store is None and self.config.use_cache:
            self._store = open_store(self.config)
        return self._store

    def close(self):
        if self._store is not None:
            self._store.close()

    def basis_kw(self) -> dict:
        return dict(max_mem_gb=self.config.max_mem_gb, store=self.store,
                    threads=self.config.threads, checkpoint_every=self.config.checkpoint_every,
                    kernel=self.kernel)

    def cached(self, operation: str, m: int, n: int, options: dict,
               compute: Callable[[str], dict]) -> dict:
        """JSON result from the cache, or computed and recorded.  Adds ``cacheKey``."""
        st = self.store
        key = st.key(operation, m, n, options) if st is not None else _key(operation, m, n, options)
        if st is not None:
            text = st.get_result(operation, m, n, options)
            if text is not None:
                return json.loads(text)
        obj = compute(key)
        obj["cacheKey"] = key
        if st is not None:
            dims = {k: obj[k] for k in ("dim", "dimFull", "rank", "kernelDim") if k in obj}
            st.put_result(operation, m, n, options, _dumps(obj), dims)
        return obj


def _key(operation, m, n, options):
    from .store import content_key

    return content_key(operation, m, n, options)


def _by_omega(q, omega=None, positive_only=False) -> List[dict]:
    out = []
    for piece in omega_decomposition(q):
        if omega is not None and piece.omega != omega:
            continue
        d = piece.as_json()
        if positive_only:
            d = {"omega": d["omega"], "dim": d["dimPositive"], "dimZero": 0,
                 "dimPositive": d["dimPositive"]}
        out.append(d)
    return out


def _trim(w):
    w = list(w or [])
    while w and w[-1] == 0:
        w.pop()
    return tuple(w)


def _rows_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["omega", "dim", "dimZero", "dimPositive"])
    for r in rows:
        wr.writerow([",".join(map(str, r["omega"])), r["dim"], r["dimZero"], r["dimPositive"]])
    return buf.getvalue()


def cmd_sq(ctx: Context, args):
    p = _read_polynomial(args.poly)
    r = sq_poly(args.k, p)
    obj = {"k": args.k, "input": format_polynomial(p), "result": format_polynomial(r)}
    return obj, format_polynomial(r) + "\n", EXIT_OK


def cmd_adem(ctx: Context, args):
    word = tuple(_int_list(args.word))
    if any(i < 0 for i in word):
        raise ContractError("Steenrod square indices must be non-negative")
    terms = sorted(adem_normalize(word), key=lambda w: (len(w), w), reverse=True)
    text = "+".join("[" + ",".join(map(str, w)) + "]" for w in terms) or "0"
    obj = {"word": list(word), "admissible": [list(w) for w in terms]}
    return obj, text + "\n", EXIT_OK


def _basis_json(ctx: Context, m: int, n: int, omega, positive_only: bool, listing: bool):
    def compute(key):
        q = admissible_basis(m, n, **ctx.basis_kw())
        rows = _by_omega(q, omega, positive_only)
        obj = {"m": m, "n": n, "dim": sum(r["dim"] for r in rows), "byOmega": rows}
        if listing:
            xs = q.admissibles
            if omega is not None:
                xs = [x for x in xs if weight_vector(x) == omega]
            if positive_only:
                xs = [x for x in xs if all(x)]
            obj["admissibles"] = [format_monomial(x) for x in xs]
        return obj

    opts = {"omega": list(omega) if omega is not None else None, "positiveOnly": positive_only}
    return ctx.cached("basis" if listing else "dim", m, n, opts, compute)


def _render_dims(ctx: Context, obj: dict, listing: bool) -> str:
    fmt = ctx.config.output_format
    if fmt == "csv":
        return _rows_csv(obj["byOmega"])
    if listing:
        return "".join(s + "\n" for s in obj["admissibles"])
    lines = ["dim Q(%d,%d) = %d" % (obj["m"], obj["n"], obj["dim"])]
    for r in obj["byOmega"]:
        lines.append("  omega=(%s) dim=%d zero=%d positive=%d"
                     % (",".join(map(str, r["omega"])), r["dim"], r["dimZero"], r["dimPositive"]))
    return "\n".join(lines) + "\n"


def cmd_dim(ctx: Context, args):
    omega = _trim(args.omega) if args.omega is not None else None
    obj = _basis_json(ctx, args.m, args.n, omega, args.positive_only, False)
    return obj, _render_dims(ctx, obj, False), EXIT_OK


def cmd_basis(ctx: Context, args):
    omega = _trim(args.omega) if args.omega is not None else None
    obj = _basis_json(ctx, args.m, args.n, omega, args.positive_only, True)
    return obj, _render_dims(ctx, obj, True), EXIT_OK


def cmd_kameko(ctx: Context, args):
    m, n = args.m, args.n

    def compute(key):
        km = kameko_matrix(m, n, **ctx.basis_kw())
        return {"m": m, "n": n, "dim": km.codomain.dim,
                "byOmega": _by_omega(km.codomain), "kameko": km.as_json()}

    obj = ctx.cached("kameko", m, n, {}, compute)
    k = obj["kameko"]
    text = ("Kameko map Q(%d,%d) -> Q(%d,%d): rank %d, kernel %d, %s\n"
            % (m, k["domainDegree"], m, n, k["rank"], k["kernelDim"],
               "onto" if k["epimorphism"] else "not onto"))
    return obj, text, EXIT_OK


def cmd_invariants(ctx: Context, args):
    from .glrep import invariants_dim

    level = "per-omega" if args.per_omega else "full"

    def compute(key):
        q = admissible_basis(args.m, args.n, **ctx.basis_kw())
        return invariants_dim(args.m, args.n, level, q=q)

    obj = ctx.cached("invariants", args.m, args.n, {"level": level}, compute)
    lines = ["GL%d-invariants of Q(%d,%d): %d" % (args.m, args.m, args.n, obj["dimFull"])]
    for b in obj.get("byOmega", []):
        lines.append("  omega=(%s) %d" % (",".join(map(str, b["omega"])), b["dim"]))
    return obj, "\n".join(lines) + "\n", EXIT_OK


def cmd_check_invariant(ctx: Context, args):
    from .glrep import check_invariant

    if args.poly == "-":
        src = sys.stdin.read()
    else:
        with open(args.poly) as fh:
            src = fh.read()
    p = _read_polynomial(src, args.m)
    if p.terms and p.degree != args.n:
        raise ContractError("polynomial has degree %d, expected %d" % (p.degree, args.n))
    q = admissible_basis(args.m, args.n, **ctx.basis_kw())
    res = check_invariant(q, p, args.omega)
    obj = {"m": args.m, "n": args.n, **res}
    text = "%s: [P]_(%s) %s\n" % ("INVARIANT" if res["invariant"] else "NOT INVARIANT",
                                 ",".join(map(str, res["omega"])),
                                 "= " + "+".join(res["coordinates"]) if res["coordinates"]
                                 else "= 0")
    return obj, text, EXIT_OK if res["invariant"] else EXIT_FAIL


def cmd_verify(ctx: Context, args):
    from .verify import verify_paper

    rep = verify_paper(args.profile, max_mem_gb=ctx.config.max_mem_gb, store=ctx.store,
                       threads=ctx.config.threads, full_budget_s=args.budget_minutes * 60.0,
                       kernel=ctx.kernel)
    return rep.as_json(), rep.text() + "\n", rep.exit_code


def cmd_cache_gc(ctx: Context, args):
    freed = cache_gc(ctx.config)
    return ({"cacheDir": str(ctx.config.cache_dir), "freedBytes": freed},
            "freed %d bytes\n" % freed, EXIT_OK)


# -- parser -----------------------------------------------------------------

_TEXT_DEFAULT = {"sq", "adem", "verify-paper", "cache-gc"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cache-dir", default=None,
                        help="cache directory (default: $SQ2HIT_CACHE or ~/.cache/sq2hit)")
    common.add_argument("--no-cache", action="store_true", help="neither read nor write the cache")
    common.add_argument("--max-mem-gb", type=_positive_float, default=6.0,
                        help="memory ceiling in GB; larger computations are skipped (default 6)")
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads for independent support blocks (default 1)")
    common.add_argument("--checkpoint-every", type=int, default=0, metavar="N",
                        help="save a resumable echelon every N generator inserts (0 = never)")
    common.add_argument("--format", choices=("json", "text", "csv"), default=None,
                        help="output format (default json; text for sq, adem, verify-paper, cache-gc)")
    common.add_argument("--backend", choices=("compiled", "python"), default=None,
                        help="linear algebra kernel (default: compiled when built)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(
        prog="sq2hit",
        description="Hit problem computations over the mod 2 Steenrod algebra.",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sq", parents=[common], help="apply Sq^k to a polynomial")
    p.add_argument("--k", type=int, required=True, help="degree of the square")
    p.add_argument("poly", help="polynomial such as '[1,2]+[3,0]'")
    p.set_defaults(func=cmd_sq)

    p = sub.add_parser("adem", parents=[common], help="rewrite a Steenrod word in admissible form")
    p.add_argument("word", help="comma-separated indices, e.g. 2,2 for Sq^2 Sq^2")
    p.set_defaults(func=cmd_adem)

    for name, func, helptext in (("dim", cmd_dim, "graded dimensions of Q"),
                                 ("basis", cmd_basis, "admissible monomial basis of Q")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("-m", type=int, required=True, help="number of variables")
        p.add_argument("-n", type=int, required=True, help="degree")
        p.add_argument("--omega", type=_int_list, default=None, help="restrict to one weight vector")
        p.add_argument("--positive-only", action="store_true",
                       help="only monomials involving every variable")
        p.add_argument("--text", action="store_true", help="same as --format text")
        p.set_defaults(func=func)

    p = sub.add_parser("kameko", parents=[common], help="Kameko map Q(m, m+2n) -> Q(m, n)")
    p.add_argument("-m", type=int, required=True, help="number of variables")
    p.add_argument("-n", type=int, required=True, help="codomain degree")
    p.add_argument("--text", action="store_true", help="same as --format text")
    p.set_defaults(func=cmd_kameko)

    p = sub.add_parser("invariants", parents=[common], help="GL(m,F2)-invariants of Q(m,n)")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--per-omega", action="store_true", help="also report each weight block")
    p.add_argument("--text", action="store_true", help="same as --format text")
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("check-invariant", parents=[common],
                       help="test whether a polynomial gives a GL-invariant weight class")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--omega", type=_int_list, required=True, help="weight vector, e.g. 4,1,1,1")
    p.add_argument("--poly", required=True,
                   help="file with monomials separated by '+' or newlines ('-' for stdin)")
    p.add_argument("--text", action="store_true", help="same as --format text")
    p.set_defaults(func=cmd_check_invariant)

    p = sub.add_parser("verify-paper", parents=[common], help="run the reproduction claims")
    p.add_argument("--profile", choices=("quick", "full"), default="quick")
    p.add_argument("--budget-minutes", type=float, default=30.0,
                   help="wall budget for the full-profile computation (default 30)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cache-gc", parents=[common],
                       help="delete cache artifacts no current manifest refers to")
    p.set_defaults(func=cmd_cache_gc)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    if args.backend == "compiled" and backend.compiled is None:
        print("sq2hit: compiled kernel is not built", file=sys.stderr)
        return EXIT_FAIL
    try:
        ctx = Context(args)
    except ValueError as exc:
        print("sq2hit: %s" % exc, file=sys.stderr)
        return EXIT_FAIL
    try:
        obj, text, code = args.func(ctx, args)
    except ResourceError as exc:
        print("SKIPPED: %s" % exc, file=sys.stderr)
        return EXIT_SKIP
    except CacheLocked as exc:
        print("sq2hit: %s" % exc, file=sys.stderr)
        return EXIT_FAIL
    except (ContractError, ValueError, OSError) as exc:
        print("sq2hit: %s" % exc, file=sys.stderr)
        return EXIT_FAIL
    finally:
        ctx.close()
    fmt = ctx.config.output_format if ctx.format_given else (
        "text" if args.command in _TEXT_DEFAULT else "json")
    if fmt == "json":
        sys.stdout.write(_dumps(obj))
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
