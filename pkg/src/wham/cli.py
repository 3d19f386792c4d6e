"""Command-line front door wiring the library together.

Subcommands:
  binarize  float vectors (.fvecs/.bvecs) -> seeded hyperplane codes (WHC1)
  build     codes -> multi-table substring index (WHI1)
  query     stream exact K-NN results for a file of query codes
  verify    self-check the enumerator and query invariants on random instances
  bench     run a benchmark config and print/write the record table

Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 verification
failure.  The WHAM_SEED environment variable overrides any seed argument or
config seed.  Given fixed inputs and seed, every subcommand is deterministic
apart from measured wall-clock fields.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .baselines import linear_scan_topk, mih_weighted_topk
from .codes import BinaryCode, CodeSet, QueryContext, WeightTable, build_query_context
from .enumeration import BucketEnumerator
from .errors import DimensionError, FormatError, UnsupportedLengthError
from .evaluation import BenchConfig, run_benchmark
from .fixtures import binarize_lsh, synth_weights
from .io import (
    load_codes,
    load_index,
    load_weights,
    read_bvecs,
    read_fvecs,
    save_codes,
    save_index,
)
from .multi_index import build_multi, query_multi

__all__ = ["main", "build_parser"]


class UsageError(Exception):
    """Bad argument values discovered after parsing; exits with code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; 2 is reserved for I/O here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _effective_seed(seed: int) -> int:
    raw = os.environ.get("WHAM_SEED")
    if raw is None:
        return seed
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"WHAM_SEED must be an integer, got {raw!r}") from None


def _positive(parser_name: str, name: str, value: int) -> int:
    if value < 1:
        raise UsageError(f"{parser_name}: {name} must be >= 1, got {value}")
    return value


# ---------------------------------------------------------------- binarize

def cmd_binarize(args) -> int:
    if not 1 <= args.bits <= 256:
        raise UsageError(f"binarize: --bits must be in [1, 256], got {args.bits}")
    if args.limit is not None:
        _positive("binarize", "--limit", args.limit)
    path = args.vectors
    if path.endswith(".fvecs"):
        vs = read_fvecs(path, limit=args.limit)
    elif path.endswith(".bvecs"):
        vs = read_bvecs(path, limit=args.limit)
    else:
        raise UsageError(
            f"binarize: cannot infer vector format of {path!r} (need .fvecs or .bvecs)"
        )
    codes = binarize_lsh(vs, args.bits, seed=_effective_seed(args.seed))
    save_codes(args.output, codes)
    print(f"wrote {args.output}: n={len(codes)} b={codes.n_bits}")
    if len(codes):
        ones = codes.bit_rows().mean(axis=0)
        print(
            f"bit balance: mean={ones.mean():.3f} "
            f"min={ones.min():.3f} max={ones.max():.3f}"
        )
    else:
        print("bit balance: n/a (no vectors)")
    return 0


# ------------------------------------------------------------------- build

def cmd_build(args) -> int:
    codes = load_codes(args.codes)
    if args.tables == "auto":
        m = "auto"
    else:
        try:
            m = int(args.tables)
        except ValueError:
            raise UsageError(
                f"build: --tables must be an integer or 'auto', got {args.tables!r}"
            ) from None
        if not 1 <= m <= codes.n_bits:
            raise UsageError(
                f"build: --tables must be in [1, {codes.n_bits}] for b={codes.n_bits}, got {m}"
            )
    if not len(codes):
        print("warning: building an index over an empty code set", file=sys.stderr)
    ix = build_multi(codes, m=m)
    save_index(args.output, ix)
    print(f"wrote {args.output}: n={ix.n} b={ix.n_bits} m={ix.m}")
    for t, ((start, length), table) in enumerate(zip(ix.spans, ix.tables)):
        print(f"table {t}: span [{start},{start + length}) buckets={table.n_buckets}")
    return 0


# ------------------------------------------------------------------- query

def cmd_query(args) -> int:
    _positive("query", "--k", args.k)
    _positive("query", "--threads", args.threads)
    ix = load_index(args.index)
    w = load_weights(args.weights)
    queries = load_codes(args.queries)
    if w.n_bits != ix.n_bits:
        raise DimensionError(
            f"weights cover {w.n_bits} bits but the index holds {ix.n_bits}-bit codes"
        )
    if queries.n_bits != ix.n_bits:
        raise DimensionError(
            f"queries are {queries.n_bits}-bit but the index holds {ix.n_bits}-bit codes"
        )

    if args.method == "linear":
        run = lambda q: linear_scan_topk(ix.codes, q, w, args.k)
    elif args.method == "mih":
        run = lambda q: mih_weighted_topk(ix, q, w, args.k)
    else:
        run = lambda q: query_multi(ix, q, w, args.k, engine=args.engine)

    if args.threads == 1:
        results = map(run, queries)
    else:
        pool = ThreadPoolExecutor(max_workers=args.threads)
        results = pool.map(run, queries)  # parallel over queries only
    for ordinal, pairs in enumerate(results):
        line = " ".join(f"({i}:{d:.6f})" for i, d in pairs)
        print(f"{ordinal} {line}" if line else str(ordinal))
    if args.threads != 1:
        pool.shutdown()
    return 0


# ------------------------------------------------------------------ verify

def _faulted(ctx: QueryContext) -> QueryContext:
    """Negative-control context: one flip cost corrupted after the ranking."""
    deltas = ctx.deltas.copy()
    worst = int(ctx.order[-1])
    deltas[worst] = -1.0 - deltas[worst]
    return QueryContext(ctx.folded, ctx.h_bits, ctx.base_weight, deltas, ctx.order)


def _rank_sum_weights(ctx: QueryContext) -> tuple[dict[int, float], list[float]]:
    # direct per-mask recomputation, no queue involved
    b = ctx.n_bits
    rank_deltas = [float(ctx.deltas[ctx.order[r]]) for r in range(b)]
    pos_bits = [1 << int(ctx.order[r]) for r in range(b)]
    h = ctx.h_int()
    by_bucket = {}
    for mask in range(1 << b):
        weight = ctx.base_weight
        key = h
        for r in range(b):
            if mask >> r & 1:
                weight += rank_deltas[r]
                key ^= pos_bits[r]
        by_bucket[key] = weight
    return by_bucket, sorted(by_bucket.values())


def _verify_enumerator(rng, bits: int, trials: int, inject_fault: bool) -> int:
    violations = 0
    for _ in range(trials):
        q = BinaryCode.from_bits(rng.integers(0, 2, bits))
        w = WeightTable(rng.uniform(0.0, 2.0, (bits, 2)))
        ctx = build_query_context(q, w)
        if inject_fault:
            ctx = _faulted(ctx)
        want_map, want_sorted = _rank_sum_weights(ctx)
        en = BucketEnumerator(ctx)
        seen: dict[int, float] = {}
        weights: list[float] = []
        ok = True
        while (raw := en.next_raw()) is not None:
            weight, key = raw
            if key in seen:
                ok = False
            seen[key] = weight
            weights.append(weight)
        ok = ok and len(seen) == 1 << bits
        ok = ok and all(a <= b_ for a, b_ in zip(weights, weights[1:]))
        ok = ok and seen == want_map and weights == want_sorted
        violations += not ok
    return violations


def _verify_equivalence(rng, bits: int, count: int, trials: int, k: int) -> int:
    mismatches = 0
    for _ in range(trials):
        codes = CodeSet.from_bit_rows(rng.integers(0, 2, (count, bits), dtype=np.uint8))
        w = synth_weights(bits, seed=int(rng.integers(2**31)), scheme="uniform-asym")
        ix = build_multi(codes, m="auto")
        q = BinaryCode.from_bits(rng.integers(0, 2, bits))
        got = query_multi(ix, q, w, k)
        want = linear_scan_topk(codes, q, w, k)
        mismatches += got != want
    return mismatches


def cmd_verify(args) -> int:
    if not 1 <= args.bits <= 16:
        raise UsageError(
            f"verify: exhaustive checks need --bits in [1, 16], got {args.bits}"
        )
    if args.count < 1:
        raise UsageError(f"verify: --count must be >= 1, got {args.count}")
    if args.trials < 0:
        raise UsageError(f"verify: --trials must be >= 0, got {args.trials}")
    if args.trials == 0:
        print("warning: trials=0, nothing was checked", file=sys.stderr)
        print("verify: PASS (vacuous)")
        return 0
    seed = _effective_seed(args.seed)
    rng = np.random.default_rng(seed)
    if args.inject_fault:
        print("fault injection on: corrupting one flip cost after ranking")
    enum_bad = _verify_enumerator(rng, args.bits, args.trials, args.inject_fault)
    print(
        f"enumerator checks: {args.trials} trials at b={args.bits} -> "
        f"{'ok' if not enum_bad else f'{enum_bad} violations'}"
    )
    k = min(10, args.count)
    equiv_bad = _verify_equivalence(rng, args.bits, args.count, args.trials, k)
    print(
        f"equivalence checks: {args.trials} trials at b={args.bits} "
        f"n={args.count} k={k} -> "
        f"{'ok' if not equiv_bad else f'{equiv_bad} mismatches'}"
    )
    if enum_bad or equiv_bad:
        print("verify: FAIL")
        return 3
    print("verify: PASS")
    return 0


# ------------------------------------------------------------------- bench

def cmd_bench(args) -> int:
    try:
        with open(args.config) as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(
            f"bench: config parse error at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from None
    try:
        config = BenchConfig.from_dict(raw)
    except (ValueError, TypeError) as e:
        raise FormatError(f"bench: bad config: {e}") from None
    env_seed = _effective_seed(config.seed)
    if env_seed != config.seed:
        config = dataclasses.replace(config, seed=env_seed)
    print(f"seed: {config.seed}")
    records = run_benchmark(config, out_dir=args.output)
    header = f"{'method':>8} {'b':>4} {'m':>3} {'k':>5} {'mean_ms':>10} {'speedup':>9} {'precision':>9}"
    print(header)
    for r in records:
        speedup = f"{r.speedup:9.2f}" if r.speedup is not None else f"{'-':>9}"
        print(
            f"{r.method:>8} {r.b:>4} {r.m:>3} {r.k:>5} {r.mean_ms:>10.4f} "
            f"{speedup} {r.precision:>9.4f}"
        )
    if args.output is not None:
        print(f"wrote {args.output}/bench.csv and bench.json")
    return 0


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wham", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("binarize", help="hash float vectors to binary codes")
    p.add_argument("--vectors", required=True, help=".fvecs or .bvecs input")
    p.add_argument("--bits", type=int, required=True, help="code length (1..256)")
    p.add_argument("--output", required=True, help="WHC1 output path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=None, help="read at most N vectors")
    p.set_defaults(func=cmd_binarize)

    p = sub.add_parser("build", help="build the multi-table index")
    p.add_argument("--codes", required=True, help="WHC1 input path")
    p.add_argument("--tables", default="auto", help="table count or 'auto'")
    p.add_argument("--output", required=True, help="WHI1 output path")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="stream exact K-NN results")
    p.add_argument("--index", required=True, help="WHI1 input path")
    p.add_argument("--weights", required=True, help="WHW1 input path")
    p.add_argument("--queries", required=True, help="WHC1 query codes")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--method", choices=("miwq", "linear", "mih"), default="miwq")
    p.add_argument("--engine", choices=("auto", "python", "numba"), default="auto")
    p.add_argument("--threads", type=int, default=1, help="parallelize over queries")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("verify", help="run the invariant self-checks")
    p.add_argument("--bits", type=int, default=12)
    p.add_argument("--count", type=int, default=2000, help="codes per equivalence trial")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--inject-fault",
        action="store_true",
        help="negative control: corrupt one flip cost and expect FAIL",
    )
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run a benchmark config")
    p.add_argument("config", help="JSON config path")
    p.add_argument("--output", default=None, help="directory for bench.csv/bench.json")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except (FormatError, DimensionError, UnsupportedLengthError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
