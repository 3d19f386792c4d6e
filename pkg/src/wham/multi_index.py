"""Multiple substring hash tables merged under a tight stopping threshold.

The code is split into ``m`` contiguous substrings, each indexed by its
own hash table.  A query walks every table's buckets cheapest-first (one
bucket per table per round), evaluates the full distance of each id it
meets, and keeps the best ``k`` in a bounded max-heap.  After every
single-bucket probe a lower bound on the distance of any id never met in
*any* table is refreshed; once the heap is full and its worst entry beats
that bound strictly, no unseen id can alter the answer and the query
stops.

Within a round, tables whose bucket stream is about to get more
expensive are probed first (ascending weight increase), which tightens
the bound as early as possible.

Results are exact: they equal a full weighted scan ranked by
``(distance, id)``, including duplicate-distance boundaries.
"""

from __future__ import annotations

import bisect
import heapq
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .codes import (
    BinaryCode,
    CodeSet,
    QueryContext,
    as_weight_table,
    build_query_context,
    chunk_tables,
    context_from_folded,
    extract_keys,
    packed_distances,
)
from .enumeration import BucketEnumerator
from .errors import DimensionError

try:
    from . import _kernels
except ImportError:  # pragma: no cover - compiled path is optional
    _kernels = None

_EMPTY_IDS = np.empty(0, dtype=np.int64)
_EMPTY_IDS.setflags(write=False)


def choose_table_count(n_bits: int, n: int) -> int:
    """Default table count: about one table per log2(n) bits, clamped."""
    if n < 2:
        raise ValueError(f"need at least 2 codes to size tables, got {n}")
    return int(min(max(round(n_bits / math.log2(n)), 1), n_bits))


def split_spans(n_bits: int, m: int) -> list[tuple[int, int]]:
    """Contiguous (start, length) substrings; longer spans come first."""
    if not 1 <= m <= n_bits:
        raise ValueError(f"table count must be in [1, {n_bits}], got {m}")
    base, extra = divmod(n_bits, m)
    lengths = [base + 1] * extra + [base] * (m - extra)
    spans = []
    start = 0
    for ln in lengths:
        spans.append((start, ln))
        start += ln
    return spans


@dataclass
class SubstringTable:
    """Ids grouped by one substring's value, keys kept sorted.

    ``keys`` is a sorted uint64 array when the span fits a machine word,
    otherwise a sorted list of Python ints.  ``ids[offsets[i]:offsets[i+1]]``
    are the ids under ``keys[i]``, in insertion order.
    """

    span: tuple[int, int]
    keys: Union[np.ndarray, list]
    offsets: np.ndarray
    ids: np.ndarray

    def bucket_ids(self, key: int) -> np.ndarray:
        if isinstance(self.keys, list):
            i = bisect.bisect_left(self.keys, key)
            found = i < len(self.keys) and self.keys[i] == key
        else:
            i = int(np.searchsorted(self.keys, np.uint64(key)))
            found = i < len(self.keys) and int(self.keys[i]) == key
        if not found:
            return _EMPTY_IDS
        return self.ids[self.offsets[i] : self.offsets[i + 1]]

    @property
    def n_buckets(self) -> int:
        return len(self.keys)


@dataclass
class MultiIndex:
    """Substring tables plus the packed codes they were built from."""

    codes: CodeSet
    spans: tuple[tuple[int, int], ...]
    tables: tuple[SubstringTable, ...]

    @property
    def n_bits(self) -> int:
        return self.codes.n_bits

    @property
    def m(self) -> int:
        return len(self.tables)

    @property
    def n(self) -> int:
        return len(self.codes)

    def max_span(self) -> int:
        return max(ln for _, ln in self.spans)

    def kernel_pack(self):
        """Flattened table arrays for the compiled query path (cached)."""
        pack = getattr(self, "_kernel_pack", None)
        if pack is None:
            pack = _build_kernel_pack(self)
            object.__setattr__(self, "_kernel_pack", pack)
        return pack


def build_multi(
    codes: Union[CodeSet, Sequence[BinaryCode]],
    m: Union[int, str] = "auto",
) -> MultiIndex:
    """Index every code's substrings under ``m`` tables.

    ``m="auto"`` sizes the table count from the code length and corpus
    size; an empty or single-code corpus falls back to one table.
    """
    if not isinstance(codes, CodeSet):
        codes = CodeSet.from_codes(list(codes))
    if m == "auto":
        m = choose_table_count(codes.n_bits, len(codes)) if len(codes) >= 2 else 1
    elif not isinstance(m, (int, np.integer)):
        raise ValueError(f"m must be an integer or 'auto', got {m!r}")
    spans = split_spans(codes.n_bits, int(m))
    tables = tuple(_build_table(codes, span) for span in spans)
    return MultiIndex(codes, tuple(spans), tables)


def _build_table(codes: CodeSet, span: tuple[int, int]) -> SubstringTable:
    start, length = span
    n = len(codes)
    if n == 0:
        return SubstringTable(
            span,
            np.empty(0, np.uint64) if length <= 64 else [],
            np.zeros(1, np.int64),
            np.empty(0, np.int64),
        )
    keys = extract_keys(codes, start, length)
    if isinstance(keys, np.ndarray):
        order = np.argsort(keys, kind="stable").astype(np.int64)
        sorted_keys = keys[order]
        new_bucket = np.empty(n, dtype=bool)
        new_bucket[0] = True
        new_bucket[1:] = sorted_keys[1:] != sorted_keys[:-1]
        uniq = sorted_keys[new_bucket]
        starts = np.flatnonzero(new_bucket)
        offsets = np.append(starts, n).astype(np.int64)
        return SubstringTable(span, uniq, offsets, order)
    order = sorted(range(n), key=keys.__getitem__)
    uniq: list[int] = []
    offsets_list = []
    prev = None
    for pos, i in enumerate(order):
        if keys[i] != prev:
            uniq.append(keys[i])
            offsets_list.append(pos)
            prev = keys[i]
    offsets_list.append(n)
    return SubstringTable(
        span, uniq, np.asarray(offsets_list, np.int64), np.asarray(order, np.int64)
    )


def span_contexts(ctx: QueryContext, spans) -> list[QueryContext]:
    """Per-substring contexts, re-derived from slices of the folded weights."""
    return [context_from_folded(ctx.folded[s : s + ln]) for s, ln in spans]


def substring_weight(span_ctx: QueryContext, s: Union[BinaryCode, int]) -> float:
    """Cost a substring value contributes to the full distance."""
    if isinstance(s, BinaryCode):
        if s.n_bits != span_ctx.n_bits:
            raise DimensionError(
                f"substring has {s.n_bits} bits but the span holds {span_ctx.n_bits}"
            )
        value = s.to_int()
    else:
        value = int(s)
    total = 0.0
    for i in range(span_ctx.n_bits):
        total += float(span_ctx.folded[i, value >> i & 1])
    return total


def stopping_threshold(
    popped: Sequence[float],
    advanced: Sequence[float],
    probed: int,
    order: Sequence[int],
) -> float:
    """Lower bound on any id unseen in every table, after ``probed`` probes.

    Tables at ``order[:probed]`` have had this round's bucket probed, so
    an unseen id costs at least their *next* bucket; the rest still count
    the bucket about to be probed.
    """
    m = len(popped)
    if not (len(advanced) == len(order) == m and 0 <= probed <= m):
        raise ValueError("popped, advanced, and order must agree on table count")
    total = 0.0
    for pos in range(m):
        t = order[pos]
        total += advanced[t] if pos < probed else popped[t]
    return total


@dataclass(frozen=True)
class QueryStats:
    """Work counters for one query."""

    buckets_probed: int
    candidates_evaluated: int
    rounds: int
    threshold: float


def query_multi(
    ix: MultiIndex,
    q: BinaryCode,
    w,
    k: int,
    engine: str = "auto",
    probe_order: str = "bycost",
    return_stats: bool = False,
):
    """Exact top-``k`` of ``ix`` by weighted distance, ties broken by id.

    ``engine`` selects the merge implementation: ``"python"``,
    ``"numba"`` (compiled; spans of at most 64 bits), or ``"auto"``
    (compiled when possible).  Both produce identical results.
    ``probe_order="fixed"`` probes tables in index order instead of
    ascending cost increase; it changes work done, never results.
    """
    w = as_weight_table(w)
    if q.n_bits != ix.n_bits:
        raise DimensionError(
            f"query has {q.n_bits} bits but the index holds {ix.n_bits}-bit codes"
        )
    if w.n_bits != ix.n_bits:
        raise DimensionError(
            f"weight table has {w.n_bits} bits but the index holds "
            f"{ix.n_bits}-bit codes"
        )
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if probe_order not in ("bycost", "fixed"):
        raise ValueError(f"unknown probe order {probe_order!r}")
    n = ix.n
    ctx = build_query_context(q, w)
    if k >= n:
        # Degenerate capacity: rank everything once.
        if n == 0:
            out: list[tuple[int, float]] = []
        else:
            dists = packed_distances(chunk_tables(ctx), ix.codes.packed)
            order_all = np.lexsort((np.arange(n), dists))
            out = [(int(i), float(dists[i])) for i in order_all]
        stats = QueryStats(0, n, 0, math.inf)
        return (out, stats) if return_stats else out
    engine = _resolve_engine(ix, engine)
    if engine == "numba":
        out, stats = _query_numba(ix, ctx, k, probe_order)
    else:
        out, stats = _query_python(ix, ctx, k, probe_order)
    return (out, stats) if return_stats else out


def _resolve_engine(ix: MultiIndex, engine: str) -> str:
    compiled_ok = _kernels is not None and ix.max_span() <= 64
    if engine == "auto":
        return "numba" if compiled_ok else "python"
    if engine == "numba":
        if not compiled_ok:
            raise RuntimeError(
                "compiled engine unavailable"
                + ("" if _kernels is not None else " (numba import failed)")
                + ("" if ix.max_span() <= 64 else " (span exceeds 64 bits)")
            )
        return "numba"
    if engine == "python":
        return "python"
    raise ValueError(f"unknown engine {engine!r}")


def _query_python(ix: MultiIndex, ctx: QueryContext, k: int, probe_order: str):
    n = ix.n
    m = ix.m
    luts = chunk_tables(ctx)
    packed = ix.codes.packed
    enums = [BucketEnumerator(c) for c in span_contexts(ctx, ix.spans)]
    seen = np.zeros(n, dtype=bool)
    heap: list[tuple[float, int]] = []  # (-distance, -id): root is worst kept
    probes = 0
    cands = 0
    rounds = 0
    s_hat = 0.0
    inf = math.inf
    done = False
    while not done:
        popped_w = [inf] * m
        popped_key: list[Optional[int]] = [None] * m
        advanced_w = [inf] * m
        any_popped = False
        for t in range(m):
            raw = enums[t].next_raw()
            if raw is not None:
                popped_w[t], popped_key[t] = raw[0], raw[1]
                any_popped = True
            advanced_w[t] = enums[t].peek_weight()
        if not any_popped:
            s_hat = inf
            break
        rounds += 1
        deltas_f = [
            advanced_w[t] - popped_w[t] if popped_key[t] is not None else 0.0
            for t in range(m)
        ]
        if probe_order == "bycost":
            order = sorted(range(m), key=lambda t: (deltas_f[t], t))
        else:
            order = list(range(m))
        s_hat = 0.0
        for t in range(m):
            s_hat += popped_w[t]
        for t in order:
            key = popped_key[t]
            if key is not None:
                probes += 1
                ids = ix.tables[t].bucket_ids(key)
                if len(ids):
                    fresh = ids[~seen[ids]]
                    if len(fresh):
                        seen[fresh] = True
                        cands += len(fresh)
                        dd = packed_distances(luts, packed[fresh])
                        for d, idx in zip(dd.tolist(), fresh.tolist()):
                            if len(heap) < k:
                                heapq.heappush(heap, (-d, -idx))
                            else:
                                rd, rid = heap[0]
                                if d < -rd or (d == -rd and idx < -rid):
                                    heapq.heapreplace(heap, (-d, -idx))
            s_hat += deltas_f[t]
            if len(heap) == k and -heap[0][0] < s_hat:
                done = True
                break
    out = sorted((-d, -i) for d, i in heap)
    return [(i, d) for d, i in out], QueryStats(probes, cands, rounds, s_hat)


def _query_numba(ix: MultiIndex, ctx: QueryContext, k: int, probe_order: str):
    pack = ix.kernel_pack()
    m = ix.m
    max_span = ix.max_span()
    luts = chunk_tables(ctx)
    contexts = span_contexts(ctx, ix.spans)
    h_keys = np.zeros(m, dtype=np.uint64)
    base_ws = np.zeros(m, dtype=np.float64)
    deltas = np.zeros((m, max_span), dtype=np.float64)
    pos_bits = np.zeros((m, max_span), dtype=np.uint64)
    span_lens = np.zeros(m, dtype=np.int64)
    for t, sub in enumerate(contexts):
        span_lens[t] = sub.n_bits
        h_keys[t] = sub.h_int()
        base_ws[t] = sub.base_weight
        for r in range(sub.n_bits):
            deltas[t, r] = sub.deltas[sub.order[r]]
            pos_bits[t, r] = np.uint64(1) << np.uint64(sub.order[r])
    out_d = np.empty(k, dtype=np.float64)
    out_ids = np.empty(k, dtype=np.int64)
    found, probes, cands, rounds, s_hat = _kernels.merge_query(
        ix.codes.packed,
        luts,
        pack.keys_flat,
        pack.key_starts,
        pack.bounds_flat,
        pack.bound_starts,
        pack.tids,
        span_lens,
        h_keys,
        base_ws,
        deltas,
        pos_bits,
        k,
        probe_order == "bycost",
        out_d,
        out_ids,
    )
    order = np.lexsort((out_ids[:found], out_d[:found]))
    out = [(int(out_ids[i]), float(out_d[i])) for i in order]
    return out, QueryStats(int(probes), int(cands), int(rounds), float(s_hat))


@dataclass(frozen=True)
class _KernelPack:
    keys_flat: np.ndarray
    key_starts: np.ndarray
    bounds_flat: np.ndarray
    bound_starts: np.ndarray
    tids: np.ndarray


def _build_kernel_pack(ix: MultiIndex) -> _KernelPack:
    if ix.max_span() > 64:
        raise RuntimeError("compiled tables require spans of at most 64 bits")
    m, n = ix.m, ix.n
    key_starts = np.zeros(m + 1, dtype=np.int64)
    bound_starts = np.zeros(m + 1, dtype=np.int64)
    for t, table in enumerate(ix.tables):
        key_starts[t + 1] = key_starts[t] + table.n_buckets
        bound_starts[t + 1] = bound_starts[t] + table.n_buckets + 1
    keys_flat = np.zeros(key_starts[-1], dtype=np.uint64)
    bounds_flat = np.zeros(bound_starts[-1], dtype=np.int64)
    tids = np.zeros((m, max(n, 1)), dtype=np.int64)
    for t, table in enumerate(ix.tables):
        keys_flat[key_starts[t] : key_starts[t + 1]] = table.keys
        bounds_flat[bound_starts[t] : bound_starts[t + 1]] = table.offsets
        if n:
            tids[t, :n] = table.ids
    return _KernelPack(keys_flat, key_starts, bounds_flat, bound_starts, tids)
