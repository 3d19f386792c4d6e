"""Comparison methods: LUT-accelerated linear scan and Hamming-first culling.

The linear scan is the exactness reference: it evaluates every stored
code with the same chunked lookup tables the index engines use, so its
distances are bit-identical to theirs, and selects the top K under the
(distance, id) order.

``mih_weighted_topk`` is the deliberately inexact baseline: it gathers
candidates by growing a plain Hamming radius over the substring tables
and only then ranks by weighted distance.  A code whose weighted
distance is tiny but whose Hamming distance is large can be culled
before ranking, which is the failure mode the merged weighted query
avoids.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .codes import (
    BinaryCode,
    CodeSet,
    QueryContext,
    as_weight_table,
    build_query_context,
    chunk_tables,
    packed_distances,
)
from .errors import DimensionError
from .multi_index import MultiIndex

__all__ = ["ChunkLUT", "MihStats", "linear_scan_topk", "mih_weighted_topk"]


@dataclass(frozen=True)
class MihStats:
    """Work counters for one Hamming-first query.

    ``buckets_probed`` counts every key lookup, empty buckets included,
    matching the merge engine's bucket counter.
    """

    buckets_probed: int
    candidates_collected: int
    radius: int


@dataclass(frozen=True)
class ChunkLUT:
    """Per-byte-chunk tables of partial weighted sums for one query.

    ``tables[c][v]`` is the cost of byte value ``v`` in chunk ``c``,
    accumulated bit 0 to bit 7 within the chunk.  Summing chunk values
    left to right reproduces the canonical distance exactly.
    """

    tables: np.ndarray

    @classmethod
    def from_context(cls, ctx: QueryContext) -> "ChunkLUT":
        return cls(chunk_tables(ctx))

    @classmethod
    def from_query(cls, q: BinaryCode, w) -> "ChunkLUT":
        return cls.from_context(build_query_context(q, w))

    @property
    def n_chunks(self) -> int:
        return self.tables.shape[0]

    def distances(self, packed: np.ndarray) -> np.ndarray:
        """Distances for an (n, n_chunks) packed byte matrix."""
        return packed_distances(self.tables, packed)

    def distance(self, code: BinaryCode) -> float:
        row = np.frombuffer(code.data, dtype=np.uint8)[None, :]
        return float(self.distances(row)[0])


def _check_query(n_bits: int, q: BinaryCode, w, k: int):
    if q.n_bits != n_bits:
        raise DimensionError(
            f"query has {q.n_bits} bits but the codes have {n_bits}"
        )
    if w.n_bits != n_bits:
        raise DimensionError(
            f"weight table has {w.n_bits} bits but the codes have {n_bits}"
        )
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")


def _select_topk(d: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Exact smallest-k under (distance, id) from a full distance vector."""
    n = len(d)
    take = min(k, n)
    if take == 0:
        return []
    if take == n:
        chosen = np.arange(n)
    else:
        kth = np.partition(d, take - 1)[take - 1]
        strict = np.flatnonzero(d < kth)
        tied = np.flatnonzero(d == kth)[: take - len(strict)]
        chosen = np.concatenate([strict, tied])
    order = chosen[np.lexsort((chosen, d[chosen]))]
    return [(int(i), float(d[i])) for i in order]


def linear_scan_topk(codes: CodeSet, q: BinaryCode, w, k: int):
    """Exhaustive top-K by chunked-LUT evaluation of every stored code.

    Returns at most K ``(id, distance)`` pairs ascending in
    (distance, id).  This is the ground-truth reference the index
    engines are checked against.
    """
    w = as_weight_table(w)
    _check_query(codes.n_bits, q, w, k)
    if len(codes) == 0:
        return []
    lut = ChunkLUT.from_query(q, w)
    return _select_topk(lut.distances(codes.packed), k)


def _substring_key(q_int: int, start: int, length: int) -> int:
    return (q_int >> start) & ((1 << length) - 1)


def mih_weighted_topk(ix: MultiIndex, q: BinaryCode, w, k: int, return_stats: bool = False):
    """Hamming-first candidate collection, then one weighted ranking pass.

    Grows a per-table substring Hamming radius r = 0, 1, 2, ...; after
    completing radius r every code within full-code Hamming distance
    m*(r+1)-1 of the query has been collected, so those candidates
    count as verified.  Radius growth stops once at least min(K, n)
    candidates are verified; the verified set is then ranked by
    weighted distance under (distance, id).

    Candidates are culled by plain Hamming distance before weights are
    consulted, so a weighted-near but Hamming-far code can be missed;
    results are not guaranteed to match ``linear_scan_topk``.
    """
    w = as_weight_table(w)
    _check_query(ix.n_bits, q, w, k)
    n = ix.n
    if n == 0:
        stats = MihStats(0, 0, 0)
        return ([], stats) if return_stats else []
    target = min(k, n)
    m = ix.m
    q_int = q.to_int()
    q_row = np.frombuffer(q.data, dtype=np.uint8)
    packed = ix.codes.packed

    collected = np.zeros(n, dtype=bool)
    coll_ids: list[np.ndarray] = []
    ham: list[np.ndarray] = []
    probes = 0

    def gather(ids: np.ndarray):
        fresh = ids[~collected[ids]]
        if len(fresh):
            collected[fresh] = True
            coll_ids.append(fresh)
            ham.append(
                np.bitwise_count(packed[fresh] ^ q_row[None, :]).sum(axis=1)
            )

    max_len = ix.max_span()
    verified_mask = None
    radius = 0
    for r in range(max_len + 1):
        radius = r
        for t, (start, length) in enumerate(ix.spans):
            if r > length:
                continue
            base = _substring_key(q_int, start, length)
            for flips in combinations(range(length), r):
                key = base
                for pos in flips:
                    key ^= 1 << pos
                probes += 1
                ids = ix.tables[t].bucket_ids(key)
                if len(ids):
                    gather(ids)
        # radius level complete: everything within this full-code Hamming
        # distance is guaranteed to have been collected by some table
        guaranteed = m * (r + 1) - 1
        if coll_ids:
            all_ham = np.concatenate(ham)
            verified_mask = all_ham <= guaranteed
            if int(verified_mask.sum()) >= target:
                break
    all_ids = np.concatenate(coll_ids)
    keep = all_ids[verified_mask]
    lut = ChunkLUT.from_query(q, w)
    d = lut.distances(packed[keep])
    order = np.lexsort((keep, d))[:target]
    out = [(int(keep[i]), float(d[i])) for i in order]
    stats = MihStats(probes, int(len(all_ids)), radius)
    return (out, stats) if return_stats else out
