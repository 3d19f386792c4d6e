"""One hash table over whole codes, probed in best-first bucket order."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .codes import (
    BinaryCode,
    CodeSet,
    as_weight_table,
    build_query_context,
    chunk_tables,
    extract_keys,
    packed_distances,
)
from .enumeration import BucketEnumerator
from .errors import DimensionError, UnsupportedLengthError

MAX_SINGLE_BITS = 32
DENSE_BITS_LIMIT = 20


@dataclass
class SingleIndexTable:
    """Codes bucketed by their full value.

    Storage is either a key->ids mapping or, for short codes, a dense
    offsets array over all ``2**n_bits`` bucket values.  Both keep ids in
    insertion order.  Instances are not mutated after construction.
    """

    codes: CodeSet
    _sparse: Optional[dict]
    _dense_offsets: Optional[np.ndarray]
    _dense_ids: Optional[np.ndarray]

    @property
    def n_bits(self) -> int:
        return self.codes.n_bits

    @property
    def n(self) -> int:
        return len(self.codes)

    @property
    def dense(self) -> bool:
        return self._dense_offsets is not None

    def bucket_ids(self, key: int) -> np.ndarray:
        """Identifiers stored under a bucket value (possibly empty)."""
        if self._dense_offsets is not None:
            lo, hi = self._dense_offsets[key], self._dense_offsets[key + 1]
            return self._dense_ids[lo:hi]
        return self._sparse.get(key, _EMPTY_IDS)

    def buckets(self) -> dict[int, list[int]]:
        """Materialized mapping of non-empty buckets to id lists."""
        if self._dense_offsets is not None:
            out = {}
            for key in range(len(self._dense_offsets) - 1):
                ids = self.bucket_ids(key)
                if len(ids):
                    out[key] = [int(i) for i in ids]
            return out
        return {k: [int(i) for i in v] for k, v in self._sparse.items()}


_EMPTY_IDS = np.empty(0, dtype=np.int64)
_EMPTY_IDS.setflags(write=False)


def build_single(
    codes: Union[CodeSet, Sequence[BinaryCode]],
    dense: Optional[bool] = None,
) -> SingleIndexTable:
    """Bucket every code by its full value.

    ``dense`` switches to the offsets-array layout; by default it is
    enabled for codes of at most 20 bits.
    """
    if not isinstance(codes, CodeSet):
        codes = CodeSet.from_codes(list(codes))
    if codes.n_bits > MAX_SINGLE_BITS:
        raise UnsupportedLengthError(
            f"single-table indexing supports at most {MAX_SINGLE_BITS} bits, "
            f"got {codes.n_bits}"
        )
    if dense is None:
        dense = codes.n_bits <= DENSE_BITS_LIMIT
    elif dense and codes.n_bits > DENSE_BITS_LIMIT:
        raise ValueError(
            f"dense layout requires at most {DENSE_BITS_LIMIT} bits, "
            f"got {codes.n_bits}"
        )
    keys = extract_keys(codes, 0, codes.n_bits) if len(codes) else np.empty(0, np.uint64)
    if dense:
        counts = np.bincount(keys.astype(np.int64), minlength=1 << codes.n_bits)
        offsets = np.zeros(len(counts) + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        ids = np.argsort(keys, kind="stable").astype(np.int64)
        return SingleIndexTable(codes, None, offsets, ids)
    order = np.argsort(keys, kind="stable")
    sparse: dict[int, np.ndarray] = {}
    if len(order):
        sorted_keys = keys[order]
        boundaries = np.flatnonzero(sorted_keys[1:] != sorted_keys[:-1]) + 1
        for chunk in np.split(order.astype(np.int64), boundaries):
            sparse[int(keys[chunk[0]])] = chunk
    return SingleIndexTable(codes, sparse, None, None)


def query_single(
    table: SingleIndexTable, q: BinaryCode, w, k: int
) -> list[tuple[int, float]]:
    """Exact top-``k`` ids by weighted distance, ties broken by id.

    Buckets are visited cheapest-first until ``min(k, n)`` ids are
    collected or every bucket has been emitted; the collected ids are then
    ranked by their full distance.
    """
    w = as_weight_table(w)
    if q.n_bits != table.n_bits:
        raise DimensionError(
            f"query has {q.n_bits} bits but the table holds {table.n_bits}-bit codes"
        )
    if w.n_bits != table.n_bits:
        raise DimensionError(
            f"weight table has {w.n_bits} bits but the table holds "
            f"{table.n_bits}-bit codes"
        )
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    target = min(k, table.n)
    if target == 0:
        return []
    ctx = build_query_context(q, w)
    enum = BucketEnumerator(ctx)
    collected: list[np.ndarray] = []
    n_found = 0
    while n_found < target:
        raw = enum.next_raw()
        if raw is None:
            break
        ids = table.bucket_ids(int(raw[1]))
        if len(ids):
            collected.append(ids)
            n_found += len(ids)
    if not collected:
        return []
    ids = np.concatenate(collected)
    dists = packed_distances(chunk_tables(ctx), table.codes.packed[ids])
    order = np.lexsort((ids, dists))[:target]
    return [(int(ids[i]), float(dists[i])) for i in order]
