"""Best-first enumeration of hash buckets in non-decreasing weight order.

A bucket is any code of the context's length; its weight is the context
distance, i.e. ``base_weight`` plus the flip costs of the bits where it
differs from the cheapest code ``h``.  Rather than sorting all ``2**b``
buckets, a min-priority queue is seeded with ``h`` and grown through two
successor moves defined on *ranked positions* (bit indices re-ordered by
ascending flip cost, ``ctx.order``):

  1. additionally flip the first rank right of the rightmost flipped one;
  2. slide the rightmost flipped rank one position right.

Each reachable flip set is generated exactly once, so popping the queue
yields every bucket exactly once, cheapest first.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

from .codes import BinaryCode, QueryContext


@dataclass(frozen=True)
class ChangePattern:
    """A set of flipped ranked positions with its accumulated weight.

    ``changed`` is a bitmask over ranks (bit ``r`` set means the rank-``r``
    cheapest bit is flipped away from ``h``).  ``weight`` equals the
    context's ``base_weight`` plus the flip costs of the changed ranks,
    added in ascending rank order; ``prefix`` is the same sum without the
    rightmost rank's cost, kept so successors can extend it exactly.
    """

    changed: int
    weight: float
    rightmost: int
    prefix: float

    def ranks(self) -> tuple[int, ...]:
        r, out, mask = 0, [], self.changed
        while mask:
            if mask & 1:
                out.append(r)
            mask >>= 1
            r += 1
        return tuple(out)


def empty_pattern(ctx: QueryContext) -> ChangePattern:
    return ChangePattern(0, ctx.base_weight, -1, ctx.base_weight)


def operation1(p: ChangePattern, ctx: QueryContext) -> Optional[ChangePattern]:
    """Also flip the rank right of the rightmost flipped one (rank 0 if empty)."""
    nxt = p.rightmost + 1
    if nxt >= ctx.n_bits:
        return None
    return ChangePattern(
        p.changed | (1 << nxt), p.weight + float(ctx.deltas[ctx.order[nxt]]), nxt, p.weight
    )


def operation2(p: ChangePattern, ctx: QueryContext) -> Optional[ChangePattern]:
    """Slide the rightmost flipped rank one position right; undefined when empty."""
    if p.rightmost < 0:
        return None
    nxt = p.rightmost + 1
    if nxt >= ctx.n_bits:
        return None
    changed = (p.changed & ~(1 << p.rightmost)) | (1 << nxt)
    return ChangePattern(
        changed, p.prefix + float(ctx.deltas[ctx.order[nxt]]), nxt, p.prefix
    )


def pattern_bucket(p: ChangePattern, ctx: QueryContext) -> BinaryCode:
    """The bucket a pattern denotes: ``h`` with the changed ranks flipped."""
    value = ctx.h_int()
    for r in p.ranks():
        value ^= 1 << int(ctx.order[r])
    return BinaryCode.from_int(value, ctx.n_bits)


class BucketEnumerator:
    """Streams ``(bucket, weight)`` pairs in (weight, bucket value) order.

    Exhausts after ``2**n_bits`` emissions, then keeps returning ``None``.
    Ties on weight pop in ascending order of the bucket's integer value.
    """

    def __init__(self, ctx: QueryContext):
        self.ctx = ctx
        self._pos_bit = [1 << int(ctx.order[r]) for r in range(ctx.n_bits)]
        self._deltas = [float(ctx.deltas[ctx.order[r]]) for r in range(ctx.n_bits)]
        h = ctx.h_int()
        # entries: (weight, bucket value, changed mask, rightmost rank, prefix)
        self._heap: list[tuple[float, int, int, int, float]] = [
            (ctx.base_weight, h, 0, -1, ctx.base_weight)
        ]
        self.emitted = 0

    def __bool__(self) -> bool:
        return bool(self._heap)

    def peek_weight(self) -> float:
        """Weight of the next bucket, or +inf when exhausted."""
        return self._heap[0][0] if self._heap else float("inf")

    def next_raw(self) -> Optional[tuple[float, int]]:
        """Pop the cheapest unseen bucket as ``(weight, bucket value)``."""
        if not self._heap:
            return None
        weight, key, changed, rightmost, prefix = heapq.heappop(self._heap)
        nxt = rightmost + 1
        if nxt < self.ctx.n_bits:
            heapq.heappush(
                self._heap,
                (
                    weight + self._deltas[nxt],
                    key ^ self._pos_bit[nxt],
                    changed | (1 << nxt),
                    nxt,
                    weight,
                ),
            )
            if rightmost >= 0:
                heapq.heappush(
                    self._heap,
                    (
                        prefix + self._deltas[nxt],
                        key ^ self._pos_bit[rightmost] ^ self._pos_bit[nxt],
                        (changed & ~(1 << rightmost)) | (1 << nxt),
                        nxt,
                        prefix,
                    ),
                )
        self.emitted += 1
        return weight, key

    def next_bucket(self) -> Optional[tuple[BinaryCode, float]]:
        """Pop the cheapest unseen bucket, or ``None`` once all are emitted."""
        raw = self.next_raw()
        if raw is None:
            return None
        weight, key = raw
        return BinaryCode.from_int(key, self.ctx.n_bits), weight
