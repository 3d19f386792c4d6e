import numpy as np
import pytest

from wham.codes import BinaryCode, WeightTable, build_query_context
from wham.enumeration import (
    BucketEnumerator,
    ChangePattern,
    empty_pattern,
    operation1,
    operation2,
    pattern_bucket,
)

from conftest import random_code, random_weights

Q = BinaryCode.from_string("0110")
W_ASYM = WeightTable(np.array([[0.0, 0.4], [0.0, 0.1], [0.0, 0.3], [0.0, 0.2]]))


def subset_sum_oracle(ctx):
    """Weight of every flip mask, summed in ascending rank order.

    Independent of the queue machinery: enumerates all 2**b rank masks
    directly.  Returns (bucket value -> weight) and the sorted weight list.
    """
    b = ctx.n_bits
    rank_deltas = [float(ctx.deltas[ctx.order[r]]) for r in range(b)]
    pos_bits = [1 << int(ctx.order[r]) for r in range(b)]
    h = ctx.h_int()
    by_bucket = {}
    for mask in range(1 << b):
        w = ctx.base_weight
        key = h
        for r in range(b):
            if mask >> r & 1:
                w += rank_deltas[r]
                key ^= pos_bits[r]
        by_bucket[key] = w
    return by_bucket, sorted(by_bucket.values())


class TestOperations:
    def test_on_empty_pattern(self):
        ctx = build_query_context(Q, W_ASYM)
        p0 = empty_pattern(ctx)
        assert p0.weight == 0.0 and p0.rightmost == -1 and p0.changed == 0
        p1 = operation1(p0, ctx)
        assert p1.ranks() == (0,)
        assert p1.weight == pytest.approx(0.1)
        assert operation2(p0, ctx) is None

    def test_grow_and_slide(self):
        ctx = build_query_context(Q, W_ASYM)
        p = operation1(empty_pattern(ctx), ctx)  # {0}
        grown = operation1(p, ctx)
        assert grown.ranks() == (0, 1)
        assert grown.weight == pytest.approx(0.1 + 0.2)
        slid = operation2(p, ctx)
        assert slid.ranks() == (1,)
        assert slid.weight == pytest.approx(0.2)

    def test_boundary_returns_none(self):
        ctx = build_query_context(Q, W_ASYM)
        p = empty_pattern(ctx)
        for _ in range(4):
            p = operation1(p, ctx)
        assert p.rightmost == 3
        assert operation1(p, ctx) is None
        assert operation2(p, ctx) is None

    def test_weight_equals_rank_ordered_delta_sum(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            n_bits = int(rng.integers(2, 24))
            ctx = build_query_context(
                random_code(rng, n_bits), random_weights(rng, n_bits)
            )
            rank_deltas = [float(ctx.deltas[ctx.order[r]]) for r in range(n_bits)]
            # random walk through the successor moves
            p = empty_pattern(ctx)
            for _ in range(40):
                q = operation1(p, ctx) if rng.random() < 0.5 else operation2(p, ctx)
                if q is None:
                    break
                p = q
                want = ctx.base_weight
                for r in p.ranks():
                    want += rank_deltas[r]
                assert p.weight == want
                assert q.weight >= ctx.base_weight

    def test_successors_never_get_cheaper(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            n_bits = int(rng.integers(2, 20))
            ctx = build_query_context(
                random_code(rng, n_bits), random_weights(rng, n_bits)
            )
            stack = [empty_pattern(ctx)]
            seen = 0
            while stack and seen < 500:
                p = stack.pop()
                for op in (operation1, operation2):
                    c = op(p, ctx)
                    if c is not None:
                        assert c.weight >= p.weight
                        stack.append(c)
                        seen += 1

    def test_pattern_bucket(self):
        ctx = build_query_context(Q, W_ASYM)
        assert str(pattern_bucket(empty_pattern(ctx), ctx)) == "0110"
        p = operation1(empty_pattern(ctx), ctx)  # flips cheapest bit (index 1)
        assert str(pattern_bucket(p, ctx)) == "0010"


class TestEnumerator:
    def test_worked_example_first_five(self):
        ctx = build_query_context(Q, W_ASYM)
        en = BucketEnumerator(ctx)
        got = [en.next_bucket() for _ in range(5)]
        assert [str(b) for b, _ in got[:3]] == ["0110", "0010", "0111"]
        assert [w for _, w in got[:3]] == [0.0, 0.1, 0.2]
        # two buckets tie at 0.3; ascending bucket value breaks the tie
        assert {str(b) for b, _ in got[3:]} == {"0100", "0011"}
        assert [str(b) for b, _ in got[3:]] == ["0100", "0011"]
        assert [w for _, w in got[3:]] == pytest.approx([0.3, 0.3])

    def test_unit_weights_b3(self):
        q = BinaryCode.from_string("000")
        ctx = build_query_context(q, WeightTable.unit(3))
        en = BucketEnumerator(ctx)
        weights = []
        while (nxt := en.next_bucket()) is not None:
            weights.append(nxt[1])
        assert weights == [0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0]

    def test_exhaustion_returns_none(self):
        ctx = build_query_context(BinaryCode.from_string("01"), WeightTable.unit(2))
        en = BucketEnumerator(ctx)
        out = [en.next_bucket() for _ in range(6)]
        assert out[4] is None and out[5] is None
        assert en.emitted == 4

    @pytest.mark.parametrize("n_bits", [1, 2, 5, 8, 11])
    def test_complete_monotone_and_matches_oracle(self, n_bits):
        rng = np.random.default_rng(100 + n_bits)
        for _ in range(8):
            ctx = build_query_context(
                random_code(rng, n_bits), random_weights(rng, n_bits)
            )
            want_map, want_sorted = subset_sum_oracle(ctx)
            en = BucketEnumerator(ctx)
            seen = {}
            weights = []
            while (raw := en.next_raw()) is not None:
                w, key = raw
                assert key not in seen
                seen[key] = w
                weights.append(w)
            assert len(seen) == 1 << n_bits
            assert seen == want_map
            assert weights == want_sorted
            assert all(a <= b for a, b in zip(weights, weights[1:]))

    def test_tie_pop_order_is_bucket_value(self):
        # all-zero deltas: every bucket ties, so values must come out ascending
        ctx = build_query_context(
            BinaryCode.from_string("1010"), WeightTable(np.full((4, 2), 0.5))
        )
        en = BucketEnumerator(ctx)
        keys = []
        while (raw := en.next_raw()) is not None:
            keys.append(raw[1])
        assert keys == list(range(16))
