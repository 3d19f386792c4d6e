import numpy as np
import pytest

from wham.codes import (
    BinaryCode,
    CodeSet,
    WeightTable,
    build_query_context,
    chunk_tables,
    chunked_sum,
    context_distance,
    extract_keys,
    hamming_distance,
    n_code_bytes,
    packed_distances,
    weighted_distance,
)
from wham.errors import DimensionError, InvalidWeightError, UnsupportedLengthError

from conftest import (
    oracle_distances,
    random_code,
    random_codeset,
    random_weights,
)

# Worked example shared across modules: q = 0110 with asymmetric weights.
Q = BinaryCode.from_string("0110")
W_ASYM = WeightTable(np.array([[0.0, 0.4], [0.0, 0.1], [0.0, 0.3], [0.0, 0.2]]))


class TestPacking:
    def test_bit_layout_is_little_endian_within_bytes(self):
        # bit i lives in byte i // 8 at position i % 8
        c = BinaryCode.from_string("0110")
        assert c.data == bytes([0b0110])
        assert c.to_int() == 6
        c = BinaryCode.from_bits([1] + [0] * 7 + [1])
        assert c.data == bytes([0x01, 0x01])

    def test_roundtrips(self):
        rng = np.random.default_rng(11)
        for n_bits in [1, 7, 8, 9, 31, 32, 64, 255, 256]:
            bits = rng.integers(0, 2, size=n_bits)
            c = BinaryCode.from_bits(bits)
            assert c.n_bits == n_bits
            assert np.array_equal(c.bits(), bits)
            assert BinaryCode.from_int(c.to_int(), n_bits) == c
            assert BinaryCode.from_string(str(c)) == c
            assert [c.bit(i) for i in range(n_bits)] == list(bits)

    def test_length_limits(self):
        with pytest.raises(UnsupportedLengthError):
            BinaryCode.zeros(257)
        with pytest.raises(DimensionError):
            BinaryCode.zeros(0)

    def test_padding_must_be_zero(self):
        with pytest.raises(ValueError):
            BinaryCode(bytes([0b10000]), 4)

    def test_xor(self):
        a = BinaryCode.from_string("0110")
        b = BinaryCode.from_string("1010")
        assert str(a ^ b) == "1100"

    def test_codeset_roundtrip(self):
        rng = np.random.default_rng(3)
        cs = random_codeset(rng, 50, 37)
        assert len(cs) == 50
        again = CodeSet.from_codes(list(cs))
        assert np.array_equal(again.packed, cs.packed)
        again = CodeSet.from_bit_rows(cs.bit_rows())
        assert np.array_equal(again.packed, cs.packed)

    def test_extract_keys_matches_bit_slices(self):
        rng = np.random.default_rng(4)
        cs = random_codeset(rng, 40, 70)
        for start, length in [(0, 70), (0, 64), (3, 61), (5, 13), (69, 1)]:
            got = extract_keys(cs, start, length)
            rows = cs.bit_rows()[:, start : start + length]
            want = [int(sum(int(v) << j for j, v in enumerate(row))) for row in rows]
            assert [int(k) for k in got] == want


class TestWeightTable:
    def test_validation(self):
        with pytest.raises(InvalidWeightError):
            WeightTable(np.array([[0.0, np.nan]]))
        with pytest.raises(InvalidWeightError):
            WeightTable(np.array([[0.0, np.inf]]))
        with pytest.raises(InvalidWeightError):
            WeightTable(np.array([[-0.1, 1.0]]))
        with pytest.raises(DimensionError):
            WeightTable(np.zeros((4, 3)))

    def test_unit(self):
        w = WeightTable.unit(5)
        assert np.array_equal(w.table, np.tile([0.0, 1.0], (5, 1)))


class TestWeightedDistance:
    def test_worked_example(self):
        # q = 0110, mismatch costs (0.4, 0.1, 0.3, 0.2): flipping every bit
        # costs the full column sum.
        assert weighted_distance(Q, BinaryCode.from_string("1001"), W_ASYM) == 1.0
        assert weighted_distance(Q, Q, W_ASYM) == 0.0
        assert weighted_distance(Q, BinaryCode.from_string("0010"), W_ASYM) == 0.1

    def test_unit_weights_reduce_to_hamming(self):
        rng = np.random.default_rng(7)
        for n_bits in [8, 19, 64]:
            w = WeightTable.unit(n_bits)
            pairs = random_codeset(rng, 20_000, n_bits)
            for i in range(0, 20_000, 2):
                a, b = pairs[i], pairs[i + 1]
                assert weighted_distance(a, b, w) == float(hamming_distance(a, b))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            weighted_distance(Q, BinaryCode.zeros(5), W_ASYM)
        with pytest.raises(DimensionError):
            weighted_distance(Q, Q, WeightTable.unit(5))


class TestQueryContext:
    def test_worked_example(self):
        ctx = build_query_context(Q, W_ASYM)
        assert str(ctx.h) == "0110"
        assert ctx.base_weight == 0.0
        assert np.array_equal(ctx.deltas, [0.4, 0.1, 0.3, 0.2])
        # ascending flip cost: bits 1, 3, 2, 0 (0-based)
        assert list(ctx.order) == [1, 3, 2, 0]

    def test_context_distance_examples(self):
        ctx = build_query_context(Q, W_ASYM)
        assert context_distance(ctx, BinaryCode.from_string("0110")) == 0.0
        assert context_distance(ctx, BinaryCode.from_string("0010")) == 0.1
        assert context_distance(ctx, BinaryCode.from_string("1001")) == 1.0

    def test_unit_weights_give_h_equal_q(self):
        rng = np.random.default_rng(5)
        for n_bits in [4, 33]:
            q = random_code(rng, n_bits)
            ctx = build_query_context(q, WeightTable.unit(n_bits))
            assert ctx.h == q
            assert ctx.base_weight == 0.0
            assert np.all(ctx.deltas == 1.0)
            assert list(ctx.order) == list(range(n_bits))

    def test_constant_weights_tie_to_zero(self):
        # equal folded pair -> bit set to 0 regardless of the query
        w = WeightTable(np.full((6, 2), 0.7))
        q = BinaryCode.from_string("101010")
        ctx = build_query_context(q, w)
        assert str(ctx.h) == "000000"
        assert np.all(ctx.deltas == 0.0)

    def test_matches_weighted_distance_bit_exactly(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            n_bits = int(rng.integers(1, 80))
            q = random_code(rng, n_bits)
            g = random_code(rng, n_bits)
            w = random_weights(rng, n_bits)
            ctx = build_query_context(q, w)
            assert weighted_distance(q, g, w) == context_distance(ctx, g)

    def test_h_minimizes_distance_over_all_codes(self):
        rng = np.random.default_rng(13)
        n_bits = 12
        everything = CodeSet.from_ints(range(1 << n_bits), n_bits)
        for _ in range(20):
            q = random_code(rng, n_bits)
            w = random_weights(rng, n_bits)
            ctx = build_query_context(q, w)
            d = oracle_distances(q, w, everything)
            assert d[ctx.h_int()] == ctx.base_weight
            assert np.all(d >= ctx.base_weight)

    def test_deltas_nonnegative_order_stable(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            n_bits = int(rng.integers(2, 40))
            ctx = build_query_context(
                random_code(rng, n_bits), random_weights(rng, n_bits)
            )
            assert np.all(ctx.deltas >= 0.0)
            keys = [(ctx.deltas[i], i) for i in ctx.order]
            assert keys == sorted(keys)


class TestCanonicalAccumulation:
    def test_chunked_sum_shape(self):
        vals = [1e16, 1.0, -0.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
        want = 0.0
        part = 0.0
        for v in vals[:8]:
            part += v
        want += part
        part = 0.0
        for v in vals[8:]:
            part += v
        want += part
        assert chunked_sum(vals) == want

    def test_chunk_tables_match_context_distance(self):
        rng = np.random.default_rng(21)
        for n_bits in [4, 8, 13, 40]:
            q = random_code(rng, n_bits)
            w = random_weights(rng, n_bits)
            ctx = build_query_context(q, w)
            tabs = chunk_tables(ctx)
            assert tabs.shape == (n_code_bytes(n_bits), 256)
            cs = random_codeset(rng, 300, n_bits)
            vec = packed_distances(tabs, cs.packed)
            for i, g in enumerate(cs):
                assert vec[i] == context_distance(ctx, g)
