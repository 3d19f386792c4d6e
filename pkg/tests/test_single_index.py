import numpy as np
import pytest

from wham.codes import BinaryCode, CodeSet, WeightTable
from wham.errors import DimensionError, UnsupportedLengthError
from wham.single_index import build_single, query_single

from conftest import oracle_topk, random_code, random_codeset, random_weights

Q = BinaryCode.from_string("0110")
W_ASYM = WeightTable(np.array([[0.0, 0.4], [0.0, 0.1], [0.0, 0.3], [0.0, 0.2]]))
CODES = CodeSet.from_codes(
    [BinaryCode.from_string("0110"), BinaryCode.from_string("0010")]
)


class TestBuild:
    def test_bucket_contents(self):
        table = build_single(CODES)
        assert table.buckets() == {6: [0], 4: [1]}
        assert list(table.bucket_ids(6)) == [0]
        assert list(table.bucket_ids(0)) == []

    def test_insertion_order_within_bucket(self):
        codes = CodeSet.from_ints([5, 3, 5, 5, 3], 4)
        for dense in (False, True):
            table = build_single(codes, dense=dense)
            assert table.buckets() == {5: [0, 2, 3], 3: [1, 4]}

    def test_dense_toggle(self):
        rng = np.random.default_rng(31)
        codes = random_codeset(rng, 500, 12)
        sparse = build_single(codes, dense=False)
        dense = build_single(codes, dense=True)
        assert not sparse.dense and dense.dense
        assert sparse.buckets() == dense.buckets()
        assert build_single(codes).dense  # auto below the threshold
        wide = random_codeset(rng, 10, 24)
        assert not build_single(wide).dense
        with pytest.raises(ValueError):
            build_single(wide, dense=True)

    def test_length_limit(self):
        rng = np.random.default_rng(37)
        with pytest.raises(UnsupportedLengthError):
            build_single(random_codeset(rng, 4, 33))

    def test_empty(self):
        table = build_single(CodeSet.empty(8))
        assert table.n == 0
        assert table.buckets() == {}


class TestQuery:
    def test_worked_example(self):
        table = build_single(CODES)
        assert query_single(table, Q, W_ASYM, 1) == [(0, 0.0)]
        assert query_single(table, Q, W_ASYM, 2) == [(0, 0.0), (1, 0.1)]

    def test_k_exceeding_n_returns_all(self):
        table = build_single(CODES)
        out = query_single(table, Q, W_ASYM, 5)
        assert out == [(0, 0.0), (1, 0.1)]

    def test_empty_table(self):
        table = build_single(CodeSet.empty(4))
        assert query_single(table, Q, W_ASYM, 3) == []

    def test_validation(self):
        table = build_single(CODES)
        with pytest.raises(DimensionError):
            query_single(table, BinaryCode.zeros(5), WeightTable.unit(5), 1)
        with pytest.raises(DimensionError):
            query_single(table, Q, WeightTable.unit(5), 1)
        with pytest.raises(ValueError):
            query_single(table, Q, W_ASYM, 0)

    def test_duplicate_codes_tie_break_by_id(self):
        codes = CodeSet.from_ints([9, 9, 9, 2], 4)
        table = build_single(codes)
        out = query_single(table, BinaryCode.from_int(9, 4), WeightTable.unit(4), 2)
        assert out == [(0, 0.0), (1, 0.0)]

    @pytest.mark.parametrize("dense", [False, True])
    def test_matches_brute_force(self, dense):
        rng = np.random.default_rng(41)
        for trial in range(100):
            n_bits = int(rng.integers(2, 17))
            n = int(rng.integers(1, 400))
            codes = random_codeset(rng, n, n_bits)
            table = build_single(codes, dense=dense)
            q = random_code(rng, n_bits)
            w = random_weights(rng, n_bits)
            k = int(rng.integers(1, 20))
            assert query_single(table, q, w, k) == oracle_topk(q, w, codes, k)
