"""Tests for the seeded binarizer and weight generators."""

import numpy as np
import pytest

from wham.codes import WeightTable, weighted_distance
from wham.errors import UnsupportedLengthError
from wham.fixtures import apply_lsh, binarize_lsh, make_lsh_model, synth_weights
from wham.io import VectorSet


def test_lsh_model_shape_and_determinism():
    m1 = make_lsh_model(24, 16, seed=5)
    m2 = make_lsh_model(24, 16, seed=5)
    assert m1.projections.shape == (16, 24)
    assert np.array_equal(m1.projections, m2.projections)
    assert np.all(m1.thresholds == 0.0)
    assert not np.array_equal(
        m1.projections, make_lsh_model(24, 16, seed=6).projections
    )


def test_lsh_sign_symmetry():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((30, 12))
    model = make_lsh_model(12, 32, seed=1)
    a = apply_lsh(model, x)
    b = apply_lsh(model, -x)
    # zero thresholds: negating the input flips every strict-sign bit
    dots = x @ model.projections.T
    assert not np.any(dots == 0)
    for ca, cb in zip(a, b):
        assert ca.to_int() ^ cb.to_int() == (1 << 32) - 1


def test_binarize_determinism_and_balance():
    rng = np.random.default_rng(2)
    vs = VectorSet(rng.standard_normal((1000, 64)).astype(np.float32))
    c1 = binarize_lsh(vs, 32, seed=9)
    c2 = binarize_lsh(vs, 32, seed=9)
    assert np.array_equal(c1.packed, c2.packed)
    # Gaussian data through random hyperplanes: each bit near half on
    balance = c1.bit_rows().mean(axis=0)
    assert np.all(balance > 0.4) and np.all(balance < 0.6)


def test_binarize_validation():
    vs = VectorSet(np.zeros((4, 8), dtype=np.float32))
    with pytest.raises(UnsupportedLengthError):
        binarize_lsh(vs, 300, seed=0)
    with pytest.raises(UnsupportedLengthError):
        binarize_lsh(vs, 0, seed=0)
    empty = VectorSet(np.empty((0, 0), dtype=np.float32))
    assert len(binarize_lsh(empty, 16, seed=0)) == 0


def test_apply_lsh_dimension_check():
    model = make_lsh_model(8, 16, seed=3)
    with pytest.raises(ValueError):
        apply_lsh(model, np.zeros((5, 9)))


def test_synth_weights_unit():
    w = synth_weights(16, seed=4, scheme="unit")
    assert np.array_equal(w.table, WeightTable.unit(16).table)
    rng = np.random.default_rng(5)
    from conftest import random_code
    from wham.codes import hamming_distance

    for _ in range(20):
        a, b = random_code(rng, 16), random_code(rng, 16)
        assert weighted_distance(a, b, w) == float(hamming_distance(a, b))


def test_synth_weights_uniform_asym():
    w = synth_weights(64, seed=6)
    assert np.all(w.table[:, 0] == 0.0)
    assert np.all((w.table[:, 1] >= 0.5) & (w.table[:, 1] <= 1.5))
    w2 = synth_weights(64, seed=6)
    assert np.array_equal(w.table, w2.table)
    assert not np.array_equal(w.table, synth_weights(64, seed=7).table)


def test_synth_weights_unknown_scheme():
    with pytest.raises(ValueError):
        synth_weights(8, seed=0, scheme="bogus")
