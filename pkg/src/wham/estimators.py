"""Estimator-style wrappers: a binarizer transform and a K-NN index.

Both follow the usual fit/transform/kneighbors conventions so they
compose with pipelines, cloning, and grid search. The index estimator
is a thin adapter; all ranking behavior lives in the underlying query
functions.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .baselines import linear_scan_topk, mih_weighted_topk
from .codes import BinaryCode, CodeSet, WeightTable, as_weight_table
from .fixtures import apply_lsh, make_lsh_model, synth_weights
from .multi_index import build_multi, query_multi

__all__ = ["LshBinarizer", "WeightedHammingIndex", "as_code_set"]


def as_code_set(X, n_bits=None) -> CodeSet:
    """Coerce codes given as CodeSet, BinaryCode sequence, or a 0/1 matrix."""
    if isinstance(X, CodeSet):
        return X
    if isinstance(X, BinaryCode):
        return CodeSet.from_codes([X])
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], BinaryCode):
        return CodeSet.from_codes(list(X))
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d bit matrix, got shape {arr.shape}")
    if arr.dtype != bool:
        vals = np.unique(arr)
        if not np.isin(vals, (0, 1)).all():
            raise ValueError("bit matrix entries must be 0 or 1")
        arr = arr.astype(bool)
    if n_bits is not None and arr.shape[1] != n_bits:
        raise ValueError(f"expected {n_bits} columns, got {arr.shape[1]}")
    return CodeSet.from_bit_rows(arr)


class LshBinarizer(TransformerMixin, BaseEstimator):
    """Learn random hyperplanes on fit; transform vectors to a bit matrix.

    The output is a boolean (n, n_bits) array, directly consumable by
    WeightedHammingIndex.fit or CodeSet.from_bit_rows.
    """

    def __init__(self, n_bits: int = 32, seed: int = 0):
        self.n_bits = n_bits
        self.seed = seed

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"expected 2-d vectors, got shape {X.shape}")
        self.n_features_in_ = X.shape[1]
        self.model_ = make_lsh_model(X.shape[1], self.n_bits, self.seed)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = np.asarray(X, dtype=np.float64)
        return apply_lsh(self.model_, X).bit_rows().astype(bool)


class WeightedHammingIndex(BaseEstimator):
    """Exact K-nearest-neighbor search over binary codes, custom bit costs.

    Parameters
    ----------
    weights : "unit", "uniform-asym", a WeightTable, or an (n_bits, 2) array.
        Per-bit costs of agreeing / disagreeing with the query.
    method : "miwq" (merged multi-table query), "linear", or "mih".
    n_tables : table count for the index methods, or "auto".
    engine : merge implementation passed through to the query ("auto",
        "python", "numba").
    seed : seeds the "uniform-asym" weight draw.
    """

    def __init__(
        self,
        weights="unit",
        method: str = "miwq",
        n_tables="auto",
        engine: str = "auto",
        seed: int = 0,
    ):
        self.weights = weights
        self.method = method
        self.n_tables = n_tables
        self.engine = engine
        self.seed = seed

    def _resolve_weights(self, n_bits: int) -> WeightTable:
        if isinstance(self.weights, str):
            return synth_weights(n_bits, seed=self.seed, scheme=self.weights)
        w = as_weight_table(self.weights)
        if w.n_bits != n_bits:
            raise ValueError(
                f"weights cover {w.n_bits} bits but codes have {n_bits}"
            )
        return w

    def fit(self, X, y=None):
        if self.method not in ("miwq", "linear", "mih"):
            raise ValueError(f"unknown method {self.method!r}")
        codes = as_code_set(X)
        self.codes_ = codes
        self.n_bits_ = codes.n_bits
        self.weights_ = self._resolve_weights(codes.n_bits)
        if self.method == "linear":
            self.index_ = None
        else:
            self.index_ = build_multi(codes, m=self.n_tables)
        return self

    @property
    def n_samples_fit_(self) -> int:
        check_is_fitted(self)
        return len(self.codes_)

    def _query_one(self, q: BinaryCode, k: int):
        if self.method == "linear":
            return linear_scan_topk(self.codes_, q, self.weights_, k)
        if self.method == "mih":
            return mih_weighted_topk(self.index_, q, self.weights_, k)
        return query_multi(self.index_, q, self.weights_, k, engine=self.engine)

    def kneighbors(self, X, n_neighbors: int = 5, return_distance: bool = True):
        """Distances and ids of the n_neighbors nearest stored codes.

        Returns (distances, indices) as (n_queries, n_neighbors) arrays,
        rows ascending in (distance, id).
        """
        check_is_fitted(self)
        if not isinstance(n_neighbors, numbers.Integral) or n_neighbors < 1:
            raise ValueError(f"n_neighbors must be a positive integer, got {n_neighbors}")
        n = len(self.codes_)
        if n_neighbors > n:
            raise ValueError(
                f"n_neighbors ({n_neighbors}) exceeds the {n} fitted codes"
            )
        queries = as_code_set(X, n_bits=self.n_bits_)
        dist = np.empty((len(queries), n_neighbors))
        ind = np.empty((len(queries), n_neighbors), dtype=np.int64)
        for row, q in enumerate(queries):
            pairs = self._query_one(q, n_neighbors)
            ind[row] = [i for i, _ in pairs]
            dist[row] = [d for _, d in pairs]
        return (dist, ind) if return_distance else ind
