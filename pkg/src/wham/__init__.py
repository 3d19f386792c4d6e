"""Exact K-NN search over binary codes under weighted Hamming distance."""

from .baselines import ChunkLUT, MihStats, linear_scan_topk, mih_weighted_topk
from .codes import (
    BinaryCode,
    CodeSet,
    QueryContext,
    WeightTable,
    build_query_context,
    context_distance,
    hamming_distance,
    weighted_distance,
)
from .enumeration import BucketEnumerator
from .errors import (
    DimensionError,
    FormatError,
    InvalidWeightError,
    UnsupportedLengthError,
)
from .estimators import LshBinarizer, WeightedHammingIndex
from .evaluation import (
    BenchConfig,
    BenchRecord,
    GroundTruth,
    euclidean_groundtruth,
    precision_at_k,
    run_benchmark,
    speedup_factor,
)
from .fixtures import binarize_lsh, make_lsh_model, synth_weights
from .io import (
    VectorSet,
    load_codes,
    load_index,
    load_weights,
    read_bvecs,
    read_fvecs,
    save_codes,
    save_index,
    save_weights,
    write_bvecs,
    write_fvecs,
)
from .multi_index import (
    MultiIndex,
    QueryStats,
    build_multi,
    choose_table_count,
    query_multi,
    split_spans,
)
from .single_index import query_single

__version__ = "0.1.0"
