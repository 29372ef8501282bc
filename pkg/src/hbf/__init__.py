"""Holographic Bloom filter: a superposed key-value index.

Key/value pairs are bound by circular convolution of bipolar codebook
vectors and superposed into one real memory vector. Queries correlate
the key vector with the memory and pick the best-scoring value label
under a threshold-plus-margin rule, so a single parallel operation
replaces pointer chasing. The package also ships the closed-form error
bounds, the noise channels, and a reproducible Monte Carlo harness for
measuring false-positive and false-negative behavior.
"""

from .bounds import (
    MarginFailureBound,
    evt_threshold_approx,
    evt_threshold_exact,
    fn_bound,
    fp_bound,
    fp_threshold,
    inv_norm_cdf,
    margin_failure_bound,
    norm_cdf,
    signal_mean,
)
from .calibrate import CalibrationResult, calibrate_decoder
from .chase import (
    ChaseModel,
    ChaseStats,
    ComparisonRow,
    HbfQueryStats,
    chase_expected_time,
    chase_expected_time_repeat,
    chase_simulate,
    chase_success_prob,
    compare_report,
)
from .errors import (
    BadMagicError,
    CalibrationError,
    DimensionMismatchError,
    DuplicateKeyError,
    DuplicateLabelError,
    HbfError,
    InvalidArgumentError,
    PersistenceError,
    RecordFormatError,
    TruncatedFileError,
    UnsupportedDimensionError,
    VersionMismatchError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    amplified_decode,
    run_amplified_experiment,
    run_baseline_experiment,
    run_capacity_sweep,
    run_fn_experiment,
    run_fp_experiment,
    vote_outcomes,
)
from .hypervector import (
    Codebook,
    codebook_vector,
    convolve,
    convolve_fft,
    convolve_naive,
    correlate,
    correlate_fft,
    correlate_naive,
    cosine,
    inner_product,
    involution,
    unit_impulse,
)
from .index import (
    DecodeOutcome,
    DecoderConfig,
    HbfMemory,
    ValueScorer,
    build,
    correlate_query,
    correlate_query_vector,
    decode,
    decode_vector,
    insert,
    renormalize,
    score_codebook,
)
from .noise import (
    NoiseSpec,
    corrupt_memory_flip,
    corrupt_memory_gauss,
    perturb_key_gauss,
    perturb_key_hamming,
)
from .seeds import derive_seed
from .storage import (
    deserialize_memory,
    load_memory,
    read_labels,
    read_records_tsv,
    save_memory,
    serialize_memory,
)

__version__ = "0.1.0"
