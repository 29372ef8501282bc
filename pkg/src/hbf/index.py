"""The superposed key-value index: build, insert, query, margin decode.

A memory is the elementwise sum of gain-weighted bindings
``rho * (key_vector * value_vector)`` over all stored records, where
``*`` is circular convolution. Querying correlates the key vector with
the memory (the key spectrum is conjugated), scores the result against
the value codebook, and accepts the best label only when it clears an
absolute threshold and beats the runner-up by a margin; otherwise the
decoder rejects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import (
    DuplicateKeyError,
    DuplicateLabelError,
    InvalidArgumentError,
)
from .hypervector import (
    KEY_NAMESPACE,
    VALUE_NAMESPACE,
    Codebook,
    as_vector,
    convolve,
    correlate,
)
from .seeds import MASK64


def _as_bytes(value, what: str = "value") -> bytes:
    if isinstance(value, str):
        value = value.encode("utf-8")
    if not isinstance(value, bytes):
        raise InvalidArgumentError(f"{what} must be bytes or str")
    if not value:
        raise InvalidArgumentError(f"{what} must be non-empty")
    return value


@dataclass(frozen=True, eq=False)
class HbfMemory:
    """Immutable superposed index plus the metadata needed to query it."""

    vector: np.ndarray
    gain: float
    item_count: int
    key_seed: int
    value_seed: int

    def __post_init__(self) -> None:
        vec = as_vector(self.vector).copy()
        if vec.shape[0] < 2:
            raise InvalidArgumentError("memory dimension must be at least 2")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)
        if not (math.isfinite(self.gain) and self.gain > 0):
            raise InvalidArgumentError("gain must be positive and finite")
        if self.item_count < 0:
            raise InvalidArgumentError("item_count must be non-negative")
        for seed in (self.key_seed, self.value_seed):
            if not 0 <= seed <= MASK64:
                raise InvalidArgumentError("seeds must fit in 64 unsigned bits")

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])

    def key_codebook(self) -> Codebook:
        return Codebook(KEY_NAMESPACE, self.key_seed, self.dim)

    def value_codebook(self) -> Codebook:
        return Codebook(VALUE_NAMESPACE, self.value_seed, self.dim)

    def with_vector(self, vector: np.ndarray, *, item_count: int | None = None,
                    gain: float | None = None) -> "HbfMemory":
        return HbfMemory(
            vector=vector,
            gain=self.gain if gain is None else gain,
            item_count=self.item_count if item_count is None else item_count,
            key_seed=self.key_seed,
            value_seed=self.value_seed,
        )


def build(
    records: Sequence[tuple],
    dim: int,
    *,
    rho: float | None = None,
    key_seed: int,
    value_seed: int,
) -> HbfMemory:
    """Superpose bindings for all records into one memory vector.

    Contributions are summed in ascending key-byte order, so the result
    is bitwise identical for any input permutation of the same record
    set (floating-point addition is not associative). ``rho=None``
    selects the 1/sqrt(n) gain that keeps per-coordinate energy stable
    as the store grows; pass an explicit gain to override.
    """
    pairs = [(_as_bytes(k, "key"), _as_bytes(v, "value")) for k, v in records]
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise DuplicateKeyError(f"duplicate key {key!r}")
        seen.add(key)
    pairs.sort(key=lambda kv: kv[0])

    n = len(pairs)
    if rho is None:
        gain = 1.0 / math.sqrt(n) if n > 0 else 1.0
    else:
        gain = float(rho)
    if not (math.isfinite(gain) and gain > 0):
        raise InvalidArgumentError("rho must be positive and finite")

    key_cb = Codebook(KEY_NAMESPACE, key_seed, dim)
    value_cb = Codebook(VALUE_NAMESPACE, value_seed, dim)
    acc = np.zeros(dim)
    for key, value in pairs:
        acc += gain * convolve(key_cb.vector(key), value_cb.vector(value))
    return HbfMemory(acc, gain, n, key_seed, value_seed)


def insert(mem: HbfMemory, key, value) -> HbfMemory:
    """Return a new memory with one more binding, weighted by mem.gain."""
    k = mem.key_codebook().vector(_as_bytes(key, "key"))
    v = mem.value_codebook().vector(_as_bytes(value, "value"))
    vec = mem.vector + mem.gain * convolve(k, v)
    return mem.with_vector(vec, item_count=mem.item_count + 1)


def renormalize(mem: HbfMemory, new_gain: float) -> HbfMemory:
    """Rescale the memory to a new gain.

    Scores scale uniformly by new_gain/gain, so label rankings (and the
    decode argmax) are unchanged; only absolute thresholds need to move.
    """
    if mem.item_count == 0:
        raise InvalidArgumentError("renormalize requires a non-empty memory")
    if not (math.isfinite(new_gain) and new_gain > 0):
        raise InvalidArgumentError("new_gain must be positive and finite")
    return mem.with_vector(mem.vector * (new_gain / mem.gain), gain=new_gain)


def correlate_query(mem: HbfMemory, key) -> np.ndarray:
    """Decode probe z = k (*) M for the key's codebook vector."""
    return correlate(mem.key_codebook().vector(_as_bytes(key, "key")), mem.vector)


def correlate_query_vector(mem: HbfMemory, key_vector) -> np.ndarray:
    """Decode probe for an explicit (possibly perturbed) key vector."""
    return correlate(as_vector(key_vector), mem.vector)


class ValueScorer:
    """Value-codebook matrix over a fixed label set, built once.

    Labels are stored sorted ascending so that a stable argsort on the
    negated scores realises the (-score, label-bytes) tie order exactly.
    """

    def __init__(self, codebook: Codebook, labels: Sequence):
        normalized = [_as_bytes(l, "label") for l in labels]
        if not normalized:
            raise InvalidArgumentError("labels must be non-empty")
        seen = set()
        for label in normalized:
            if label in seen:
                raise DuplicateLabelError(f"duplicate label {label!r}")
            seen.add(label)
        self.labels: tuple[bytes, ...] = tuple(sorted(normalized))
        self.codebook = codebook
        self.matrix = codebook.matrix(self.labels)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def scores(self, z) -> np.ndarray:
        """Score vector aligned with self.labels."""
        return self.matrix @ as_vector(z)

    def ranked(self, z, top_k: int | None = None) -> list[tuple[bytes, float]]:
        """(label, score) pairs sorted by descending score, ties by label."""
        return ranked_from_scores(self.labels, self.scores(z), top_k)


def ranked_from_scores(
    labels: Sequence[bytes],
    scores: np.ndarray,
    top_k: int | None = None,
) -> list[tuple[bytes, float]]:
    """Order (label, score) pairs by descending score.

    ``labels`` must already be sorted ascending; the stable argsort then
    breaks score ties by ascending label bytes.
    """
    order = np.argsort(-np.asarray(scores), kind="stable")
    if top_k is not None:
        order = order[:top_k]
    return [(labels[i], float(scores[i])) for i in order]


def score_codebook(z, labels: Sequence, value_codebook: Codebook) -> list[tuple[bytes, float]]:
    """Score z against each label's vector; duplicates are rejected."""
    return ValueScorer(value_codebook, labels).ranked(z)


@dataclass(frozen=True)
class DecoderConfig:
    """Margin-decoder parameters: absolute threshold, margin, list size."""

    tau: float
    delta: float = 0.0
    top_k: int = 2

    def __post_init__(self) -> None:
        # +/-inf taus are legal sentinels (never-accept / always-accept).
        if math.isnan(self.tau):
            raise InvalidArgumentError("tau must not be NaN")
        if not (self.delta >= 0):
            raise InvalidArgumentError("delta must be non-negative")
        if self.top_k < 2:
            raise InvalidArgumentError("top_k must be at least 2")


@dataclass(frozen=True)
class DecodeOutcome:
    """Either a Hit carrying the winning label, or a Reject (label None).

    Scores and the top-k list are populated in both cases so callers can
    log near-misses.
    """

    label: bytes | None
    best_score: float
    runner_up: float
    top: tuple[tuple[bytes, float], ...]

    @property
    def hit(self) -> bool:
        return self.label is not None


def decode_ranked(ranked: Sequence[tuple[bytes, float]], cfg: DecoderConfig) -> DecodeOutcome:
    """Apply the accept rule to an already-ranked score list."""
    if len(ranked) < cfg.top_k:
        raise InvalidArgumentError(
            f"need at least top_k={cfg.top_k} labels, got {len(ranked)}"
        )
    top = tuple(ranked[: cfg.top_k])
    s1 = top[0][1]
    s2 = top[1][1]
    label = top[0][0] if (s1 >= cfg.tau and (s1 - s2) >= cfg.delta) else None
    return DecodeOutcome(label=label, best_score=s1, runner_up=s2, top=top)


def decode_vector(
    mem: HbfMemory,
    key_vector,
    cfg: DecoderConfig,
    labels: Union[ValueScorer, Sequence],
) -> DecodeOutcome:
    """Decode an explicit key vector against the memory."""
    scorer = labels if isinstance(labels, ValueScorer) else ValueScorer(
        mem.value_codebook(), labels
    )
    z = correlate_query_vector(mem, key_vector)
    return decode_ranked(scorer.ranked(z, scorer.matrix.shape[0]), cfg)


def decode(
    mem: HbfMemory,
    key,
    cfg: DecoderConfig,
    labels: Union[ValueScorer, Sequence],
) -> DecodeOutcome:
    """Decode a query key: Hit(best label) iff s1 >= tau and s1 - s2 >= delta."""
    key_vec = mem.key_codebook().vector(_as_bytes(key, "key"))
    return decode_vector(mem, key_vec, cfg, labels)
