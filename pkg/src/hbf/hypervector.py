"""Bipolar codebooks and the circular convolution/correlation algebra.

Vectors are plain 1-D float64 numpy arrays throughout. Key and value
vectors are bipolar (every entry +1 or -1) and are regenerated on demand
from a deterministic counter-mode generator, so no dictionary of vectors
is ever stored. The superposed memory stays real-valued, which lets one
carrier type hold keys, values, bindings, and noisy memories alike.

Both circular operations come in two implementations:

* ``*_naive``   direct O(d^2) evaluation of the defining index-modular
  sum, used as the reference oracle;
* ``*_fft``     spectral evaluation in O(d log d), restricted to
  power-of-two dimensions.

``convolve`` / ``correlate`` dispatch to the spectral path when the
dimension is a power of two and fall back to the direct path otherwise.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidArgumentError,
    UnsupportedDimensionError,
)
from .seeds import MASK64

__all__ = [
    "Codebook",
    "KEY_NAMESPACE",
    "VALUE_NAMESPACE",
    "as_vector",
    "codebook_vector",
    "convolve",
    "convolve_fft",
    "convolve_naive",
    "correlate",
    "correlate_fft",
    "correlate_naive",
    "cosine",
    "inner_product",
    "involution",
    "is_power_of_two",
    "is_sign_vector",
    "unit_impulse",
]

KEY_NAMESPACE = b"key"
VALUE_NAMESPACE = b"value"


def as_vector(x) -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidArgumentError(f"expected a 1-D vector, got shape {v.shape}")
    if v.shape[0] == 0:
        raise InvalidArgumentError("vector must be non-empty")
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError("vector entries must be finite")
    return v


def is_sign_vector(v: np.ndarray) -> bool:
    """True when every entry is exactly +1.0 or -1.0."""
    return bool(np.all(np.abs(np.asarray(v, dtype=np.float64)) == 1.0))


def is_power_of_two(d: int) -> bool:
    return d >= 1 and (d & (d - 1)) == 0


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> int:
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}"
        )
    return a.shape[0]


def _as_key_bytes(key) -> bytes:
    if isinstance(key, str):
        key = key.encode("utf-8")
    if not isinstance(key, bytes):
        raise InvalidArgumentError(f"key must be bytes or str, got {type(key).__name__}")
    if not key:
        raise InvalidArgumentError("key must be non-empty")
    return key


@dataclass(frozen=True)
class Codebook:
    """Deterministic family of bipolar vectors, addressed by raw bytes.

    Coordinates come from a Philox counter stream keyed by
    ``blake2b(key, key=seed, person=namespace)``: each 64-bit counter
    block yields 64 signs, so identical (namespace, seed, dim, key)
    regenerates the identical vector across calls, processes, and
    machines. Distinct keys get statistically independent Rademacher
    vectors.
    """

    namespace: bytes
    seed: int
    dim: int

    def __post_init__(self) -> None:
        if not isinstance(self.namespace, bytes) or not 1 <= len(self.namespace) <= 16:
            raise InvalidArgumentError("namespace must be 1..16 bytes")
        if not 0 <= self.seed <= MASK64:
            raise InvalidArgumentError("seed must fit in 64 unsigned bits")
        if self.dim < 2:
            raise InvalidArgumentError("dim must be at least 2")

    def vector(self, key) -> np.ndarray:
        return codebook_vector(self, key)

    def matrix(self, keys: Iterable) -> np.ndarray:
        """Stack vectors for several keys into an (m, dim) matrix."""
        rows = [codebook_vector(self, k) for k in keys]
        if not rows:
            raise InvalidArgumentError("keys must be non-empty")
        return np.stack(rows)


def codebook_vector(cb: Codebook, key) -> np.ndarray:
    """The bipolar vector assigned to ``key`` by this codebook."""
    key = _as_key_bytes(key)
    digest = hashlib.blake2b(
        key,
        digest_size=16,
        key=cb.seed.to_bytes(8, "little"),
        person=cb.namespace,
    ).digest()
    blocks = np.random.Philox(key=int.from_bytes(digest, "little"))
    words = blocks.random_raw((cb.dim + 63) // 64)
    bits = np.unpackbits(words.view(np.uint8), bitorder="little", count=cb.dim)
    return bits.astype(np.float64) * 2.0 - 1.0


def unit_impulse(dim: int) -> np.ndarray:
    """e0, the identity element of circular convolution."""
    if dim < 1:
        raise InvalidArgumentError("dim must be at least 1")
    e = np.zeros(dim)
    e[0] = 1.0
    return e


def involution(a) -> np.ndarray:
    """Coordinate reversal x[t] -> x[(d - t) mod d].

    Satisfies correlate(a, b) == convolve(involution(a), b) and
    correlate(b, a)[t] == correlate(a, b)[(d - t) mod d].
    """
    a = as_vector(a)
    return np.concatenate((a[:1], a[:0:-1]))


def convolve_naive(a, b) -> np.ndarray:
    """Direct evaluation of (a * b)[t] = sum_j a[j] b[(t - j) mod d].

    O(d^2) multiply-accumulate, no transforms; this is the reference
    oracle for the spectral path.
    """
    a, b = as_vector(a), as_vector(b)
    d = _check_same_dim(a, b)
    if d == 1:
        return np.array([a[0] * b[0]])
    full = np.convolve(a, b)  # linear convolution, direct summation
    out = full[:d].copy()
    out[: d - 1] += full[d:]
    return out


def convolve_fft(a, b) -> np.ndarray:
    """Spectral circular convolution F^-1(F(a) . F(b)).

    Only power-of-two dimensions are admitted; other sizes must use
    ``convolve_naive`` (or the ``convolve`` dispatcher).
    """
    a, b = as_vector(a), as_vector(b)
    d = _check_same_dim(a, b)
    if not is_power_of_two(d):
        raise UnsupportedDimensionError(
            f"FFT path requires a power-of-two dimension, got {d}"
        )
    return np.fft.irfft(np.fft.rfft(a) * np.fft.rfft(b), n=d)


def convolve(a, b) -> np.ndarray:
    """Circular convolution; spectral for power-of-two d, direct otherwise."""
    a, b = as_vector(a), as_vector(b)
    d = _check_same_dim(a, b)
    if is_power_of_two(d) and d >= 2:
        return convolve_fft(a, b)
    return convolve_naive(a, b)


def correlate_naive(a, b) -> np.ndarray:
    """Direct evaluation of (a (*) b)[t] = sum_j a[j] b[(t + j) mod d].

    Computed as convolve_naive(involution(a), b), which is the same sum
    after the substitution u = (-j) mod d; no transforms involved.
    """
    return convolve_naive(involution(a), b)


def correlate_fft(a, b) -> np.ndarray:
    """Spectral circular correlation F^-1(conj(F(a)) . F(b))."""
    a, b = as_vector(a), as_vector(b)
    d = _check_same_dim(a, b)
    if not is_power_of_two(d):
        raise UnsupportedDimensionError(
            f"FFT path requires a power-of-two dimension, got {d}"
        )
    return np.fft.irfft(np.conj(np.fft.rfft(a)) * np.fft.rfft(b), n=d)


def correlate(a, b) -> np.ndarray:
    """Circular correlation; spectral for power-of-two d, direct otherwise."""
    a, b = as_vector(a), as_vector(b)
    d = _check_same_dim(a, b)
    if is_power_of_two(d) and d >= 2:
        return correlate_fft(a, b)
    return correlate_naive(a, b)


def correlate_batch(queries: np.ndarray, b) -> np.ndarray:
    """Correlate each row of ``queries`` with ``b`` (spectral, batched).

    Requires a power-of-two dimension; used by the calibration and
    experiment loops where thousands of probes share one memory.
    """
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim != 2:
        raise InvalidArgumentError("queries must be a 2-D array")
    b = as_vector(b)
    d = b.shape[0]
    if q.shape[1] != d:
        raise DimensionMismatchError(f"dimension mismatch: {q.shape[1]} vs {d}")
    if not is_power_of_two(d):
        raise UnsupportedDimensionError(
            f"FFT path requires a power-of-two dimension, got {d}"
        )
    spectrum = np.fft.rfft(b)
    return np.fft.irfft(np.conj(np.fft.rfft(q, axis=1)) * spectrum, n=d, axis=1)


def inner_product(a, b) -> float:
    """<a, b> = sum_j a[j] b[j]."""
    a, b = as_vector(a), as_vector(b)
    _check_same_dim(a, b)
    return float(a @ b)


def cosine(a, b) -> float:
    """Cosine similarity in [-1, 1]; rejects zero vectors."""
    a, b = as_vector(a), as_vector(b)
    _check_same_dim(a, b)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise InvalidArgumentError("cosine is undefined for a zero vector")
    return float(np.clip((a @ b) / (na * nb), -1.0, 1.0))
