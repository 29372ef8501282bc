"""Seeded corruption channels for memories and query-key vectors.

Two channels act on the stored memory (independent sign flips, additive
Gaussian) and two on the query key embedding (exact-count sign flips,
additive Gaussian). All are pure functions of (input, parameters, seed);
identical seeds reproduce identical outputs bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .hypervector import as_vector, is_sign_vector
from .index import HbfMemory
from .seeds import derive_seed

MEM_FLIP = "mem-flip"
MEM_GAUSS = "mem-gauss"
KEY_HAMMING = "key-hamming"
KEY_GAUSS = "key-gauss"

KINDS = (MEM_FLIP, MEM_GAUSS, KEY_HAMMING, KEY_GAUSS)


@dataclass(frozen=True)
class NoiseSpec:
    """One noise channel and its strength.

    mem-flip: p_e in [0, 0.5)      per-coordinate sign flip probability
    mem-gauss: sigma >= 0          additive N(0, sigma^2) on the memory
    key-hamming: H integer >= 0    exact number of key coordinates negated
    key-gauss: sigma >= 0          additive N(0, sigma^2) on the key
    """

    kind: str
    amount: float

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidArgumentError(
                f"unknown noise kind {self.kind!r}; expected one of {', '.join(KINDS)}"
            )
        amount = float(self.amount)
        if not np.isfinite(amount):
            raise InvalidArgumentError("noise amount must be finite")
        if self.kind == MEM_FLIP and not 0.0 <= amount < 0.5:
            raise InvalidArgumentError("mem-flip probability must be in [0, 0.5)")
        if self.kind in (MEM_GAUSS, KEY_GAUSS) and amount < 0.0:
            raise InvalidArgumentError("gaussian sigma must be non-negative")
        if self.kind == KEY_HAMMING:
            if amount < 0 or amount != int(amount):
                raise InvalidArgumentError("key-hamming amount must be a non-negative integer")

    @classmethod
    def parse(cls, text: str) -> "NoiseSpec":
        """Parse the CLI grammar, e.g. 'key-hamming:500' or 'mem-flip:0.01'."""
        kind, sep, amount = text.partition(":")
        if not sep:
            raise InvalidArgumentError(f"noise spec {text!r} must look like kind:amount")
        try:
            value = float(amount)
        except ValueError as exc:
            raise InvalidArgumentError(f"bad noise amount in {text!r}") from exc
        return cls(kind=kind.strip(), amount=value)

    def __str__(self) -> str:
        if self.kind == KEY_HAMMING:
            return f"{self.kind}:{int(self.amount)}"
        return f"{self.kind}:{self.amount:g}"


def corrupt_memory_flip(mem: HbfMemory, p_e: float, seed: int) -> HbfMemory:
    """Negate each memory coordinate independently with probability p_e.

    p_e must stay below 1/2: at 1/2 the memory carries no signal and the
    expected match-score shrinkage factor (1 - 2 p_e) vanishes.
    """
    if not 0.0 <= p_e < 0.5:
        raise InvalidArgumentError("p_e must be in [0, 0.5)")
    if p_e == 0.0:
        return mem.with_vector(mem.vector)
    rng = np.random.default_rng(seed)
    flips = rng.random(mem.dim) < p_e
    vec = mem.vector.copy()
    vec[flips] = -vec[flips]
    return mem.with_vector(vec)


def corrupt_memory_gauss(mem: HbfMemory, sigma: float, seed: int) -> HbfMemory:
    """Add i.i.d. N(0, sigma^2) noise to every memory coordinate."""
    if sigma < 0.0 or not np.isfinite(sigma):
        raise InvalidArgumentError("sigma must be non-negative and finite")
    if sigma == 0.0:
        return mem.with_vector(mem.vector)
    rng = np.random.default_rng(seed)
    return mem.with_vector(mem.vector + rng.normal(0.0, sigma, size=mem.dim))


def perturb_key_hamming(key_vector, hamming: int, seed: int) -> np.ndarray:
    """Negate exactly ``hamming`` distinct coordinates of a bipolar key.

    The perturbed key satisfies <k, k~> == d - 2*hamming exactly, which
    is what makes this channel useful for controlled signal loss.
    """
    v = as_vector(key_vector)
    d = v.shape[0]
    if not is_sign_vector(v):
        raise InvalidArgumentError("key vector must be bipolar (+1/-1 entries)")
    hamming = int(hamming)
    if not 0 <= hamming <= d:
        raise InvalidArgumentError(f"hamming count must be in [0, {d}]")
    out = v.copy()
    if hamming == 0:
        return out
    idx = np.random.default_rng(seed).choice(d, size=hamming, replace=False)
    out[idx] = -out[idx]
    return out


def perturb_key_gauss(key_vector, sigma: float, seed: int) -> np.ndarray:
    """Add i.i.d. N(0, sigma^2) noise to the key embedding.

    The result is generally no longer bipolar.
    """
    v = as_vector(key_vector)
    if sigma < 0.0 or not np.isfinite(sigma):
        raise InvalidArgumentError("sigma must be non-negative and finite")
    if sigma == 0.0:
        return v.copy()
    rng = np.random.default_rng(seed)
    return v + rng.normal(0.0, sigma, size=v.shape[0])


def apply_noise(
    mem: HbfMemory,
    key_vector: np.ndarray,
    specs,
    seed: int,
) -> tuple[HbfMemory, np.ndarray]:
    """Apply each spec in order with an independently derived sub-seed."""
    for i, spec in enumerate(specs):
        sub = derive_seed(seed, "noise", i, spec.kind)
        if spec.kind == MEM_FLIP:
            mem = corrupt_memory_flip(mem, spec.amount, sub)
        elif spec.kind == MEM_GAUSS:
            mem = corrupt_memory_gauss(mem, spec.amount, sub)
        elif spec.kind == KEY_HAMMING:
            key_vector = perturb_key_hamming(key_vector, int(spec.amount), sub)
        elif spec.kind == KEY_GAUSS:
            key_vector = perturb_key_gauss(key_vector, spec.amount, sub)
    return mem, key_vector
