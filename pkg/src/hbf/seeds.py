"""Stable 64-bit seed derivation.

Experiments fan a single master seed out to many independent consumers
(codebooks, calibration probes, per-trial noise). Each consumer gets
``derive_seed(master, *context)`` so parallel trials never share a
stream and reruns are bit-reproducible.
"""

from __future__ import annotations

import hashlib

MASK64 = (1 << 64) - 1

_PERSON = b"hbf.seed.v1"


def derive_seed(master: int, *parts: int | str | bytes) -> int:
    """Mix a master seed with context parts into a uint64.

    Parts are length-prefixed and type-tagged before hashing, so
    ("ab", "c") and ("a", "bc") derive different seeds.
    """
    h = hashlib.blake2b(digest_size=8, person=_PERSON)
    h.update((master & MASK64).to_bytes(8, "little"))
    for part in parts:
        if isinstance(part, bytes):
            tag, data = b"b", part
        elif isinstance(part, str):
            tag, data = b"s", part.encode("utf-8")
        elif isinstance(part, int):
            tag, data = b"i", (part & MASK64).to_bytes(8, "little")
        else:
            raise TypeError(f"cannot derive a seed from {type(part).__name__}")
        h.update(tag)
        h.update(len(data).to_bytes(4, "little"))
        h.update(data)
    return int.from_bytes(h.digest(), "little")
