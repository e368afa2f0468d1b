"""Pseudorandom generator contract.

Every stochastic operation in this package draws from numpy's PCG64
generator, seeded with an explicit unsigned integer.  Sub-seeds for derived
streams (per-instance generation, per-epoch shuffles, per-instance
subsampling) are produced by `derive_seed`, which hashes the textual parts
with SHA-256 and keeps the first 8 bytes little-endian.  Both choices are
documented so that splits and generated corpora are bit-reproducible.
"""

import hashlib

import numpy as np

# Separator that cannot appear in decimal integers or instance ids.
_SEP = b"\x1f"


def derive_seed(*parts) -> int:
    """Derive a 64-bit sub-seed from a root seed and context parts.

    SHA-256 over the '\\x1f'-joined string forms of the parts; the first
    8 digest bytes, little-endian, form the seed.
    """
    payload = _SEP.join(str(p).encode("utf-8") for p in parts)
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int) -> np.random.Generator:
    """A PCG64 generator seeded with the given unsigned integer."""
    if seed < 0:
        raise ValueError(f"seed must be unsigned, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def fisher_yates(n: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded Fisher-Yates permutation of range(n).

    Explicit descending-index loop with one bounded draw per step, so the
    permutation is a pure function of the generator stream.
    """
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm
