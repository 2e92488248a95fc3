"""Classical post-processing: error estimation, parity-block correction,
GF(2) hashing for privacy amplification, and leakage bookkeeping.

Bit strings are 1-D ``uint8`` numpy arrays of zeros and ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, EmptyKey, LengthMismatch, OutputTooLong


def as_bits(x) -> np.ndarray:
    if isinstance(x, str):
        return np.frombuffer(x.encode(), dtype=np.uint8) - ord("0")
    return np.asarray(x, dtype=np.uint8).ravel()


def qber(a, b) -> float:
    """Fraction of mismatched positions; 0.0 for empty strings."""
    a, b = as_bits(a), as_bits(b)
    if a.shape != b.shape:
        raise LengthMismatch("strings differ in length")
    return float(np.count_nonzero(a != b) / a.size) if a.size else 0.0


@dataclass
class ErrorEstimate:
    sampled: int
    mismatches: int
    qber: float
    remaining_a: np.ndarray
    remaining_b: np.ndarray
    positions: np.ndarray


def estimate_error(a, b, fraction: float, rng) -> ErrorEstimate:
    """Publicly compare a random sample of positions, then discard them."""
    a, b = as_bits(a), as_bits(b)
    if a.shape != b.shape:
        raise LengthMismatch("strings differ in length")
    if a.size < 2:
        raise EmptyKey(f"need at least 2 bits to estimate, got {a.size}")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    k = math.ceil(fraction * a.size)
    if k < 1:
        raise DegenerateSample("sample size is zero")
    positions = np.sort(rng.choice(a.size, size=k, replace=False))
    mismatches = int(np.count_nonzero(a[positions] != b[positions]))
    keep = np.ones(a.size, dtype=bool)
    keep[positions] = False
    return ErrorEstimate(k, mismatches, mismatches / k, a[keep], b[keep], positions)


@dataclass
class LeakageLedger:
    """Parity bits disclosed on the public channel."""

    disclosed_bits: int = 0

    def disclose(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("cannot un-disclose bits")
        self.disclosed_bits += n


def _parity(x: np.ndarray) -> int:
    return int(np.count_nonzero(x) & 1)


def _bisect(a_block: np.ndarray, b_block: np.ndarray, ledger: LeakageLedger) -> int:
    """Locate one error in a block with odd relative parity."""
    lo, hi = 0, a_block.size
    while hi - lo > 1:
        mid = (lo + hi) // 2
        ledger.disclose()
        if _parity(a_block[lo:mid]) != _parity(b_block[lo:mid]):
            hi = mid
        else:
            lo = mid
    return lo


def correct_errors(a, b, block_size: int, passes: int, rng) -> tuple[np.ndarray, np.ndarray, LeakageLedger]:
    """Interactive parity-block reconciliation; all flips land in ``b``.

    Each pass shuffles both strings with a public permutation, splits them into
    blocks, and bisects every block whose parities disagree.  One disclosed bit
    is counted per compared block parity and per bisection step.
    """
    a, b = as_bits(a), as_bits(b)
    if a.shape != b.shape:
        raise LengthMismatch("strings differ in length")
    if block_size < 2 or passes < 1:
        raise ValueError("block_size must be >= 2 and passes >= 1")
    b = b.copy()
    ledger = LeakageLedger()
    n = a.size
    if n == 0:
        return a.copy(), b, ledger
    n_blocks = -(-n // block_size)
    pad = n_blocks * block_size - n
    for _ in range(passes):
        perm = rng.permutation(n)
        pa = np.concatenate([a[perm], np.zeros(pad, np.uint8)]).reshape(n_blocks, block_size)
        pb = np.concatenate([b[perm], np.zeros(pad, np.uint8)]).reshape(n_blocks, block_size)
        ledger.disclose(n_blocks)
        odd = np.flatnonzero((pa.sum(axis=1) ^ pb.sum(axis=1)) & 1)
        for blk in odd.tolist():
            start = blk * block_size
            width = min(block_size, n - start)
            off = _bisect(pa[blk, :width], pb[blk, :width], ledger)
            b[perm[start + off]] ^= 1
    return a.copy(), b, ledger


@dataclass
class HashSeed:
    """Dense binary matrix, ``out_len`` rows of ``in_len`` bits, row-major."""

    bits: np.ndarray
    out_len: int

    def __post_init__(self):
        self.bits = as_bits(self.bits)
        if self.out_len < 0 or (self.out_len == 0 and self.bits.size) or (
            self.out_len and self.bits.size % self.out_len
        ):
            raise ValueError("seed length must be a multiple of out_len")

    @property
    def in_len(self) -> int:
        return self.bits.size // self.out_len if self.out_len else 0

    def matrix(self) -> np.ndarray:
        return self.bits.reshape(self.out_len, self.in_len)

    @classmethod
    def random(cls, rng, out_len: int, in_len: int) -> "HashSeed":
        return cls(rng.integers(0, 2, size=out_len * in_len, dtype=np.uint8), out_len)


@dataclass
class ToeplitzSeed:
    """Toeplitz matrix from ``out_len + in_len - 1`` bits.

    Entry (i, j) is ``diagonals[i - j + in_len - 1]``.  Same hashing contract
    as :class:`HashSeed` with a seed that stays linear in the key length.
    """

    diagonals: np.ndarray
    out_len: int
    in_len: int

    def __post_init__(self):
        self.diagonals = as_bits(self.diagonals)
        if self.diagonals.size != max(self.out_len + self.in_len - 1, 0):
            raise ValueError("Toeplitz seed needs out_len + in_len - 1 bits")

    def matrix(self) -> np.ndarray:
        i = np.arange(self.out_len)[:, None]
        j = np.arange(self.in_len)[None, :]
        return self.diagonals[i - j + self.in_len - 1]

    def as_hash_seed(self) -> HashSeed:
        return HashSeed(self.matrix().ravel(), self.out_len)

    @classmethod
    def random(cls, rng, out_len: int, in_len: int) -> "ToeplitzSeed":
        n = max(out_len + in_len - 1, 0)
        return cls(rng.integers(0, 2, size=n, dtype=np.uint8), out_len, in_len)


def _toeplitz_product(diag: np.ndarray, key: np.ndarray, out_len: int) -> np.ndarray:
    # row i of T.key = sum_j diag[i - j + n - 1] key[j]: a linear convolution
    n = key.size
    size = 1 << (diag.size + n - 1).bit_length()
    conv = np.fft.irfft(np.fft.rfft(diag.astype(float), size) * np.fft.rfft(key.astype(float), size), size)
    counts = np.rint(conv[n - 1 : n - 1 + out_len]).astype(np.int64)
    return (counts & 1).astype(np.uint8)


def privacy_amplify(key, seed: HashSeed | ToeplitzSeed) -> np.ndarray:
    """Multiply the key by the seed's binary matrix over GF(2)."""
    key = as_bits(key)
    if seed.out_len > key.size:
        raise OutputTooLong(f"requested {seed.out_len} bits from a {key.size}-bit key")
    if seed.out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    if seed.in_len != key.size:
        raise LengthMismatch(f"seed expects {seed.in_len} input bits, key has {key.size}")
    if isinstance(seed, ToeplitzSeed):
        return _toeplitz_product(seed.diagonals, key, seed.out_len)
    counts = seed.matrix().astype(np.int64) @ key.astype(np.int64)
    return (counts & 1).astype(np.uint8)


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def final_length(sifted_len: int, qber: float, leakage, margin: int = 64) -> int:
    """Key length left after paying for disclosed parities, the error entropy
    and a fixed safety margin."""
    disclosed = leakage.disclosed_bits if isinstance(leakage, LeakageLedger) else int(leakage)
    if sifted_len < 0 or qber < 0 or disclosed < 0 or margin < 0:
        raise ValueError("inputs must be non-negative")
    # guard against float noise pushing an exact integer up by one
    entropy_bits = math.ceil(sifted_len * binary_entropy(qber) - 1e-9)
    return max(0, sifted_len - disclosed - entropy_bits - margin)


def verify_agreement(a, b) -> bool:
    a, b = as_bits(a), as_bits(b)
    return a.shape == b.shape and bool(np.array_equal(a, b))
