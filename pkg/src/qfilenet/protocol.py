"""BB84 encoding, Bell-outcome correlation rules and sifting."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from itertools import product
from typing import Sequence

import numpy as np

from . import qcore
from .errors import LengthMismatch
from .qcore import BASIS_VECTORS, BELL_STATES, Basis, BellOutcome

ABSENT = -1


class Variant(Enum):
    SINGLET_ONLY = "singlet_only"
    FULL_BELL = "full_bell"


class Relation(IntEnum):
    CORRELATED = 0
    ANTICORRELATED = 1


# RELATION_TABLE[outcome, basis] == 1 where the prepared bits are anticorrelated.
RELATION_TABLE = np.array(
    [
        [1, 1],  # psi-
        [1, 0],  # psi+
        [0, 0],  # phi+
        [0, 1],  # phi-
    ],
    dtype=np.uint8,
)


def encode_bb84(bit: int, basis: Basis) -> np.ndarray:
    """(0,Z)->up, (1,Z)->down, (0,X)->left, (1,X)->right."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return BASIS_VECTORS[Basis(basis)][bit].copy()


@dataclass(frozen=True)
class BB84Record:
    bit: int
    basis: Basis
    state: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "basis", Basis(self.basis))
        object.__setattr__(self, "state", encode_bb84(self.bit, self.basis))


def random_bb84(rng) -> BB84Record:
    bit = int(rng.integers(2))
    basis = Basis(int(rng.integers(2)))
    return BB84Record(bit, basis)


@dataclass
class UserString:
    """A run of BB84 choices stored column-wise (bits and bases as uint8)."""

    bits: np.ndarray
    bases: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        self.bases = np.asarray(self.bases, dtype=np.uint8)
        if self.bits.shape != self.bases.shape:
            raise LengthMismatch("bits and bases differ in length")

    def __len__(self) -> int:
        return self.bits.size

    def __getitem__(self, i: int) -> BB84Record:
        return BB84Record(int(self.bits[i]), Basis(int(self.bases[i])))

    def states(self) -> np.ndarray:
        """(n, 2) array of prepared qubit states."""
        vectors = np.array([BASIS_VECTORS[Basis.Z], BASIS_VECTORS[Basis.X]])
        return vectors[self.bases, self.bits]

    @classmethod
    def from_records(cls, records: Sequence[BB84Record]) -> "UserString":
        return cls([r.bit for r in records], [int(r.basis) for r in records])


def random_string(rng, n: int) -> UserString:
    """n independent uniform BB84 choices."""
    draws = rng.integers(0, 2, size=(n, 2), dtype=np.uint8)
    return UserString(draws[:, 0], draws[:, 1])


def relation(outcome: BellOutcome, basis: Basis) -> Relation:
    return Relation(int(RELATION_TABLE[int(outcome), int(basis)]))


def outcome_codes(announcements) -> np.ndarray:
    """Optional outcomes (or Announcement objects) as int codes, -1 for absent."""
    if isinstance(announcements, np.ndarray):
        return announcements.astype(np.int8)
    codes = np.empty(len(announcements), dtype=np.int8)
    for i, a in enumerate(announcements):
        a = getattr(a, "outcome", a)
        codes[i] = ABSENT if a is None else int(a)
    return codes


@dataclass
class SiftedKey:
    bits: np.ndarray
    source_indices: np.ndarray

    def __post_init__(self):
        if len(self.bits) != len(self.source_indices):
            raise LengthMismatch("sifted bits and indices differ in length")

    def __len__(self) -> int:
        return len(self.bits)


def _as_string(x) -> UserString:
    return x if isinstance(x, UserString) else UserString.from_records(x)


def sift(alice, bob, announcements, variant: Variant = Variant.FULL_BELL) -> tuple[SiftedKey, SiftedKey]:
    """Keep announced same-basis pairs; Alice flips anticorrelated positions."""
    alice, bob = _as_string(alice), _as_string(bob)
    codes = outcome_codes(announcements)
    if not len(alice) == len(bob) == len(codes):
        raise LengthMismatch(
            f"alice={len(alice)}, bob={len(bob)}, announcements={len(codes)}"
        )
    present = codes != ABSENT
    if variant is Variant.SINGLET_ONLY and np.any(codes[present] != BellOutcome.PSI_MINUS):
        raise ValueError("singlet-only sessions can only announce psi_minus")
    keep = np.flatnonzero(present & (alice.bases == bob.bases))
    flips = RELATION_TABLE[codes[keep], alice.bases[keep]]
    a_bits = alice.bits[keep] ^ flips
    return SiftedKey(a_bits, keep), SiftedKey(bob.bits[keep].copy(), keep.copy())


def required_raw_length(key_len: int, wasted: int, variant: Variant) -> int:
    """Smallest raw string length strictly above the usable-fraction bound."""
    if key_len < 0 or wasted < 0:
        raise ValueError("lengths must be non-negative")
    factor = 8 if variant is Variant.SINGLET_ONLY else 2
    return factor * (key_len + wasted) + 1


def relation_from_states(outcome: BellOutcome, basis: Basis) -> Relation:
    """Derive the relation by enumerating product states with nonzero overlap."""
    vecs = BASIS_VECTORS[Basis(basis)]
    rel = set()
    for a, b in product((0, 1), repeat=2):
        if abs(qcore.bell_coefficients(np.kron(vecs[a], vecs[b]))[int(outcome)]) ** 2 > 1e-12:
            rel.add(Relation.CORRELATED if a == b else Relation.ANTICORRELATED)
    if len(rel) != 1:
        raise ValueError(f"{outcome!r} has no definite relation in basis {basis!r}")
    return rel.pop()


def outcome_distribution_users_first() -> dict[tuple, float]:
    """Exact P(a_bit, a_basis, b_bit, b_basis, outcome) when users prepare first.

    Users pick uniform BB84 states; the center Bell-measures the product state.
    """
    dist = {}
    for ab, aB, bb, bB in product((0, 1), repeat=4):
        s = qcore.tensor(encode_bb84(ab, Basis(aB)), encode_bb84(bb, Basis(bB)))
        probs = qcore.branch_probabilities(s, (0, 1), BELL_STATES)
        for k in BellOutcome:
            dist[(ab, aB, bb, bB, int(k))] = probs[k] / 16.0
    return dist


def outcome_distribution_center_first() -> dict[tuple, float]:
    """Exact joint distribution when the center measures before the users.

    Two singlets (Alice, C1) and (Bob, C2); the center Bell-measures (C1, C2);
    afterwards each user measures in a uniformly chosen basis.  A user's result
    is the partner of the state that reached the center, so the prepared bit is
    the complement of the measured one.
    """
    singlet = BELL_STATES[BellOutcome.PSI_MINUS]
    # slots: Alice, C1, Bob, C2 -> reorder to Alice, Bob, C1, C2
    s = qcore.permute_slots(qcore.JointState(np.kron(singlet, singlet), 4), (0, 2, 1, 3))
    dist = {}
    for k in BellOutcome:
        try:
            pk, post = qcore.project(s, (2, 3), BELL_STATES[k], keep=False)
        except qcore.ZeroProbability:
            continue
        for aB, bB in product((0, 1), repeat=2):
            rows = np.array(
                [np.kron(BASIS_VECTORS[Basis(aB)][x], BASIS_VECTORS[Basis(bB)][y])
                 for x, y in product((0, 1), repeat=2)]
            )
            probs = qcore.branch_probabilities(post, (0, 1), rows)
            for (x, y), p in zip(product((0, 1), repeat=2), probs):
                key = (1 - x, aB, 1 - y, bB, int(k))
                dist[key] = dist.get(key, 0.0) + pk * p / 4.0
    return dist
