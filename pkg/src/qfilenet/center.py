"""The transmission center: quantum files, pairing sessions, cheating behaviors.

Sessions are vectorized over all pairs but reproduce the single-pair
semantics of :mod:`qfilenet.qcore` draw for draw: each pair consumes the same
uniforms, in the same order, as the scalar measurement functions would.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import qcore
from .errors import CellConsumed, FileLengthMismatch, LengthMismatch, ZeroProbability
from .protocol import ABSENT, Variant
from .qcore import BASIS_VECTORS, BELL_STATES, Basis, BellOutcome

# (n, 2) arrays of qubit states for Z and X basis; index [basis, bit].
_BB84 = np.array([BASIS_VECTORS[Basis.Z], BASIS_VECTORS[Basis.X]])


class QuantumFile:
    """A user's ordered store of deposited qubits.

    Cells are consumed at most once; a consumed cell reads back as ``None``.
    """

    def __init__(self, owner: str):
        self.owner = owner
        self._states = np.empty((0, 2), dtype=complex)
        self._consumed = np.empty(0, dtype=bool)
        self.deposited_at = np.empty(0, dtype=np.int64)
        self.clock = 0

    def __len__(self) -> int:
        return self._states.shape[0]

    def __repr__(self) -> str:
        return f"QuantumFile({self.owner!r}, cells={len(self)}, available={self.available})"

    @property
    def available(self) -> int:
        return int(np.count_nonzero(~self._consumed))

    def cell(self, i: int) -> Optional[np.ndarray]:
        if self._consumed[i]:
            return None
        return self._states[i].copy()

    def unconsumed(self) -> np.ndarray:
        return np.flatnonzero(~self._consumed)

    def take(self, indices) -> np.ndarray:
        """Remove and return the states in ``indices``."""
        indices = np.asarray(indices, dtype=np.int64)
        if np.unique(indices).size != indices.size:
            raise CellConsumed(f"{self.owner}: a cell was addressed twice")
        if np.any(self._consumed[indices]):
            bad = indices[self._consumed[indices]][0]
            raise CellConsumed(f"{self.owner}: cell {bad} was already consumed")
        states = self._states[indices].copy()
        self._consumed[indices] = True
        return states

    def _replace(self, indices, states) -> None:
        self._states[indices] = states


def deposit(file: QuantumFile, states) -> QuantumFile:
    states = np.asarray(states, dtype=complex).reshape(-1, 2)
    norms = np.sum(np.abs(states) ** 2, axis=1)
    if np.any(np.abs(norms - 1.0) > qcore.NORM_TOL):
        raise ValueError("deposited states must be normalized")
    file._states = np.concatenate([file._states, states])
    file._consumed = np.concatenate([file._consumed, np.zeros(len(states), dtype=bool)])
    file.deposited_at = np.concatenate(
        [file.deposited_at, np.full(len(states), file.clock, dtype=np.int64)]
    )
    file.clock += 1
    return file


@dataclass(frozen=True)
class Honest:
    variant: Variant = Variant.FULL_BELL


@dataclass(frozen=True)
class ProjectAs:
    """Project onto ``actual`` but announce ``claimed``."""

    claimed: BellOutcome
    actual: BellOutcome


@dataclass(frozen=True)
class InterceptResend:
    basis: Basis


@dataclass(frozen=True, eq=False)
class AncillaAttack:
    """Entangle the center's qubits with an ancilla, then project onto
    ``alpha|dd> + beta|uu> - gamma|du> - delta|ud>``."""

    alpha: complex
    beta: complex
    gamma: complex
    delta: complex
    branch_map: np.ndarray
    ancilla_init: Optional[np.ndarray] = None

    def __post_init__(self):
        total = sum(abs(c) ** 2 for c in self.coefficients)
        if abs(total - 1.0) > qcore.NORM_TOL:
            raise ValueError(f"attack coefficients are not normalized (sum {total!r})")
        bm = np.asarray(self.branch_map, dtype=complex)
        object.__setattr__(self, "branch_map", bm)
        if self.ancilla_init is None:
            init = np.zeros(bm.shape[1], dtype=complex)
            init[0] = 1.0
            object.__setattr__(self, "ancilla_init", init)

    @property
    def coefficients(self) -> tuple[complex, complex, complex, complex]:
        return (self.alpha, self.beta, self.gamma, self.delta)

    def target(self) -> np.ndarray:
        """The projection target in (uu, ud, du, dd) order."""
        return np.array([self.beta, -self.delta, -self.gamma, self.alpha], dtype=complex)


CenterBehavior = Honest | ProjectAs | InterceptResend | AncillaAttack


@dataclass(frozen=True, slots=True)
class Announcement:
    pair_index: int
    outcome: Optional[BellOutcome]


@dataclass
class CheatLog:
    """Everything a center learned beyond its public announcements, per pair."""

    entries: dict[int, object] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def get(self, pair_index: int, default=None):
        return self.entries.get(pair_index, default)


def _announcements(codes: np.ndarray) -> list[Announcement]:
    outcomes = [None, *BellOutcome]  # index code + 1
    return [Announcement(i, outcomes[c + 1]) for i, c in enumerate(codes.tolist())]


def _walk(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized :func:`qcore.sample_index` over rows of ``probs``."""
    p = np.where(probs > 0.0, probs, 0.0)
    cum = np.cumsum(p, axis=1)
    hit = (u[:, None] < cum) & (probs > 0.0)
    first = np.argmax(hit, axis=1)
    positive = probs > 0.0
    last = probs.shape[1] - 1 - np.argmax(positive[:, ::-1], axis=1)
    return np.where(hit.any(axis=1), first, last)


def bell_probabilities(a_states: np.ndarray, b_states: np.ndarray) -> np.ndarray:
    """(n, 4) Bell-outcome probabilities for product pairs a_i (x) b_i."""
    joint = np.einsum("ni,nj->nij", a_states, b_states).reshape(-1, 4)
    return np.abs(joint @ BELL_STATES.conj().T) ** 2


def pair_session(file_a: QuantumFile, file_b: QuantumFile, behavior: CenterBehavior, rng):
    """Pair every unconsumed cell of ``file_a`` with the matching cell of ``file_b``.

    Returns the per-pair announcements and the center's cheat log.
    """
    idx_a, idx_b = file_a.unconsumed(), file_b.unconsumed()
    if idx_a.size != idx_b.size:
        raise FileLengthMismatch(f"{file_a.owner} has {idx_a.size} cells, {file_b.owner} has {idx_b.size}")
    a = file_a.take(idx_a)
    b = file_b.take(idx_b)
    n = len(a)
    log = CheatLog()

    if isinstance(behavior, Honest):
        probs = bell_probabilities(a, b)
        u = rng.random(n)
        if behavior.variant is Variant.FULL_BELL:
            codes = _walk(probs, u).astype(np.int8)
        else:
            p0 = probs[:, BellOutcome.PSI_MINUS]
            spin = _walk(np.column_stack([p0, np.clip(1.0 - p0, 0.0, None)]), u)
            codes = np.where(spin == 0, BellOutcome.PSI_MINUS, ABSENT).astype(np.int8)
    elif isinstance(behavior, ProjectAs):
        p = bell_probabilities(a, b)[:, int(behavior.actual)]
        u = rng.random(n)
        ok = (p > qcore.ZERO_PROB) & (u < p)
        codes = np.where(ok, int(behavior.claimed), ABSENT).astype(np.int8)
        for i in np.flatnonzero(ok).tolist():
            log.entries[i] = behavior.actual
    elif isinstance(behavior, InterceptResend):
        vec = BASIS_VECTORS[behavior.basis]
        pa1 = np.abs(a @ vec[1].conj()) ** 2
        pb1 = np.abs(b @ vec[1].conj()) ** 2
        u = rng.random((n, 2))
        bit_a = _walk(np.column_stack([1.0 - pa1, pa1]), u[:, 0])
        bit_b = _walk(np.column_stack([1.0 - pb1, pb1]), u[:, 1])
        codes = np.where(bit_a != bit_b, BellOutcome.PSI_MINUS, ABSENT).astype(np.int8)
        for i, (x, y) in enumerate(zip(bit_a.tolist(), bit_b.tolist())):
            log.entries[i] = (x, y)
    elif isinstance(behavior, AncillaAttack):
        codes = np.full(n, ABSENT, dtype=np.int8)
        for i in range(n):
            state = qcore.product(a[i], b[i], ancilla=behavior.ancilla_init)
            ok, remainder = attack_on_center_slots(state, (0, 1), behavior, rng)
            if ok:
                codes[i] = BellOutcome.PSI_MINUS
                k = qcore.sample_index(np.abs(remainder.amps) ** 2, rng.random())
                log.entries[i] = k
    else:
        raise TypeError(f"unknown center behavior {behavior!r}")
    return _announcements(codes), log


def attack_on_center_slots(state: qcore.JointState, center_slots, attack: AncillaAttack, rng):
    """Entangle ``center_slots`` with the ancilla and project them onto the
    attack target.  Returns (success, state of the remaining slots + ancilla);
    the remainder is ``None`` on failure."""
    entangled = qcore.apply_controlled_entangler(
        state, center_slots, attack.branch_map, ancilla_init=attack.ancilla_init
    )
    u = rng.random()
    try:
        prob, remainder = qcore.project(entangled, center_slots, attack.target(), keep=False)
    except ZeroProbability:
        return False, None
    if u >= prob:
        return False, None
    return True, remainder


def attack_source_state(ancilla_init) -> qcore.JointState:
    """Two singlets (Alice, C1), (Bob, C2) plus ancilla, reordered to
    slots (Alice, Bob, C1, C2)."""
    singlet = BELL_STATES[BellOutcome.PSI_MINUS]
    raw = qcore.JointState(np.kron(np.kron(singlet, singlet), ancilla_init), 4, len(ancilla_init))
    return qcore.permute_slots(raw, (0, 2, 1, 3))


def construct_attack_state(alpha, beta, gamma, delta, branch_map, rng, ancilla_init=None):
    """Build the state a cheating center hands to Alice and Bob.

    Returns (success, JointState on Alice, Bob (x) ancilla); the state is
    ``None`` when the projection fails.
    """
    attack = AncillaAttack(alpha, beta, gamma, delta, branch_map, ancilla_init)
    source = attack_source_state(attack.ancilla_init)
    return attack_on_center_slots(source, (2, 3), attack, rng)


def xor_hidden_file(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise LengthMismatch(f"strings differ in length ({a.size} vs {b.size})")
    return a ^ b


class HiddenFileCenter:
    """Classical baseline: a trusted center holding users' secret strings."""

    def __init__(self):
        self.files: dict[str, list[tuple[int, ...]]] = {}

    def deposit(self, owner: str, strings: Sequence) -> None:
        self.files.setdefault(owner, []).extend(
            tuple(int(x) for x in s) for s in strings
        )

    def issue(self, alice: str, bob: str, index: int = 0) -> np.ndarray:
        """The public string C that lets Alice recover Bob's string."""
        return xor_hidden_file(self.files[alice][index], self.files[bob][index])


def decohere(file: QuantumFile, p: float, rng) -> QuantumFile:
    """Scramble each unconsumed cell with probability ``p``.

    A scrambled cell is replaced by a uniformly chosen BB84 state.  One uniform
    is drawn per cell, then a (basis, bit) pair per scrambled cell.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"decoherence probability {p!r} outside [0, 1]")
    idx = file.unconsumed()
    if p == 0.0 or idx.size == 0:
        return file
    hit = idx[rng.random(idx.size) < p]
    choice = rng.integers(0, 2, size=(hit.size, 2))
    file._replace(hit, _BB84[choice[:, 0], choice[:, 1]])
    return file
