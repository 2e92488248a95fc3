"""Multi-center network: singlet pools between centers and teleportation of
deposited qubits, directly or through a chain of intermediate stations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .center import QuantumFile, _walk, deposit, pair_session
from .errors import FileLengthMismatch, PoolEmpty
from .qcore import BELL_STATES, PAULI, BellOutcome

SINGLET = BELL_STATES[BellOutcome.PSI_MINUS]

# Pauli correction on the receiver's half for each Bell outcome (psi- resource).
CORRECTIONS = {
    BellOutcome.PSI_MINUS: "I",
    BellOutcome.PSI_PLUS: "Z",
    BellOutcome.PHI_PLUS: "Y",
    BellOutcome.PHI_MINUS: "X",
}
_CORRECTION_MATRICES = np.array([PAULI[CORRECTIONS[k]] for k in BellOutcome])


@dataclass
class SingletPool:
    """Stock of shared pairs between two centers (slot 0 at ``endpoint_a``)."""

    endpoint_a: str
    endpoint_b: str
    pairs: np.ndarray
    consumed: int = 0
    initial: int = field(init=False)

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=complex).reshape(-1, 4)
        self.initial = len(self.pairs) + self.consumed

    @classmethod
    def ideal(cls, endpoint_a: str, endpoint_b: str, size: int) -> "SingletPool":
        return cls(endpoint_a, endpoint_b, np.tile(SINGLET, (size, 1)))

    @property
    def remaining(self) -> int:
        return len(self.pairs) - self.consumed

    def __len__(self) -> int:
        return self.remaining

    def take(self, n: int = 1) -> np.ndarray:
        if n > self.remaining:
            raise PoolEmpty(
                f"pool {self.endpoint_a}-{self.endpoint_b} has {self.remaining} pairs, {n} needed"
            )
        out = self.pairs[self.consumed : self.consumed + n]
        self.consumed += n
        return out


def scramble_pool(pool: SingletPool, p: float, rng) -> SingletPool:
    """Harness noise: each unused pair becomes a uniformly random Bell state
    with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"scramble probability {p!r} outside [0, 1]")
    live = np.arange(pool.consumed, len(pool.pairs))
    if p == 0.0 or live.size == 0:
        return pool
    hit = live[rng.random(live.size) < p]
    pool.pairs[hit] = BELL_STATES[rng.integers(0, 4, size=hit.size)]
    return pool


@dataclass(frozen=True)
class TeleportRecord:
    bell_outcome: BellOutcome
    correction: str
    pair_index: int


def teleport(q, pool: SingletPool, rng):
    """Teleport one qubit across ``pool``; returns (state, record, pool)."""
    q = qcore.check_normalized(q, "qubit")
    if pool.remaining < 1:
        raise PoolEmpty(f"pool {pool.endpoint_a}-{pool.endpoint_b} is empty")
    pair_index = pool.consumed
    resource = pool.take(1)[0]
    state = qcore.JointState(np.kron(q, resource), 3)
    outcome, post = qcore.measure_bell(state, rng, slots=(0, 1))
    op = CORRECTIONS[outcome]
    _, receiver = qcore.project(post, (0, 1), BELL_STATES[outcome], keep=False)
    receiver = qcore.apply_pauli(receiver, 0, op)
    return receiver.amps.copy(), TeleportRecord(outcome, op, pair_index), pool


def teleport_many(states: np.ndarray, pool: SingletPool, rng) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`teleport` over an (n, 2) array of states.

    Draws one uniform per qubit, in order, exactly like repeated calls to
    :func:`teleport`.  Returns the received states and the outcome codes.
    """
    states = np.asarray(states, dtype=complex).reshape(-1, 2)
    n = len(states)
    resources = pool.take(n).reshape(n, 2, 2)
    # joint[n, s0, s1, s2] = q[s0] * r[s1, s2]
    joint = np.einsum("ni,njk->nijk", states, resources).reshape(n, 4, 2)
    coeff = np.einsum("kb,nbr->nkr", BELL_STATES.conj(), joint)
    probs = np.sum(np.abs(coeff) ** 2, axis=2)
    outcomes = _walk(probs, rng.random(n))
    picked = coeff[np.arange(n), outcomes]
    picked /= np.linalg.norm(picked, axis=1, keepdims=True)
    received = np.einsum("nij,nj->ni", _CORRECTION_MATRICES[outcomes], picked)
    return received, outcomes.astype(np.int8)


def chain_teleport(q, pools, rng):
    """Teleport hop by hop along ``pools``; a ``PoolEmpty`` names the hop."""
    records = []
    for hop, pool in enumerate(pools):
        try:
            q, rec, _ = teleport(q, pool, rng)
        except PoolEmpty as exc:
            raise PoolEmpty(str(exc), hop=hop) from None
        records.append(rec)
    return q, records


def chain_teleport_many(states: np.ndarray, pools, rng) -> np.ndarray:
    for hop, pool in enumerate(pools):
        if pool.remaining < len(states):
            raise PoolEmpty(
                f"pool {pool.endpoint_a}-{pool.endpoint_b} has {pool.remaining} pairs, "
                f"{len(states)} needed",
                hop=hop,
            )
    for pool in pools:
        states, _ = teleport_many(states, pool, rng)
    return states


def intercenter_session(file_a: QuantumFile, file_b: QuantumFile, pool, behavior, rng, center_rng=None):
    """Teleport Alice's cells to Bob's center, then run a pairing session there.

    ``pool`` is one :class:`SingletPool` or a list of them forming a path.
    Pool capacity is checked before anything is consumed.
    """
    pools = [pool] if isinstance(pool, SingletPool) else list(pool)
    idx_a, idx_b = file_a.unconsumed(), file_b.unconsumed()
    if idx_a.size != idx_b.size:
        raise FileLengthMismatch(f"{file_a.owner} has {idx_a.size} cells, {file_b.owner} has {idx_b.size}")
    for hop, p in enumerate(pools):
        if p.remaining < idx_a.size:
            raise PoolEmpty(f"pool {p.endpoint_a}-{p.endpoint_b} has {p.remaining} pairs, {idx_a.size} needed", hop=hop)
    moved = chain_teleport_many(file_a.take(idx_a), pools, rng)
    remote = deposit(QuantumFile(file_a.owner), moved)
    return pair_session(remote, file_b, behavior, center_rng if center_rng is not None else rng)
