"""Exact complex statevector engine for a handful of qubits plus an ancilla.

Amplitudes are laid out row-major over the qubit slots (slot 0 is the most
significant index) and then over the ancilla index.  Within a qubit slot the
basis order is (|up>, |down>).  Alice's particle is always slot 0 of a pair.

Single qubits are plain length-2 complex arrays; anything larger is wrapped
in :class:`JointState`, which carries the slot count and ancilla dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import InvalidAncilla, ZeroProbability

NORM_TOL = 1e-12
ZERO_PROB = 1e-15
SQRT_HALF = np.sqrt(0.5)

UP = np.array([1.0, 0.0], dtype=complex)
DOWN = np.array([0.0, 1.0], dtype=complex)
# Normalized with 1/sqrt(2); the printed 1/2 in the source derivation is a typo.
RIGHT = SQRT_HALF * (UP + DOWN)
LEFT = SQRT_HALF * (UP - DOWN)


class Basis(IntEnum):
    Z = 0
    X = 1


class BellOutcome(IntEnum):
    """Bell-operator eigenstates in the fixed sampling order."""

    PSI_MINUS = 0
    PSI_PLUS = 1
    PHI_PLUS = 2
    PHI_MINUS = 3

    @property
    def label(self) -> str:
        return self.name.lower()


class Spin(IntEnum):
    S0 = 0  # singlet
    S1 = 1  # triplet


# Measurement vectors per basis: row 0 is bit 0, row 1 is bit 1.
BASIS_VECTORS = {
    Basis.Z: np.array([UP, DOWN]),
    Basis.X: np.array([LEFT, RIGHT]),
}

BELL_STATES = SQRT_HALF * np.array(
    [
        [0, 1, -1, 0],  # psi-
        [0, 1, 1, 0],  # psi+
        [1, 0, 0, 1],  # phi+
        [1, 0, 0, -1],  # phi-
    ],
    dtype=complex,
)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Row of the branch map used for each center basis state (uu, ud, du, dd):
# dd -> A1, uu -> A2, du -> A3, ud -> A4.
ENTANGLER_ROWS = (1, 3, 2, 0)


def _norm(v: np.ndarray) -> float:
    return float(np.sqrt(np.vdot(v, v).real))


def check_normalized(amps, what: str = "state") -> np.ndarray:
    amps = np.asarray(amps, dtype=complex)
    if not np.all(np.isfinite(amps)):
        raise ValueError(f"{what} has non-finite amplitudes")
    n = _norm(amps.ravel())
    if abs(n - 1.0) > NORM_TOL:
        raise ValueError(f"{what} is not normalized (norm {n!r})")
    return amps


def qubit(a_up: complex, a_down: complex) -> np.ndarray:
    return check_normalized([a_up, a_down], "qubit")


def bell_state(outcome: BellOutcome) -> np.ndarray:
    return BELL_STATES[int(outcome)].copy()


@dataclass(frozen=True, eq=False)
class JointState:
    """Pure state of ``n_qubits`` qubit slots tensored with an ancilla."""

    amps: np.ndarray
    n_qubits: int
    ancilla_dim: int = 1

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).ravel()
        if amps.size != (2**self.n_qubits) * self.ancilla_dim:
            raise ValueError(
                f"expected {2**self.n_qubits * self.ancilla_dim} amplitudes, got {amps.size}"
            )
        if not 1 <= self.ancilla_dim <= 8:
            raise ValueError("ancilla dimension must be between 1 and 8")
        check_normalized(amps)
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @property
    def shape(self) -> tuple[int, ...]:
        return (2,) * self.n_qubits + (self.ancilla_dim,)

    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.shape)

    def __len__(self) -> int:
        return self.amps.size


def as_joint(s) -> JointState:
    if isinstance(s, JointState):
        return s
    amps = np.asarray(s, dtype=complex).ravel()
    n = int(np.log2(amps.size))
    if 2**n != amps.size:
        raise ValueError("bare amplitude arrays must have a power-of-two length")
    return JointState(amps, n)


def tensor(a, b) -> JointState:
    """Product state a (x) b of two qubits, a in slot 0."""
    a = check_normalized(a, "qubit a")
    b = check_normalized(b, "qubit b")
    return JointState(np.kron(a, b), 2)


def product(*qubits, ancilla=None) -> JointState:
    amps = np.ones(1, dtype=complex)
    for q in qubits:
        amps = np.kron(amps, check_normalized(q, "qubit"))
    d = 1
    if ancilla is not None:
        ancilla = check_normalized(ancilla, "ancilla")
        d = ancilla.size
        amps = np.kron(amps, ancilla)
    return JointState(amps, len(qubits), d)


def with_ancilla(s: JointState, ancilla) -> JointState:
    s = as_joint(s)
    if s.ancilla_dim != 1:
        raise InvalidAncilla("state already carries an ancilla")
    ancilla = np.asarray(ancilla, dtype=complex)
    try:
        check_normalized(ancilla, "ancilla")
    except ValueError as exc:
        raise InvalidAncilla(str(exc)) from None
    return JointState(np.kron(s.amps, ancilla), s.n_qubits, ancilla.size)


def permute_slots(s: JointState, order: Sequence[int]) -> JointState:
    """New state whose slot i holds old slot ``order[i]``."""
    s = as_joint(s)
    if sorted(order) != list(range(s.n_qubits)):
        raise ValueError(f"{order!r} is not a permutation of the qubit slots")
    t = np.transpose(s.tensor(), tuple(order) + (s.n_qubits,))
    return JointState(t.ravel(), s.n_qubits, s.ancilla_dim)


def _split(s: JointState, slots: Sequence[int]) -> np.ndarray:
    """Matrix view with the chosen slots as rows and everything else as columns."""
    slots = list(slots)
    if len(set(slots)) != len(slots):
        raise ValueError("slots must be distinct")
    for k in slots:
        if not 0 <= k < s.n_qubits:
            raise IndexError(f"slot {k} out of range for {s.n_qubits} qubits")
    t = np.moveaxis(s.tensor(), slots, list(range(len(slots))))
    return t.reshape(2 ** len(slots), -1)


def _merge(s: JointState, slots: Sequence[int], m: np.ndarray) -> JointState:
    k = len(slots)
    rest = [d for i, d in enumerate(s.shape) if i not in slots]
    t = m.reshape((2,) * k + tuple(rest))
    t = np.moveaxis(t, list(range(k)), list(slots))
    return JointState(t.ravel(), s.n_qubits, s.ancilla_dim)


def _branch_amplitudes(s: JointState, slots, rows: np.ndarray) -> np.ndarray:
    return rows.conj() @ _split(s, slots)


def branch_probabilities(s, slots, rows) -> np.ndarray:
    """Probability of projecting ``slots`` onto each row vector."""
    s = as_joint(s)
    c = _branch_amplitudes(s, slots, np.asarray(rows, dtype=complex))
    return np.sum(np.abs(c) ** 2, axis=1)


def sample_index(probs, u: float) -> int:
    """Cumulative walk over ``probs`` with a single uniform draw ``u``."""
    cum = 0.0
    last = 0
    for i, p in enumerate(probs):
        if p <= 0.0:
            continue
        cum += p
        last = i
        if u < cum:
            return i
    return last


def project(s, target_slots: Sequence[int], target, keep: bool = True) -> tuple[float, JointState]:
    """Project ``target_slots`` onto ``target``.

    Returns the branch probability and the collapsed, renormalized state.  With
    ``keep=False`` the projected slots are dropped and the state of the
    remaining slots (and ancilla) is returned instead.
    """
    s = as_joint(s)
    target = check_normalized(target, "projection target").ravel()
    if target.size != 2 ** len(target_slots):
        raise ValueError("target dimension does not match the number of slots")
    residual = target.conj() @ _split(s, target_slots)
    prob = float(np.vdot(residual, residual).real)
    if prob <= ZERO_PROB:
        raise ZeroProbability(prob)
    residual = residual / np.sqrt(prob)
    if not keep:
        return prob, JointState(residual, s.n_qubits - len(target_slots), s.ancilla_dim)
    return prob, _merge(s, target_slots, np.outer(target, residual))


def bell_coefficients(s) -> np.ndarray:
    """Overlaps <Bell_k|s> in the order psi-, psi+, phi+, phi-.

    Accepts unnormalized length-4 vectors as well as two-qubit states.
    """
    amps = s.amps if isinstance(s, JointState) else np.asarray(s, dtype=complex).ravel()
    if amps.size != 4:
        raise ValueError("bell_coefficients needs a two-qubit state without ancilla")
    return BELL_STATES.conj() @ amps


def measure_qubit(s, slot: int, basis: Basis, rng) -> tuple[int, JointState]:
    """Measure one slot in the Z or X basis; bit 0 is up / left."""
    s = as_joint(s)
    rows = BASIS_VECTORS[Basis(basis)]
    probs = branch_probabilities(s, [slot], rows)
    bit = sample_index(probs, rng.random())
    _, post = project(s, [slot], rows[bit])
    return bit, post


def measure_bell(s, rng, slots: Sequence[int] = (0, 1)) -> tuple[BellOutcome, JointState]:
    s = as_joint(s)
    probs = branch_probabilities(s, slots, BELL_STATES)
    k = sample_index(probs, rng.random())
    _, post = project(s, slots, BELL_STATES[k])
    return BellOutcome(k), post


def measure_total_spin(s, rng, slots: Sequence[int] = (0, 1)) -> tuple[Spin, JointState]:
    """Total-spin measurement: singlet (s=0) versus the triplet subspace."""
    s = as_joint(s)
    m = _split(s, slots)
    singlet = BELL_STATES[BellOutcome.PSI_MINUS]
    overlap = singlet.conj() @ m
    p0 = float(np.vdot(overlap, overlap).real)
    if sample_index([p0, 1.0 - p0], rng.random()) == 0:
        _, post = project(s, slots, singlet)
        return Spin.S0, post
    triplet = m - np.outer(singlet, overlap)
    triplet /= np.sqrt(np.vdot(triplet, triplet).real)
    return Spin.S1, _merge(s, slots, triplet)


def apply_pauli(s, slot: int, op: str) -> JointState:
    s = as_joint(s)
    m = PAULI[op] @ _split(s, [slot])
    return _merge(s, [slot], m)


def _ancilla_factor(s: JointState) -> np.ndarray:
    m = s.amps.reshape(-1, s.ancilla_dim)
    _, sv, vh = np.linalg.svd(m, full_matrices=False)
    if sv.size > 1 and sv[1] > 1e-9:
        raise InvalidAncilla("ancilla is entangled with the qubits")
    a = vh[0].copy()
    lead = np.argmax(np.abs(a) > 1e-9)
    return a * np.exp(-1j * np.angle(a[lead]))


def apply_controlled_entangler(s, center_slots: Sequence[int], branch_map, ancilla_init=None) -> JointState:
    """Entangle two center qubits with the ancilla, branch by branch.

    The ancilla must start in a product state ``A_init`` (inferred when not
    given).  Center basis branches dd, uu, du, ud take ``A_init`` to rows 0..3
    of ``branch_map``.  Only the action on the reachable subspace is built.
    """
    s = as_joint(s)
    branch_map = np.asarray(branch_map, dtype=complex)
    if branch_map.shape != (4, s.ancilla_dim):
        raise InvalidAncilla(f"branch map must have shape (4, {s.ancilla_dim})")
    for i, a in enumerate(branch_map):
        if abs(_norm(a) - 1.0) > NORM_TOL:
            raise InvalidAncilla(f"branch-map entry A{i + 1} is not normalized")
    if ancilla_init is None:
        a_init = _ancilla_factor(s)
    else:
        a_init = np.asarray(ancilla_init, dtype=complex)
        if a_init.shape != (s.ancilla_dim,) or abs(_norm(a_init) - 1.0) > NORM_TOL:
            raise InvalidAncilla("A_init must be a normalized ancilla state")

    m = _split(s, center_slots).reshape(4, -1, s.ancilla_dim)
    out = np.empty_like(m)
    for c in range(4):
        x = m[c] @ a_init.conj()
        if not np.allclose(m[c], np.outer(x, a_init), atol=1e-10):
            raise InvalidAncilla("ancilla is not in the product state A_init")
        out[c] = np.outer(x, branch_map[ENTANGLER_ROWS[c]])
    return _merge(s, center_slots, out.reshape(4, -1))


def phase_distance(a, b) -> float:
    """min over phi of ||a - exp(i phi) b||."""
    a = np.asarray(a.amps if isinstance(a, JointState) else a, dtype=complex).ravel()
    b = np.asarray(b.amps if isinstance(b, JointState) else b, dtype=complex).ravel()
    ov = np.vdot(b, a)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return _norm(a - phase * b)


def equal_up_to_phase(a, b, tol: float = NORM_TOL) -> bool:
    return phase_distance(a, b) < tol
