"""Scenario configuration, the end-to-end pipeline, reports and statistics."""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, fields
from typing import Hashable, Sequence

import numpy as np

from . import center, postprocess, protocol, telenet
from .center import AncillaAttack, Honest, InterceptResend, ProjectAs
from .errors import DegenerateSample, EmptyKey, ParseError, RangeError
from .protocol import ABSENT, Variant
from .qcore import Basis, BellOutcome
from .rng import make_streams

ABORT_QBER = 0.12


@dataclass(frozen=True)
class SingleCenter:
    pass


@dataclass(frozen=True)
class TwoCenters:
    hops: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    n_pairs: int
    variant: Variant
    behavior: center.CenterBehavior
    seed: int
    decoherence_p: float = 0.0
    topology: SingleCenter | TwoCenters = SingleCenter()
    estimate_fraction: float = 0.1
    block_size: int = 16
    passes: int = 4
    margin: int = 64
    pool_noise_p: float = 0.0

    def __post_init__(self):
        if self.n_pairs < 1:
            raise RangeError(f"n_pairs must be >= 1, got {self.n_pairs}")
        for name in ("decoherence_p", "pool_noise_p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise RangeError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 < self.estimate_fraction < 1.0:
            raise RangeError(f"estimate_fraction must lie in (0, 1), got {self.estimate_fraction}")
        if self.block_size < 2:
            raise RangeError("block_size must be >= 2")
        if self.passes < 1:
            raise RangeError("passes must be >= 1")
        if self.margin < 0:
            raise RangeError("margin must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise RangeError("seed must be an unsigned 64-bit integer")
        if isinstance(self.topology, TwoCenters) and self.topology.hops < 1:
            raise RangeError("two_centers needs at least one hop")


CSV_FIELDS = (
    "raw_pairs",
    "announced_present",
    "same_basis_kept",
    "psi_minus",
    "psi_plus",
    "phi_plus",
    "phi_minus",
    "sifted_len",
    "qber_estimate",
    "leakage",
    "final_len",
    "keys_agree",
    "cheat_mi",
)


@dataclass
class SessionReport:
    raw_pairs: int
    announced_present: int
    same_basis_kept: int
    psi_minus: int
    psi_plus: int
    phi_plus: int
    phi_minus: int
    sifted_len: int
    qber_estimate: float
    leakage: int
    final_len: int
    keys_agree: bool
    cheat_mi: float
    sifted_qber: float = 0.0
    estimate_sampled: int = 0
    aborted: bool = False
    wall_time: float = 0.0

    @property
    def outcome_histogram(self) -> tuple[int, int, int, int]:
        return (self.psi_minus, self.psi_plus, self.phi_plus, self.phi_minus)

    @property
    def cheat_mutual_information(self) -> float:
        return self.cheat_mi


def mutual_information(records: Sequence[Hashable], key_bits) -> float:
    """Plug-in estimate of I(record; bit) in bits from paired samples."""
    bits = np.asarray(key_bits, dtype=np.int64).ravel()
    if len(records) != bits.size:
        raise ValueError("records and key bits are not aligned")
    if bits.size == 0:
        return 0.0
    codes = {}
    x = np.fromiter((codes.setdefault(r, len(codes)) for r in records), dtype=np.int64, count=bits.size)
    joint = np.zeros((len(codes), int(bits.max()) + 1))
    np.add.at(joint, (x, bits), 1.0)
    joint /= bits.size
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log2(joint[nz] / (px @ py)[nz])))
    return max(mi, 0.0)


def center_knowledge(codes: np.ndarray, bases: np.ndarray, log: center.CheatLog, indices) -> list:
    """What the center holds for each sifted pair: its announcement, the
    publicly compared basis and any private cheat record."""
    return [(int(codes[i]), int(bases[i]), log.get(i)) for i in np.asarray(indices).tolist()]


def run_scenario(cfg: ScenarioConfig) -> SessionReport:
    started = time.perf_counter()
    rng = make_streams(cfg.seed)
    n = cfg.n_pairs
    alice = protocol.random_string(rng["user-a"], n)
    bob = protocol.random_string(rng["user-b"], n)
    file_a = center.deposit(center.QuantumFile("alice"), alice.states())
    file_b = center.deposit(center.QuantumFile("bob"), bob.states())
    if cfg.decoherence_p > 0.0:
        center.decohere(file_a, cfg.decoherence_p, rng["memory"])
        center.decohere(file_b, cfg.decoherence_p, rng["memory"])

    if isinstance(cfg.topology, TwoCenters):
        pools = [
            telenet.SingletPool.ideal(f"station-{h}", f"station-{h + 1}", n)
            for h in range(cfg.topology.hops)
        ]
        if cfg.pool_noise_p > 0.0:
            for p in pools:
                telenet.scramble_pool(p, cfg.pool_noise_p, rng["pool-noise"])
        announcements, log = telenet.intercenter_session(
            file_a, file_b, pools, cfg.behavior, rng["telenet"], center_rng=rng["center"]
        )
    else:
        announcements, log = center.pair_session(file_a, file_b, cfg.behavior, rng["center"])

    codes = protocol.outcome_codes(announcements)
    key_a, key_b = protocol.sift(alice, bob, codes, cfg.variant)
    hist = np.bincount(codes[codes != ABSENT], minlength=4)
    knowledge = center_knowledge(codes, alice.bases, log, key_a.source_indices)

    report = SessionReport(
        raw_pairs=n,
        announced_present=int(np.count_nonzero(codes != ABSENT)),
        same_basis_kept=int(np.count_nonzero(alice.bases == bob.bases)),
        psi_minus=int(hist[0]),
        psi_plus=int(hist[1]),
        phi_plus=int(hist[2]),
        phi_minus=int(hist[3]),
        sifted_len=len(key_a),
        qber_estimate=math.nan,
        leakage=0,
        final_len=0,
        keys_agree=False,
        cheat_mi=mutual_information(knowledge, key_a.bits),
        sifted_qber=postprocess.qber(key_a.bits, key_b.bits),
    )

    pp = rng["postprocess"]
    try:
        est = postprocess.estimate_error(key_a.bits, key_b.bits, cfg.estimate_fraction, pp)
    except (EmptyKey, DegenerateSample):
        report.aborted = True
    else:
        report.qber_estimate = est.qber
        report.estimate_sampled = est.sampled
        report.aborted = est.qber > ABORT_QBER

    if not report.aborted:
        a, b, ledger = postprocess.correct_errors(
            est.remaining_a, est.remaining_b, cfg.block_size, cfg.passes, pp
        )
        report.leakage = ledger.disclosed_bits
        length = postprocess.final_length(a.size, est.qber, ledger, cfg.margin)
        seed = postprocess.ToeplitzSeed.random(pp, length, a.size)
        final_a = postprocess.privacy_amplify(a, seed)
        final_b = postprocess.privacy_amplify(b, seed)
        report.final_len = length
        report.keys_agree = postprocess.verify_agreement(a, b) and postprocess.verify_agreement(final_a, final_b)

    report.wall_time = time.perf_counter() - started
    return report


# -- config parsing ---------------------------------------------------------

_CALL = re.compile(r"^([a-z_]+)\s*(?:\((.*)\))?$")
REQUIRED = ("n_pairs", "variant", "behavior", "seed")
OPTIONAL = ("decoherence_p", "topology", "estimate_fraction", "block_size", "passes", "margin", "pool_noise_p")


def split_args(text: str) -> list[str]:
    """Split on commas that are not nested inside parentheses."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
            continue
        depth += (ch == "(") - (ch == ")")
        cur.append(ch)
    if cur or out:
        out.append("".join(cur).strip())
    return out


def _enum(cls, text: str):
    for member in cls:
        if member.name.lower() == text.strip().lower():
            return member
    raise ValueError(f"unknown {cls.__name__} {text!r}")


def branch_map_preset(name: str) -> np.ndarray:
    if name == "identical":
        return np.tile([1.0, 0.0], (4, 1)).astype(complex)
    if name == "orthogonal":
        return np.eye(4, dtype=complex)
    raise ValueError(f"unknown branch map {name!r} (identical or orthogonal)")


def parse_behavior(text: str, variant: Variant) -> center.CenterBehavior:
    m = _CALL.match(text.strip())
    if not m:
        raise ValueError(f"cannot parse behavior {text!r}")
    name, args = m.group(1), split_args(m.group(2) or "")
    if name == "honest" and not args:
        return Honest(variant)
    if name == "project_as" and len(args) == 2:
        return ProjectAs(_enum(BellOutcome, args[0]), _enum(BellOutcome, args[1]))
    if name == "intercept_resend" and len(args) == 1:
        return InterceptResend(_enum(Basis, args[0]))
    if name == "ancilla_attack" and len(args) in (4, 5):
        coeffs = [complex(a.replace(" ", "")) for a in args[:4]]
        preset = args[4] if len(args) == 5 else "orthogonal"
        return AncillaAttack(*coeffs, branch_map=branch_map_preset(preset))
    raise ValueError(f"cannot parse behavior {text!r}")


def parse_topology(text: str):
    m = _CALL.match(text.strip())
    if m and m.group(1) == "single_center" and m.group(2) is None:
        return SingleCenter()
    if m and m.group(1) == "two_centers":
        return TwoCenters(int(m.group(2)) if m.group(2) else 1)
    raise ValueError(f"cannot parse topology {text!r}")


def parse_config(text: str) -> ScenarioConfig:
    """Parse ``key = value`` lines (``#`` starts a comment)."""
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in REQUIRED and key not in OPTIONAL:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ParseError(f"duplicate key {key!r} (first on line {raw[key][1]})", lineno)
        raw[key] = (value, lineno)
    for key in REQUIRED:
        if key not in raw:
            raise ParseError(f"missing required key {key!r}")

    def convert(key, fn):
        value, lineno = raw[key]
        try:
            return fn(value)
        except (ValueError, TypeError) as exc:
            raise ParseError(f"{key}: {exc}", lineno) from None

    variant = convert("variant", lambda v: Variant(v.lower()))
    kwargs = dict(
        n_pairs=convert("n_pairs", int),
        variant=variant,
        behavior=convert("behavior", lambda v: parse_behavior(v, variant)),
        seed=convert("seed", lambda v: int(v, 0)),
    )
    casts = {
        "decoherence_p": float,
        "pool_noise_p": float,
        "estimate_fraction": float,
        "block_size": int,
        "passes": int,
        "margin": int,
        "topology": parse_topology,
    }
    for key, fn in casts.items():
        if key in raw:
            kwargs[key] = convert(key, fn)
    return ScenarioConfig(**kwargs)


def override(text: str, key: str, value: str) -> str:
    """Config text with ``key`` set to ``value`` (appended if absent)."""
    lines = text.splitlines()
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    hit = False
    for i, line in enumerate(lines):
        if pattern.match(line.split("#", 1)[0]):
            lines[i] = f"{key} = {value}"
            hit = True
    if not hit:
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


# -- reports ----------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6g}"


def csv_header() -> str:
    return ",".join(CSV_FIELDS)


def emit_report(r: SessionReport, format: str = "text") -> str:
    if format == "csv_row":
        return ",".join(_fmt(getattr(r, name)) for name in CSV_FIELDS)
    if format != "text":
        raise ValueError(f"unknown report format {format!r}")
    names = [f.name for f in fields(r) if f.name != "wall_time"]
    width = max(map(len, names))
    return "\n".join(f"{name:<{width}} : {_fmt(getattr(r, name))}" for name in names) + "\n"
