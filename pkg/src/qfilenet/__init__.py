"""Simulator for key distribution through quantum memories held at a center.

Users deposit BB84 qubits in a center's quantum file; the center projects
pairs onto Bell states so that two users end up with correlated bits the
center itself knows nothing about.
"""

from .center import (
    AncillaAttack,
    Announcement,
    CheatLog,
    Honest,
    InterceptResend,
    ProjectAs,
    QuantumFile,
    construct_attack_state,
    decohere,
    deposit,
    pair_session,
    xor_hidden_file,
)
from .errors import QFileNetError
from .harness import ScenarioConfig, SessionReport, emit_report, parse_config, run_scenario
from .protocol import BB84Record, Relation, Variant, encode_bb84, random_bb84, relation, sift
from .qcore import Basis, BellOutcome, JointState

__version__ = "0.1.0"
