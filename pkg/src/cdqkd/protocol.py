"""Three-party QKD sessions with collective detection.

Two variants share one transmission core:

``honest_center``
    center -> Alice -> Bob -> center.  Both users encode with ``U^x`` and
    scramble with ``C^y``; the center undoes the scrambling from the public
    control strings, measures, and announces ``A xor B``.
``dishonest_center``
    center -> Alice -> Bob(store) -> center.  Bob undoes Alice's scrambling
    himself after she announces it, permutes the sequence with a secret
    permutation and lets the center measure.  Only Bob can put the
    outcomes back in order.

Each session is single-threaded and fully determined by ``cfg.seed``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .adversaries import (
    LEG_ALICE_BOB,
    LEG_BOB_CENTER,
    LEG_CENTER_ALICE,
    Adversary,
    AttackKind,
    AttackModel,
    SessionContext,
    apply_each,
    make_adversary,
    user_op_table,
    zero_states,
)
from .bases import ENCODING_NAMES, NoiseKind
from .channels import INCONCLUSIVE, NoiseModel, measure_logical_batch, transmit_leg
from .errors import BadCountError, ConfigInvalidError, ProtocolOrderError
from .operators import OperatorSet, reference_instance


class Variant(str, Enum):
    HONEST_CENTER = "honest_center"
    DISHONEST_CENTER = "dishonest_center"


class Correction(str, Enum):
    I = "I"
    C_INVERSE = "C_inverse"
    U = "U"


def center_correction(total_c_count: int) -> Correction:
    """Operation the center applies given how many control operations were used."""
    if isinstance(total_c_count, bool) or total_c_count not in (0, 1, 2):
        raise BadCountError(f"control-operation count must be 0, 1 or 2, got {total_c_count!r}")
    return (Correction.I, Correction.C_INVERSE, Correction.U)[int(total_c_count)]


def correction_matrix(tag: Correction, opset: OperatorSet) -> np.ndarray:
    return {Correction.I: opset.I, Correction.C_INVERSE: opset.C_inv, Correction.U: opset.U}[tag]


def default_threshold(noise: NoiseModel) -> float:
    return 0.0 if noise.kind is NoiseKind.NONE else 0.02


@dataclass(frozen=True)
class ProtocolConfig:
    variant: Variant = Variant.HONEST_CENTER
    encoding: str = "dephasing"
    n: int = 256
    m: int | None = None
    error_threshold: float | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    attack: AttackModel = field(default_factory=AttackModel)
    seed: int = 0
    recipe: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.m is None:
            object.__setattr__(self, "m", self.n // 4)
        if self.error_threshold is None:
            object.__setattr__(self, "error_threshold", default_threshold(self.noise))
        self.validate()

    def validate(self) -> None:
        if self.encoding not in ENCODING_NAMES:
            raise ConfigInvalidError(f"unknown encoding {self.encoding!r}")
        if not (isinstance(self.n, int) and self.n >= 2):
            raise ConfigInvalidError(f"n must be an integer >= 2, got {self.n!r}")
        if not (isinstance(self.m, int) and 0 < self.m < self.n):
            raise ConfigInvalidError(f"need 0 < m < n, got m={self.m!r}, n={self.n}")
        if not (0.0 <= self.error_threshold < 1.0):
            raise ConfigInvalidError(f"threshold must be in [0, 1), got {self.error_threshold}")
        if self.attack.kind is AttackKind.DENSE_CODING_PROBE and self.variant is not Variant.HONEST_CENTER:
            raise ConfigInvalidError("the dense-coding probe targets the honest-center variant")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigInvalidError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "encoding": self.encoding,
            "n": self.n,
            "m": self.m,
            "threshold": self.error_threshold,
            "noise": self.noise.to_dict(),
            "attack": self.attack.to_dict(),
            "seed": int(self.seed),
            "recipe": self.recipe,
        }


@dataclass
class ProtocolTranscript:
    variant: Variant
    A: np.ndarray
    A_prime: np.ndarray
    B: np.ndarray | None = None
    B_prime: np.ndarray | None = None
    G: np.ndarray | None = None
    check_positions: np.ndarray | None = None
    announced_ops: dict = field(default_factory=dict)
    center_outcomes: np.ndarray | None = None
    bob_recovered: np.ndarray | None = None
    messages: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def bits(x):
            return None if x is None else [int(v) for v in x]

        return {
            "variant": self.variant.value,
            "A": bits(self.A),
            "A_prime": bits(self.A_prime),
            "B": bits(self.B),
            "B_prime": bits(self.B_prime),
            "G": bits(self.G),
            "check_positions": bits(self.check_positions),
            "announced_ops": {k: bits(v) for k, v in self.announced_ops.items()},
            "center_outcomes": bits(self.center_outcomes),
            "bob_recovered": bits(self.bob_recovered),
            "messages": list(self.messages),
        }


@dataclass
class SessionResult:
    aborted: bool
    check_error_rate: float
    qber: float
    true_error_rate: float
    raw_key: np.ndarray | None
    alice_key: np.ndarray
    bob_key: np.ndarray
    key_rate: float
    transcript: ProtocolTranscript
    adversary: Adversary | None = None
    check_errors: int = 0
    checks: int = 0

    @property
    def keys_match(self) -> bool:
        return bool(np.array_equal(self.alice_key, self.bob_key))

    def summary(self) -> dict:
        return {
            "aborted": self.aborted,
            "check_error_rate": self.check_error_rate,
            "qber": self.qber,
            "true_error_rate": self.true_error_rate,
            "check_errors": self.check_errors,
            "checks": self.checks,
            "key_rate": self.key_rate,
            "raw_key_length": 0 if self.raw_key is None else int(len(self.raw_key)),
            "keys_match": self.keys_match,
        }


class _Board:
    """Public classical channel: authenticated, lossless, append-only."""

    def __init__(self, transcript: ProtocolTranscript, adversary: Adversary):
        self.values: dict = {}
        self.transcript = transcript
        self.adversary = adversary

    def publish(self, step: str, sender: str, label: str, value=None) -> None:
        if label in self.values:
            raise ProtocolOrderError(f"{label} announced twice")
        self.values[label] = value
        self.transcript.messages.append({"step": step, "kind": "classical", "from": sender, "label": label})
        self.adversary.observe(label, value)

    def require(self, *labels: str) -> None:
        missing = [lab for lab in labels if lab not in self.values]
        if missing:
            raise ProtocolOrderError(f"step needs prior announcement(s): {missing}")

    def __getitem__(self, label):
        return self.values[label]


class _Session:
    def __init__(self, cfg: ProtocolConfig, opset: OperatorSet | None = None):
        cfg.validate()
        self.cfg = cfg
        self.opset = opset or reference_instance(cfg.encoding, cfg.recipe)
        streams = np.random.SeedSequence(int(cfg.seed)).spawn(5)
        self.rng_alice, self.rng_bob, self.rng_center, self.rng_channel, self.rng_eve = (
            np.random.default_rng(s) for s in streams
        )
        self.adversary = make_adversary(cfg.attack)
        self.adversary.reset(SessionContext(self.opset, cfg.n, cfg.variant.value, self.rng_eve))
        self.table = user_op_table(self.opset)

    def quantum(self, step: str, leg: str, states: np.ndarray) -> np.ndarray:
        sender, receiver = leg.split("->")
        self.transcript.messages.append({"step": step, "kind": "quantum", "from": sender, "to": receiver, "label": leg})
        states = transmit_leg(states, self.cfg.noise, self.rng_channel)
        return self.adversary.tap(leg, states)

    def bits(self, rng) -> np.ndarray:
        return rng.integers(0, 2, size=self.cfg.n)

    def user_encode(self, states, x, y):
        return apply_each(self.table[2 * x + y], states)

    def measure_z(self, states) -> np.ndarray:
        return measure_logical_batch(states, self.opset.encoding, "Z", self.rng_center)

    def choose_checks(self, rng) -> np.ndarray:
        return np.sort(rng.permutation(self.cfg.n)[: self.cfg.m])


def eavesdrop_check(transcript: ProtocolTranscript, threshold: float) -> tuple[float, bool]:
    """Error rate on the check positions and whether the session aborts.

    Honest center: the center's outcome must equal the XOR of both users'
    announced encoding bits.  Dishonest center: Bob's reordered outcome must
    equal Alice's announced encoding bit.  Inconclusive outcomes count as
    errors.
    """
    pos = transcript.check_positions
    if transcript.variant is Variant.HONEST_CENTER:
        decoded = transcript.center_outcomes[pos]
        expected = transcript.announced_ops["A"] ^ transcript.announced_ops["B"]
    else:
        decoded = transcript.bob_recovered[pos]
        expected = transcript.announced_ops["A"]
    errors = int(np.sum(decoded != expected))
    rate = errors / len(pos) if len(pos) else 0.0
    return rate, rate > threshold


def _finish(s: _Session, transcript, rate, aborted, alice_full, bob_full, raw_full, truth_decoded, truth_expected):
    cfg = s.cfg
    mask = np.ones(cfg.n, dtype=bool)
    mask[transcript.check_positions] = False
    errors = int(round(rate * cfg.m))
    return SessionResult(
        aborted=bool(aborted),
        check_error_rate=float(rate),
        qber=float(rate),
        true_error_rate=float(np.mean(truth_decoded != truth_expected)),
        raw_key=None if aborted else raw_full[mask],
        alice_key=alice_full[mask],
        bob_key=bob_full[mask],
        key_rate=(cfg.n - cfg.m) / cfg.n,
        transcript=transcript,
        adversary=s.adversary,
        check_errors=errors,
        checks=cfg.m,
    )


def run_honest_center(cfg: ProtocolConfig, opset: OperatorSet | None = None) -> SessionResult:
    if Variant(cfg.variant) is not Variant.HONEST_CENTER:
        raise ConfigInvalidError("run_honest_center needs variant honest_center")
    s = _Session(cfg, opset)
    n = cfg.n
    A, A1 = s.bits(s.rng_alice), s.bits(s.rng_alice)
    B, B1 = s.bits(s.rng_bob), s.bits(s.rng_bob)
    t = s.transcript = ProtocolTranscript(Variant.HONEST_CENTER, A, A1, B, B1)
    board = _Board(t, s.adversary)

    # (a) center prepares |0_L>^n
    states = s.quantum("a", LEG_CENTER_ALICE, zero_states(s.opset, n))
    # (b) Alice: U^A then C^A'
    states = s.quantum("b", LEG_ALICE_BOB, s.user_encode(states, A, A1))
    # (c) Bob: U^B then C^B'
    states = s.quantum("c", LEG_BOB_CENTER, s.user_encode(states, B, B1))
    # (d) control strings made public, center undoes the scrambling and measures
    board.publish("d", "alice", "A_prime", A1)
    board.publish("d", "bob", "B_prime", B1)
    outcomes = s.adversary.center_outcomes(states, board.values)
    if outcomes is None:
        board.require("A_prime", "B_prime")
        counts = board["A_prime"] + board["B_prime"]
        table = np.stack([correction_matrix(center_correction(k), s.opset) for k in range(3)])
        outcomes = s.measure_z(apply_each(table[counts], states))
    t.center_outcomes = np.asarray(outcomes)
    # (e) collective check on m random positions
    t.check_positions = s.choose_checks(s.rng_center)
    board.publish("e", "center", "check_positions", t.check_positions)
    t.announced_ops["A"] = A[t.check_positions]
    t.announced_ops["B"] = B[t.check_positions]
    board.publish("e", "alice", "A_check", t.announced_ops["A"])
    board.publish("e", "bob", "B_check", t.announced_ops["B"])
    rate, aborted = eavesdrop_check(t, cfg.error_threshold)
    board.publish("e", "center", "abort", aborted)
    c = np.where(t.center_outcomes < 0, 0, t.center_outcomes)
    if not aborted:
        board.publish("e", "center", "C_rest", np.delete(c, t.check_positions))
    return _finish(s, t, rate, aborted, A, c ^ B, c, t.center_outcomes, A ^ B)


def run_dishonest_center(cfg: ProtocolConfig, opset: OperatorSet | None = None) -> SessionResult:
    if Variant(cfg.variant) is not Variant.DISHONEST_CENTER:
        raise ConfigInvalidError("run_dishonest_center needs variant dishonest_center")
    s = _Session(cfg, opset)
    n = cfg.n
    A, A1 = s.bits(s.rng_alice), s.bits(s.rng_alice)
    t = s.transcript = ProtocolTranscript(Variant.DISHONEST_CENTER, A, A1)
    board = _Board(t, s.adversary)

    # S1
    states = s.quantum("S1", LEG_CENTER_ALICE, zero_states(s.opset, n))
    # S2
    states = s.quantum("S2", LEG_ALICE_BOB, s.user_encode(states, A, A1))
    # S3: Bob stores the sequence and acknowledges
    board.publish("S3", "bob", "bob_ok")
    # S4
    board.require("bob_ok")
    board.publish("S4", "alice", "A_prime", A1)
    # S5: undo Alice's scrambling, permute with the secret G: slot G[i] holds state i
    board.require("A_prime")
    ops = np.stack([s.opset.C_inv, s.opset.I])[np.where(board["A_prime"] == 1, 0, 1)]
    states = apply_each(ops, states)
    G = s.rng_bob.permutation(n)
    t.G = G
    shuffled = np.empty_like(states)
    shuffled[G] = states
    shuffled = s.quantum("S5", LEG_BOB_CENTER, shuffled)
    # S6
    outcomes = s.adversary.center_outcomes(shuffled, board.values)
    if outcomes is None:
        outcomes = s.measure_z(shuffled)
    t.center_outcomes = np.asarray(outcomes)
    board.publish("S6", "center", "C_prime", t.center_outcomes)
    # S7: Bob reorders, samples checks, compares against Alice's announced bits
    t.bob_recovered = t.center_outcomes[G]
    t.check_positions = s.choose_checks(s.rng_bob)
    board.publish("S7", "bob", "check_positions", t.check_positions)
    t.announced_ops["A"] = A[t.check_positions]
    board.publish("S7", "alice", "A_check", t.announced_ops["A"])
    rate, aborted = eavesdrop_check(t, cfg.error_threshold)
    board.publish("S7", "bob", "abort", aborted)
    bob = np.where(t.bob_recovered < 0, 0, t.bob_recovered)
    return _finish(s, t, rate, aborted, A, bob, bob, t.bob_recovered, A)


def run_session(cfg: ProtocolConfig, opset: OperatorSet | None = None) -> SessionResult:
    if Variant(cfg.variant) is Variant.HONEST_CENTER:
        return run_honest_center(cfg, opset)
    return run_dishonest_center(cfg, opset)
