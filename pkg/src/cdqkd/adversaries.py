"""Adversary strategies that plug into a protocol session.

A session calls into its adversary at three points:

* ``tap(leg, states)`` after channel noise on every quantum hop; the
  returned array is what the receiver gets,
* ``observe(label, value)`` for every public classical announcement,
* ``center_outcomes(states, board)`` where the center would measure; a
  non-``None`` return replaces the center's announced outcome string.

States are ``(n, d, k)`` arrays: ``n`` positions, system dimension ``d`` and
an ancilla of dimension ``k`` that never enters the channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channels import INCONCLUSIVE, logical_probabilities
from .errors import ConfigInvalidError
from .linalg import dagger
from .operators import OperatorSet

OP_NAMES = ("I", "U", "C", "UC")
# (a, a') for each of I, U, C, UC
OP_BITS = ((0, 0), (1, 0), (0, 1), (1, 1))

LEG_CENTER_ALICE = "center->alice"
LEG_ALICE_BOB = "alice->bob"
LEG_BOB_CENTER = "bob->center"


class AttackKind(str, Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"
    DENSE_CODING_PROBE = "dense_coding_probe"
    MALICIOUS_CENTER = "malicious_center"


class ForwardPolicy(str, Enum):
    UNENCODED = "unencoded"
    REENCODE = "reencode"


@dataclass(frozen=True)
class AttackModel:
    kind: AttackKind = AttackKind.NONE
    forward: ForwardPolicy = ForwardPolicy.UNENCODED

    @classmethod
    def from_dict(cls, d: dict | None) -> "AttackModel":
        d = dict(d or {})
        kind = d.pop("kind", "none")
        forward = d.pop("forward", "unencoded")
        if d:
            raise ConfigInvalidError(f"unknown attack keys: {sorted(d)}")
        try:
            return cls(AttackKind(kind), ForwardPolicy(forward))
        except ValueError as exc:
            raise ConfigInvalidError(str(exc)) from None

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if self.kind is AttackKind.DENSE_CODING_PROBE:
            out["forward"] = self.forward.value
        return out


def user_op_table(opset: OperatorSet) -> np.ndarray:
    """Stack indexed by ``2*a + a'`` holding ``C^{a'} U^{a}``."""
    return np.stack([opset.user_operation(a, ap) for a in (0, 1) for ap in (0, 1)])


def apply_each(ops: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Apply ``ops[i]`` (``(n, d, d)``) or one shared ``(d, d)`` op to ``states[i]``."""
    if ops.ndim == 2:
        return np.einsum("ij,njk->nik", ops, states)
    return np.einsum("nij,njk->nik", ops, states)


def zero_states(opset: OperatorSet, n: int) -> np.ndarray:
    z0 = opset.encoding.z_basis[0]
    return np.repeat(z0[None, :, None], n, axis=0).astype(complex)


def draw_outcomes(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sample one outcome index per row of ``probs``."""
    u = rng.random(len(probs))
    cum = np.cumsum(probs, axis=1)
    idx = (u[:, None] >= cum[:, :-1]).sum(axis=1)
    return idx


# ---------------------------------------------------------------------------
# Joint measurements on (system, ancilla) probe states


def logical_frame_ops(opset: OperatorSet):
    """Logical Pauli-type operators embedded in the physical space."""
    z0, z1 = opset.encoding.z_basis
    o = np.outer
    x = o(z0, z1.conj()) + o(z1, z0.conj())
    z = o(z0, z0.conj()) - o(z1, z1.conj())
    p = o(z0, z0.conj()) + o(z1, z1.conj())
    y = 1j * (o(z1, z0.conj()) - o(z0, z1.conj()))
    return p, x, y, z


def entangled_probe(opset: OperatorSet) -> np.ndarray:
    """``(|0_L>|0> + |1_L>|1>)/sqrt2`` as a ``(d, 2)`` matrix."""
    z0, z1 = opset.encoding.z_basis
    return np.column_stack([z0, z1]) / math.sqrt(2.0)


def choi_states(opset: OperatorSet, names=OP_NAMES) -> list[np.ndarray]:
    probe = entangled_probe(opset)
    ops = opset.ops()
    return [ops[name] @ probe for name in names]


@dataclass
class JointMeasurement:
    """Orthonormal measurement vectors on C^d (x) C^k plus a leakage outcome.

    ``vectors`` has shape ``(K, d, k)``; outcome ``K`` is the residual
    projector ``I - sum |b><b|``.  ``decision[o]`` is the guessed hypothesis
    index for outcome ``o`` (``len == K + 1``).
    """

    vectors: np.ndarray
    decision: np.ndarray
    label: str = ""

    def probabilities(self, states: np.ndarray) -> np.ndarray:
        amps = np.einsum("bdk,ndk->nb", self.vectors.conj(), states)
        p = np.abs(amps) ** 2
        norm = np.sum(np.abs(states) ** 2, axis=(1, 2))
        leak = np.clip(norm - p.sum(axis=1), 0.0, None)
        probs = np.column_stack([p, leak])
        return probs / probs.sum(axis=1, keepdims=True)


def max_likelihood_decision(meas_vectors: np.ndarray, hyp_states: list[np.ndarray]) -> np.ndarray:
    jm = JointMeasurement(meas_vectors, np.zeros(len(meas_vectors) + 1, dtype=int))
    lik = jm.probabilities(np.stack(hyp_states))  # (H, K+1)
    return np.argmax(lik, axis=0)


def success_probability(jm: JointMeasurement, hyp_states: list[np.ndarray], priors=None) -> float:
    h = len(hyp_states)
    priors = np.full(h, 1.0 / h) if priors is None else np.asarray(priors)
    lik = jm.probabilities(np.stack(hyp_states))
    return float(sum(priors[i] * lik[i, jm.decision == i].sum() for i in range(h)))


BELL_SCAN_STEPS = 64


def bell_scan_measurement(opset: OperatorSet, names=OP_NAMES) -> JointMeasurement:
    """Best logical Bell-type basis for guessing among ``names``.

    Candidates are ``{(R(t) s (x) 1)|Phi>}`` for logical Paulis ``s`` and
    ``R(t) = cos t P_L - i sin t X_L`` on a grid of ``t`` in [0, pi).  Every
    candidate is scored by its exact success probability under the
    maximum-likelihood assignment; the first best candidate wins.
    """
    p, x, y, z = logical_frame_ops(opset)
    probe = entangled_probe(opset)
    hyps = choi_states(opset, names)
    best, best_score = None, -1.0
    for j in range(BELL_SCAN_STEPS):
        t = math.pi * j / BELL_SCAN_STEPS
        r = math.cos(t) * p - 1j * math.sin(t) * x
        vecs = np.stack([r @ s @ probe for s in (p, x, y, z)])
        jm = JointMeasurement(vecs, max_likelihood_decision(vecs, hyps), f"bell_scan(t={j}pi/{BELL_SCAN_STEPS})")
        score = success_probability(jm, hyps)
        if score > best_score + 1e-12:
            best, best_score = jm, score
    return best


_SCAN_CACHE: dict = {}


def _cached_bell_scan(opset: OperatorSet) -> JointMeasurement:
    # batches reuse one operator set across thousands of sessions
    hit = _SCAN_CACHE.get(id(opset))
    if hit is None or hit[0] is not opset:
        if len(_SCAN_CACHE) > 32:
            _SCAN_CACHE.clear()
        hit = (opset, bell_scan_measurement(opset))
        _SCAN_CACHE[id(opset)] = hit
    return hit[1]


def helstrom_measurement(psi1: np.ndarray, psi2: np.ndarray, p1: float = 0.5, p2: float = 0.5) -> JointMeasurement:
    """Projective minimum-error measurement separating two pure states."""
    shape = psi1.shape
    v1, v2 = psi1.ravel(), psi2.ravel()
    gamma = p1 * np.outer(v1, v1.conj()) - p2 * np.outer(v2, v2.conj())
    w, vecs = np.linalg.eigh(gamma)
    pos = vecs[:, w > 1e-14]
    neg = vecs[:, w <= 1e-14]
    # only the 2-D span of the hypotheses matters; keep its basis vectors
    span = np.column_stack([v1, v2])
    keep_neg = [c for c in neg.T if np.linalg.norm(dagger(span) @ c) > 1e-9]
    cols = list(pos.T) + keep_neg
    vectors = np.stack([c.reshape(shape) for c in cols])
    decision = np.array([0] * pos.shape[1] + [1] * len(keep_neg) + [1])
    return JointMeasurement(vectors, decision, "helstrom")


# ---------------------------------------------------------------------------
# Session adversaries


@dataclass
class SessionContext:
    opset: OperatorSet
    n: int
    variant: str
    rng: np.random.Generator


class Adversary:
    kind = AttackKind.NONE
    outside = True

    def __init__(self, model: AttackModel | None = None):
        self.model = model or AttackModel()
        self.ctx: SessionContext | None = None
        self.public: dict = {}

    def reset(self, ctx: SessionContext) -> None:
        self.ctx = ctx
        self.public = {}

    def tap(self, leg: str, states: np.ndarray) -> np.ndarray:
        return states

    def observe(self, label: str, value) -> None:
        self.public[label] = value

    def center_outcomes(self, states: np.ndarray, board: dict):
        return None

    def key_guess(self) -> np.ndarray | None:
        """Per-position guess of Alice's encoding bit."""
        return None

    def view(self) -> np.ndarray | None:
        """Integer code of everything the adversary holds about each position."""
        return None


class InterceptResend(Adversary):
    """Measure each state on the Alice->Bob hop in a random logical basis and resend."""

    kind = AttackKind.INTERCEPT_RESEND

    def reset(self, ctx):
        super().reset(ctx)
        self.bases = None
        self.outcomes = None

    def tap(self, leg, states):
        if leg != LEG_ALICE_BOB:
            return states
        enc = self.ctx.opset.encoding
        rng = self.ctx.rng
        n = len(states)
        self.bases = rng.integers(0, 2, size=n)
        probs = np.where(
            self.bases[:, None] == 0,
            logical_probabilities(states, enc, "Z"),
            logical_probabilities(states, enc, "X"),
        )
        out = draw_outcomes(probs, rng)
        self.outcomes = np.where(out == 2, INCONCLUSIVE, out)
        resent = np.empty((n, enc.dim, 1), dtype=complex)
        for i in range(n):
            basis = enc.z_basis if self.bases[i] == 0 else enc.x_basis
            if self.outcomes[i] == INCONCLUSIVE:
                v = states[i, :, 0] - sum(np.vdot(b, states[i, :, 0]) * b for b in basis)
                v = v / np.linalg.norm(v)
            else:
                v = basis[self.outcomes[i]]
            resent[i, :, 0] = v
        return resent

    def key_guess(self):
        return None if self.outcomes is None else np.where(self.outcomes < 0, 0, self.outcomes)

    def view(self):
        if self.outcomes is None:
            return None
        a_prime = np.asarray(self.public.get("A_prime", np.zeros(len(self.outcomes), int)))
        return self.bases * 6 + (self.outcomes + 1) * 2 + a_prime


class DenseCodingProbe(Adversary):
    """Swap the center's states for entangled probes and read out Alice's operation."""

    kind = AttackKind.DENSE_CODING_PROBE

    def reset(self, ctx):
        super().reset(ctx)
        self.stored = None
        self.guess = None
        self.measurement = _cached_bell_scan(ctx.opset)
        self.table = user_op_table(ctx.opset)

    def tap(self, leg, states):
        n = len(states)
        if leg == LEG_CENTER_ALICE:
            self.stored = states.copy()
            return np.repeat(entangled_probe(self.ctx.opset)[None], n, axis=0)
        if leg == LEG_ALICE_BOB:
            probs = self.measurement.probabilities(states)
            outcome = draw_outcomes(probs, self.ctx.rng)
            self.guess = self.measurement.decision[outcome]
            fwd = self.stored
            if self.model.forward is ForwardPolicy.REENCODE:
                idx = np.array([2 * OP_BITS[g][0] + OP_BITS[g][1] for g in self.guess])
                fwd = apply_each(self.table[idx], fwd)
            return fwd
        return states

    def key_guess(self):
        if self.guess is None:
            return None
        return np.array([OP_BITS[g][0] for g in self.guess])

    def view(self):
        if self.guess is None:
            return None
        a_prime = np.asarray(self.public.get("A_prime", np.zeros(len(self.guess), int)))
        return self.guess * 2 + a_prime


class MaliciousCenter(Adversary):
    """The center itself attacks by intercepting the Alice->Bob sequence.

    It keeps Alice's states, hands Bob fresh ``|0_L>`` states, and decodes
    Alice's bits once her control string is public.  In the honest-center
    variant it also undoes Bob's control operations after his announcement
    and reports ``A xor B``.  In the dishonest-center variant it can only
    report Alice's bits in transmission order, since Bob's permutation is
    secret.
    """

    kind = AttackKind.MALICIOUS_CENTER
    outside = False

    def reset(self, ctx):
        super().reset(ctx)
        self.stored = None
        self.recovered_a = None

    def _undo_controls(self, states, controls):
        c_inv = self.ctx.opset.C_inv
        ops = np.stack([c_inv if c else self.ctx.opset.I for c in controls])
        return apply_each(ops, states)

    def _measure_z(self, states):
        probs = logical_probabilities(states, self.ctx.opset.encoding, "Z")
        out = draw_outcomes(probs, self.ctx.rng)
        return np.where(out == 2, INCONCLUSIVE, out)

    def tap(self, leg, states):
        if leg == LEG_ALICE_BOB:
            self.stored = states.copy()
            return zero_states(self.ctx.opset, len(states))
        return states

    def observe(self, label, value):
        super().observe(label, value)
        if label == "A_prime" and self.stored is not None:
            self.recovered_a = self._measure_z(self._undo_controls(self.stored, value))

    def center_outcomes(self, states, board):
        if self.recovered_a is None:
            return None
        if self.ctx.variant == "honest_center":
            b = self._measure_z(self._undo_controls(states, board["B_prime"]))
            return np.where((b < 0) | (self.recovered_a < 0), INCONCLUSIVE, self.recovered_a ^ np.maximum(b, 0))
        return self.recovered_a.copy()

    def key_guess(self):
        return None if self.recovered_a is None else np.maximum(self.recovered_a, 0)

    def view(self):
        return None if self.recovered_a is None else self.recovered_a + 1


ADVERSARIES = {
    AttackKind.NONE: Adversary,
    AttackKind.INTERCEPT_RESEND: InterceptResend,
    AttackKind.DENSE_CODING_PROBE: DenseCodingProbe,
    AttackKind.MALICIOUS_CENTER: MaliciousCenter,
}


def make_adversary(model: AttackModel | None) -> Adversary:
    model = model or AttackModel()
    return ADVERSARIES[model.kind](model)
