"""Attack simulations with exact enumeration oracles.

Every stochastic estimate produced here has an independent exact
counterpart: ``detection_oracle`` walks all discrete choices of one check
position (user bits, adversary choices, measurement outcomes) with Born
probabilities, without sampling and without going through the session code
in ``protocol``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .adversaries import (
    OP_BITS,
    AttackKind,
    AttackModel,
    ForwardPolicy,
    JointMeasurement,
    bell_scan_measurement,
    choi_states,
    entangled_probe,
    helstrom_measurement,
    max_likelihood_decision,
    success_probability,
)
from .discrimination import min_error_probability
from .errors import ConfigInvalidError, TooLargeError
from .operators import OperatorSet, reference_instance
from .protocol import ProtocolConfig, Variant, center_correction, correction_matrix, run_session

MAX_ORACLE_DIM = 16
MAX_PERMUTATION_N = 8
LIMITATIONS = (
    "Only the implemented strategies are evaluated: logical-basis intercept-resend, "
    "maximally entangled logical probe with a scored Bell-type measurement, and the "
    "S1-interception malicious center. Physical-layer and general coherent attacks are not modelled."
)


# ---------------------------------------------------------------------------
# Estimators


def _entropy_mm(counts: Counter) -> float:
    total = sum(counts.values())
    if total == 0:
        return 0.0
    p = np.array([c / total for c in counts.values() if c > 0])
    k = len(p)
    return float(-np.sum(p * np.log2(p)) + (k - 1) / (2.0 * total * math.log(2)))


def mutual_information(joint: Counter) -> float:
    """Plug-in mutual information in bits with Miller-Madow bias correction.

    ``joint`` maps ``(x, y)`` pairs to counts.
    """
    px, py = Counter(), Counter()
    for (x, y), c in joint.items():
        px[x] += c
        py[y] += c
    return max(0.0, _entropy_mm(px) + _entropy_mm(py) - _entropy_mm(joint))


def mutual_information_exact(joint_p: dict) -> float:
    px, py = Counter(), Counter()
    for (x, y), p in joint_p.items():
        px[x] += p
        py[y] += p
    return float(
        math.fsum(p * math.log2(p / (px[x] * py[y])) for (x, y), p in joint_p.items() if p > 0)
    )


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else float("inf")


def within_sigma(observed: float, expected: float, n: int, k: float = 3.0) -> bool:
    sigma = binomial_sigma(expected, n)
    if sigma == 0:
        return abs(observed - expected) < 1e-12
    return abs(observed - expected) <= k * sigma


# ---------------------------------------------------------------------------
# Exact oracles


def _v(opset: OperatorSet, a: int, ap: int) -> np.ndarray:
    op = opset.U if a else opset.I
    return opset.C @ op if ap else op


def _p_bit(enc, state: np.ndarray, bit: int) -> float:
    """Probability that a Z-basis logical measurement of ``state`` yields ``bit``."""
    s = state.reshape(enc.dim, -1)
    return float(np.sum(np.abs(enc.z_basis[bit].conj() @ s) ** 2))


def _eve_ir_branches(enc, psi):
    """Intercept-resend branches: (probability, basis, outcome, resent state)."""
    out = []
    for basis_idx, basis in enumerate((enc.z_basis, enc.x_basis)):
        leak = psi.copy()
        for k, e in enumerate(basis):
            amp = np.vdot(e, psi)
            leak = leak - amp * e
            out.append((0.5 * abs(amp) ** 2, basis_idx, k, e))
        pl = float(np.vdot(leak, leak).real)
        if pl > 1e-15:
            out.append((0.5 * pl, basis_idx, -1, leak / math.sqrt(pl)))
    return out


def _dense_branches(opset, jm: JointMeasurement, joint: np.ndarray):
    amps = np.einsum("bdk,dk->b", jm.vectors.conj(), joint)
    probs = list(np.abs(amps) ** 2)
    probs.append(max(0.0, 1.0 - sum(probs)))
    return [(p, o, int(jm.decision[o])) for o, p in enumerate(probs) if p > 1e-15]


def _combos(variant: Variant):
    if variant is Variant.HONEST_CENTER:
        return list(itertools.product((0, 1), repeat=4))
    return [(a, ap, 0, 0) for a, ap in itertools.product((0, 1), repeat=2)]


def _honest_error(opset, state, a, ap, b, bp) -> float:
    """Bob encodes ``state``; center corrects and measures; probability of a wrong bit."""
    enc = opset.encoding
    after_bob = _v(opset, b, bp) @ state
    corrected = correction_matrix(center_correction(ap + bp), opset) @ after_bob
    return 1.0 - _p_bit(enc, corrected, a ^ b)


def _dishonest_error(opset, state, a, ap) -> float:
    enc = opset.encoding
    undone = (opset.C_inv if ap else opset.I) @ state
    return 1.0 - _p_bit(enc, undone, a)


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def detection_oracle(
    attack: AttackModel | AttackKind | str,
    opset: OperatorSet,
    variant: Variant | str,
    n: int | None = None,
    order_seed: int | None = None,
) -> float:
    """Exact probability that one check position reports an error.

    ``order_seed`` shuffles the enumeration order; the result is summed with
    ``math.fsum`` so it does not depend on that order.  ``n`` is required
    for the malicious center against the dishonest-center variant, where
    the detection comes from Bob's secret permutation.
    """
    if isinstance(attack, AttackModel):
        model = attack
    else:
        model = AttackModel(AttackKind(attack))
    variant = Variant(variant)
    if opset.dim > MAX_ORACLE_DIM:
        raise TooLargeError(f"state dimension {opset.dim} exceeds {MAX_ORACLE_DIM}")
    enc = opset.encoding
    zero = enc.z_basis[0]
    combos = _combos(variant)
    if order_seed is not None:
        np.random.default_rng(order_seed).shuffle(combos)
    w = 1.0 / len(combos)
    terms: list[float] = []

    if model.kind is AttackKind.NONE:
        for a, ap, b, bp in combos:
            psi = _v(opset, a, ap) @ zero
            err = _honest_error(opset, psi, a, ap, b, bp) if variant is Variant.HONEST_CENTER else _dishonest_error(opset, psi, a, ap)
            terms.append(w * err)
        return _clamp(math.fsum(terms))

    if model.kind is AttackKind.INTERCEPT_RESEND:
        for a, ap, b, bp in combos:
            psi = _v(opset, a, ap) @ zero
            branches = _eve_ir_branches(enc, psi)
            if order_seed is not None:
                branches = branches[::-1]
            for p, _basis, _k, resent in branches:
                if variant is Variant.HONEST_CENTER:
                    err = _honest_error(opset, resent, a, ap, b, bp)
                else:
                    err = _dishonest_error(opset, resent, a, ap)
                terms.append(w * p * err)
        return _clamp(math.fsum(terms))

    if model.kind is AttackKind.DENSE_CODING_PROBE:
        if variant is not Variant.HONEST_CENTER:
            raise ConfigInvalidError("dense-coding probe is defined for the honest-center variant")
        jm = bell_scan_measurement(opset)
        probe = entangled_probe(opset)
        for a, ap, b, bp in combos:
            joint = _v(opset, a, ap) @ probe
            for p, _o, g in _dense_branches(opset, jm, joint):
                fwd = zero
                if model.forward is ForwardPolicy.REENCODE:
                    fwd = _v(opset, *OP_BITS[g]) @ zero
                terms.append(w * p * _honest_error(opset, fwd, a, ap, b, bp))
        return _clamp(math.fsum(terms))

    if model.kind is AttackKind.MALICIOUS_CENTER:
        # the center recovers Alice's bit from her intercepted state
        q_correct = {
            (a, ap): _p_bit(enc, (opset.C_inv if ap else opset.I) @ (_v(opset, a, ap) @ zero), a)
            for a, ap in itertools.product((0, 1), repeat=2)
        }
        if variant is Variant.HONEST_CENTER:
            for a, ap, b, bp in combos:
                bob_state = _v(opset, b, bp) @ zero
                qb = _p_bit(enc, (opset.C_inv if bp else opset.I) @ bob_state, b)
                qa = q_correct[(a, ap)]
                # announced bit is wrong iff exactly one of the two recoveries failed
                terms.append(w * (qa * (1 - qb) + (1 - qa) * qb))
            return _clamp(math.fsum(terms))
        if n is None:
            raise ConfigInvalidError("n is required for the permutation oracle")
        if n > MAX_PERMUTATION_N:
            raise TooLargeError(f"permutation enumeration limited to n <= {MAX_PERMUTATION_N}")
        q = math.fsum(0.25 * v for v in q_correct.values())
        perms = list(itertools.permutations(range(n)))
        if order_seed is not None:
            np.random.default_rng(order_seed).shuffle(perms)
        wp = 1.0 / (len(perms) * n)
        for g in perms:
            for i in range(n):
                if g[i] == i:
                    terms.append(wp * (1.0 - q))
                    continue
                # Bob reads the center's bit for position g[i] at position i
                for ai, aj in itertools.product((0, 1), repeat=2):
                    p_read_diff = q if aj != ai else 1.0 - q
                    terms.append(wp * 0.25 * p_read_diff)
        return _clamp(math.fsum(terms))

    raise ConfigInvalidError(f"no oracle for attack {model.kind}")  # pragma: no cover


def information_oracle(attack: AttackModel | AttackKind | str, opset: OperatorSet) -> float:
    """Exact mutual information (bits) between Alice's encoding bit and the adversary's view."""
    model = attack if isinstance(attack, AttackModel) else AttackModel(AttackKind(attack))
    enc = opset.encoding
    zero = enc.z_basis[0]
    joint: dict = Counter()
    if model.kind is AttackKind.NONE:
        return 0.0
    for a, ap in itertools.product((0, 1), repeat=2):
        if model.kind is AttackKind.INTERCEPT_RESEND:
            psi = _v(opset, a, ap) @ zero
            for p, basis, k, _ in _eve_ir_branches(enc, psi):
                joint[(a, (basis, k, ap))] += 0.25 * p
        elif model.kind is AttackKind.DENSE_CODING_PROBE:
            jm = bell_scan_measurement(opset)
            joint_state = _v(opset, a, ap) @ entangled_probe(opset)
            for p, _o, g in _dense_branches(opset, jm, joint_state):
                joint[(a, (g, ap))] += 0.25 * p
        elif model.kind is AttackKind.MALICIOUS_CENTER:
            undone = (opset.C_inv if ap else opset.I) @ (_v(opset, a, ap) @ zero)
            for bit in (0, 1):
                joint[(a, bit)] += 0.25 * _p_bit(enc, undone, bit)
    return mutual_information_exact(dict(joint))


# ---------------------------------------------------------------------------
# Monte-Carlo batches


def derive_seed(master: int, trial: int) -> int:
    words = np.random.SeedSequence(entropy=int(master), spawn_key=(int(trial),)).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


@dataclass
class BatchTally:
    """Order-insensitive reduction of many sessions."""

    sessions: int = 0
    aborts: int = 0
    check_errors: int = 0
    checks: int = 0
    qber_sum: float = 0.0
    key_rate_sum: float = 0.0
    key_bits: int = 0
    key_bits_guessed: int = 0
    key_mismatch_sessions: int = 0
    joint: Counter = field(default_factory=Counter)
    per_session: list = field(default_factory=list)

    def merge(self, other: "BatchTally") -> "BatchTally":
        self.sessions += other.sessions
        self.aborts += other.aborts
        self.check_errors += other.check_errors
        self.checks += other.checks
        self.qber_sum += other.qber_sum
        self.key_rate_sum += other.key_rate_sum
        self.key_bits += other.key_bits
        self.key_bits_guessed += other.key_bits_guessed
        self.key_mismatch_sessions += other.key_mismatch_sessions
        self.joint.update(other.joint)
        self.per_session.extend(other.per_session)
        return self


def _run_chunk(cfg: ProtocolConfig, trials: range, keep_sessions: bool) -> BatchTally:
    tally = BatchTally()
    opset = reference_instance(cfg.encoding, cfg.recipe)
    for t in trials:
        res = run_session(replace(cfg, seed=derive_seed(cfg.seed, t)), opset)
        tally.sessions += 1
        tally.aborts += int(res.aborted)
        tally.check_errors += res.check_errors
        tally.checks += res.checks
        tally.qber_sum += res.qber
        tally.key_rate_sum += res.key_rate
        tally.key_mismatch_sessions += int(not res.keys_match)
        adv = res.adversary
        A = res.transcript.A
        view = adv.view() if adv is not None else None
        if view is not None:
            for a, v in zip(A.tolist(), np.asarray(view).tolist()):
                tally.joint[(a, v)] += 1
        guess = adv.key_guess() if adv is not None else None
        mask = np.ones(len(A), dtype=bool)
        mask[res.transcript.check_positions] = False
        tally.key_bits += int(mask.sum())
        if guess is not None:
            tally.key_bits_guessed += int(np.sum(guess[mask] == A[mask]))
        if keep_sessions:
            tally.per_session.append({"trial": t, **res.summary()})
    return tally


def run_batch(cfg: ProtocolConfig, trials: int, workers: int = 1, keep_sessions: bool = False) -> BatchTally:
    """Run ``trials`` sessions with seeds derived from ``cfg.seed`` and the trial index."""
    if trials < 1:
        raise ConfigInvalidError("trials must be >= 1")
    if workers <= 1:
        return _run_chunk(cfg, range(trials), keep_sessions)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    total = BatchTally()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, [cfg] * len(chunks), chunks, [keep_sessions] * len(chunks)):
            total.merge(part)
    total.per_session.sort(key=lambda s: s["trial"])
    return total


# ---------------------------------------------------------------------------
# Single-use discrimination strategies


def discrimination_strategies(opset: OperatorSet, pair=("U", "C")) -> dict:
    """Probe-and-measure strategies for separating the two operations in ``pair``.

    Each value is ``(probe, measurement)`` where ``probe`` is a ``(d, k)``
    system-ancilla state and the measurement's decision indexes ``pair``.
    """
    ops = opset.ops()
    enc = opset.encoding
    out = {}
    zero = enc.z_basis[0][:, None]
    hyps_prod = [ops[name] @ zero for name in pair]
    for label, basis in (("product_probe_z", enc.z_basis), ("product_probe_x", enc.x_basis)):
        vecs = np.stack([b[:, None] for b in basis])
        out[label] = (zero, JointMeasurement(vecs, max_likelihood_decision(vecs, hyps_prod), label))
    probe = entangled_probe(opset)
    hyps = choi_states(opset, pair)
    scan = bell_scan_measurement(opset)
    out["entangled_bell_scan"] = (
        probe,
        JointMeasurement(scan.vectors, max_likelihood_decision(scan.vectors, hyps), "entangled_bell_scan"),
    )
    out["entangled_helstrom"] = (probe, helstrom_measurement(hyps[0], hyps[1]))
    return out


@dataclass
class DiscriminationTrial:
    strategy: str
    pair: tuple[str, str]
    trials: int
    empirical_error: float
    sigma: float
    exact_error: float
    bound: float

    @property
    def respects_floor(self) -> bool:
        return self.empirical_error >= self.bound - 3.0 * self.sigma


def simulate_discrimination(
    opset: OperatorSet, pair, strategy: str, trials: int, rng: np.random.Generator
) -> DiscriminationTrial:
    probe, jm = discrimination_strategies(opset, pair)[strategy]
    ops = opset.ops()
    hyps = [ops[name] @ probe for name in pair]
    truth = rng.integers(0, 2, size=trials)
    states = np.stack(hyps)[truth]
    probs = jm.probabilities(states)
    u = rng.random(trials)
    outcome = (u[:, None] >= np.cumsum(probs, axis=1)[:, :-1]).sum(axis=1)
    errors = int(np.sum(jm.decision[outcome] != truth))
    emp = errors / trials
    exact = 1.0 - success_probability(jm, hyps, [0.5, 0.5])
    bound = min_error_probability(ops[pair[0]], ops[pair[1]], 0.5, 0.5)
    sigma = math.sqrt(max(emp * (1 - emp), 1e-300) / trials)
    return DiscriminationTrial(strategy, tuple(pair), trials, emp, sigma, exact, bound)


# ---------------------------------------------------------------------------
# Reports


@dataclass
class AttackReport:
    attack: str
    variant: str
    encoding: str
    trials: int
    checks: int
    per_check_detection: float
    detection_ci: tuple[float, float]
    sigma: float
    oracle_detection: float | None
    within_3sigma: bool | None
    induced_qber: float
    abort_fraction: float
    eve_information: float | None
    eve_information_oracle: float | None
    key_recovery_fraction: float | None
    extras: dict = field(default_factory=dict)
    limitations: str = LIMITATIONS

    def to_dict(self) -> dict:
        d = asdict(self)
        d["detection_ci"] = list(self.detection_ci)
        return d


def build_report(cfg: ProtocolConfig, tally: BatchTally, extras=None) -> AttackReport:
    """Summarise a finished batch and attach the exact oracles where they apply."""
    opset = reference_instance(cfg.encoding, cfg.recipe)
    det = tally.check_errors / tally.checks
    try:
        oracle = detection_oracle(cfg.attack, opset, cfg.variant, n=cfg.n)
    except (TooLargeError, ConfigInvalidError):
        oracle = None
    if tally.joint:
        info = mutual_information(tally.joint)
    else:
        info = 0.0 if cfg.attack.kind is AttackKind.NONE else None
    try:
        info_exact = information_oracle(cfg.attack, opset)
    except ConfigInvalidError:
        info_exact = None
    guessed = tally.key_bits_guessed / tally.key_bits if tally.joint and tally.key_bits else None
    sigma = binomial_sigma(oracle if oracle is not None else det, tally.checks)
    return AttackReport(
        attack=cfg.attack.kind.value,
        variant=cfg.variant.value,
        encoding=cfg.encoding,
        trials=tally.sessions,
        checks=tally.checks,
        per_check_detection=det,
        detection_ci=wilson_interval(tally.check_errors, tally.checks),
        sigma=sigma,
        oracle_detection=oracle,
        within_3sigma=None if oracle is None else within_sigma(det, oracle, tally.checks),
        induced_qber=tally.qber_sum / tally.sessions,
        abort_fraction=tally.aborts / tally.sessions,
        eve_information=info,
        eve_information_oracle=info_exact,
        key_recovery_fraction=guessed,
        extras=dict(extras or {}),
    )


def _report(cfg: ProtocolConfig, trials: int, workers: int = 1, extras=None) -> AttackReport:
    return build_report(cfg, run_batch(cfg, trials, workers), extras)


def dense_coding_extras(cfg: ProtocolConfig, trials: int) -> dict:
    """Guess accuracy and the U-vs-C pairwise error of the probe measurement."""
    opset = reference_instance(cfg.encoding, cfg.recipe)
    jm = bell_scan_measurement(opset)
    rng = np.random.default_rng(derive_seed(cfg.seed, 2**31))
    pair = simulate_discrimination(opset, ("U", "C"), "entangled_bell_scan", trials, rng)
    return {
        "guess_accuracy_exact": success_probability(jm, choi_states(opset)),
        "measurement": jm.label,
        "pairwise_uc_error": pair.empirical_error,
        "pairwise_uc_sigma": pair.sigma,
        "pairwise_uc_bound": pair.bound,
        "probe": "maximally entangled logical probe (artifact design)",
    }


def _with_attack(cfg: ProtocolConfig, kind: AttackKind, **kw) -> ProtocolConfig:
    return replace(cfg, attack=AttackModel(kind, **kw))


def attack_intercept_resend(cfg: ProtocolConfig, trials: int = 10_000, workers: int = 1) -> AttackReport:
    return _report(_with_attack(cfg, AttackKind.INTERCEPT_RESEND), trials, workers)


def attack_dense_coding_probe(
    cfg: ProtocolConfig, trials: int = 10_000, workers: int = 1, forward: ForwardPolicy | str = ForwardPolicy.UNENCODED
) -> AttackReport:
    if cfg.variant is not Variant.HONEST_CENTER:
        raise ConfigInvalidError("the dense-coding probe targets the honest-center variant")
    cfg = _with_attack(cfg, AttackKind.DENSE_CODING_PROBE, forward=ForwardPolicy(forward))
    return _report(cfg, trials, workers, dense_coding_extras(cfg, trials))


def attack_malicious_center(cfg: ProtocolConfig, trials: int = 10_000, workers: int = 1) -> AttackReport:
    return _report(_with_attack(cfg, AttackKind.MALICIOUS_CENTER), trials, workers)


def run_attack(cfg: ProtocolConfig, trials: int, workers: int = 1) -> AttackReport:
    kind = cfg.attack.kind
    if kind is AttackKind.DENSE_CODING_PROBE:
        return attack_dense_coding_probe(cfg, trials, workers, cfg.attack.forward)
    return _report(cfg, trials, workers)
