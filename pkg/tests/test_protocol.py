import itertools
import json

import numpy as np
import pytest

from cdqkd.adversaries import AttackKind, AttackModel
from cdqkd.attacks import run_batch
from cdqkd.bases import NoiseKind
from cdqkd.channels import NoiseModel, Sampling
from cdqkd.errors import BadCountError, ConfigInvalidError, ProtocolOrderError
from cdqkd.linalg import max_abs_diff
from cdqkd.operators import reference_instance
from cdqkd.protocol import (
    Correction,
    ProtocolConfig,
    ProtocolTranscript,
    Variant,
    _Board,
    center_correction,
    correction_matrix,
    eavesdrop_check,
    run_dishonest_center,
    run_honest_center,
    run_session,
)
from cdqkd.adversaries import Adversary

from conftest import ENCODINGS

MATCHING = {
    "single_photon": NoiseKind.NONE,
    "dephasing": NoiseKind.DEPHASING,
    "rotation": NoiseKind.ROTATION,
    "general4": NoiseKind.GENERAL_COLLECTIVE,
}


def test_center_correction_table():
    assert center_correction(0) is Correction.I
    assert center_correction(1) is Correction.C_INVERSE
    assert center_correction(2) is Correction.U
    for bad in (3, -1, True, 1.5):
        with pytest.raises(BadCountError):
            center_correction(bad)


@pytest.mark.parametrize("name", ENCODINGS)
def test_correction_undoes_controls(name):
    s = reference_instance(name)
    for v in s.encoding.states().values():
        assert max_abs_diff(correction_matrix(Correction.U, s) @ s.C @ s.C @ v, v) < 1e-9
        assert max_abs_diff(correction_matrix(Correction.C_INVERSE, s) @ s.C @ v, v) < 1e-9


@pytest.mark.parametrize("name", ENCODINGS)
def test_commutation_soundness(name):
    s = reference_instance(name)
    cp = {0: s.I, 1: s.C, 2: s.C @ s.C}
    up = {0: s.I, 1: s.U, 2: s.U @ s.U}
    for a, ap, b, bp in itertools.product((0, 1), repeat=4):
        composed = s.user_operation(b, bp) @ s.user_operation(a, ap)
        assert max_abs_diff(composed, cp[ap + bp] @ up[a + b]) < 1e-9


def test_honest_large_session():
    res = run_honest_center(ProtocolConfig(encoding="dephasing", n=1024, m=256, seed=42))
    t = res.transcript
    assert not res.aborted and res.check_error_rate == 0
    mask = np.ones(1024, bool)
    mask[t.check_positions] = False
    assert np.array_equal(res.raw_key, (t.A ^ t.B)[mask])
    assert np.array_equal(t.center_outcomes, t.A ^ t.B)
    assert res.keys_match and len(res.raw_key) == 768


def test_dishonest_session():
    res = run_dishonest_center(ProtocolConfig(variant="dishonest_center", encoding="rotation", n=128, seed=3))
    t = res.transcript
    assert np.array_equal(t.bob_recovered, t.A)
    assert sorted(t.G.tolist()) == list(range(128))
    assert len(res.raw_key) == 128 - 32 and res.keys_match


@pytest.mark.parametrize("variant", list(Variant))
@pytest.mark.parametrize("sampling", list(Sampling))
def test_matching_noise_small_batch(variant, sampling):
    for name in ENCODINGS:
        cfg = ProtocolConfig(variant=variant, encoding=name, n=64, seed=8, noise=NoiseModel(MATCHING[name], sampling))
        tally = run_batch(cfg, 10)
        assert tally.check_errors == 0 and tally.aborts == 0 and tally.key_mismatch_sessions == 0


def test_mismatched_noise_breaks_encoding():
    # dephasing-protected states do not survive collective rotation
    cfg = ProtocolConfig(encoding="dephasing", n=256, seed=1, noise=NoiseModel(NoiseKind.ROTATION, Sampling.PER_BLOCK))
    assert run_session(cfg).qber > 0.1


def test_eavesdrop_check_rules():
    t = ProtocolTranscript(Variant.HONEST_CENTER, np.zeros(4, int), np.zeros(4, int), np.zeros(4, int), np.zeros(4, int))
    t.check_positions = np.array([0, 2])
    t.center_outcomes = np.array([1, 0, 0, 1])
    t.announced_ops = {"A": np.array([1, 0]), "B": np.array([0, 0])}
    assert eavesdrop_check(t, 0.0) == (0.0, False)
    t.center_outcomes = np.array([0, 0, 0, 1])
    rate, abort = eavesdrop_check(t, 0.0)
    assert rate == 0.5 and abort


def test_threshold_default_never_aborts_absent_attack():
    cfg = ProtocolConfig(encoding="rotation", n=64, seed=2, noise=NoiseModel(NoiseKind.ROTATION))
    assert cfg.error_threshold == 0.02
    assert run_batch(cfg, 20).aborts == 0
    assert ProtocolConfig(encoding="rotation").error_threshold == 0.0


def test_intercept_resend_aborts():
    cfg = ProtocolConfig(encoding="dephasing", n=256, seed=9, attack=AttackModel(AttackKind.INTERCEPT_RESEND))
    tally = run_batch(cfg, 10)
    assert tally.aborts == 10


def test_malicious_center_abort_limit():
    small = ProtocolConfig(variant="dishonest_center", encoding="dephasing", n=8, m=1, seed=4,
                           attack=AttackModel(AttackKind.MALICIOUS_CENTER))
    large = ProtocolConfig(variant="dishonest_center", encoding="dephasing", n=8, m=7, seed=4,
                           attack=AttackModel(AttackKind.MALICIOUS_CENTER))
    a_small = run_batch(small, 400).aborts / 400
    a_large = run_batch(large, 400).aborts / 400
    assert a_large > 0.95 and a_large > a_small


def test_determinism():
    cfg = ProtocolConfig(variant="dishonest_center", encoding="general4", n=32, seed=77,
                         noise=NoiseModel(NoiseKind.GENERAL_COLLECTIVE),
                         attack=AttackModel(AttackKind.INTERCEPT_RESEND))
    a, b = run_session(cfg), run_session(cfg)
    assert json.dumps(a.transcript.to_dict()) == json.dumps(b.transcript.to_dict())
    assert a.summary() == b.summary()
    c = run_session(ProtocolConfig(variant="dishonest_center", encoding="general4", n=32, seed=78))
    assert not np.array_equal(a.transcript.A, c.transcript.A)


def test_key_rate_and_defaults():
    cfg = ProtocolConfig(encoding="dephasing", n=256)
    assert cfg.m == 64
    assert run_session(cfg).key_rate == 0.75 > 0.5


@pytest.mark.parametrize(
    "kwargs",
    [dict(encoding="bogus"), dict(n=8, m=8), dict(n=8, m=0), dict(n=1), dict(error_threshold=1.5), dict(seed=-1)],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigInvalidError):
        ProtocolConfig(**kwargs)


def test_runner_variant_guard():
    with pytest.raises(ConfigInvalidError):
        run_honest_center(ProtocolConfig(variant="dishonest_center"))
    with pytest.raises(ConfigInvalidError):
        run_dishonest_center(ProtocolConfig())


def test_board_ordering():
    t = ProtocolTranscript(Variant.DISHONEST_CENTER, np.zeros(2, int), np.zeros(2, int))
    board = _Board(t, Adversary())
    with pytest.raises(ProtocolOrderError):
        board.require("bob_ok")
    board.publish("S3", "bob", "bob_ok")
    board.require("bob_ok")
    with pytest.raises(ProtocolOrderError):
        board.publish("S3", "bob", "bob_ok")
    assert t.messages[0]["label"] == "bob_ok"


def test_transcript_message_order():
    res = run_dishonest_center(ProtocolConfig(variant="dishonest_center", n=8, m=2, seed=0))
    labels = [m["label"] for m in res.transcript.messages]
    assert labels.index("bob_ok") < labels.index("A_prime") < labels.index("bob->center") < labels.index("C_prime")
