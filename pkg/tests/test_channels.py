import numpy as np
import pytest

from cdqkd.bases import NoiseKind, make_encoding
from cdqkd.channels import (
    INCONCLUSIVE,
    NoiseModel,
    Sampling,
    apply_collective_noise,
    logical_probabilities,
    measure_logical,
    measure_logical_batch,
    sample_noise,
    single_qubit_noise,
    transmit_leg,
)
from cdqkd.errors import ConfigInvalidError, DimensionMismatchError
from cdqkd.linalg import ket

from conftest import ENCODINGS

MATCHING = {
    "single_photon": NoiseKind.NONE,
    "dephasing": NoiseKind.DEPHASING,
    "rotation": NoiseKind.ROTATION,
    "general4": NoiseKind.GENERAL_COLLECTIVE,
}


def fidelities(enc, model, trials, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for v in enc.states().values():
        block = np.repeat(v[None, :], trials, axis=0)
        out = transmit_leg(block, model, rng)
        worst = max(worst, float(np.max(1 - np.abs(out @ v.conj()))))
    return worst


@pytest.mark.parametrize("name", ENCODINGS)
def test_noise_immunity_per_block(name):
    enc = make_encoding(name)
    trials = 1000 if name == "general4" else 10_000
    model = NoiseModel(MATCHING[name], Sampling.PER_BLOCK)
    assert fidelities(enc, model, trials, seed=11) < 1e-9


def test_apply_collective_examples():
    for phi in (0.3, 1.7, np.pi):
        out = apply_collective_noise(ket("01"), NoiseModel(NoiseKind.DEPHASING), phi, 2)
        assert np.allclose(out, np.exp(1j * phi) * ket("01"))
    psi_m = (ket("01") - ket("10")) / np.sqrt(2)
    out = apply_collective_noise(psi_m, NoiseModel(NoiseKind.ROTATION), 0.9, 2)
    assert abs(abs(np.vdot(psi_m, out)) - 1) < 1e-12
    g = make_encoding("general4").z_basis[0]
    u = sample_noise(NoiseModel(NoiseKind.GENERAL_COLLECTIVE), np.random.default_rng(3))
    out = apply_collective_noise(g, NoiseModel(NoiseKind.GENERAL_COLLECTIVE), u, 4)
    assert abs(abs(np.vdot(g, out)) - 1) < 1e-12
    with pytest.raises(DimensionMismatchError):
        apply_collective_noise(ket("0"), NoiseModel(NoiseKind.DEPHASING), 0.1, 2)


def test_negative_control_bare_qubit():
    # a physical qubit has no protection: dephasing by pi swaps |+> and |->
    plus = (ket("0") + ket("1")) / np.sqrt(2)
    minus = (ket("0") - ket("1")) / np.sqrt(2)
    out = single_qubit_noise(NoiseKind.DEPHASING, np.pi) @ plus
    rng = np.random.default_rng(0)
    flips = rng.random(10_000) < abs(np.vdot(minus, out)) ** 2
    assert flips.mean() > 0.49
    # and random dephasing scrambles it about half the time
    phis = rng.uniform(0, 2 * np.pi, 10_000)
    p_flip = np.abs((1 - np.exp(1j * phis)) / 2) ** 2
    assert p_flip.mean() > 0.45


def test_sample_noise_statistics_and_replay():
    m = NoiseModel(NoiseKind.DEPHASING)
    assert sample_noise(NoiseModel(), np.random.default_rng(0)) is None
    a = [sample_noise(m, np.random.default_rng(5)) for _ in range(3)]
    assert a[0] == a[1] == a[2]
    rng = np.random.default_rng(9)
    z = np.exp(1j * np.array([sample_noise(m, rng) for _ in range(10_000)]))
    sigma = np.sqrt(0.5 / len(z))
    assert abs(z.mean().real) < 3 * sigma and abs(z.mean().imag) < 3 * sigma


def test_transmit_policies():
    enc = make_encoding("dephasing")
    states = np.repeat(enc.z_basis[0][None, :], 100, axis=0)
    same = transmit_leg(states, NoiseModel(), np.random.default_rng(0))
    assert np.array_equal(same, states)
    per_leg = transmit_leg(states, NoiseModel(NoiseKind.DEPHASING, Sampling.PER_LEG), np.random.default_rng(1))
    phases = np.angle(per_leg @ enc.z_basis[0].conj())
    assert np.ptp(phases) < 1e-12
    # an unprotected |00> reveals one independent angle per block
    s2 = np.repeat(ket("00")[None, :], 100, axis=0)
    m = NoiseModel(NoiseKind.ROTATION, Sampling.PER_BLOCK)
    a = transmit_leg(s2, m, np.random.default_rng(2))
    b = transmit_leg(s2, m, np.random.default_rng(2))
    assert np.array_equal(a, b)
    overlaps = np.abs(a @ ket("00")) ** 2
    assert len(np.unique(np.round(overlaps, 12))) == 100


def test_transmit_preserves_norm_with_ancilla():
    rng = np.random.default_rng(4)
    st = rng.standard_normal((20, 4, 2)) + 1j * rng.standard_normal((20, 4, 2))
    st /= np.sqrt(np.sum(np.abs(st) ** 2, axis=(1, 2), keepdims=True))
    out = transmit_leg(st, NoiseModel(NoiseKind.GENERAL_COLLECTIVE, Sampling.PER_BLOCK), rng)
    assert np.allclose(np.sum(np.abs(out) ** 2, axis=(1, 2)), 1, atol=1e-12)


def test_measure_logical():
    enc = make_encoding("dephasing")
    rng = np.random.default_rng(0)
    out = measure_logical(enc.z_basis[1], enc, "Z", rng)
    assert out.logical_bit == 1 and abs(out.probability - 1) < 1e-12
    bits = measure_logical_batch(np.repeat(enc.x_basis[0][None], 10_000, axis=0), enc, "Z", rng)
    assert abs(bits.mean() - 0.5) < 3 * np.sqrt(0.25 / 10_000)
    noisy = apply_collective_noise(enc.z_basis[0], NoiseModel(NoiseKind.DEPHASING), 2.2, 2)
    assert measure_logical(noisy, enc, "Z", rng).logical_bit == 0
    leak = measure_logical(ket("00"), enc, "Z", rng)
    assert leak.logical_bit == INCONCLUSIVE and leak.inconclusive
    p = logical_probabilities(np.stack([enc.x_basis[1], ket("11")]), enc, "X")
    assert np.allclose(p.sum(axis=1), 1, atol=1e-10)


def test_noise_model_dict_round_trip():
    m = NoiseModel.from_dict({"kind": "rotation", "sampling": "per_block"})
    assert NoiseModel.from_dict(m.to_dict()) == m
    with pytest.raises(ConfigInvalidError):
        NoiseModel.from_dict({"kind": "rotation", "rate": 2})
    with pytest.raises(ConfigInvalidError):
        NoiseModel.from_dict({"kind": "amplitude"})
