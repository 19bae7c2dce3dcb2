import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdqkd.errors import DimensionMismatchError, NonUnitaryError
from cdqkd.linalg import (
    canonical_phase,
    dagger,
    equal_up_to_global_phase,
    gram_matrix,
    gram_schmidt,
    is_normalized,
    is_unitary,
    ket,
    max_abs_diff,
    principal_sqrt,
    spectral_decompose,
    tensor_product,
)
from cdqkd.operators import reference_instance

from conftest import random_unitary

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def test_tensor_basis_vectors():
    assert np.allclose(tensor_product(ket("0"), ket("1")), [0, 1, 0, 0])
    assert np.allclose(tensor_product(I2, I2), np.eye(4))
    assert np.allclose(tensor_product(X, I2) @ ket("00"), ket("10"))


def test_ket_ordering_round_trip():
    # leftmost symbol is the most significant index
    for bits in ("0", "1", "01", "10", "0110", "1011"):
        assert np.argmax(np.abs(ket(bits))) == int(bits, 2)
        factors = [ket(b) for b in bits]
        assert np.allclose(tensor_product(*factors), ket(bits))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tensor_associative_and_mixed_product(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_unitary(rng, 2) for _ in range(3))
    assert max_abs_diff(tensor_product(tensor_product(a, b), c), tensor_product(a, tensor_product(b, c))) < 1e-10
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    d = random_unitary(rng, 4)
    lhs = tensor_product(a, d) @ tensor_product(x, y)
    assert max_abs_diff(lhs, tensor_product(a @ x, d @ y)) < 1e-10


def test_normalized_and_unitary_flags():
    assert is_normalized(np.array([1, 1j]) / np.sqrt(2))
    assert not is_normalized(np.array([1, 1e-4]))
    assert is_unitary(X)
    assert not is_unitary(np.array([[1, 1], [0, 1]]))


def test_spectral_trivial_cases():
    dec = spectral_decompose(I2)
    assert np.allclose(dec.eigenvalues, [1, 1])
    assert np.allclose(dagger(dec.eigenvectors) @ dec.eigenvectors, I2)
    assert sorted(np.round(spectral_decompose(Z).phases, 12)) == [0.0, round(np.pi, 12)]


def _sorted_spectrum(m):
    lam = spectral_decompose(m).eigenvalues
    return sorted(lam, key=lambda z: (round(z.real, 9), round(z.imag, 9)))


def test_spectral_rotation_pair():
    # U_r^dag C_r = (1+i)/2 (U_r - i I) maps the U_r eigenvalues +1, -1 to 1, -i;
    # the conjugate set {1, 1, i, i} belongs to C_r^dag U_r.  Both give r = 1/sqrt2.
    s = reference_instance("rotation")
    assert np.allclose(_sorted_spectrum(dagger(s.U) @ s.C), [-1j, -1j, 1, 1], atol=1e-10)
    assert np.allclose(_sorted_spectrum(dagger(s.C) @ s.U), [1j, 1j, 1, 1], atol=1e-10)


def test_spectral_rejects_nonunitary():
    with pytest.raises(NonUnitaryError):
        spectral_decompose(np.array([[1, 1], [0, 1]], dtype=complex))


def test_principal_sqrt_branch():
    assert max_abs_diff(principal_sqrt(I2), I2) < 1e-12
    assert max_abs_diff(principal_sqrt(Z), np.diag([1, 1j])) < 1e-12
    dp = reference_instance("dephasing")
    expected = (1 + 1j) / 2 * np.array(
        [[1, 0, 0, -1j], [0, 1, -1j, 0], [0, -1j, 1, 0], [-1j, 0, 0, 1]]
    )
    assert max_abs_diff(principal_sqrt(dp.U), expected) < 1e-10


def test_sqrt_fuzz_corpus():
    rng = np.random.default_rng(20240601)
    worst_sq = worst_rec = 0.0
    for case in range(500):
        dim = int(rng.integers(2, 17))
        u = random_unitary(rng, dim)
        if case % 5 == 0:
            # repeated eigenvalues exercise the clustering path
            w = random_unitary(rng, dim)
            u = w @ np.diag(np.exp(1j * rng.choice([0.3, 2.0, 4.5], size=dim))) @ dagger(w)
        root = principal_sqrt(u)
        worst_sq = max(worst_sq, max_abs_diff(root @ root, u))
        phases = canonical_phase(np.linalg.eigvals(root))
        assert np.all((phases < np.pi) | (phases > 2 * np.pi - 1e-9))
        dec = spectral_decompose(u)
        worst_rec = max(worst_rec, max_abs_diff(dec.reconstruct(), u))
        assert np.allclose(np.abs(dec.eigenvalues), 1, atol=1e-10)
        assert max_abs_diff(gram_matrix(list(dec.eigenvectors.T)), np.eye(dim)) < 1e-9
    assert worst_sq < 1e-9
    assert worst_rec < 1e-9


def test_canonical_phase_snaps_two_pi():
    assert canonical_phase(np.exp(-1e-14j)) == 0.0
    assert abs(canonical_phase(-1.0) - np.pi) < 1e-15


def test_global_phase_equality():
    for phi in np.linspace(0, 2 * np.pi, 7):
        assert equal_up_to_global_phase(ket("0"), np.exp(1j * phi) * ket("0"))
    assert not equal_up_to_global_phase(ket("0"), ket("1"))
    dp = reference_instance("dephasing")
    states = dp.encoding.states()
    assert equal_up_to_global_phase(dp.C @ states["0"], states["+"])
    with pytest.raises(DimensionMismatchError):
        equal_up_to_global_phase(ket("0"), ket("00"))


def test_gram_schmidt_examples():
    out = gram_schmidt([ket("0"), ket("1")], 2)
    assert np.allclose(out, [ket("0"), ket("1")])
    h = np.array([1, 1]) / np.sqrt(2)
    out = gram_schmidt([h], 2)
    assert np.allclose(out[0], h)
    assert np.allclose(out[1], np.array([1, -1]) / np.sqrt(2))


def test_gram_schmidt_general4_frame():
    enc = reference_instance("general4").encoding
    frame = gram_schmidt(list(enc.z_basis), 16)
    assert len(frame) == 16
    assert max_abs_diff(gram_matrix(frame), np.eye(16)) < 1e-9
    assert np.allclose(frame[0], enc.z_basis[0]) and np.allclose(frame[1], enc.z_basis[1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 16), st.integers(1, 4))
def test_gram_schmidt_always_orthonormal(seed, dim, k):
    rng = np.random.default_rng(seed)
    k = min(k, dim)
    seeds = [rng.standard_normal(dim) + 1j * rng.standard_normal(dim) for _ in range(k)]
    frame = gram_schmidt(seeds, dim)
    assert max_abs_diff(gram_matrix(frame), np.eye(dim)) < 1e-9
