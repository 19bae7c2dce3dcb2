import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdqkd.discrimination import (
    analyze_operator_set,
    convex_hull,
    distance_to_hull,
    error_from_r,
    min_error_probability,
    polygon_distance_r,
    unambiguous_set_check,
)
from cdqkd.errors import BadPriorsError, DimensionMismatchError
from cdqkd.linalg import dagger
from cdqkd.operators import reference_instance

from conftest import ENCODINGS, random_unitary

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def r_oracle(u, grid=4096):
    """Support-function form: distance to hull = max(0, max_theta min_k Re(lambda_k e^{-i theta}))."""
    lam = np.linalg.eigvals(u)

    def support(t):
        return float(np.min(np.real(lam * np.exp(-1j * t))))

    theta = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    vals = np.real(lam[None, :] * np.exp(-1j * theta)[:, None]).min(axis=1)
    t0 = theta[np.argmax(vals)]
    step = 2 * np.pi / grid
    lo, hi = t0 - step, t0 + step
    for _ in range(200):
        a, b = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if support(a) < support(b):
            lo = a
        else:
            hi = b
    return max(0.0, float(vals.max()), support(0.5 * (lo + hi)))


def test_r_trivial():
    assert polygon_distance_r(I2) == 1.0
    assert polygon_distance_r(Z) == 0.0
    s = reference_instance("rotation")
    assert abs(polygon_distance_r(dagger(s.U) @ s.C) - 1 / math.sqrt(2)) < 1e-10


def test_min_error_examples():
    s = reference_instance("rotation")
    pe = min_error_probability(s.U, s.C, 0.5, 0.5)
    assert abs(pe - 0.5 * (1 - math.sqrt(0.5))) < 1e-12
    assert round(pe, 2) == 0.15
    assert min_error_probability(I2, Z, 0.3, 0.7) == 0.0
    assert min_error_probability(X, X) == 0.5
    with pytest.raises(BadPriorsError):
        min_error_probability(I2, Z, 0.6, 0.6)
    with pytest.raises(DimensionMismatchError):
        min_error_probability(I2, np.eye(4), 0.5, 0.5)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4, 8]))
def test_r_matches_support_function_oracle(seed, dim):
    rng = np.random.default_rng(seed)
    if dim == 2 or seed % 3 == 0:
        # eigenphases confined to an arc give r > 0 often
        w = random_unitary(rng, dim)
        ph = rng.uniform(0, rng.uniform(0.2, 2 * np.pi), size=dim)
        u = w @ np.diag(np.exp(1j * ph)) @ dagger(w)
    else:
        u = random_unitary(rng, dim)
    assert abs(polygon_distance_r(u) - r_oracle(u)) < 1e-8


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4]))
def test_r_symmetric_and_bounded(seed, dim):
    rng = np.random.default_rng(seed)
    u, v = random_unitary(rng, dim), random_unitary(rng, dim)
    a = polygon_distance_r(dagger(u) @ v)
    b = polygon_distance_r(dagger(v) @ u)
    assert abs(a - b) < 1e-10
    assert 0 <= a <= 1
    pe = min_error_probability(u, v)
    assert 0 <= pe <= 0.5


def test_pe_monotone_in_r():
    for p1 in (0.1, 0.3, 0.5):
        vals = [error_from_r(r, p1, 1 - p1) for r in np.linspace(0, 1, 101)]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


def test_hull_degenerate_cases():
    assert len(convex_hull(np.array([[1.0, 0.0], [1.0, 0.0]]))) == 1
    seg = convex_hull(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]]))
    assert len(seg) == 2
    assert distance_to_hull((0, 0), seg) == 0.0
    sq = convex_hull(np.array([[1, 0], [0, 1], [-1, 0], [0, -1], [0.5, 0.0]], dtype=float))
    assert len(sq) == 4
    assert distance_to_hull((0, 0), sq) == 0.0
    assert abs(distance_to_hull((2, 0), sq) - 1.0) < 1e-12


def test_unambiguous_examples():
    assert unambiguous_set_check([I2, X]) == [True, True]
    for name in ("rotation", "dephasing"):
        s = reference_instance(name)
        flags = unambiguous_set_check([s.I, s.U, s.C, s.UC])
        assert flags[2] is False
        assert np.allclose(s.C, (1 + 1j) / 2 * (s.I - 1j * s.U))


@pytest.mark.parametrize("name", ENCODINGS)
def test_report_identities(name):
    rep = analyze_operator_set(reference_instance(name))
    assert rep.identities_hold
    ids = rep.identities
    assert abs(rep.pair("U", "UC").r_value - rep.pair("I", "C").r_value) < 1e-10
    assert ids["r(C)"] > 0 and ids["r(C^dag)"] > 0
    assert rep.unambiguous_flags["C"] is False
    for p in rep.pair_results:
        assert abs(p.p_error_min - error_from_r(p.r_value, 0.5, 0.5)) < 1e-12
        assert p.precisely_discriminable == (p.r_value < 1e-10)
    # the encoding pairs are exactly distinguishable; every pair mixing in a control operation is not
    precise = {frozenset((p.first, p.second)) for p in rep.pair_results if p.precisely_discriminable}
    assert precise == {frozenset(("I", "U")), frozenset(("C", "UC"))}


def test_rotation_report_values():
    rep = analyze_operator_set(reference_instance("rotation"))
    ic = rep.pair("I", "C")
    assert abs(ic.r_value - 1 / math.sqrt(2)) < 1e-10
    assert abs(ic.p_error_min - 0.1464466094067262) < 1e-12
    d = rep.to_dict()
    assert d["priors"] == [0.5, 0.5] and len(d["pairs"]) == 6


def test_general4_cyclic_complement_is_unambiguous():
    # with the cyclic complement, C is no longer a combination of I and U
    s = reference_instance("general4", "cyclic")
    rep = analyze_operator_set(s)
    assert all(rep.unambiguous_flags.values())
    assert 0.1 < rep.identities["r(C)"] < 0.12
