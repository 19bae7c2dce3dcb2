"""Small dense complex linear algebra.

States are 1-D complex numpy arrays and operators are 2-D complex arrays.
Every routine here targets dimensions of at most 16, so clarity wins over
speed.  Qubit ordering follows ``numpy.kron``: the left factor is the most
significant qubit, i.e. ``|q0 q1 ... >`` has index ``int("q0q1...", 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DependentSeedError,
    DimensionMismatchError,
    NoConvergenceError,
    NonUnitaryError,
)

UNITARY_TOL = 1e-10
NORM_TOL = 1e-10
EQ_TOL = 1e-10
PHASE_CLUSTER_TOL = 1e-8
PHASE_SNAP_TOL = 1e-12
OFFDIAG_TOL = 1e-12
RANK_TOL = 1e-8
MAX_DIM = 16

TWO_PI = 2.0 * np.pi


def as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=complex)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D state vector, got shape {arr.shape}")
    return arr


def as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def ket(bits: str) -> np.ndarray:
    """Computational basis state from a bit string, e.g. ``ket("0101")``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def outer(a, b) -> np.ndarray:
    """``|a><b|``."""
    return np.outer(as_vector(a), np.conj(as_vector(b)))


def max_abs_diff(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def allclose_max(a, b, tol: float = EQ_TOL) -> bool:
    """Max-entry absolute comparison used for all matrix equality checks."""
    return max_abs_diff(a, b) < tol


def is_normalized(v, tol: float = NORM_TOL) -> bool:
    v = as_vector(v)
    return abs(float(np.vdot(v, v).real) - 1.0) < tol


def is_unitary(m, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return max_abs_diff(dagger(m) @ m, np.eye(m.shape[0])) < tol


def require_unitary(m, tol: float = UNITARY_TOL) -> np.ndarray:
    m = as_matrix(m)
    if not is_unitary(m, tol):
        raise NonUnitaryError(f"matrix of shape {m.shape} is not unitary within {tol:g}")
    return m


def tensor_product(*factors) -> np.ndarray:
    """Kronecker product of vectors or matrices, left factor most significant."""
    if not factors:
        raise ValueError("tensor_product needs at least one factor")
    arrs = [np.asarray(f, dtype=complex) for f in factors]
    return reduce(np.kron, arrs)


def tensor_power(m, n: int) -> np.ndarray:
    return tensor_product(*([m] * n))


def canonical_phase(z: complex | np.ndarray) -> np.ndarray:
    """Argument of ``z`` mapped to [0, 2pi), with values just below 2pi snapped to 0."""
    theta = np.mod(np.arctan2(np.imag(z), np.real(z)), TWO_PI)
    theta = np.where(TWO_PI - theta < PHASE_SNAP_TOL, 0.0, theta)
    return theta


def _cluster_phases(phases: np.ndarray, tol: float) -> np.ndarray:
    """Replace each phase by a representative of its cluster on the circle.

    Phases closer than ``tol`` (circular distance) end up in one cluster.  The
    representative is the circular mean, canonicalised.  Because clusters can
    straddle 0 == 2pi, the sort starts after the widest gap.
    """
    n = len(phases)
    if n == 0:
        return phases
    order = np.argsort(phases)
    sorted_ph = phases[order]
    gaps = np.diff(np.concatenate([sorted_ph, [sorted_ph[0] + TWO_PI]]))
    start = (int(np.argmax(gaps)) + 1) % n
    rolled = np.roll(order, -start)
    out = phases.copy()
    group = [rolled[0]]

    def flush(g):
        mean = np.angle(np.mean(np.exp(1j * phases[g])))
        out[g] = canonical_phase(np.exp(1j * mean))

    for prev, cur in zip(rolled[:-1], rolled[1:]):
        d = abs(phases[cur] - phases[prev])
        d = min(d, TWO_PI - d)
        if d < tol:
            group.append(cur)
        else:
            flush(group)
            group = [cur]
    flush(group)
    return out


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-decomposition of a unitary matrix.

    ``eigenvectors[:, k]`` pairs with ``eigenvalues[k]``; ``phases[k]`` is its
    canonical argument in [0, 2pi) after degenerate-cluster merging.
    """

    eigenvalues: np.ndarray
    phases: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)

    def apply_function(self, f) -> np.ndarray:
        """Return ``sum_k f(phase_k) |v_k><v_k|``."""
        v = self.eigenvectors
        return (v * f(self.phases)) @ dagger(v)


def spectral_decompose(u, tol: float = UNITARY_TOL) -> SpectralDecomposition:
    """Orthonormal eigenbasis of a unitary matrix.

    A unitary matrix is normal, so its complex Schur form is diagonal and the
    Schur vectors are an orthonormal eigenbasis, which also holds inside
    degenerate eigenspaces where a plain ``eig`` call gives no such guarantee.
    """
    u = require_unitary(u, tol)
    if u.shape[0] > MAX_DIM:
        raise DimensionMismatchError(f"dimension {u.shape[0]} exceeds {MAX_DIM}")
    t, q = scipy.linalg.schur(u, output="complex")
    offdiag = t - np.diag(np.diag(t))
    if np.sqrt(np.sum(np.abs(offdiag) ** 2)) > 1e3 * OFFDIAG_TOL * max(1, u.shape[0]):
        raise NoConvergenceError("Schur form of a unitary input is not diagonal")
    lam = np.diag(t).copy()
    lam = lam / np.abs(lam)
    phases = _cluster_phases(canonical_phase(lam), PHASE_CLUSTER_TOL)
    return SpectralDecomposition(eigenvalues=np.exp(1j * phases), phases=phases, eigenvectors=q)


def principal_sqrt(u) -> np.ndarray:
    """Square root of a unitary whose eigenvalue phases lie in [0, pi).

    Each eigenvalue ``exp(i theta)`` with theta in [0, 2pi) is sent to
    ``exp(i theta / 2)``.  This is the root used for the control operation:
    its spectrum sits on the upper half circle, so the origin never enters
    the hull of its eigenvalues.
    """
    dec = spectral_decompose(u)
    return dec.apply_function(lambda th: np.exp(0.5j * th))


def equal_up_to_global_phase(a, b, tol: float = 1e-9) -> bool:
    a = as_vector(a)
    b = as_vector(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return abs(np.vdot(a, b)) > 1.0 - tol


def relative_phase(target, state) -> complex:
    """``<target|state>``: the global phase factor when ``state`` is a phase times ``target``."""
    return complex(np.vdot(as_vector(target), as_vector(state)))


def gram_schmidt(seed: Sequence, dim: int, tol: float = RANK_TOL) -> list[np.ndarray]:
    """Complete ``seed`` to an orthonormal basis of C^dim.

    The seed is orthonormalised in order; completion vectors come from the
    standard basis in index order, skipping any that are dependent on the
    vectors accumulated so far.
    """
    seed = [as_vector(s) for s in seed]
    for s in seed:
        if s.shape != (dim,):
            raise DimensionMismatchError(f"seed vector of length {s.shape[0]} in dimension {dim}")
    if seed:
        sv = np.linalg.svd(np.stack(seed, axis=1), compute_uv=False)
        if len(seed) > dim or sv[-1] < tol * max(1.0, sv[0]):
            raise DependentSeedError("seed vectors are linearly dependent")

    basis: list[np.ndarray] = []

    def residual(v):
        # two passes of modified Gram-Schmidt keep the Gram matrix at 1e-15 level
        w = v.copy()
        for _ in range(2):
            for b in basis:
                w = w - np.vdot(b, w) * b
        return w

    for s in seed:
        w = residual(s)
        basis.append(w / np.linalg.norm(w))
    for k in range(dim):
        if len(basis) == dim:
            break
        e = np.zeros(dim, dtype=complex)
        e[k] = 1.0
        w = residual(e)
        nrm = np.linalg.norm(w)
        if nrm > tol:
            basis.append(w / nrm)
    return basis


def gram_matrix(vectors: Sequence) -> np.ndarray:
    v = np.stack([as_vector(x) for x in vectors], axis=1)
    return dagger(v) @ v
