"""Collective-noise channels and logical-basis measurement."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import unitary_group

from .bases import LogicalEncoding, NoiseKind
from .errors import ConfigInvalidError, DimensionMismatchError
from .linalg import as_vector, tensor_power

INCONCLUSIVE = -1


class Sampling(str, Enum):
    PER_LEG = "per_leg"
    PER_BLOCK = "per_block"


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind = NoiseKind.NONE
    sampling: Sampling = Sampling.PER_LEG

    @classmethod
    def from_dict(cls, d: dict | None) -> "NoiseModel":
        d = dict(d or {})
        kind, sampling = d.pop("kind", "none"), d.pop("sampling", "per_leg")
        if d:
            raise ConfigInvalidError(f"unknown noise keys: {sorted(d)}")
        try:
            return cls(NoiseKind(kind), Sampling(sampling))
        except ValueError as exc:
            raise ConfigInvalidError(str(exc)) from None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sampling": self.sampling.value}


def sample_noise(model: NoiseModel, rng: np.random.Generator):
    """One noise parameter: an angle in [0, 2pi), a Haar 2x2 unitary, or None."""
    if model.kind is NoiseKind.NONE:
        return None
    if model.kind in (NoiseKind.DEPHASING, NoiseKind.ROTATION):
        return float(rng.uniform(0.0, 2.0 * np.pi))
    return unitary_group.rvs(2, random_state=rng)


def single_qubit_noise(kind: NoiseKind, parameter) -> np.ndarray:
    if kind is NoiseKind.NONE or parameter is None:
        return np.eye(2, dtype=complex)
    if kind is NoiseKind.DEPHASING:
        return np.diag([1.0, np.exp(1j * parameter)]).astype(complex)
    if kind is NoiseKind.ROTATION:
        c, s = np.cos(parameter), np.sin(parameter)
        return np.array([[c, -s], [s, c]], dtype=complex)
    u = np.asarray(parameter, dtype=complex)
    if u.shape != (2, 2):
        raise DimensionMismatchError("general collective noise needs a 2x2 unitary")
    return u


def collective_operator(model: NoiseModel, parameter, n_qubits: int) -> np.ndarray:
    return tensor_power(single_qubit_noise(model.kind, parameter), n_qubits)


def apply_collective_noise(state, model: NoiseModel, parameter, n_qubits: int) -> np.ndarray:
    state = as_vector(state)
    if state.shape[0] != 2**n_qubits:
        raise DimensionMismatchError(f"state of dim {state.shape[0]} is not {n_qubits} qubits")
    if model.kind is NoiseKind.NONE:
        return state.copy()
    out = collective_operator(model, parameter, n_qubits) @ state
    return out / np.linalg.norm(out)


def transmit_leg(states, model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Send a block of states through one channel hop.

    ``states`` has one state per row, shape ``(n, d)``, or ``(n, d, k)`` when
    each travelling system is entangled with a k-dimensional ancilla that
    stays off the channel.  ``per_leg`` draws one parameter shared by the
    whole hop; ``per_block`` draws one per logical state.
    """
    states = np.asarray(states, dtype=complex)
    if states.ndim not in (2, 3):
        raise DimensionMismatchError("states must be (n, d) or (n, d, k)")
    if model.kind is NoiseKind.NONE:
        return states.copy()
    flat = states.ndim == 2
    s3 = states[:, :, None] if flat else states
    dim = s3.shape[1]
    n_qubits = dim.bit_length() - 1
    if 2**n_qubits != dim:
        raise DimensionMismatchError(f"state dimension {dim} is not a power of two")
    if model.sampling is Sampling.PER_LEG:
        op = collective_operator(model, sample_noise(model, rng), n_qubits)
        out = np.einsum("ij,njk->nik", op, s3)
    else:
        ops = np.stack(
            [collective_operator(model, sample_noise(model, rng), n_qubits) for _ in range(len(s3))]
        )
        out = np.einsum("nij,njk->nik", ops, s3)
    out = out / np.sqrt(np.sum(np.abs(out) ** 2, axis=(1, 2), keepdims=True))
    return out[:, :, 0] if flat else out


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    logical_bit: int  # 0, 1 or INCONCLUSIVE
    probability: float
    post_state: np.ndarray
    probabilities: tuple[float, float, float]  # (bit 0, bit 1, inconclusive)

    @property
    def inconclusive(self) -> bool:
        return self.logical_bit == INCONCLUSIVE


def logical_probabilities(states: np.ndarray, enc: LogicalEncoding, basis: str) -> np.ndarray:
    """Born probabilities ``(n, 3)`` for outcomes 0, 1 and leakage.

    Accepts ``(n, d)`` states or ``(n, d, k)`` system-ancilla states; the
    ancilla is traced out.
    """
    b0, b1 = enc.basis(basis)
    states = np.atleast_2d(states)
    if states.ndim == 2:
        states = states[:, :, None]
    p0 = np.sum(np.abs(np.einsum("j,njk->nk", b0.conj(), states)) ** 2, axis=1)
    p1 = np.sum(np.abs(np.einsum("j,njk->nk", b1.conj(), states)) ** 2, axis=1)
    norm = np.sum(np.abs(states) ** 2, axis=(1, 2))
    leak = np.clip(norm - p0 - p1, 0.0, None)
    probs = np.column_stack([p0, p1, leak])
    return probs / probs.sum(axis=1, keepdims=True)


def _draw(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(len(probs))
    cum = np.cumsum(probs, axis=1)
    idx = (u[:, None] >= cum[:, :2]).sum(axis=1)
    return np.where(idx == 2, INCONCLUSIVE, idx)


def measure_logical_batch(states, enc: LogicalEncoding, basis: str, rng: np.random.Generator) -> np.ndarray:
    states = np.asarray(states, dtype=complex)
    if states.ndim not in (2, 3) or states.shape[1] != enc.dim:
        raise DimensionMismatchError(f"states must have shape (n, {enc.dim}[, k])")
    return _draw(logical_probabilities(states, enc, basis), rng)


def measure_logical(state, enc: LogicalEncoding, basis: str, rng: np.random.Generator) -> MeasurementOutcome:
    state = as_vector(state)
    if state.shape[0] != enc.dim:
        raise DimensionMismatchError(f"state dim {state.shape[0]} != encoding dim {enc.dim}")
    probs = logical_probabilities(state[None, :], enc, basis)[0]
    bit = int(_draw(probs[None, :], rng)[0])
    b = enc.basis(basis)
    if bit == INCONCLUSIVE:
        post = state - sum(np.vdot(v, state) * v for v in b)
        p = probs[2]
    else:
        post = np.vdot(b[bit], state) * b[bit]
        p = probs[bit]
    nrm = np.linalg.norm(post)
    post = post / nrm if nrm > 0 else post
    return MeasurementOutcome(bit, float(p), post, tuple(float(x) for x in probs))
