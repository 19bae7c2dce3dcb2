"""Logical qubit encodings: conjugate basis pairs inside physical qubit spaces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import OddQubitCountError, UnknownEncodingError
from .linalg import ket

INV_SQRT2 = 1.0 / math.sqrt(2.0)


class NoiseKind(str, Enum):
    NONE = "none"
    DEPHASING = "dephasing"
    ROTATION = "rotation"
    GENERAL_COLLECTIVE = "general_collective"


ENCODING_NAMES = ("single_photon", "dephasing", "rotation", "general4")

_NOISE_CLASS = {
    "single_photon": NoiseKind.NONE,
    "dephasing": NoiseKind.DEPHASING,
    "rotation": NoiseKind.ROTATION,
    "general4": NoiseKind.GENERAL_COLLECTIVE,
}


def conjugate_pair(zero: np.ndarray, one: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``|+> = (|0> - i|1>)/sqrt2`` and ``|-> = (|1> - i|0>)/sqrt2``."""
    plus = INV_SQRT2 * (zero - 1j * one)
    minus = INV_SQRT2 * (one - 1j * zero)
    return plus, minus


@dataclass(frozen=True, eq=False)
class LogicalEncoding:
    name: str
    physical_qubits: int
    z_basis: tuple[np.ndarray, np.ndarray]
    x_basis: tuple[np.ndarray, np.ndarray]
    noise_class: NoiseKind

    @property
    def dim(self) -> int:
        return 2 ** self.physical_qubits

    def basis(self, which: str) -> tuple[np.ndarray, np.ndarray]:
        which = which.upper()
        if which == "Z":
            return self.z_basis
        if which == "X":
            return self.x_basis
        raise ValueError(f"unknown basis {which!r}, expected 'Z' or 'X'")

    def states(self) -> dict[str, np.ndarray]:
        return {
            "0": self.z_basis[0],
            "1": self.z_basis[1],
            "+": self.x_basis[0],
            "-": self.x_basis[1],
        }

    @property
    def logical_projector(self) -> np.ndarray:
        z0, z1 = self.z_basis
        return np.outer(z0, z0.conj()) + np.outer(z1, z1.conj())

    def to_dict(self) -> dict:
        def table(v):
            return [[float(x.real), float(x.imag)] for x in v]

        return {
            "name": self.name,
            "dimension": self.dim,
            "physical_qubits": self.physical_qubits,
            "noise_class": self.noise_class.value,
            "states": {label: table(v) for label, v in self.states().items()},
        }


def _single_photon():
    return ket("0"), ket("1")


def _dephasing():
    return ket("01"), ket("10")


def _rotation():
    phi_plus = INV_SQRT2 * (ket("00") + ket("11"))
    psi_minus = INV_SQRT2 * (ket("01") - ket("10"))
    return phi_plus, psi_minus


def _general4():
    # singlet pair on qubits (1,2) and (3,4), and the other total-spin-0 state
    zero = 0.5 * (ket("0101") + ket("1010") - ket("0110") - ket("1001"))
    one = (1.0 / (2.0 * math.sqrt(3.0))) * (
        2 * ket("0011") + 2 * ket("1100") - ket("0101") - ket("1010") - ket("0110") - ket("1001")
    )
    return zero, one


_BUILDERS = {
    "single_photon": (1, _single_photon),
    "dephasing": (2, _dephasing),
    "rotation": (2, _rotation),
    "general4": (4, _general4),
}


def make_encoding(name: str) -> LogicalEncoding:
    try:
        n_qubits, build = _BUILDERS[name]
    except KeyError:
        raise UnknownEncodingError(f"unknown encoding {name!r}; expected one of {ENCODING_NAMES}") from None
    zero, one = build()
    return LogicalEncoding(
        name=name,
        physical_qubits=n_qubits,
        z_basis=(zero, one),
        x_basis=conjugate_pair(zero, one),
        noise_class=_NOISE_CLASS[name],
    )


def df_dimension(n_qubits: int) -> int:
    """Dimension of the collective-noise decoherence-free subspace of ``n_qubits`` qubits.

    ``N! / ((N/2)! (N/2 + 1)!)``, i.e. the Catalan number C_{N/2}.
    """
    if isinstance(n_qubits, bool) or not isinstance(n_qubits, (int, np.integer)):
        raise TypeError("n_qubits must be an integer")
    if n_qubits < 2 or n_qubits % 2:
        raise OddQubitCountError(f"n_qubits must be even and >= 2, got {n_qubits}")
    half = n_qubits // 2
    return math.factorial(n_qubits) // (math.factorial(half) * math.factorial(half + 1))


def check_mutual_unbiasedness(enc: LogicalEncoding) -> dict[str, float]:
    """Squared overlaps ``|<x|z>|^2`` for the four cross pairs; each should be 1/2."""
    out = {}
    for xl, x in zip("+-", enc.x_basis):
        for zl, z in zip("01", enc.z_basis):
            out[f"{xl}{zl}"] = float(abs(np.vdot(x, z)) ** 2)
    return out
