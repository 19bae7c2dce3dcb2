"""Encoding and control operations for collective detection.

For a logical pair ``|0>, |1>`` inside a d-dimensional space, the encoding
operation is ``U = |0><1| + |1><0| + M`` with ``M`` acting only on the
orthogonal complement, and the control operation is the principal square
root ``C = sqrt(U)``.  The four operations a user can apply are
``I, U, C, UC``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bases import LogicalEncoding, make_encoding
from .errors import NonUnitaryResultError, RecipeInfeasibleError, UnknownEncodingError
from .linalg import (
    allclose_max,
    dagger,
    gram_schmidt,
    is_unitary,
    max_abs_diff,
    outer,
    principal_sqrt,
)

HALF_1PI = (1 + 1j) / 2
PHASE_P = (1 + 1j) / math.sqrt(2)
PHASE_M = (1 - 1j) / math.sqrt(2)


class ComplementRecipe(str, Enum):
    """How ``M`` acts on the Gram-Schmidt completion ``|2>, ..., |d-1>``."""

    IDENTITY_ON_COMPLEMENT = "identity_on_complement"
    CYCLIC_SHIFT = "cyclic_shift"

    @classmethod
    def parse(cls, value) -> "ComplementRecipe":
        if isinstance(value, cls):
            return value
        aliases = {"identity": cls.IDENTITY_ON_COMPLEMENT, "cyclic": cls.CYCLIC_SHIFT}
        if value in aliases:
            return aliases[value]
        return cls(value)

    @property
    def description(self) -> str:
        if self is ComplementRecipe.IDENTITY_ON_COMPLEMENT:
            return "M = |2><2| + ... + |d-1><d-1|"
        return "M = |2><3| + |3><4| + ... + |d-1><2|"


def complement_operator(frame: list[np.ndarray], recipe: ComplementRecipe) -> np.ndarray:
    dim = len(frame)
    comp = frame[2:]
    m = np.zeros((dim, dim), dtype=complex)
    if recipe is ComplementRecipe.IDENTITY_ON_COMPLEMENT:
        for v in comp:
            m += outer(v, v)
    elif recipe is ComplementRecipe.CYCLIC_SHIFT:
        if len(comp) < 2:
            raise RecipeInfeasibleError(
                f"cyclic shift needs a complement of dimension >= 2, got {len(comp)}"
            )
        for j in range(len(comp)):
            m += outer(comp[j], comp[(j + 1) % len(comp)])
    else:  # pragma: no cover
        raise ValueError(recipe)
    return m


@dataclass(frozen=True, eq=False)
class OperatorSet:
    encoding: LogicalEncoding
    I: np.ndarray
    U: np.ndarray
    C: np.ndarray
    UC: np.ndarray
    recipe: ComplementRecipe | None
    complement: np.ndarray | None = None
    frame: tuple[np.ndarray, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.U.shape[0]

    @property
    def C_inv(self) -> np.ndarray:
        return dagger(self.C)

    def ops(self) -> dict[str, np.ndarray]:
        return {"I": self.I, "U": self.U, "C": self.C, "UC": self.UC}

    def user_operation(self, a: int, a_prime: int) -> np.ndarray:
        """``C^{a'} U^{a}``: encode bit ``a`` then apply control bit ``a'``."""
        op = self.U if a else self.I
        return self.C @ op if a_prime else op

    def check_invariants(self, tol: float = 1e-9) -> dict[str, bool]:
        """Structural checks; ``U2_logical`` restricts U^2 = I to the code space."""
        p = self.encoding.logical_projector
        u2 = self.U @ self.U
        return {
            "unitary": all(is_unitary(m) for m in self.ops().values()),
            "C_squared_is_U": allclose_max(self.C @ self.C, self.U, tol),
            "UC_is_product": allclose_max(self.UC, self.U @ self.C, tol),
            "U_C_commute": allclose_max(self.U @ self.C, self.C @ self.U, tol),
            "U2_identity": allclose_max(u2, self.I, tol),
            "U2_logical": allclose_max(u2 @ p, p, tol),
        }


def _assemble(enc, U, recipe, m, frame) -> OperatorSet:
    C = principal_sqrt(U)
    if not (is_unitary(U) and is_unitary(C)):
        raise NonUnitaryResultError("constructed operators are not unitary")
    if max_abs_diff(C @ C, U) > 1e-9:
        raise NonUnitaryResultError("principal square root does not square back to U")
    I = np.eye(U.shape[0], dtype=complex)
    return OperatorSet(enc, I, U, C, U @ C, recipe, m, tuple(frame))


def build_operator_set(
    enc: LogicalEncoding,
    recipe: ComplementRecipe | str = ComplementRecipe.IDENTITY_ON_COMPLEMENT,
) -> OperatorSet:
    recipe = ComplementRecipe.parse(recipe)
    z0, z1 = enc.z_basis
    frame = gram_schmidt([z0, z1], enc.dim)
    m = complement_operator(frame, recipe)
    U = outer(z0, z1) + outer(z1, z0) + m
    if not is_unitary(U):
        raise NonUnitaryResultError("U = |0><1| + |1><0| + M is not unitary")
    return _assemble(enc, U, recipe, m, frame)


REFERENCE_MATRICES: dict[str, dict[str, np.ndarray]] = {
    "single_photon": {
        "U": np.array([[0, 1], [1, 0]], dtype=complex),
        "C": HALF_1PI * np.array([[1, -1j], [-1j, 1]], dtype=complex),
    },
    "dephasing": {
        "U": np.fliplr(np.eye(4)).astype(complex),
        "C": HALF_1PI
        * np.array(
            [[1, 0, 0, -1j], [0, 1, -1j, 0], [0, -1j, 1, 0], [-1j, 0, 0, 1]],
            dtype=complex,
        ),
    },
    "rotation": {
        "U": np.array(
            [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, -1, 0]],
            dtype=complex,
        ),
        "C": HALF_1PI
        * np.array(
            [[1, -1j, 0, 0], [-1j, 1, 0, 0], [0, 0, 1, 1j], [0, 0, 1j, 1]],
            dtype=complex,
        ),
    },
}

# Recipe that reproduces the reference matrix for each instance; the identity
# recipe is the only one available in dimension 2.
DEFAULT_RECIPES = {
    "single_photon": ComplementRecipe.IDENTITY_ON_COMPLEMENT,
    "dephasing": ComplementRecipe.CYCLIC_SHIFT,
    "rotation": ComplementRecipe.CYCLIC_SHIFT,
    "general4": ComplementRecipe.IDENTITY_ON_COMPLEMENT,
}


def reference_instance(name: str, recipe: ComplementRecipe | str | None = None) -> OperatorSet:
    """Operator set for one of the four encodings.

    The two-dimensional-logical instances for 1 and 2 physical qubits use the
    literal reference matrices.  ``general4`` has no closed-form matrix and is built
    from the Gram-Schmidt frame; ``recipe`` overrides its complement choice.
    """
    if name not in DEFAULT_RECIPES:
        raise UnknownEncodingError(f"unknown encoding {name!r}")
    enc = make_encoding(name)
    if name == "general4" or recipe is not None:
        return build_operator_set(enc, recipe if recipe is not None else DEFAULT_RECIPES[name])
    lit = REFERENCE_MATRICES[name]
    U, C = lit["U"].copy(), lit["C"].copy()
    I = np.eye(enc.dim, dtype=complex)
    z0, z1 = enc.z_basis
    m = U - outer(z0, z1) - outer(z1, z0)
    return OperatorSet(enc, I, U, C, U @ C, DEFAULT_RECIPES[name], m, ())


@dataclass(frozen=True)
class FlipAction:
    operator: str
    source: str
    target: str
    phase: complex
    expected_phase: complex
    passed: bool
    phase_matches: bool


# (operator, source, target, expected global phase)
REQUIRED_ACTIONS = (
    ("U", "0", "1", 1.0),
    ("U", "1", "0", 1.0),
    ("U", "+", "-", 1.0),
    ("U", "-", "+", 1.0),
    ("C", "0", "+", PHASE_P),
    ("C", "1", "-", PHASE_P),
    ("C", "+", "1", PHASE_M),
    ("C", "-", "0", PHASE_M),
)


def verify_flip_actions(opset: OperatorSet, tol: float = 1e-9) -> list[FlipAction]:
    """Check the eight flip actions of U and C on the four logical states.

    ``passed`` is the phase-insensitive check; ``phase_matches`` additionally
    compares against the expected global phase factor.
    """
    states = opset.encoding.states()
    ops = opset.ops()
    report = []
    for op_name, src, dst, expected in REQUIRED_ACTIONS:
        out = ops[op_name] @ states[src]
        phase = complex(np.vdot(states[dst], out))
        report.append(
            FlipAction(
                operator=op_name,
                source=src,
                target=dst,
                phase=phase,
                expected_phase=complex(expected),
                passed=abs(phase) > 1.0 - tol,
                phase_matches=abs(phase - expected) < tol,
            )
        )
    return report


def operator_set_to_dict(opset: OperatorSet) -> dict:
    def table(m):
        return [[[float(z.real), float(z.imag)] for z in row] for row in m]

    return {
        "encoding": opset.encoding.to_dict(),
        "recipe": opset.recipe.value if opset.recipe else None,
        "recipe_description": opset.recipe.description if opset.recipe else None,
        "operators": {k: table(v) for k, v in opset.ops().items()},
        "invariants": opset.check_invariants(),
    }
