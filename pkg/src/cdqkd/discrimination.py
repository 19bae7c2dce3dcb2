"""Single-use discrimination of unitary operations.

``polygon_distance_r(W)`` is the distance from the origin of the complex
plane to the convex hull of the eigenvalues of ``W``.  For two unitaries
``U1, U2`` applied once with priors ``p1, p2`` the smallest achievable error
is ``(1 - sqrt(1 - 4 p1 p2 r(U1^dag U2)^2)) / 2``, and exact discrimination is
possible iff that distance is zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadPriorsError, DimensionMismatchError
from .linalg import dagger, require_unitary, spectral_decompose
from .operators import OperatorSet

DEDUP_TOL = 1e-9
HULL_TOL = 1e-12
SPAN_TOL = 1e-8
PRECISE_TOL = 1e-10


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: np.ndarray, tol: float = HULL_TOL) -> np.ndarray:
    """Counter-clockwise hull vertices of 2-D points (monotone chain).

    Collinear boundary points are dropped.  Returns 1 vertex for a single
    point and 2 for a segment.
    """
    pts = sorted({(float(x), float(y)) for x, y in np.asarray(points, dtype=float)})
    if len(pts) <= 2:
        return np.array(pts, dtype=float)
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= tol:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= tol:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return np.array(hull, dtype=float)


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = min(1.0, max(0.0, float((p - a) @ ab) / denom))
    return float(np.linalg.norm(p - (a + t * ab)))


def distance_to_hull(point, hull: np.ndarray, tol: float = HULL_TOL) -> float:
    """Euclidean distance from ``point`` to the region bounded by ``hull``."""
    p = np.asarray(point, dtype=float)
    k = len(hull)
    if k == 1:
        return float(np.linalg.norm(p - hull[0]))
    if k == 2:
        return _point_segment_distance(p, hull[0], hull[1])
    if all(_cross(hull[i], hull[(i + 1) % k], p) >= -tol for i in range(k)):
        return 0.0
    return min(_point_segment_distance(p, hull[i], hull[(i + 1) % k]) for i in range(k))


def _dedup(values: np.ndarray, tol: float) -> np.ndarray:
    kept: list[complex] = []
    for z in values:
        if all(abs(z - w) >= tol for w in kept):
            kept.append(complex(z))
    return np.array(kept)


def eigenvalue_support(u) -> np.ndarray:
    dec = spectral_decompose(u)
    return _dedup(dec.eigenvalues, DEDUP_TOL)


def polygon_distance_r(u) -> float:
    lam = eigenvalue_support(u)
    pts = np.column_stack([lam.real, lam.imag])
    r = distance_to_hull((0.0, 0.0), convex_hull(pts))
    if r < HULL_TOL:
        return 0.0
    return min(1.0, r)


def error_from_r(r: float, p1: float, p2: float) -> float:
    disc = max(0.0, 1.0 - 4.0 * p1 * p2 * r * r)
    return 0.5 * (1.0 - math.sqrt(disc))


def _check_priors(p1: float, p2: float) -> None:
    if p1 < 0 or p2 < 0 or abs(p1 + p2 - 1.0) > 1e-12:
        raise BadPriorsError(f"priors must be non-negative and sum to 1, got ({p1}, {p2})")


def min_error_probability(u1, u2, p1: float = 0.5, p2: float = 0.5) -> float:
    _check_priors(p1, p2)
    u1 = require_unitary(u1)
    u2 = require_unitary(u2)
    if u1.shape != u2.shape:
        raise DimensionMismatchError(f"{u1.shape} vs {u2.shape}")
    return error_from_r(polygon_distance_r(dagger(u1) @ u2), p1, p2)


def span_residual(target, others) -> float:
    """Residual norm of ``vec(target)`` after projection onto ``span{vec(o)}``."""
    t = np.asarray(target, dtype=complex).ravel()
    a = np.stack([np.asarray(o, dtype=complex).ravel() for o in others], axis=1)
    coef, *_ = np.linalg.lstsq(a, t, rcond=None)
    return float(np.linalg.norm(a @ coef - t))


def unambiguous_set_check(ops, tol: float = SPAN_TOL) -> list[bool]:
    """Per operator: True iff it lies outside the span of the others.

    A unitary channel has a single Kraus operator, so its support is the
    span of that operator; the set is unambiguously discriminable by one use
    only if every entry is True.
    """
    ops = [np.asarray(o, dtype=complex) for o in ops]
    if len(ops) < 2:
        raise ValueError("need at least two operators")
    shape = ops[0].shape
    if any(o.shape != shape for o in ops):
        raise DimensionMismatchError("operators have different shapes")
    for o in ops:
        require_unitary(o)
    return [span_residual(o, ops[:i] + ops[i + 1 :]) > tol for i, o in enumerate(ops)]


@dataclass
class PairResult:
    first: str
    second: str
    r_value: float
    p_error_min: float
    precisely_discriminable: bool
    eigenvalues: list[complex]


@dataclass
class DiscriminationReport:
    priors: tuple[float, float]
    pair_results: list[PairResult]
    unambiguous_flags: dict[str, bool]
    identities: dict[str, float] = field(default_factory=dict)
    identities_hold: bool = True

    def pair(self, a: str, b: str) -> PairResult:
        for pr in self.pair_results:
            if {pr.first, pr.second} == {a, b}:
                return pr
        raise KeyError((a, b))

    def to_dict(self) -> dict:
        def cpl(z):
            return [float(z.real), float(z.imag)]

        return {
            "priors": list(self.priors),
            "pairs": [
                {
                    "first": p.first,
                    "second": p.second,
                    "r": p.r_value,
                    "p_error_min": p.p_error_min,
                    "precisely_discriminable": p.precisely_discriminable,
                    "eigenvalues": [cpl(z) for z in p.eigenvalues],
                }
                for p in self.pair_results
            ],
            "unambiguous_flags": dict(self.unambiguous_flags),
            "identities": dict(self.identities),
            "identities_hold": self.identities_hold,
        }


def analyze_pair(name1, u1, name2, u2, priors=(0.5, 0.5)) -> PairResult:
    w = dagger(require_unitary(u1)) @ require_unitary(u2)
    r = polygon_distance_r(w)
    return PairResult(
        first=name1,
        second=name2,
        r_value=r,
        p_error_min=error_from_r(r, *priors),
        precisely_discriminable=r < PRECISE_TOL,
        eigenvalues=list(eigenvalue_support(w)),
    )


def analyze_operator_set(opset: OperatorSet, priors=(0.5, 0.5), tol: float = 1e-10) -> DiscriminationReport:
    p1, p2 = priors
    _check_priors(p1, p2)
    ops = opset.ops()
    names = list(ops)
    pairs = [analyze_pair(a, ops[a], b, ops[b], (p1, p2)) for a, b in itertools.combinations(names, 2)]
    flags = dict(zip(names, unambiguous_set_check([ops[k] for k in names])))

    r_c = polygon_distance_r(opset.C)
    r_cdag = polygon_distance_r(dagger(opset.C))
    identities = {
        "r(I^dag C)": polygon_distance_r(dagger(opset.I) @ opset.C),
        "r(U^dag UC)": polygon_distance_r(dagger(opset.U) @ opset.UC),
        "r(C)": r_c,
        "r(U^dag C)": polygon_distance_r(dagger(opset.U) @ opset.C),
        "r(C^dag)": r_cdag,
    }
    hold = (
        abs(identities["r(I^dag C)"] - r_c) < tol
        and abs(identities["r(U^dag UC)"] - r_c) < tol
        and abs(identities["r(U^dag C)"] - r_cdag) < tol
        and r_c > 0
        and r_cdag > 0
    )
    return DiscriminationReport((p1, p2), pairs, flags, identities, hold)
