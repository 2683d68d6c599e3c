"""Metric pairs, partially ordered label spaces, and quotient birth-death geometry.

A metric pair is a metric space with a distinguished "diagonal" subset that
gets collapsed to a single basepoint.  The strengthened metric

    d1(x, y) = min(d(x, y), d(x, A) + d(y, A))

descends to the quotient and is the ground metric for every diagram,
kernel, and dendrogram computation in this package.

Points of the quotient are either :data:`BASEPOINT` or a
:class:`QuotientPoint` holding a hashable canonical payload.  Payloads are
plain floats / nested tuples so points can key dictionaries and sort
deterministically; spaces own all geometry and (de)serialization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence, Union

import numpy as np

from .errors import SpaceMismatchError

Payload = Any

#: Eigenvalue slack for Loewner-order comparisons and PSD validity tests.
LOEWNER_TOL = 1e-10


@dataclass(frozen=True)
class Basepoint:
    """The collapsed diagonal class of a metric pair."""

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "[A]"


BASEPOINT = Basepoint()


@dataclass(frozen=True, order=True)
class QuotientPoint:
    """An off-diagonal point of a quotient space, keyed by canonical payload."""

    payload: Payload


PointLike = Union[Basepoint, QuotientPoint]


# ---------------------------------------------------------------------------
# Label spaces
# ---------------------------------------------------------------------------


class LabelSpace:
    """A partially ordered metric space of filtration labels.

    Subclasses provide the metric ``dist``, the partial-order test ``leq``
    (``a ⪯ b``; two points are incomparable when neither direction holds),
    and a monotone scalarization ``scalar``.
    """

    kind: str = ""

    def canonical(self, p) -> Payload:
        raise NotImplementedError

    def validate(self, p: Payload) -> None:
        raise NotImplementedError

    def dist(self, a: Payload, b: Payload) -> float:
        raise NotImplementedError

    def leq(self, a: Payload, b: Payload) -> bool:
        raise NotImplementedError

    def scalar(self, a: Payload) -> float:
        raise NotImplementedError

    def ceiling_point(self, value: float) -> Payload:
        """A canonical point whose scalarization equals ``value``.

        Used only to place death-at-infinity leaves at a finite dendrogram
        height; never fed to kernel or transport computations.
        """
        raise NotImplementedError

    def to_json(self, p: Payload):
        raise NotImplementedError

    def from_json(self, obj) -> Payload:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


def _as_float_tuple(p, length: int, what: str) -> tuple:
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.size != length:
        raise ValueError(f"{what}: expected {length} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: entries must be finite")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class RealLine(LabelSpace):
    """Real labels with the usual order and absolute-value metric."""

    kind = "real"

    def canonical(self, p) -> float:
        v = float(p)
        if not math.isfinite(v):
            raise ValueError("real label must be finite")
        return v

    def validate(self, p) -> None:
        self.canonical(p)

    def dist(self, a, b) -> float:
        return abs(a - b)

    def leq(self, a, b) -> bool:
        return a <= b

    def scalar(self, a) -> float:
        return a

    def ceiling_point(self, value: float) -> float:
        return float(value)

    def to_json(self, p):
        return p

    def from_json(self, obj) -> float:
        return self.canonical(obj)

    def descriptor(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class EuclideanVector(LabelSpace):
    """R^n labels with the product order, Euclidean metric, max-coordinate scalarization."""

    dim: int
    kind = "vector"

    def canonical(self, p) -> tuple:
        return _as_float_tuple(p, self.dim, f"vector label in R^{self.dim}")

    def validate(self, p) -> None:
        self.canonical(p)

    def dist(self, a, b) -> float:
        return math.dist(a, b)

    def leq(self, a, b) -> bool:
        return all(x <= y for x, y in zip(a, b))

    def scalar(self, a) -> float:
        return max(a)

    def ceiling_point(self, value: float) -> tuple:
        return (float(value),) * self.dim

    def to_json(self, p):
        return list(p)

    def from_json(self, obj) -> tuple:
        return self.canonical(obj)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}


@dataclass(frozen=True)
class SampledFunction(LabelSpace):
    """Functions on [0, 1] sampled on a uniform grid.

    The pointwise order and supremum metric of C([0,1]) become the
    coordinatewise order and max-abs-difference on the grid vector; the
    scalarization is the supremum value.
    """

    grid_size: int = 32
    kind = "function"

    def canonical(self, p) -> tuple:
        return _as_float_tuple(p, self.grid_size, f"sampled function on {self.grid_size} grid points")

    def validate(self, p) -> None:
        self.canonical(p)

    def dist(self, a, b) -> float:
        return max(abs(x - y) for x, y in zip(a, b))

    def leq(self, a, b) -> bool:
        return all(x <= y for x, y in zip(a, b))

    def scalar(self, a) -> float:
        return max(a)

    def ceiling_point(self, value: float) -> tuple:
        return (float(value),) * self.grid_size

    def to_json(self, p):
        return list(p)

    def from_json(self, obj) -> tuple:
        return self.canonical(obj)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "grid": self.grid_size}


@dataclass(frozen=True)
class PsdMatrix(LabelSpace):
    """Symmetric PSD matrices with the Loewner order and Frobenius metric.

    Loewner comparisons and PSD validity use an eigenvalue slack of
    ``LOEWNER_TOL`` since floating-point spectra are never exactly zero.
    """

    dim: int
    kind = "psd"

    def canonical(self, p) -> tuple:
        arr = np.asarray(p, dtype=float)
        if arr.shape != (self.dim, self.dim):
            arr = arr.reshape(self.dim, self.dim)
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix label entries must be finite")
        return tuple(tuple(float(v) for v in row) for row in arr)

    def validate(self, p) -> None:
        arr = np.asarray(self.canonical(p), dtype=float)
        if not np.allclose(arr, arr.T, atol=1e-9):
            raise ValueError("matrix label must be symmetric")
        if np.linalg.eigvalsh(arr).min() < -LOEWNER_TOL:
            raise ValueError("matrix label must be positive semidefinite")

    def dist(self, a, b) -> float:
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        return float(np.linalg.norm(diff))

    def leq(self, a, b) -> bool:
        diff = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        return float(np.linalg.eigvalsh(diff)[0]) >= -LOEWNER_TOL

    def scalar(self, a) -> float:
        return float(np.trace(np.asarray(a, dtype=float)))

    def ceiling_point(self, value: float) -> tuple:
        return self.canonical(np.eye(self.dim) * (float(value) / self.dim))

    def to_json(self, p):
        return [v for row in p for v in row]

    def from_json(self, obj) -> tuple:
        return self.canonical(np.asarray(obj, dtype=float).reshape(self.dim, self.dim))

    def descriptor(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}


def label_space_from_descriptor(obj: dict) -> LabelSpace:
    kind = obj.get("kind")
    if kind == "real":
        return RealLine()
    if kind == "vector":
        return EuclideanVector(int(obj["dim"]))
    if kind == "function":
        return SampledFunction(int(obj["grid"]))
    if kind == "psd":
        return PsdMatrix(int(obj["dim"]))
    raise ValueError(f"unknown label space kind: {kind!r}")


# ---------------------------------------------------------------------------
# Metric pair spaces
# ---------------------------------------------------------------------------


class MetricPairSpace:
    """A metric space with a collapsed diagonal, exposing d, d(., A), and d1."""

    def dist(self, x: QuotientPoint, y: QuotientPoint) -> float:
        """Ambient metric between off-diagonal representatives."""
        raise NotImplementedError

    def dist_to_diagonal(self, x: QuotientPoint) -> float:
        raise NotImplementedError

    def validate_point(self, x: PointLike) -> None:
        raise NotImplementedError

    def point_to_json(self, x: PointLike):
        raise NotImplementedError

    def point_from_json(self, obj) -> PointLike:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError

    def d1(self, x: PointLike, y: PointLike) -> float:
        """The strengthened metric on the quotient, with basepoint support."""
        if isinstance(x, Basepoint):
            return 0.0 if isinstance(y, Basepoint) else self.dist_to_diagonal(y)
        if isinstance(y, Basepoint):
            return self.dist_to_diagonal(x)
        if x == y:
            return 0.0
        return min(self.dist(x, y), self.dist_to_diagonal(x) + self.dist_to_diagonal(y))


@dataclass(frozen=True)
class BirthDeathSpace(MetricPairSpace):
    """Ordered pairs over a label space with the l1 product metric.

    The diagonal is {(p, p)}; its distance to a point (b, d) is exactly
    ``labels.dist(b, d)``: taking the diagonal candidate (b, b) attains
    that cost, and the triangle inequality shows no candidate beats it.
    """

    labels: LabelSpace

    def point(self, birth, death) -> PointLike:
        """Canonical quotient point for a birth-death pair.

        Pairs with metrically equal coordinates are the diagonal class, so
        they canonicalize to :data:`BASEPOINT`.
        """
        b = self.labels.canonical(birth)
        d = self.labels.canonical(death)
        if self.labels.dist(b, d) == 0.0:
            return BASEPOINT
        return QuotientPoint((b, d))

    def birth(self, x: QuotientPoint) -> Payload:
        return x.payload[0]

    def death(self, x: QuotientPoint) -> Payload:
        return x.payload[1]

    def dist(self, x: QuotientPoint, y: QuotientPoint) -> float:
        bx, dx = x.payload
        by, dy = y.payload
        return self.labels.dist(bx, by) + self.labels.dist(dx, dy)

    def dist_to_diagonal(self, x: QuotientPoint) -> float:
        b, d = x.payload
        return self.labels.dist(b, d)

    def validate_point(self, x: PointLike) -> None:
        if isinstance(x, Basepoint):
            return
        try:
            b, d = x.payload
            self.labels.validate(b)
            self.labels.validate(d)
        except (TypeError, ValueError) as exc:
            raise SpaceMismatchError(f"point does not belong to {self.descriptor()}: {exc}") from exc

    def point_to_json(self, x: PointLike):
        if isinstance(x, Basepoint):
            return {"basepoint": True}
        b, d = x.payload
        return {"birth": self.labels.to_json(b), "death": self.labels.to_json(d)}

    def point_from_json(self, obj) -> PointLike:
        if obj.get("basepoint"):
            return BASEPOINT
        return self.point(self.labels.from_json(obj["birth"]), self.labels.from_json(obj["death"]))

    def descriptor(self) -> dict:
        return {"kind": "birth-death", "labels": self.labels.descriptor()}


@dataclass(frozen=True)
class ComplexCirclePair(MetricPairSpace):
    """Demo pair: the complex plane with the taxicab metric, diagonal = unit circle.

    Pairwise distance is the l1 (taxicab) distance, while the distance to
    the diagonal is the modulus formula ``||z| - 1|``.  The mismatch is a
    documented convention of this demo pair: the modulus formula is not the
    taxicab distance to the circle, but d1 built from the two is still a
    metric because ``||z| - 1|`` is 1-Lipschitz for the taxicab distance.
    """

    def point(self, z) -> PointLike:
        if isinstance(z, complex):
            re, im = z.real, z.imag
        else:
            re, im = (float(z[0]), float(z[1]))
        if not (math.isfinite(re) and math.isfinite(im)):
            raise ValueError("point must be finite")
        if abs(math.hypot(re, im) - 1.0) == 0.0:
            return BASEPOINT
        return QuotientPoint((re, im))

    def dist(self, x: QuotientPoint, y: QuotientPoint) -> float:
        xr, xi = x.payload
        yr, yi = y.payload
        return abs(xr - yr) + abs(xi - yi)

    def dist_to_diagonal(self, x: QuotientPoint) -> float:
        re, im = x.payload
        return abs(math.hypot(re, im) - 1.0)

    def validate_point(self, x: PointLike) -> None:
        if isinstance(x, Basepoint):
            return
        try:
            re, im = x.payload
            float(re), float(im)
        except (TypeError, ValueError) as exc:
            raise SpaceMismatchError(f"point does not belong to {self.descriptor()}: {exc}") from exc

    def point_to_json(self, x: PointLike):
        if isinstance(x, Basepoint):
            return {"basepoint": True}
        return {"point": [x.payload[0], x.payload[1]]}

    def point_from_json(self, obj) -> PointLike:
        if obj.get("basepoint"):
            return BASEPOINT
        re, im = obj["point"]
        return self.point((re, im))

    def descriptor(self) -> dict:
        return {"kind": "complex-circle"}


def space_from_descriptor(obj: dict) -> MetricPairSpace:
    kind = obj.get("kind")
    if kind == "birth-death":
        return BirthDeathSpace(label_space_from_descriptor(obj["labels"]))
    if kind == "complex-circle":
        return ComplexCirclePair()
    raise ValueError(f"unknown space kind: {kind!r}")


def check_same_space(a: MetricPairSpace, b: MetricPairSpace) -> None:
    if a != b:
        raise SpaceMismatchError(f"incompatible spaces: {a.descriptor()} vs {b.descriptor()}")


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------


def distance_to_diagonal(space: MetricPairSpace, p: QuotientPoint) -> float:
    """Distance from an off-diagonal point to the collapsed diagonal."""
    space.validate_point(p)
    return space.dist_to_diagonal(p)


def strengthened_distance(space: MetricPairSpace, x: PointLike, y: PointLike) -> float:
    """d1(x, y): the direct route capped by the route through the diagonal."""
    space.validate_point(x)
    space.validate_point(y)
    return space.d1(x, y)


def is_uniformly_discrete(space: MetricPairSpace, points: Iterable[PointLike], epsilon: float) -> bool:
    """Whether all distinct pairs in the sample are at d1-distance >= epsilon.

    This certifies only the given finite sample; uniform discreteness of
    the ambient space is not decidable from samples.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    pts = _dedupe_points(points)
    if not pts:
        raise ValueError("need at least one point")
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if space.d1(pts[i], pts[j]) < epsilon:
                return False
    return True


def _dedupe_points(points: Iterable[PointLike]) -> list:
    seen = set()
    out = []
    for p in points:
        key = "basepoint" if isinstance(p, Basepoint) else p.payload
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out


#: Analytic (non-sample) discreteness status of the built-in quotient spaces:
#: every one of them contains points arbitrarily close to the diagonal, so
#: none is uniformly discrete.
AMBIENT_UNIFORMLY_DISCRETE = {
    "birth-death": False,
    "complex-circle": False,
}
