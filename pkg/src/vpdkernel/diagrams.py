"""Signed diagrams, the Wasserstein-1 matching metric, and derived invariants.

A :class:`SignedDiagram` is a finite integer-multiplicity signed multiset of
off-diagonal quotient points.  Nonnegative diagrams are ordinary persistence
diagrams; formal differences extend them to a metric abelian group whose
translation-invariant metric ``rho`` restricts to Wasserstein-1 on the
nonnegative cone.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.optimize import linear_sum_assignment

from .errors import CapacityError, SpaceMismatchError
from .spaces import (
    BASEPOINT,
    Basepoint,
    MetricPairSpace,
    PointLike,
    QuotientPoint,
    check_same_space,
    space_from_descriptor,
)

#: Total expanded points accepted by the exact assignment solver.
EXPANSION_CAP = 500

#: Largest point set accepted by the exact covering-number solver.
EXACT_COVER_CAP = 15


@dataclass(frozen=True)
class SignedDiagram:
    """Canonical signed multiset: sorted support, nonzero multiplicities, no basepoint."""

    space: MetricPairSpace
    points: tuple[tuple[QuotientPoint, int], ...]

    @staticmethod
    def build(space: MetricPairSpace, items: Iterable[tuple[PointLike, int]]) -> "SignedDiagram":
        """Canonicalize an iterable of (point, multiplicity) pairs.

        Identical points merge, zero multiplicities drop, and basepoint
        entries drop (the basepoint is the identity of the quotient).
        """
        acc: dict[QuotientPoint, int] = {}
        for point, mult in items:
            if isinstance(point, Basepoint):
                continue
            mult = int(mult)
            if mult == 0:
                continue
            acc[point] = acc.get(point, 0) + mult
        pts = tuple(sorted(((p, m) for p, m in acc.items() if m != 0), key=lambda pm: pm[0].payload))
        return SignedDiagram(space, pts)

    @staticmethod
    def zero(space: MetricPairSpace) -> "SignedDiagram":
        return SignedDiagram(space, ())

    @staticmethod
    def singleton(space: MetricPairSpace, point: PointLike, mult: int = 1) -> "SignedDiagram":
        return SignedDiagram.build(space, [(point, mult)])

    # -- algebra ------------------------------------------------------------

    def _combine(self, other: "SignedDiagram", sign: int) -> "SignedDiagram":
        check_same_space(self.space, other.space)
        items = list(self.points) + [(p, sign * m) for p, m in other.points]
        return SignedDiagram.build(self.space, items)

    def __add__(self, other: "SignedDiagram") -> "SignedDiagram":
        return self._combine(other, 1)

    def __sub__(self, other: "SignedDiagram") -> "SignedDiagram":
        return self._combine(other, -1)

    def __neg__(self) -> "SignedDiagram":
        return SignedDiagram(self.space, tuple((p, -m) for p, m in self.points))

    def positive_part(self) -> "SignedDiagram":
        return SignedDiagram(self.space, tuple((p, m) for p, m in self.points if m > 0))

    def negative_part(self) -> "SignedDiagram":
        return SignedDiagram(self.space, tuple((p, -m) for p, m in self.points if m < 0))

    # -- queries ------------------------------------------------------------

    @property
    def support(self) -> tuple[QuotientPoint, ...]:
        return tuple(p for p, _ in self.points)

    @property
    def is_zero(self) -> bool:
        return not self.points

    @property
    def is_nonnegative(self) -> bool:
        return all(m > 0 for _, m in self.points)

    def total_multiplicity(self) -> int:
        """Sum of absolute multiplicities (the expanded point count)."""
        return sum(abs(m) for _, m in self.points)

    def multiplicity(self, point: QuotientPoint) -> int:
        for p, m in self.points:
            if p == point:
                return m
        return 0

    def expand(self) -> list[QuotientPoint]:
        """Unit-multiplicity expansion; requires a nonnegative diagram."""
        out: list[QuotientPoint] = []
        for p, m in self.points:
            if m < 0:
                raise ValueError("cannot expand a diagram with negative multiplicities")
            out.extend([p] * m)
        return out

    # -- serialization --------------------------------------------------

    def to_json(self) -> dict:
        pts = []
        for p, m in self.points:
            entry = self.space.point_to_json(p)
            entry["multiplicity"] = m
            pts.append(entry)
        return {"space": self.space.descriptor(), "points": pts}

    @staticmethod
    def from_json(obj: dict) -> "SignedDiagram":
        space = space_from_descriptor(obj["space"])
        items = []
        for entry in obj.get("points", []):
            point = space.point_from_json(entry)
            items.append((point, int(entry.get("multiplicity", 1))))
        return SignedDiagram.build(space, items)


# ---------------------------------------------------------------------------
# Wasserstein-1 and the group metric
# ---------------------------------------------------------------------------


def wasserstein1(alpha: SignedDiagram, beta: SignedDiagram) -> float:
    """Exact optimal matching cost between two nonnegative diagrams.

    Multiplicities are expanded to unit points, each side is augmented with
    one diagonal slot per opposing point (cost = distance to the diagonal,
    diagonal-to-diagonal cost 0), and the square assignment problem is
    solved exactly.
    """
    check_same_space(alpha.space, beta.space)
    if not (alpha.is_nonnegative and beta.is_nonnegative):
        raise ValueError("wasserstein1 requires nonnegative diagrams; use grothendieck_rho")
    space = alpha.space
    a = alpha.expand()
    b = beta.expand()
    if len(a) + len(b) > EXPANSION_CAP:
        raise CapacityError(
            f"expanded size {len(a) + len(b)} exceeds the assignment cap {EXPANSION_CAP}"
        )
    m, n = len(a), len(b)
    if m == 0 and n == 0:
        return 0.0
    size = m + n
    cost = np.zeros((size, size))
    a_diag = np.array([space.dist_to_diagonal(p) for p in a])
    b_diag = np.array([space.dist_to_diagonal(p) for p in b])
    for i, p in enumerate(a):
        for j, q in enumerate(b):
            cost[i, j] = space.d1(p, q)
    # Diagonal slots are interchangeable, so every slot carries the same cost.
    cost[:m, n:] = a_diag[:, None]
    cost[m:, :n] = b_diag[None, :]
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def grothendieck_rho(g: SignedDiagram, h: SignedDiagram) -> float:
    """Translation-invariant metric on signed diagrams extending Wasserstein-1.

    Reduces g - h to canonical form and matches its positive part against
    its negative part; adding any common diagram to both arguments leaves
    the value unchanged by construction.
    """
    diff = g - h
    return wasserstein1(diff.positive_part(), diff.negative_part())


def mass(g: SignedDiagram) -> float:
    """Total transport cost of sending every point of ``g`` to the diagonal."""
    space = g.space
    return float(sum(abs(m) * space.dist_to_diagonal(p) for p, m in g.points))


# ---------------------------------------------------------------------------
# Covering numbers
# ---------------------------------------------------------------------------


def pairwise_rho(points: Sequence[SignedDiagram]) -> np.ndarray:
    n = len(points)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = grothendieck_rho(points[i], points[j])
    return dist


def covering_number_from_matrix(dist: np.ndarray, epsilon: float, mode: str = "exact") -> int:
    """Minimum (or greedy) number of open epsilon-balls centered at the points.

    ``exact`` solves minimum set cover over candidate centers = the points
    themselves by subset-mask dynamic programming; ``greedy`` runs
    farthest-first traversal seeded at index 0 and never returns less than
    the exact value.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    n = dist.shape[0]
    if n == 0:
        raise ValueError("need at least one point")
    covered = dist < epsilon  # open balls
    if mode == "exact":
        if n > EXACT_COVER_CAP:
            raise CapacityError(
                f"exact covering is capped at {EXACT_COVER_CAP} points (got {n}); use mode='greedy'"
            )
        masks = []
        for i in range(n):
            mask = 0
            for j in range(n):
                if covered[i, j]:
                    mask |= 1 << j
            masks.append(mask)
        full = (1 << n) - 1
        best = {0: 0}
        frontier = {0}
        count = 0
        while True:
            if full in best:
                return best[full]
            count += 1
            new_frontier = set()
            for state in frontier:
                for mask in masks:
                    nxt = state | mask
                    if nxt not in best:
                        best[nxt] = count
                        new_frontier.add(nxt)
            frontier = new_frontier
            if not frontier:  # pragma: no cover - full always reachable
                raise RuntimeError("set cover search exhausted")
    if mode == "greedy":
        centers = [0]
        while True:
            min_to_center = dist[centers].min(axis=0)
            far = int(np.argmax(min_to_center))
            if min_to_center[far] < epsilon:
                return len(centers)
            centers.append(far)
    raise ValueError(f"unknown covering mode: {mode!r}")


def covering_number(points: Sequence[SignedDiagram], epsilon: float, mode: str = "exact") -> int:
    """Covering number of a finite diagram set under the group metric.

    The greedy seed is the lexicographically smallest diagram so reruns are
    reproducible.
    """
    pts = list(points)
    if not pts:
        raise ValueError("need at least one diagram")
    order = sorted(range(len(pts)), key=lambda i: _diagram_sort_key(pts[i]))
    pts = [pts[i] for i in order]
    return covering_number_from_matrix(pairwise_rho(pts), epsilon, mode=mode)


def _diagram_sort_key(d: SignedDiagram):
    return tuple((p.payload, m) for p, m in d.points)


# ---------------------------------------------------------------------------
# Single-linkage dendrogram
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dendrogram:
    """Binary merge tree over quotient points under single linkage on d1.

    Cluster ids follow the usual convention: leaf ``i`` is cluster ``i``;
    merge ``k`` (0-based) creates cluster ``n + k``.  The induced cophenetic
    distances form the largest ultrametric dominated by d1 on the leaves.
    """

    space: MetricPairSpace
    leaves: tuple[PointLike, ...]
    multiplicities: tuple[int, ...]
    merges: tuple[tuple[int, int, float], ...]

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    def ultrametric(self) -> np.ndarray:
        """Cophenetic distance matrix between leaves."""
        n = self.n_leaves
        members: dict[int, list[int]] = {i: [i] for i in range(n)}
        dist = np.zeros((n, n))
        for k, (a, b, height) in enumerate(self.merges):
            left, right = members.pop(a), members.pop(b)
            for i in left:
                for j in right:
                    dist[i, j] = dist[j, i] = height
            members[n + k] = left + right
        return dist

    def leaf_names(self) -> list[str]:
        names = []
        counter = 0
        for leaf in self.leaves:
            if isinstance(leaf, Basepoint):
                names.append("A")
            else:
                names.append(f"p{counter}")
                counter += 1
        return names

    def to_newick(self) -> str:
        """Newick string with branch lengths = parent height - child height."""
        names = self.leaf_names()
        n = self.n_leaves
        if n == 1:
            return f"{names[0]}:0;"
        height = {i: 0.0 for i in range(n)}
        text = {i: names[i] for i in range(n)}
        for k, (a, b, h) in enumerate(self.merges):
            la = h - height.pop(a)
            lb = h - height.pop(b)
            ta, tb = text.pop(a), text.pop(b)
            text[n + k] = f"({ta}:{la:.12g},{tb}:{lb:.12g})"
            height[n + k] = h
        (root_text,) = text.values()
        return f"{root_text};"

    def to_json(self) -> dict:
        leaves = []
        for name, leaf, mult in zip(self.leaf_names(), self.leaves, self.multiplicities):
            entry = {"name": name, "point": self.space.point_to_json(leaf), "multiplicity": mult}
            leaves.append(entry)
        return {
            "space": self.space.descriptor(),
            "leaves": leaves,
            "merges": [{"a": a, "b": b, "height": h} for a, b, h in self.merges],
        }


def single_linkage_dendrogram(
    space: MetricPairSpace,
    points: Sequence[PointLike],
    multiplicities: Sequence[int] | None = None,
) -> Dendrogram:
    """Single-linkage merge tree of quotient points under d1."""
    pts = list(points)
    if not pts:
        raise ValueError("need at least one leaf")
    mults = list(multiplicities) if multiplicities is not None else [1] * len(pts)
    if len(mults) != len(pts):
        raise ValueError("multiplicities must align with points")
    n = len(pts)
    if n == 1:
        return Dendrogram(space, tuple(pts), tuple(mults), ())
    condensed = np.array([space.d1(pts[i], pts[j]) for i in range(n) for j in range(i + 1, n)])
    merge_rows = linkage(condensed, method="single")
    merges = tuple((int(a), int(b), float(h)) for a, b, h, _ in merge_rows)
    return Dendrogram(space, tuple(pts), tuple(mults), merges)
