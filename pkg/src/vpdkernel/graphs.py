"""Spectral edge labelings of graphs and persistence of lower-star clique filtrations.

The pipeline: generate a graph, label its edges in a partially ordered
metric label space from Laplacian spectral data, totalize the induced
lower-star clique filtration by the monotone scalarization (with a
dimension-then-lexicographic tie-break so faces precede cofaces), reduce
the boundary matrix over GF(2), and read off degree-1 birth-death pairs
with their representative labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .diagrams import SignedDiagram
from .errors import GraphGenerationError, SpaceMismatchError
from .spaces import (
    BASEPOINT,
    Basepoint,
    BirthDeathSpace,
    EuclideanVector,
    LabelSpace,
    Payload,
    PointLike,
    PsdMatrix,
    RealLine,
    SampledFunction,
)

LABELING_VARIANTS = ("real-maxdiag", "r3-heat", "function-profile", "psd-outer")


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with a deterministic construction record."""

    n: int
    edges: tuple[tuple[int, int], ...]
    generator: str = "explicit"
    seed: int = 0
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range")
            if (u, v) != tuple(sorted((u, v))):
                raise ValueError(f"edge ({u}, {v}) must be sorted")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        if list(self.edges) != sorted(self.edges):
            raise ValueError("edge list must be sorted lexicographically")

    @staticmethod
    def from_edges(n: int, edges, generator: str = "explicit", seed: int = 0, params=()) -> "Graph":
        norm = tuple(sorted(tuple(sorted(map(int, e))) for e in edges))
        return Graph(n, norm, generator, seed, tuple(params))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n))
        for u, v in self.edges:
            adj[u, v] = adj[v, u] = 1.0
        return adj

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        neighbors: dict[int, list[int]] = {v: [] for v in range(self.n)}
        for u, v in self.edges:
            neighbors[u].append(v)
            neighbors[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            for w in neighbors[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def component_count(self) -> int:
        parent = list(range(self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v in self.edges:
            parent[find(u)] = find(v)
        return len({find(v) for v in range(self.n)})

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "edges": [list(e) for e in self.edges],
            "seed": self.seed,
            "generator": self.generator,
            "params": {k: v for k, v in self.params},
        }

    @staticmethod
    def from_json(obj: dict) -> "Graph":
        params = tuple(sorted(obj.get("params", {}).items()))
        return Graph.from_edges(
            int(obj["n"]), obj["edges"], obj.get("generator", "explicit"), int(obj.get("seed", 0)), params
        )


def watts_strogatz(n: int, k: int, p: float, seed: int) -> Graph:
    """Small-world graph: ring lattice with clockwise edges rewired with probability p.

    Rewiring draws come from substream ``attempt`` of the counter-based
    generator, one uniform per candidate edge plus as many as needed to find
    a fresh endpoint; disconnected results retry on the next substream, up
    to 100 attempts.  Edge count is exactly n*k/2 by construction.
    """
    if not (n > k >= 2):
        raise ValueError(f"need n > k >= 2, got n={n}, k={k}")
    if k % 2 != 0:
        raise ValueError(f"k must be even, got {k}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    for attempt in range(100):
        edges = _ws_attempt(n, k, p, seed, attempt)
        graph = Graph.from_edges(
            n, edges, generator="watts-strogatz", seed=seed, params=(("k", float(k)), ("p", float(p)))
        )
        if graph.is_connected():
            return graph
    raise GraphGenerationError(f"no connected graph after 100 attempts (n={n}, k={k}, p={p})")


def _ws_attempt(n: int, k: int, p: float, seed: int, attempt: int) -> set:
    stream = iter(rng.uniform_stream(seed, attempt, 8 * n * k + 64))

    def next_uniform() -> float:
        nonlocal stream
        try:
            return float(next(stream))
        except StopIteration:
            # Extremely unlikely at sane densities: chain another block.
            stream = iter(rng.uniform_stream(seed, attempt + 100_000, 8 * n * k + 64))
            return float(next(stream))

    edges = {tuple(sorted((i, (i + j) % n))) for i in range(n) for j in range(1, k // 2 + 1)}
    neighbors: dict[int, set[int]] = {v: set() for v in range(n)}
    for u, v in edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    for j in range(1, k // 2 + 1):
        for i in range(n):
            old = tuple(sorted((i, (i + j) % n)))
            if next_uniform() >= p:
                continue
            if len(neighbors[i]) >= n - 1:
                continue  # saturated vertex: nothing to rewire to
            if old not in edges:
                continue  # already rewired away by an earlier step
            while True:
                w = int(next_uniform() * n)
                w = min(w, n - 1)
                if w != i and w not in neighbors[i]:
                    break
            edges.remove(old)
            neighbors[old[0]].discard(old[1])
            neighbors[old[1]].discard(old[0])
            edges.add(tuple(sorted((i, w))))
            neighbors[i].add(w)
            neighbors[w].add(i)
    return edges


# ---------------------------------------------------------------------------
# Spectral data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Symmetric eigendecomposition of the combinatorial Laplacian."""

    graph: Graph
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # orthonormal columns

    @staticmethod
    def compute(graph: Graph) -> "SpectralData":
        adj = graph.adjacency()
        lap = np.diag(adj.sum(axis=1)) - adj
        eigenvalues, eigenvectors = np.linalg.eigh(lap)
        return SpectralData(graph, eigenvalues, eigenvectors)

    @property
    def laplacian(self) -> np.ndarray:
        return self.eigenvectors @ np.diag(self.eigenvalues) @ self.eigenvectors.T

    @property
    def spectral_gap(self) -> float:
        gap = float(self.eigenvalues[1])
        if gap <= 1e-12:
            raise ValueError("graph is disconnected: spectral gap is zero")
        return gap

    def pseudoinverse_diagonal(self) -> np.ndarray:
        """Diagonal of the Laplacian pseudoinverse over the nonzero spectrum."""
        tol = 1e-12 * max(1.0, float(self.eigenvalues[-1]))
        inv = np.where(self.eigenvalues > tol, 1.0 / np.where(self.eigenvalues > tol, self.eigenvalues, 1.0), 0.0)
        return np.einsum("vi,i,vi->v", self.eigenvectors, inv, self.eigenvectors)

    def heat_diagonal(self, s: float) -> np.ndarray:
        """(e^{-sL})_{vv} for every vertex v."""
        decay = np.exp(-s * self.eigenvalues)
        return np.einsum("vi,i,vi->v", self.eigenvectors, decay, self.eigenvectors)

    def heat_column(self, s: float, base: int) -> np.ndarray:
        """(e^{-sL})_{v, base} for every vertex v."""
        decay = np.exp(-s * self.eigenvalues)
        return self.eigenvectors @ (decay * self.eigenvectors[base])

    def heat_time_scales(self) -> tuple[float, float, float]:
        """Three spectral time scales {0.5, 1, 2} / spectral_gap."""
        gap = self.spectral_gap
        return (0.5 / gap, 1.0 / gap, 2.0 / gap)


# ---------------------------------------------------------------------------
# Edge labelings
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EdgeLabeling:
    """Per-edge labels in a partially ordered metric label space."""

    name: str
    graph: Graph
    labels_space: LabelSpace
    labels: tuple[Payload, ...]  # aligned with graph.edges

    def __post_init__(self):
        if len(self.labels) != len(self.graph.edges):
            raise ValueError("labels must align with the edge list")

    def label(self, edge: tuple[int, int]) -> Payload:
        return self.labels[self.graph.edges.index(edge)]

    def scalars(self) -> np.ndarray:
        return np.array([self.labels_space.scalar(lab) for lab in self.labels])

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "space": self.labels_space.descriptor(),
            "edges": [
                {
                    "u": u,
                    "v": v,
                    "label": self.labels_space.to_json(lab),
                    "scalar": self.labels_space.scalar(lab),
                }
                for (u, v), lab in zip(self.graph.edges, self.labels)
            ],
        }


def _r3_embedding(spectral: SpectralData) -> np.ndarray:
    scales = spectral.heat_time_scales()
    return np.column_stack([spectral.heat_diagonal(s) for s in scales])


def label_edges(
    graph: Graph,
    spectral: SpectralData,
    variant: str,
    grid_size: int = 32,
    base_vertex: int = 0,
) -> EdgeLabeling:
    """One of four deterministic spectral edge labelings.

    real-maxdiag:      max of endpoint Laplacian-pseudoinverse diagonals.
    r3-heat:           coordinatewise max of endpoint heat-diagonal embeddings
                       at the three spectral time scales.
    function-profile:  cumulative-normalized absolute difference of endpoint
                       heat profiles toward a fixed base vertex, sampled on a
                       uniform time grid over [0, 2/gap]: a nondecreasing grid
                       function from 0 to 1.
    psd-outer:         rank-one outer product of the difference of the
                       endpoint r3-heat embeddings.
    """
    if spectral.graph != graph:
        raise SpaceMismatchError("spectral data belongs to a different graph")
    if variant == "real-maxdiag":
        space: LabelSpace = RealLine()
        diag = spectral.pseudoinverse_diagonal()
        labels = tuple(space.canonical(max(diag[u], diag[v])) for u, v in graph.edges)
    elif variant == "r3-heat":
        space = EuclideanVector(3)
        emb = _r3_embedding(spectral)
        labels = tuple(space.canonical(np.maximum(emb[u], emb[v])) for u, v in graph.edges)
    elif variant == "function-profile":
        space = SampledFunction(grid_size)
        times = np.linspace(0.0, 2.0 / spectral.spectral_gap, grid_size)
        profiles = np.column_stack([spectral.heat_column(s, base_vertex) for s in times])  # (n, G)
        labels_list = []
        for u, v in graph.edges:
            diffs = np.abs(profiles[u] - profiles[v])
            cum = np.zeros(grid_size)
            for i in range(1, grid_size):
                cum[i] = cum[i - 1] + diffs[i] + 1e-12
            labels_list.append(space.canonical(cum / cum[-1]))
        labels = tuple(labels_list)
    elif variant == "psd-outer":
        space = PsdMatrix(3)
        emb = _r3_embedding(spectral)
        labels = tuple(space.canonical(np.outer(emb[u] - emb[v], emb[u] - emb[v])) for u, v in graph.edges)
    else:
        raise ValueError(f"unknown labeling variant: {variant!r} (choose from {LABELING_VARIANTS})")
    return EdgeLabeling(variant, graph, space, labels)


# ---------------------------------------------------------------------------
# Filtration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Simplex:
    vertices: tuple[int, ...]
    value: float           # -inf for vertices
    label: Payload | None  # representative label; None for vertices

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    """Clique complex up to dimension 2 in scalarized filtration order.

    The total order is (scalar, dimension, lexicographic vertex key); the
    dimension component keeps faces ahead of cofaces at scalar ties.
    """

    labels_space: LabelSpace
    simplices: tuple[Simplex, ...]

    def __post_init__(self):
        index = {s.vertices: i for i, s in enumerate(self.simplices)}
        for i, s in enumerate(self.simplices):
            for face in _faces(s.vertices):
                j = index.get(face)
                if j is None or j >= i:
                    raise ValueError(f"face {face} does not precede coface {s.vertices}")

    def index(self) -> dict[tuple[int, ...], int]:
        return {s.vertices: i for i, s in enumerate(self.simplices)}


def _faces(vertices: tuple[int, ...]):
    if len(vertices) <= 1:
        return
    for drop in range(len(vertices)):
        yield vertices[:drop] + vertices[drop + 1 :]


def build_filtration(graph: Graph, labeling: EdgeLabeling) -> FilteredComplex:
    """Lower-star clique filtration totalized by the monotone scalarization.

    Each triangle enters at the scalar max of its edges; its representative
    label is the label of that scalar-max edge (lexicographically smallest
    edge key on ties).
    """
    if labeling.graph != graph:
        raise SpaceMismatchError("labeling belongs to a different graph")
    space = labeling.labels_space
    edge_scalar = {e: space.scalar(lab) for e, lab in zip(graph.edges, labeling.labels)}
    edge_label = dict(zip(graph.edges, labeling.labels))

    simplices = [Simplex((v,), -math.inf, None) for v in range(graph.n)]
    entries = []
    for e in graph.edges:
        entries.append(Simplex(e, edge_scalar[e], edge_label[e]))
    neighbors: dict[int, set[int]] = {v: set() for v in range(graph.n)}
    for u, v in graph.edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    for u, v in graph.edges:
        for w in sorted(neighbors[u] & neighbors[v]):
            if w > v:
                tri = (u, v, w)
                tri_edges = [(u, v), (u, w), (v, w)]
                max_scalar = max(edge_scalar[e] for e in tri_edges)
                rep = min(e for e in tri_edges if edge_scalar[e] == max_scalar)
                entries.append(Simplex(tri, max_scalar, edge_label[rep]))
    entries.sort(key=lambda s: (s.value, s.dim, s.vertices))
    return FilteredComplex(space, tuple(simplices) + tuple(entries))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PersistencePair:
    dim: int
    birth_index: int
    death_index: int | None
    birth_value: float
    death_value: float          # math.inf for essential classes
    birth_label: Payload
    death_label: Payload | None


def _reduce_boundary(complex_: FilteredComplex) -> tuple[dict[int, int], set[int]]:
    """GF(2) column reduction over bitmask columns.

    Returns (pivot row -> column) pairs and the set of creator indices
    (columns that reduce to zero).
    """
    index = complex_.index()
    columns: list[int] = []
    for s in complex_.simplices:
        col = 0
        for face in _faces(s.vertices):
            col ^= 1 << index[face]
        columns.append(col)
    low_to_col: dict[int, int] = {}
    creators: set[int] = set()
    for j, col in enumerate(columns):
        while col:
            low = col.bit_length() - 1
            other = low_to_col.get(low)
            if other is None:
                low_to_col[low] = j
                break
            col ^= columns[other]
        columns[j] = col
        if col == 0:
            creators.add(j)
    return low_to_col, creators


def persistence_h1(
    complex_: FilteredComplex,
    keep_zero: bool = False,
    include_h0: bool = False,
) -> list[PersistencePair]:
    """Degree-1 birth-death pairs of the filtration, labels attached.

    By default drops pairs whose birth and death labels coincide in the
    label metric: those extract to diagonal points, which the quotient
    kills anyway.  (For injective scalarizations this is the same as
    dropping scalar-zero-persistence pairs.)  Essential classes get death
    value +inf and death label None.
    """
    space = complex_.labels_space
    simplices = complex_.simplices
    low_to_col, creators = _reduce_boundary(complex_)
    killed = set(low_to_col)

    pairs: list[PersistencePair] = []
    for low, col in sorted(low_to_col.items()):
        birth, death = simplices[low], simplices[col]
        if birth.dim == 1:
            pairs.append(
                PersistencePair(1, low, col, birth.value, death.value, birth.label, death.label)
            )
        elif birth.dim == 0 and include_h0:
            pairs.append(
                PersistencePair(0, low, col, birth.value, death.value, _h0_birth_label(complex_, birth), death.label)
            )
    for j in sorted(creators - killed):
        s = simplices[j]
        if s.dim == 1:
            pairs.append(PersistencePair(1, j, None, s.value, math.inf, s.label, None))
        elif s.dim == 0 and include_h0:
            pairs.append(PersistencePair(0, j, None, s.value, math.inf, _h0_birth_label(complex_, s), None))

    if not keep_zero:
        pairs = [
            p
            for p in pairs
            if p.death_label is None or space.dist(p.birth_label, p.death_label) > 0.0
        ]
    pairs.sort(key=lambda p: (p.dim, p.birth_index))
    return pairs


def _h0_birth_label(complex_: FilteredComplex, vertex: Simplex) -> Payload:
    """A minimal incident edge label for a component's founding vertex."""
    space = complex_.labels_space
    v = vertex.vertices[0]
    incident = [s for s in complex_.simplices if s.dim == 1 and v in s.vertices]
    if not incident:
        return None
    minimal = []
    for s in incident:
        if not any(o is not s and space.leq(o.label, s.label) and space.dist(o.label, s.label) > 0 for o in incident):
            minimal.append(s)
    return min(minimal, key=lambda s: (space.scalar(s.label), s.vertices)).label


def extract_vpd(pairs: Sequence[PersistencePair], space: BirthDeathSpace) -> SignedDiagram:
    """Nonnegative diagram of the finite-death pairs, multiplicities merged."""
    items = []
    for p in pairs:
        if p.death_label is None or not math.isfinite(p.death_value):
            continue
        items.append((space.point(p.birth_label, p.death_label), 1))
    return SignedDiagram.build(space, items)


def dendrogram_leaves(
    pairs: Sequence[PersistencePair],
    space: BirthDeathSpace,
    ceiling: float | None = None,
) -> tuple[list[PointLike], list[int], float]:
    """Dendrogram leaf points for all pairs, essential deaths at a finite ceiling.

    The default ceiling is twice the maximum scalarized label among births
    and finite deaths; it exists purely so essential classes render at a
    finite height and never feeds kernel or transport computations.
    Returns (points, multiplicities, ceiling), with the basepoint leaf first.
    """
    labels_space = space.labels
    scalars = []
    for p in pairs:
        scalars.append(labels_space.scalar(p.birth_label))
        if p.death_label is not None:
            scalars.append(labels_space.scalar(p.death_label))
    if ceiling is None:
        ceiling = 2.0 * max(scalars, default=1.0)
    counts: dict = {}
    collapsed = 0
    for p in pairs:
        death = p.death_label if p.death_label is not None else labels_space.ceiling_point(ceiling)
        point = space.point(p.birth_label, death)
        if isinstance(point, Basepoint):
            collapsed += 1
        else:
            counts[point] = counts.get(point, 0) + 1
    points: list[PointLike] = [BASEPOINT]
    mults = [1 + collapsed]
    for point in sorted(counts, key=lambda q: q.payload):
        points.append(point)
        mults.append(counts[point])
    return points, mults, float(ceiling)
