"""Translation-invariant Gaussian kernels on the linearization of diagram groups.

A kernel is determined by covariance data: a family of 1-Lipschitz
functionals vanishing at the basepoint, square-summable weights, a
summable nonnegative spectrum, and a bandwidth.  The induced Hilbertian
seminorm of a signed diagram g is

    s(g)^2 = sum_n  spectrum_n * weights_n^2 * f_n(g)^2,

and the kernel is k(g, h) = exp(-(t/2) * s(g - h)^2).  Everything here is
exact finite-rank linear algebra; no sampling is involved (see
:mod:`vpdkernel.features` for the Monte-Carlo side).
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .diagrams import SignedDiagram, covering_number
from .errors import (
    CapacityError,
    CertificatePreconditionError,
    DegenerateGeometryError,
    SpaceMismatchError,
)
from .spaces import (
    BASEPOINT,
    Basepoint,
    MetricPairSpace,
    PointLike,
    QuotientPoint,
    check_same_space,
)

#: Slack used when validating 1-Lipschitz prescriptions against d1.
LIP_TOL = 1e-12

#: Anchor-set sizes supported by the mass certificate lattice enumeration.
CERTIFICATE_SUPPORT_CAP = 6

#: Intermediate row cap for the certificate lattice enumeration.
CERTIFICATE_LATTICE_CAP = 500_000


# ---------------------------------------------------------------------------
# Lipschitz functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LipschitzFunctional:
    """McShane extension of values prescribed on a finite anchor set.

    Evaluation is ``min_y (v(y) + d1(x, y))`` over the anchors, which is the
    canonical 1-Lipschitz extension of a 1-Lipschitz prescription.  The
    anchor set must contain the basepoint with value 0, so every functional
    vanishes at the basepoint and extends linearly to signed diagrams.
    """

    space: MetricPairSpace
    anchors: tuple[PointLike, ...]
    values: tuple[float, ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.anchors) != len(self.values):
            raise ValueError("anchors and values must align")
        if not any(isinstance(a, Basepoint) for a in self.anchors):
            raise ValueError("anchor set must contain the basepoint")
        for a, v in zip(self.anchors, self.values):
            if isinstance(a, Basepoint) and v != 0.0:
                raise ValueError("prescribed basepoint value must be 0")
        n = len(self.anchors)
        for i in range(n):
            for j in range(i + 1, n):
                bound = self.space.d1(self.anchors[i], self.anchors[j])
                if abs(self.values[i] - self.values[j]) > bound + LIP_TOL:
                    raise ValueError(
                        "prescribed values are not 1-Lipschitz on the anchor set "
                        f"(|{self.values[i]} - {self.values[j]}| > d1 = {bound})"
                    )

    def at(self, x: PointLike) -> float:
        key = "basepoint" if isinstance(x, Basepoint) else x.payload
        cached = self._cache.get(key)
        if cached is None:
            cached = min(v + self.space.d1(x, a) for a, v in zip(self.anchors, self.values))
            self._cache[key] = cached
        return cached

    def on_diagram(self, g: SignedDiagram) -> float:
        """Linear extension: sum of multiplicity-weighted point values."""
        return float(sum(m * self.at(p) for p, m in g.points))

    def to_json(self) -> dict:
        return {
            "anchors": [self.space.point_to_json(a) for a in self.anchors],
            "values": list(self.values),
        }


def mcshane(space: MetricPairSpace, anchor_values: Mapping[PointLike, float]) -> LipschitzFunctional:
    """Functional from a point -> value mapping, adding the basepoint if absent."""
    items = dict(anchor_values)
    if not any(isinstance(a, Basepoint) for a in items):
        items[BASEPOINT] = 0.0
    anchors = tuple(sorted(items, key=_anchor_sort_key))
    return LipschitzFunctional(space, anchors, tuple(float(items[a]) for a in anchors))


def basepoint_distance_functional(space: MetricPairSpace) -> LipschitzFunctional:
    """The functional x -> d1(x, basepoint)."""
    return LipschitzFunctional(space, (BASEPOINT,), (0.0,))


def _anchor_sort_key(a: PointLike):
    return (0, ()) if isinstance(a, Basepoint) else (1, a.payload)


# ---------------------------------------------------------------------------
# Kernel configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelConfig:
    """Covariance data (functionals, weights, spectrum, bandwidth) for one kernel."""

    functionals: tuple[LipschitzFunctional, ...]
    weights: np.ndarray
    spectrum: np.ndarray
    bandwidth: float
    scheme: str = "explicit"

    def __post_init__(self):
        if not self.functionals:
            raise ValueError("need at least one functional")
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "spectrum", np.asarray(self.spectrum, dtype=float))
        n = len(self.functionals)
        if self.weights.shape != (n,) or self.spectrum.shape != (n,):
            raise ValueError("weights and spectrum must align with the functionals")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be strictly positive")
        if np.any(self.spectrum < 0):
            raise ValueError("spectrum must be nonnegative")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    @staticmethod
    def geometric(functionals: Sequence[LipschitzFunctional], bandwidth: float) -> "KernelConfig":
        """Default scheme: weights 2^(-n/2) and spectrum 2^(-n), n = 1..N."""
        n = np.arange(1, len(functionals) + 1, dtype=float)
        return KernelConfig(tuple(functionals), 2.0 ** (-n / 2), 2.0 ** (-n), bandwidth, "geometric")

    @property
    def size(self) -> int:
        return len(self.functionals)

    @property
    def space(self) -> MetricPairSpace:
        return self.functionals[0].space

    @property
    def sigma_w2_sum(self) -> float:
        """sum_n spectrum_n * weights_n^2; equals lipschitz_factor^2 / bandwidth."""
        return float(np.sum(self.spectrum * self.weights**2))

    @property
    def w2_sum(self) -> float:
        return float(np.sum(self.weights**2))

    @property
    def lipschitz_factor(self) -> float:
        """sqrt(t * sum sigma_n w_n^2): the uniform Lipschitz scale of the kernel."""
        return math.sqrt(self.bandwidth * self.sigma_w2_sum)

    def functional_values(self, g: SignedDiagram) -> np.ndarray:
        return np.array([f.on_diagram(g) for f in self.functionals])

    def to_json(self) -> dict:
        out = {
            "space": self.space.descriptor(),
            "t": self.bandwidth,
            "scheme": self.scheme,
            "functionals": [f.to_json() for f in self.functionals],
        }
        if self.scheme != "geometric":
            out["weights"] = self.weights.tolist()
            out["spectrum"] = self.spectrum.tolist()
        return out

    @staticmethod
    def from_json(obj: dict) -> "KernelConfig":
        from .spaces import space_from_descriptor

        space = space_from_descriptor(obj["space"])
        functionals = []
        for fobj in obj["functionals"]:
            anchors = tuple(space.point_from_json(a) for a in fobj["anchors"])
            functionals.append(LipschitzFunctional(space, anchors, tuple(float(v) for v in fobj["values"])))
        if obj.get("scheme") == "geometric":
            return KernelConfig.geometric(functionals, float(obj["t"]))
        return KernelConfig(
            tuple(functionals),
            np.asarray(obj["weights"], dtype=float),
            np.asarray(obj["spectrum"], dtype=float),
            float(obj["t"]),
        )

    def hash(self) -> str:
        payload = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def default_norming_family(
    space: MetricPairSpace,
    dataset_points: Sequence[QuotientPoint],
    size: int = 128,
) -> tuple[LipschitzFunctional, ...]:
    """Deterministic functional family anchored on a dataset of quotient points.

    Slot 1 is the basepoint-distance functional.  Slot n >= 2 uses a run of
    consecutive dataset points (sorted by payload; run length cycles 1, 2, 3
    per full pass) with alternating-sign prescriptions +-d1(u, basepoint).
    Prescriptions are made 1-Lipschitz by inf-convolution with d1 before the
    McShane extension, which leaves already-valid prescriptions unchanged.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    base = basepoint_distance_functional(space)
    pts = sorted({p for p in dataset_points}, key=lambda p: p.payload)
    if not pts:
        return (base,) * size
    m = len(pts)
    family = [base]
    for i in range(size - 1):
        run = 1 + ((i // m) % 3)
        run = min(run, m)
        start = i % m
        anchors = [pts[(start + s) % m] for s in range(run)]
        desired = {a: (1.0 if (i + s) % 2 == 0 else -1.0) * space.dist_to_diagonal(a) for s, a in enumerate(anchors)}
        desired[BASEPOINT] = 0.0
        repaired = {
            a: min(desired[y] + space.d1(a, y) for y in desired) for a in anchors
        }
        repaired[BASEPOINT] = 0.0
        family.append(mcshane(space, repaired))
    return tuple(family)


# ---------------------------------------------------------------------------
# Kernel operations
# ---------------------------------------------------------------------------


def evaluate_embedding_norm_sq(config: KernelConfig, g: SignedDiagram) -> float:
    """Squared Hilbertian seminorm sum_n sigma_n w_n^2 f_n(g)^2."""
    check_same_space(config.space, g.space)
    vals = config.functional_values(g)
    return float(np.sum(config.spectrum * config.weights**2 * vals**2))


def kernel(config: KernelConfig, g: SignedDiagram, h: SignedDiagram) -> float:
    """Gaussian kernel value in (0, 1]; depends only on g - h."""
    return math.exp(-0.5 * config.bandwidth * evaluate_embedding_norm_sq(config, g - h))


def feature_metric(config: KernelConfig, g: SignedDiagram, h: SignedDiagram) -> float:
    """RKHS distance between kernel sections: sqrt(2 - 2 k(g, h))."""
    return math.sqrt(max(0.0, 2.0 - 2.0 * kernel(config, g, h)))


def lipschitz_bound(config: KernelConfig, rkhs_norm: float) -> float:
    """Uniform Lipschitz constant bound for an RKHS element of the given norm."""
    if rkhs_norm < 0:
        raise ValueError("rkhs_norm must be nonnegative")
    return config.lipschitz_factor * rkhs_norm


def gram_matrix(config: KernelConfig, diagrams: Sequence[SignedDiagram]) -> np.ndarray:
    """Symmetric kernel matrix of a diagram list; unit diagonal by construction."""
    n = len(diagrams)
    gram = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            gram[i, j] = gram[j, i] = kernel(config, diagrams[i], diagrams[j])
    return gram


def entropy_bound(
    config: KernelConfig,
    points: Sequence[SignedDiagram],
    epsilon: float,
    mode: str = "exact",
) -> int:
    """Covering-number bound in the feature metric via the group metric.

    A cover by rho-balls of radius eps / (sqrt(t) * sqrt(sum sigma w^2))
    pushes forward to a cover by feature-metric eps-balls with the same
    centers, so the returned count upper-bounds the feature-metric covering
    number.  The scale uses the computable bound sqrt(sum sigma_n w_n^2)
    for the embedding operator norm, which only loosens the estimate.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    factor = config.lipschitz_factor
    if factor == 0.0:
        return 1
    return covering_number(points, epsilon / factor, mode=mode)


def rayleigh_compare(
    config1: KernelConfig,
    config2: KernelConfig,
    sample: Sequence[SignedDiagram],
) -> tuple[float, float, bool]:
    """Empirical Rayleigh bounds between two quadratic forms on sample differences.

    Over all differences x of sample elements (and the elements themselves)
    with q1(x) > 0, returns (min, max) of q2(x)/q1(x) plus whether the two
    forms agree within 1e-10 on every candidate.  The true inf/sup gap over
    the whole group can only be wider than the returned interval.
    """
    check_same_space(config1.space, config2.space)
    sample = list(sample)
    if not sample:
        raise ValueError("sample must be nonempty")
    candidates = list(sample)
    for i in range(len(sample)):
        for j in range(i + 1, len(sample)):
            candidates.append(sample[i] - sample[j])
    q1 = np.array([evaluate_embedding_norm_sq(config1, x) for x in candidates])
    q2 = np.array([evaluate_embedding_norm_sq(config2, x) for x in candidates])
    kernels_match = bool(np.max(np.abs(q1 - q2)) <= 1e-10)
    sel = q1 > 0.0
    if not np.any(sel):
        raise ValueError("no sample direction has positive q1; cannot form Rayleigh quotients")
    ratios = q2[sel] / q1[sel]
    return float(ratios.min()), float(ratios.max()), kernels_match


# ---------------------------------------------------------------------------
# Mass certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CertificateInstance:
    """Dedicated covariance data certifying an upper bound on diagram mass.

    The lattice holds every integer-grid 1-Lipschitz prescription on the
    support (basepoint value 0), each carrying a prefix-free code length;
    code lengths set the weights and spectrum of the certificate kernel.
    """

    diagram: SignedDiagram
    slack: float
    code_exponent: float
    bandwidth: float
    anchors: tuple[QuotientPoint, ...]
    multiplicities: tuple[int, ...]
    delta_grid: float
    lattice: np.ndarray
    code_lengths: np.ndarray

    # -- weight bookkeeping ---------------------------------------------

    @property
    def code_weights(self) -> np.ndarray:
        """w(v) = 2^(-(1/2 + delta) L(v))."""
        return 2.0 ** (-(0.5 + self.code_exponent) * self.code_lengths)

    @property
    def code_spectrum(self) -> np.ndarray:
        """sigma(v) = 2^(-(1 + delta) L(v))."""
        return 2.0 ** (-(1.0 + self.code_exponent) * self.code_lengths)

    @property
    def kraft_sum(self) -> float:
        return float(np.sum(2.0 ** (-self.code_lengths.astype(float))))

    @property
    def max_weight_term(self) -> float:
        """max_v sigma(v) w(v)^2 = 2^(-(2 + 3 delta) min L(v))."""
        return float(2.0 ** (-(2.0 + 3.0 * self.code_exponent) * float(self.code_lengths.min())))

    # -- kernel values -----------------------------------------------------

    def inner_products(self) -> np.ndarray:
        """<n, v> for every lattice vector v."""
        return self.lattice @ np.asarray(self.multiplicities, dtype=float)

    def log_one_over_kernel(self) -> float:
        """log(1 / k(g, 0)) over the certificate family, computed directly.

        Equals (t/2) * sum_v sigma(v) w(v)^2 <n, v>^2 without the exp/log
        round-trip, which would lose precision for kernel values near 1.
        """
        terms = 2.0 ** (-(2.0 + 3.0 * self.code_exponent) * self.code_lengths.astype(float))
        return 0.5 * self.bandwidth * float(np.sum(terms * self.inner_products() ** 2))

    def kernel_value(self) -> float:
        return math.exp(-self.log_one_over_kernel())

    # -- the bound -----------------------------------------------------

    def bound_from_log(self, log_one_over_k: float) -> float:
        """Mass bound given log(1/k) for a kernel value at (g, 0)."""
        total_mult = sum(abs(m) for m in self.multiplicities)
        radicand = (2.0 / self.bandwidth) * log_one_over_k / self.max_weight_term
        return (math.sqrt(radicand) + 0.5 * self.delta_grid * total_mult) / (1.0 - self.slack)

    def bound(self) -> float:
        return self.bound_from_log(self.log_one_over_kernel())

    def rounding_vector(self) -> np.ndarray:
        """The grid rounding of (1 - slack) * signed lifetimes; always in the lattice."""
        space = self.diagram.space
        f_eps = np.array(
            [
                (1.0 - self.slack) * math.copysign(1.0, m) * space.dist_to_diagonal(p)
                for p, m in zip(self.anchors, self.multiplicities)
            ]
        )
        return self.delta_grid * np.rint(f_eps / self.delta_grid)

    def config(self) -> KernelConfig:
        """The certificate family as an explicit kernel configuration."""
        space = self.diagram.space
        functionals = []
        for row in self.lattice:
            values = {a: float(v) for a, v in zip(self.anchors, row)}
            values[BASEPOINT] = 0.0
            functionals.append(mcshane(space, values))
        return KernelConfig(tuple(functionals), self.code_weights, self.code_spectrum, self.bandwidth)


def build_certificate(
    g: SignedDiagram,
    slack: float,
    code_exponent: float,
    bandwidth: float = 1.0,
    lattice_cap: int = CERTIFICATE_LATTICE_CAP,
) -> CertificateInstance:
    """Construct the certificate data for an admissible target diagram."""
    if not 0.0 < slack < 1.0:
        raise ValueError(f"slack must lie in (0, 1), got {slack}")
    if not 0.0 < code_exponent < 1.0:
        raise ValueError(f"code exponent must lie in (0, 1), got {code_exponent}")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if g.is_zero:
        raise ValueError("certificate target must be nonzero")
    if len(g.points) > CERTIFICATE_SUPPORT_CAP:
        raise CapacityError(
            f"certificate lattice enumeration is capped at support {CERTIFICATE_SUPPORT_CAP}, "
            f"got {len(g.points)}"
        )
    space = g.space
    anchors = g.support
    mults = tuple(m for _, m in g.points)
    _check_basepoint_separated(space, anchors, mults)

    lifetimes = np.array([space.dist_to_diagonal(p) for p in anchors])
    f0 = np.array([math.copysign(1.0, m) for m in mults]) * lifetimes
    delta = _delta_grid(space, anchors, f0, slack)
    if delta <= 0.0:
        raise DegenerateGeometryError(f"lattice spacing collapsed: delta = {delta}")

    lattice = _enumerate_lattice(space, anchors, lifetimes, delta, lattice_cap)
    code_lengths = _code_lengths(lattice, delta)
    return CertificateInstance(
        diagram=g,
        slack=slack,
        code_exponent=code_exponent,
        bandwidth=bandwidth,
        anchors=anchors,
        multiplicities=mults,
        delta_grid=delta,
        lattice=lattice,
        code_lengths=code_lengths,
    )


def mass_certificate(instance: CertificateInstance) -> float:
    """Upper bound on the mass of the target from one certificate kernel value."""
    return instance.bound()


def _check_basepoint_separated(space, anchors, mults) -> None:
    for i in range(len(anchors)):
        for j in range(i + 1, len(anchors)):
            if (mults[i] > 0) != (mults[j] > 0):
                direct = space.d1(anchors[i], anchors[j])
                through = space.dist_to_diagonal(anchors[i]) + space.dist_to_diagonal(anchors[j])
                if direct < through - LIP_TOL:
                    raise CertificatePreconditionError(
                        "opposite-sign points must satisfy d1(u, v) >= d1(u, [A]) + d1(v, [A]); "
                        f"got {direct} < {through}"
                    )


def _delta_grid(space, anchors, f0, slack) -> float:
    pts = list(anchors) + [BASEPOINT]
    vals = list(f0) + [0.0]
    best = math.inf
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            gap = space.d1(pts[i], pts[j]) - (1.0 - slack) * abs(vals[i] - vals[j])
            best = min(best, gap)
    return 0.5 * best


def _enumerate_lattice(space, anchors, lifetimes, delta, cap) -> np.ndarray:
    """All lattice prescriptions: values in delta*Z, |v(x)| <= d1(x, [A]),
    pairwise |v(x) - v(y)| <= d1(x, y).  Constraints carry a +1e-12 slack so
    boundary vectors (the rounding vector in particular) never drop out."""
    n = len(anchors)
    pair_d1 = np.array([[space.d1(anchors[i], anchors[j]) for j in range(n)] for i in range(n)])
    combos = np.zeros((1, 0))
    for i in range(n):
        steps = int(math.floor((lifetimes[i] + LIP_TOL) / delta))
        axis = delta * np.arange(-steps, steps + 1, dtype=float)
        repeated = np.repeat(combos, len(axis), axis=0)
        column = np.tile(axis, combos.shape[0])[:, None]
        cand = np.hstack([repeated, column])
        mask = np.ones(len(cand), dtype=bool)
        for j in range(i):
            mask &= np.abs(cand[:, j] - cand[:, i]) <= pair_d1[j, i] + LIP_TOL
        cand = cand[mask]
        if cand.shape[0] > cap:
            raise CapacityError(
                f"certificate lattice exceeded {cap} vectors at axis {i + 1}/{n}; "
                "increase the slack or reduce the support"
            )
        combos = cand
    return combos


def _code_lengths(lattice: np.ndarray, delta: float) -> np.ndarray:
    """L(v) = sum_x (2 + floor(log2(1 + |v(x)|/delta))), exactly in integers."""
    steps = np.rint(np.abs(lattice) / delta).astype(np.int64)
    lengths = np.empty(lattice.shape[0], dtype=np.int64)
    for r in range(lattice.shape[0]):
        lengths[r] = sum(2 + (int(s) + 1).bit_length() - 1 for s in steps[r])
    return lengths
