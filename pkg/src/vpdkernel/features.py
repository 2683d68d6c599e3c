"""Random Fourier features for the Gaussian kernels on diagram groups.

A feature sample holds R independent draws from the centered Gaussian with
the config's diagonal covariance spectrum.  Draw r comes from substream r
of the counter-based generator in :mod:`vpdkernel.rng`, so samples are
reproducible bit-for-bit and independent of evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .diagrams import SignedDiagram, covering_number
from .kernels import CertificateInstance, KernelConfig
from .spaces import check_same_space


@dataclass(frozen=True, eq=False)
class FeatureSample:
    """R Gaussian frequency draws plus cached squared norms."""

    config: KernelConfig
    size: int
    seed: int
    draws: np.ndarray      # (R, N): draw r is row r
    sq_norms: np.ndarray   # (R,): ||u_r||^2

    @staticmethod
    def draw(config: KernelConfig, size: int, seed: int) -> "FeatureSample":
        """Sample R frequency vectors; coordinate n has variance spectrum_n."""
        if size < 1:
            raise ValueError("size must be >= 1")
        from . import rng

        scale = np.sqrt(config.spectrum)
        draws = np.empty((size, config.size))
        for r in range(size):
            draws[r] = scale * rng.normal_stream(seed, r, config.size)
        return FeatureSample(config, size, int(seed), draws, np.sum(draws**2, axis=1))

    def phases(self, g: SignedDiagram) -> np.ndarray:
        """sqrt(t) * <J g, u_r> for every draw r."""
        check_same_space(self.config.space, g.space)
        embedded = self.config.weights * self.config.functional_values(g)
        return math.sqrt(self.config.bandwidth) * (self.draws @ embedded)

    def metadata(self) -> dict:
        return {"R": self.size, "seed": self.seed, "config_hash": self.config.hash()}


def feature_map(sample: FeatureSample, g: SignedDiagram) -> np.ndarray:
    """Unit-modulus phase features scaled by R^(-1/2); a complex length-R vector."""
    return np.exp(1j * sample.phases(g)) / math.sqrt(sample.size)


def empirical_kernel(sample: FeatureSample, g: SignedDiagram, h: SignedDiagram) -> complex:
    """Monte-Carlo kernel estimate: mean phase on g - h.

    Hermitian in (g, h) and exactly 1 on the diagonal; the imaginary part
    vanishes only in expectation and is kept.
    """
    return complex(np.mean(np.exp(1j * sample.phases(g - h))))


def hoeffding_epsilon(size: int, failure_prob: float, set_size: int) -> float:
    """Deviation level that a size-R sample exceeds with probability < failure_prob.

    Inverts the union-Hoeffding tail 4 |S|^2 exp(-R eps^2 / 4) = failure_prob
    for the max kernel error over a set of the given cardinality.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    if not 0.0 < failure_prob < 1.0:
        raise ValueError(f"failure_prob must lie in (0, 1), got {failure_prob}")
    if set_size < 1:
        raise ValueError("set_size must be >= 1")
    return math.sqrt((4.0 / size) * math.log(4.0 * set_size**2 / failure_prob))


def empirical_lipschitz_bound(sample: FeatureSample) -> float:
    """Lipschitz bound sqrt(t) * sqrt(sum w_n^2) * sqrt(mean ||u_r||^2).

    Uses the computable bound sqrt(sum w_n^2) for the embedding operator
    norm, which preserves the direction of the inequality.
    """
    mean_sq = float(np.mean(sample.sq_norms))
    return math.sqrt(sample.config.bandwidth * sample.config.w2_sum * mean_sq)


def rff_mass_bound(
    sample: FeatureSample,
    instance: CertificateInstance,
    eps_hat: float,
) -> float | None:
    """Mass bound from the empirical kernel value at (g, 0), or None.

    Requires a sample drawn over the certificate family.  Abstains (returns
    None) unless Re k_hat(g, 0) >= 2 * eps_hat, in which case the exact
    kernel value is replaced by the concentration-adjusted estimate.
    """
    if eps_hat <= 0:
        raise ValueError("eps_hat must be positive")
    g = instance.diagram
    zero = SignedDiagram.zero(g.space)
    re_k = empirical_kernel(sample, g, zero).real
    if re_k < 2.0 * eps_hat:
        return None
    return instance.bound_from_log(math.log(1.0 / (re_k - eps_hat)))


def rff_entropy_transfer(
    sample: FeatureSample,
    points: Sequence[SignedDiagram],
    epsilon: float,
    mode: str = "exact",
) -> int:
    """Covering-number bound for the feature-map image of a diagram set.

    A group-metric cover at radius eps / Lip pushes forward to a cover of
    the image at radius eps; a zero Lipschitz bound means the map is
    constant and one ball suffices.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    lip = empirical_lipschitz_bound(sample)
    if lip == 0.0:
        return 1
    return covering_number(points, epsilon / lip, mode=mode)
