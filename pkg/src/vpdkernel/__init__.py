"""Wasserstein-1 geometry of signed persistence diagrams and Gaussian kernels on it.

The package has five layers:

- :mod:`vpdkernel.spaces`: metric pairs, partially ordered label spaces,
  and the strengthened quotient metric d1.
- :mod:`vpdkernel.diagrams`: signed diagrams, the exact Wasserstein-1
  matching metric and its translation-invariant group extension, mass,
  covering numbers, and single-linkage dendrograms.
- :mod:`vpdkernel.kernels`: translation-invariant Gaussian kernels from
  Lipschitz functional families, with Lipschitz / mass-certificate /
  entropy / Rayleigh-comparison bounds.
- :mod:`vpdkernel.features`: random Fourier features with deterministic
  counter-based sampling and concentration-based transfer bounds.
- :mod:`vpdkernel.graphs` + :mod:`vpdkernel.pipeline`: spectral edge
  labelings of graphs, lower-star clique filtrations, degree-1
  persistence, and the batch CLI pipeline.
"""

from .diagrams import (
    Dendrogram,
    SignedDiagram,
    covering_number,
    grothendieck_rho,
    mass,
    single_linkage_dendrogram,
    wasserstein1,
)
from .features import (
    FeatureSample,
    empirical_kernel,
    empirical_lipschitz_bound,
    feature_map,
    hoeffding_epsilon,
    rff_entropy_transfer,
    rff_mass_bound,
)
from .graphs import (
    EdgeLabeling,
    FilteredComplex,
    Graph,
    SpectralData,
    build_filtration,
    extract_vpd,
    label_edges,
    persistence_h1,
    watts_strogatz,
)
from .kernels import (
    CertificateInstance,
    KernelConfig,
    LipschitzFunctional,
    build_certificate,
    default_norming_family,
    entropy_bound,
    evaluate_embedding_norm_sq,
    feature_metric,
    gram_matrix,
    kernel,
    lipschitz_bound,
    mass_certificate,
    mcshane,
    rayleigh_compare,
)
from .pipeline import RunConfig, default_config, run_pipeline
from .spaces import (
    BASEPOINT,
    BirthDeathSpace,
    ComplexCirclePair,
    EuclideanVector,
    PsdMatrix,
    QuotientPoint,
    RealLine,
    SampledFunction,
    distance_to_diagonal,
    is_uniformly_discrete,
    strengthened_distance,
)

__version__ = "0.1.0"
