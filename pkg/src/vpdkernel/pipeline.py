"""Batch pipeline: graph -> labelings -> persistence -> diagrams -> bounds.

Runs every configured labeling variant of one seeded graph, writing a
self-contained artifact directory per variant plus a cross-variant summary
table.  All outputs are deterministic functions of the run configuration,
so reruns are byte-identical.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .diagrams import SignedDiagram, single_linkage_dendrogram
from .errors import VpdError
from .features import (
    FeatureSample,
    empirical_kernel,
    empirical_lipschitz_bound,
    feature_map,
    hoeffding_epsilon,
    rff_entropy_transfer,
)
from .graphs import (
    LABELING_VARIANTS,
    SpectralData,
    build_filtration,
    dendrogram_leaves,
    extract_vpd,
    label_edges,
    persistence_h1,
    watts_strogatz,
)
from .kernels import (
    KernelConfig,
    build_certificate,
    default_norming_family,
    entropy_bound,
    gram_matrix,
    kernel,
    lipschitz_bound,
)
from .spaces import BirthDeathSpace

#: Feature-metric radii probed by the entropy-bound report.
ENTROPY_EPS_GRID = (0.2, 0.5, 0.8, 1.1, 1.4)

#: Singleton diagrams added to the per-variant kernel evaluation set.
GRAM_TOP_LIFETIMES = 5

#: Largest support passed to the mass certificate inside the pipeline.
PIPELINE_CERTIFICATE_SUPPORT = 3


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters of one pipeline run."""

    n: int = 30
    k: int = 4
    p: float = 0.3
    graph_seed: int = 7
    variants: tuple[str, ...] = LABELING_VARIANTS
    kernel_dim: int = 128
    bandwidth: float = 1.0
    rff_size: int = 100
    failure_prob: float = 0.05
    rff_seed: int = 99
    certificate_slack: float = 0.1
    certificate_exponent: float = 0.05
    perturbation_factor: float = 0.1
    grid_size: int = 32

    def __post_init__(self):
        if not (self.n > self.k >= 2 and self.k % 2 == 0):
            raise ValueError(f"need n > k >= 2 with k even, got n={self.n}, k={self.k}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        unknown = [v for v in self.variants if v not in LABELING_VARIANTS]
        if unknown:
            raise ValueError(f"unknown variants {unknown}; choose from {LABELING_VARIANTS}")
        if not self.variants:
            raise ValueError("need at least one variant")
        if self.kernel_dim < 1 or self.rff_size < 1 or self.grid_size < 2:
            raise ValueError("kernel_dim and rff_size must be >= 1, grid_size >= 2")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not 0.0 < self.failure_prob < 1.0:
            raise ValueError("failure_prob must lie in (0, 1)")
        if not 0.0 < self.certificate_slack < 1.0 or not 0.0 < self.certificate_exponent < 1.0:
            raise ValueError("certificate parameters must lie in (0, 1)")
        if self.perturbation_factor < 0:
            raise ValueError("perturbation_factor must be nonnegative")

    def to_json(self) -> dict:
        return {
            "graph": {"n": self.n, "k": self.k, "p": self.p, "seed": self.graph_seed},
            "variants": list(self.variants),
            "kernel": {"dim": self.kernel_dim, "t": self.bandwidth, "scheme": "geometric"},
            "rff": {"R": self.rff_size, "failure_prob": self.failure_prob, "seed": self.rff_seed},
            "certificate": {
                "slack": self.certificate_slack,
                "code_exponent": self.certificate_exponent,
            },
            "perturbation_factor": self.perturbation_factor,
            "grid_size": self.grid_size,
        }

    @staticmethod
    def from_json(obj: dict) -> "RunConfig":
        graph = obj.get("graph", {})
        kernel_obj = obj.get("kernel", {})
        rff = obj.get("rff", {})
        cert = obj.get("certificate", {})
        defaults = RunConfig()
        return RunConfig(
            n=int(graph.get("n", defaults.n)),
            k=int(graph.get("k", defaults.k)),
            p=float(graph.get("p", defaults.p)),
            graph_seed=int(graph.get("seed", defaults.graph_seed)),
            variants=tuple(obj.get("variants", defaults.variants)),
            kernel_dim=int(kernel_obj.get("dim", defaults.kernel_dim)),
            bandwidth=float(kernel_obj.get("t", defaults.bandwidth)),
            rff_size=int(rff.get("R", defaults.rff_size)),
            failure_prob=float(rff.get("failure_prob", defaults.failure_prob)),
            rff_seed=int(rff.get("seed", defaults.rff_seed)),
            certificate_slack=float(cert.get("slack", defaults.certificate_slack)),
            certificate_exponent=float(cert.get("code_exponent", defaults.certificate_exponent)),
            perturbation_factor=float(obj.get("perturbation_factor", defaults.perturbation_factor)),
            grid_size=int(obj.get("grid_size", defaults.grid_size)),
        )

    def with_seed(self, seed: int) -> "RunConfig":
        """Override both stochastic seeds with one value."""
        return replace(self, graph_seed=int(seed), rff_seed=int(seed))


def default_config() -> RunConfig:
    """The checked-in default configuration."""
    from importlib.resources import files

    text = files("vpdkernel").joinpath("data/default_config.json").read_text()
    return RunConfig.from_json(json.loads(text))


# ---------------------------------------------------------------------------
# Deterministic file writing
# ---------------------------------------------------------------------------


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, obj) -> None:
    _write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _csv_text(rows: Sequence[Sequence]) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# Per-variant stages
# ---------------------------------------------------------------------------


def kernel_evaluation_set(space: BirthDeathSpace, diagram: SignedDiagram, top: int = GRAM_TOP_LIFETIMES):
    """Diagrams probed by the Gram/feature artifacts: zero, the full diagram,
    and singletons at the longest-lived points."""
    out = [SignedDiagram.zero(space)]
    seen = {out[0].points}
    candidates = [diagram]
    ranked = sorted(diagram.points, key=lambda pm: (-space.dist_to_diagonal(pm[0]), pm[0].payload))
    candidates.extend(SignedDiagram.singleton(space, p) for p, _ in ranked[:top])
    for cand in candidates:
        if cand.points not in seen:
            seen.add(cand.points)
            out.append(cand)
    return out


def certificate_report(space, diagram, config: RunConfig) -> dict:
    """Mass-certificate entry for the bounds report.

    Uses the full diagram when its support fits the pipeline cap, otherwise
    the sub-diagram of the longest-lived points; persistence diagrams are
    nonnegative, so the sign pattern is always basepoint-separated.
    """
    if diagram.is_zero:
        return {"admissible": False, "reason": "empty diagram", "target": None}
    if len(diagram.points) <= PIPELINE_CERTIFICATE_SUPPORT:
        target, scope = diagram, "full"
    else:
        ranked = sorted(diagram.points, key=lambda pm: (-space.dist_to_diagonal(pm[0]), pm[0].payload))
        target = SignedDiagram.build(space, ranked[:PIPELINE_CERTIFICATE_SUPPORT])
        scope = f"top{PIPELINE_CERTIFICATE_SUPPORT}"
    try:
        instance = build_certificate(
            target, config.certificate_slack, config.certificate_exponent, config.bandwidth
        )
    except VpdError as exc:
        return {"admissible": False, "reason": str(exc), "target": scope}
    from .diagrams import mass

    return {
        "admissible": True,
        "target": scope,
        "support": len(target.points),
        "value": instance.bound(),
        "target_mass": mass(target),
        "kernel_value": instance.kernel_value(),
        "kraft_sum": instance.kraft_sum,
        "delta_grid": instance.delta_grid,
        "lattice_size": int(instance.lattice.shape[0]),
    }


def run_variant(graph, spectral, variant: str, config: RunConfig, out_dir: Path) -> dict:
    """All artifacts for one labeling variant; returns the summary row."""
    out_dir.mkdir(parents=True, exist_ok=True)
    labeling = label_edges(graph, spectral, variant, grid_size=config.grid_size)
    _write_json(out_dir / "labels.json", labeling.to_json())

    complex_ = build_filtration(graph, labeling)
    pairs = persistence_h1(complex_)
    label_space = labeling.labels_space
    pair_rows = [["birth_scalar", "death_scalar", "birth_label", "death_label", "dim"]]
    for p in pairs:
        pair_rows.append(
            [
                _fmt(p.birth_value),
                _fmt(p.death_value) if math.isfinite(p.death_value) else "inf",
                json.dumps(label_space.to_json(p.birth_label)),
                json.dumps(label_space.to_json(p.death_label)) if p.death_label is not None else "inf",
                p.dim,
            ]
        )
    _write_atomic(out_dir / "pairs.csv", _csv_text(pair_rows))

    space = BirthDeathSpace(label_space)
    diagram = extract_vpd(pairs, space)
    _write_json(out_dir / "vpd.json", diagram.to_json())

    leaves, mults, ceiling = dendrogram_leaves(pairs, space)
    dendro = single_linkage_dendrogram(space, leaves, mults)
    _write_atomic(out_dir / "dendrogram.newick", dendro.to_newick() + "\n")
    dendro_json = dendro.to_json()
    dendro_json["infinite_death_ceiling"] = ceiling
    _write_json(out_dir / "dendrogram.json", dendro_json)

    family = default_norming_family(space, diagram.support, size=config.kernel_dim)
    kconfig = KernelConfig.geometric(family, config.bandwidth)
    eval_set = kernel_evaluation_set(space, diagram)
    gram = gram_matrix(kconfig, eval_set)
    gram_rows = [[_fmt(v) for v in row] for row in gram]
    _write_atomic(out_dir / "gram.csv", _csv_text(gram_rows))

    sample = FeatureSample.draw(kconfig, config.rff_size, config.rff_seed)
    feature_rows = []
    for d in eval_set:
        phi = feature_map(sample, d)
        row = []
        for z in phi:
            row.append(_fmt(z.real))
            row.append(_fmt(z.imag))
        feature_rows.append(row)
    _write_atomic(out_dir / "features.csv", _csv_text(feature_rows))

    error_table = []
    max_err = 0.0
    for i in range(len(eval_set)):
        for j in range(i, len(eval_set)):
            closed = kernel(kconfig, eval_set[i], eval_set[j])
            emp = empirical_kernel(sample, eval_set[i], eval_set[j])
            err = abs(emp - closed)
            max_err = max(max_err, err)
            error_table.append(
                {
                    "i": i,
                    "j": j,
                    "closed_form": closed,
                    "empirical_re": emp.real,
                    "empirical_im": emp.imag,
                    "abs_error": err,
                }
            )

    lifetimes = [space.dist_to_diagonal(p) for p, m in diagram.points for _ in range(m)]
    mean_lifetime = float(np.mean(lifetimes)) if lifetimes else 0.0
    lip = lipschitz_bound(kconfig, 1.0)
    eps_hat = hoeffding_epsilon(config.rff_size, config.failure_prob, len(eval_set))
    robustness = lip * config.perturbation_factor * mean_lifetime

    entropy_rows = []
    for eps in ENTROPY_EPS_GRID:
        entropy_rows.append(
            {
                "epsilon": eps,
                "bound": entropy_bound(kconfig, eval_set, eps),
                "rff_transfer_bound": rff_entropy_transfer(sample, eval_set, eps),
            }
        )

    n_finite = diagram.total_multiplicity()
    n_essential = sum(1 for p in pairs if not math.isfinite(p.death_value))
    bounds = {
        "variant": variant,
        "space": space.descriptor(),
        "diagram_points": len(diagram.points),
        "finite_classes": n_finite,
        "essential_classes": n_essential,
        "mean_lifetime": mean_lifetime,
        "sigma_w2_sum": kconfig.sigma_w2_sum,
        "lipschitz_bound_unit_norm": lip,
        "hoeffding_epsilon": {
            "R": config.rff_size,
            "failure_prob": config.failure_prob,
            "set_size": len(eval_set),
            "value": eps_hat,
        },
        "robustness_bound": robustness,
        "perturbation_level": config.perturbation_factor * mean_lifetime,
        "mass_certificate": certificate_report(space, diagram, config),
        "entropy_bounds": entropy_rows,
        "rff": {
            "R": config.rff_size,
            "seed": config.rff_seed,
            "config_hash": kconfig.hash(),
            "empirical_lipschitz_bound": empirical_lipschitz_bound(sample),
            "max_abs_error": max_err,
            "kernel_error_table": error_table,
        },
    }
    _write_json(out_dir / "bounds.json", bounds)

    return {
        "variant": variant,
        "lipschitz_bound": lip,
        "approximation_bound": eps_hat,
        "robustness_bound": robustness,
        "finite_classes": n_finite,
        "essential_classes": n_essential,
    }


def run_pipeline(config: RunConfig, out_dir: str | Path, jobs: int = 4) -> dict:
    """Run every configured variant and assemble the summary.

    Variant failures abort only that variant; the summary records the
    diagnostic and the remaining variants still complete.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    graph = watts_strogatz(config.n, config.k, config.p, config.graph_seed)
    spectral = SpectralData.compute(graph)
    _write_json(out / "graph.json", graph.to_json())
    _write_json(out / "config.json", config.to_json())

    def task(variant: str) -> dict:
        try:
            return run_variant(graph, spectral, variant, config, out / variant)
        except Exception as exc:  # noqa: BLE001 - summary carries the diagnostic
            return {"variant": variant, "error": f"{type(exc).__name__}: {exc}"}

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(task, config.variants))

    summary = {"rows": rows}
    _write_json(out / "summary.json", summary)
    csv_rows = [
        [
            "variant",
            "lipschitz_bound",
            "approximation_bound",
            "robustness_bound",
            "finite_classes",
            "essential_classes",
        ]
    ]
    for row in rows:
        if "error" in row:
            csv_rows.append([row["variant"], "error", "error", "error", "error", "error"])
        else:
            csv_rows.append(
                [
                    row["variant"],
                    _fmt(row["lipschitz_bound"]),
                    _fmt(row["approximation_bound"]),
                    _fmt(row["robustness_bound"]),
                    row["finite_classes"],
                    row["essential_classes"],
                ]
            )
    _write_atomic(out / "summary.csv", _csv_text(csv_rows))
    return summary
