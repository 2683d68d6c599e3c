"""Command-line driver.

Commands: pipeline, distance, classify, kernel, rff, certificate,
dendrogram.  Exit codes: 0 success, 1 internal error, 2 user-input error.
`--json` switches stdout to machine-parseable JSON.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .diagrams import SignedDiagram, grothendieck_rho, single_linkage_dendrogram
from .errors import VpdError
from .features import FeatureSample, empirical_kernel, empirical_lipschitz_bound, feature_map
from .kernels import (
    KernelConfig,
    build_certificate,
    default_norming_family,
    gram_matrix,
    kernel,
)
from .pipeline import RunConfig, default_config, run_pipeline, _csv_text, _fmt, _write_atomic, _write_json
from .spaces import AMBIENT_UNIFORMLY_DISCRETE, BASEPOINT, check_same_space, is_uniformly_discrete


def _load_diagram(path: str) -> SignedDiagram:
    with open(path) as fh:
        return SignedDiagram.from_json(json.load(fh))


def _load_diagrams(paths) -> list[SignedDiagram]:
    diagrams = [_load_diagram(p) for p in paths]
    for other in diagrams[1:]:
        check_same_space(diagrams[0].space, other.space)
    return diagrams


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_pipeline(args) -> int:
    if args.config:
        with open(args.config) as fh:
            config = RunConfig.from_json(json.load(fh))
    else:
        config = default_config()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.variant:
        config = RunConfig.from_json({**config.to_json(), "variants": [args.variant]})
    out_dir = Path(args.out or "pipeline-out")
    summary = run_pipeline(config, out_dir)
    _emit(args, {"out": str(out_dir), **summary}, f"wrote {out_dir}/summary.json")
    for row in summary["rows"]:
        if "error" in row:
            print(f"variant {row['variant']} failed: {row['error']}", file=sys.stderr)
    return 0


def cmd_distance(args) -> int:
    a, b = _load_diagrams([args.diagram_a, args.diagram_b])
    value = grothendieck_rho(a, b)
    _emit(args, {"rho": value}, f"{value:.12g}")
    return 0


def cmd_classify(args) -> int:
    diagram = _load_diagram(args.points)
    if diagram.is_zero:
        raise ValueError("points file holds an empty diagram; nothing to classify")
    space = diagram.space
    sample = [BASEPOINT, *diagram.support]
    discrete = is_uniformly_discrete(space, sample, args.epsilon)
    kind = space.descriptor()["kind"]
    ambient = AMBIENT_UNIFORMLY_DISCRETE.get(kind)
    if discrete:
        interpretation = (
            f"sample-uniformly-discrete at {args.epsilon:g}; if the ambient quotient is "
            "uniformly discrete, the diagram group is discrete and locally compact"
        )
    else:
        interpretation = (
            f"not uniformly discrete at {args.epsilon:g}; if this persists in the ambient "
            "quotient, the diagram group is neither discrete nor locally compact"
        )
    ambient_note = (
        "ambient quotient of this built-in space is not uniformly discrete"
        if ambient is False
        else "ambient status unknown"
    )
    payload = {
        "epsilon": args.epsilon,
        "sample_size": len(sample),
        "sample_uniformly_discrete": discrete,
        "ambient_uniformly_discrete": ambient,
        "interpretation": interpretation,
        "ambient_note": ambient_note,
    }
    _emit(args, payload, f"{interpretation}\n({ambient_note})")
    return 0


def _config_for(args, diagrams) -> KernelConfig:
    points = [p for d in diagrams for p in d.support]
    family = default_norming_family(diagrams[0].space, points, size=args.dim)
    return KernelConfig.geometric(family, args.t)


def cmd_kernel(args) -> int:
    diagrams = _load_diagrams(args.diagrams)
    config = _config_for(args, diagrams)
    gram = gram_matrix(config, diagrams)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_atomic(out_dir / "gram.csv", _csv_text([[_fmt(v) for v in row] for row in gram]))
    _write_json(out_dir / "kernel_config.json", config.to_json())
    _emit(
        args,
        {"gram": [list(map(float, row)) for row in gram], "config_hash": config.hash()},
        f"wrote {out_dir}/gram.csv ({len(diagrams)}x{len(diagrams)})",
    )
    return 0


def cmd_rff(args) -> int:
    diagrams = _load_diagrams(args.diagrams)
    config = _config_for(args, diagrams)
    sample = FeatureSample.draw(config, args.R, args.seed if args.seed is not None else 0)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for d in diagrams:
        phi = feature_map(sample, d)
        row = []
        for z in phi:
            row.append(_fmt(z.real))
            row.append(_fmt(z.imag))
        rows.append(row)
    _write_atomic(out_dir / "features.csv", _csv_text(rows))
    errors = []
    for i in range(len(diagrams)):
        for j in range(i, len(diagrams)):
            closed = kernel(config, diagrams[i], diagrams[j])
            emp = empirical_kernel(sample, diagrams[i], diagrams[j])
            errors.append({"i": i, "j": j, "closed_form": closed, "abs_error": abs(emp - closed)})
    meta = {
        **sample.metadata(),
        "empirical_lipschitz_bound": empirical_lipschitz_bound(sample),
        "kernel_error_table": errors,
    }
    _write_json(out_dir / "rff_metadata.json", meta)
    _emit(args, meta, f"wrote {out_dir}/features.csv and {out_dir}/rff_metadata.json")
    return 0


def cmd_certificate(args) -> int:
    diagram = _load_diagram(args.diagram)
    instance = build_certificate(diagram, args.slack, args.code_exponent, args.t)
    from .diagrams import mass

    payload = {
        "bound": instance.bound(),
        "mass": mass(diagram),
        "kernel_value": instance.kernel_value(),
        "kraft_sum": instance.kraft_sum,
        "delta_grid": instance.delta_grid,
        "lattice_size": int(instance.lattice.shape[0]),
        "support": len(diagram.points),
    }
    _emit(
        args,
        payload,
        f"mass bound {payload['bound']:.12g} (true mass {payload['mass']:.12g}, "
        f"lattice {payload['lattice_size']})",
    )
    return 0


def cmd_dendrogram(args) -> int:
    diagram = _load_diagram(args.diagram)
    points = [BASEPOINT, *diagram.support]
    mults = [1, *(m for _, m in diagram.points)]
    dendro = single_linkage_dendrogram(diagram.space, points, mults)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_atomic(out_dir / "dendrogram.newick", dendro.to_newick() + "\n")
    _write_json(out_dir / "dendrogram.json", dendro.to_json())
    _emit(args, dendro.to_json(), dendro.to_newick())
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="run configuration JSON")
    shared.add_argument("--seed", type=int, help="override stochastic seeds")
    shared.add_argument("--json", action="store_true", help="JSON on stdout")
    shared.add_argument("--out", help="output directory")
    shared.add_argument("--variant", help="restrict to one labeling variant")

    parser = argparse.ArgumentParser(prog="vpdkernel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", parents=[shared], help="run the full batch pipeline")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("distance", parents=[shared], help="group metric between two diagram files")
    p.add_argument("diagram_a")
    p.add_argument("diagram_b")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("classify", parents=[shared], help="uniform-discreteness certificate of a sample")
    p.add_argument("points", help="diagram JSON whose support is the sample")
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("kernel", parents=[shared], help="Gram matrix of diagram files")
    p.add_argument("diagrams", nargs="+")
    p.add_argument("--dim", type=int, default=128, help="functional family size")
    p.add_argument("--t", type=float, default=1.0, help="bandwidth")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("rff", parents=[shared], help="random feature matrix of diagram files")
    p.add_argument("diagrams", nargs="+")
    p.add_argument("--R", type=int, default=100, help="number of feature draws")
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--t", type=float, default=1.0)
    p.set_defaults(func=cmd_rff)

    p = sub.add_parser("certificate", parents=[shared], help="mass certificate of a diagram file")
    p.add_argument("diagram")
    p.add_argument("--slack", type=float, default=0.1)
    p.add_argument("--code-exponent", dest="code_exponent", type=float, default=0.05)
    p.add_argument("--t", type=float, default=1.0)
    p.set_defaults(func=cmd_certificate)

    p = sub.add_parser("dendrogram", parents=[shared], help="single-linkage dendrogram of a diagram file")
    p.add_argument("diagram")
    p.set_defaults(func=cmd_dendrogram)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VpdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
