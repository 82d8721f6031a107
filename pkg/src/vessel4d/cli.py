"""Command-line pipeline: one subcommand per stage plus fused/eval modes.

Every run validates its config up front, funnels all randomness through the
config seed, and emits a manifest (config snapshot, input/output hashes,
stage timings) next to its outputs. Report JSON is byte-deterministic for a
fixed config and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .clustering import load_assignment, save_assignment
from .coherence import (
    CoherenceFilter,
    displacement_from_graph,
    read_displacement_csv,
    write_displacement_csv,
)
from .config import ConfigError, PipelineConfig
from .graph import (
    CurationEdit,
    CurationError,
    EdgeGraph,
    EdgeGraphBuilder,
    GraphError,
    apply_curation,
)
from .manifest import RunManifest, StageTimer
from .metrics import (
    RoiError,
    compute_roi_metrics,
    load_rois,
    stress_from_graph,
    write_metric_csvs,
)
from .pipeline import evaluate_bundle, scf_ablation
from .sequence import SequenceError, filter_primitives, load_sequence, write_sequence
from .synth import (
    SynthConfig,
    SynthError,
    degrade,
    generate,
    read_bundle,
    write_bundle,
)

_ERRORS = (
    SequenceError,
    GraphError,
    CurationError,
    RoiError,
    ConfigError,
    SynthError,
    ValueError,
    OSError,
)


def _dump_json(payload: dict, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def _load_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        return PipelineConfig.load(args.config)
    return PipelineConfig().validate()


def _manifest_for(args, config: PipelineConfig, command: str) -> RunManifest:
    return RunManifest(command=command, config=config.to_dict())


def cmd_ingest(args, config: PipelineConfig) -> int:
    manifest = _manifest_for(args, config, "ingest")
    manifest.add_input(args.input)
    with StageTimer(manifest, "ingest"):
        seq = load_sequence(args.input, fmt=args.format)
        filtered = filter_primitives(
            seq,
            min_radius=config.filter.min_radius_mm,
            min_opacity=config.filter.min_opacity,
            min_rgb_std=config.filter.min_rgb_std,
        )
        out = write_sequence(filtered, args.output)
    manifest.add_output(out)
    manifest.write(Path(args.output).with_suffix(".manifest.json"))
    print(f"ingest: kept {filtered.primitive_count}/{seq.primitive_count} tracks, "
          f"{filtered.frame_count} frames -> {out}")
    return 0


def cmd_cluster(args, config: PipelineConfig) -> int:
    from .clustering import cluster_frame0

    manifest = _manifest_for(args, config, "cluster")
    manifest.add_input(args.input)
    with StageTimer(manifest, "cluster"):
        seq = load_sequence(args.input)
        assignment = cluster_frame0(
            seq,
            n_color_groups=config.cluster.color_groups,
            eps=config.cluster.eps_mm,
            min_samples=config.cluster.min_samples,
            seed=config.seed,
        )
        out = save_assignment(assignment, seq.ids, args.output)
    manifest.add_output(out)
    manifest.write(Path(args.output).with_suffix(".manifest.json"))
    print(f"cluster: {assignment.n_clusters} clusters -> {out}")
    return 0


def cmd_graph(args, config: PipelineConfig) -> int:
    from .graph import graph_from_sequence

    manifest = _manifest_for(args, config, "graph")
    manifest.add_input(args.input)
    manifest.add_input(args.assignment)
    with StageTimer(manifest, "graph"):
        seq = load_sequence(args.input)
        assignment = load_assignment(args.assignment, expected_ids=seq.ids)
        graph = graph_from_sequence(seq, assignment, gamma=config.graph.gamma)
        out = graph.save(args.output)
    manifest.add_output(out)
    manifest.write(Path(args.output).with_suffix(".manifest.json"))
    print(f"graph: {graph.vertex_count} vertices, {graph.edge_count} edges -> {out}")
    return 0


def cmd_curate(args, config: PipelineConfig) -> int:
    manifest = _manifest_for(args, config, "curate")
    manifest.add_input(args.graph)
    manifest.add_input(args.edit)
    with StageTimer(manifest, "curate"):
        graph = EdgeGraph.load(args.graph)
        edit = CurationEdit.load(args.edit)
        curated = apply_curation(graph, edit)
        out = curated.save(args.output)
    manifest.add_output(out)
    manifest.write(Path(args.output).with_suffix(".manifest.json"))
    print(
        f"curate: {graph.vertex_count}->{curated.vertex_count} vertices, "
        f"{graph.edge_count}->{curated.edge_count} edges -> {out}"
    )
    return 0


def cmd_smooth(args, config: PipelineConfig) -> int:
    manifest = _manifest_for(args, config, "smooth")
    manifest.add_input(args.graph)
    with StageTimer(manifest, "smooth"):
        graph = EdgeGraph.load(args.graph)
        field = displacement_from_graph(graph)
        smoother = CoherenceFilter(
            alpha=config.coherence.alpha,
            kappa=config.coherence.kappa,
            iterations=config.coherence.iterations,
            epsilon=config.coherence.epsilon,
            enabled=config.coherence.enabled,
        ).fit(graph)
        field = smoother.transform(field)
        out = write_displacement_csv(field, args.output)
    manifest.add_output(out)
    manifest.write(Path(args.output).with_suffix(".manifest.json"))
    state = "smoothed" if config.coherence.enabled else "raw (coherence disabled)"
    print(f"smooth: {state} displacement field -> {out}")
    return 0


def cmd_metrics(args, config: PipelineConfig) -> int:
    manifest = _manifest_for(args, config, "metrics")
    manifest.add_input(args.graph)
    manifest.add_input(args.displacement)
    roi_path = args.rois or config.roi_file
    if roi_path is None:
        raise RoiError("metrics needs --rois (or roi_file in the config)")
    manifest.add_input(roi_path)
    with StageTimer(manifest, "metrics"):
        graph = EdgeGraph.load(args.graph)
        field = read_displacement_csv(args.displacement)
        rois = load_rois(roi_path)
        stress = stress_from_graph(graph, field=field, material=config.material.params())
        metrics = compute_roi_metrics(rois, graph, field, stress)
        frames_out, summary_out = write_metric_csvs(
            metrics, args.frames_out, args.summary_out
        )
    manifest.add_output(frames_out)
    manifest.add_output(summary_out)
    manifest.write(Path(args.summary_out).with_suffix(".manifest.json"))
    for m in metrics:
        print(
            f"metrics: {m.name} d_max={m.displacement_max_mm:.4f} mm "
            f"stress_max={m.stress_max_mpa:.5f} MPa"
        )
    return 0


def _synth_config_from_args(args, config: PipelineConfig) -> SynthConfig:
    synth = SynthConfig(seed=config.seed)
    overrides = {
        "surface": args.surface,
        "condition": args.condition,
        "point_count": args.points,
        "frame_count": args.frames,
        "pull_magnitude_mm": args.pull_magnitude,
        "noise_sigma_mm": args.noise_sigma,
        "outlier_fraction": args.outlier_fraction,
        "outlier_magnitude_mm": args.outlier_magnitude,
        "seed": args.seed,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(synth, **overrides).validate()


def cmd_synth(args, config: PipelineConfig) -> int:
    manifest = _manifest_for(args, config, "synth")
    synth_config = _synth_config_from_args(args, config)
    with StageTimer(manifest, "synth"):
        gt = generate(synth_config, material=config.material.params())
        degraded = None
        if synth_config.noise_sigma_mm > 0 or (
            synth_config.outlier_fraction > 0 and synth_config.outlier_magnitude_mm > 0
        ):
            degraded = degrade(
                gt.sequence,
                noise_sigma=synth_config.noise_sigma_mm,
                outlier_fraction=synth_config.outlier_fraction,
                outlier_magnitude=synth_config.outlier_magnitude_mm,
                seed=synth_config.seed,
            )
        out_dir = write_bundle(args.out, gt, synth_config, degraded=degraded)
    for name in ("sequence.csv", "gt_graph.json", "gt_displacement.csv", "gt_stress.csv", "config.json", "rois.json"):
        manifest.add_output(out_dir / name)
    if degraded is not None:
        manifest.add_output(out_dir / "sequence_degraded.csv")
    manifest.write(out_dir / "manifest.json")
    print(
        f"synth: {synth_config.condition} condition, "
        f"{gt.sequence.primitive_count} points x {gt.sequence.frame_count} frames, "
        f"{gt.gt_graph.vertex_count} GT vertices -> {out_dir}"
    )
    return 0


def cmd_eval(args, config: PipelineConfig) -> int:
    manifest = _manifest_for(args, config, "eval")
    if args.tolerances:
        taus = [float(v) for v in args.tolerances.split(",") if v.strip()]
        config = PipelineConfig.from_dict(
            {**config.to_dict(), "eval": {**config.to_dict()["eval"], "tolerances_mm": taus}}
        )
    with StageTimer(manifest, "eval"):
        bundle = read_bundle(args.gt)
        pred = None
        if args.pred:
            manifest.add_input(args.pred)
            pred = load_sequence(args.pred, frame_rate=bundle.config.frame_rate)
        report, _ = evaluate_bundle(bundle, config, pred_sequence=pred)
        out = _dump_json(report.to_json_dict(), Path(args.out))
    manifest.add_input(Path(args.gt) / "sequence.csv")
    manifest.add_output(out)
    manifest.write(Path(args.out).with_suffix(".manifest.json"))
    print(
        f"eval[{report.condition}]: cd={report.cd_mm:.4f} mm cd_norm={report.cd_norm:.4f} "
        f"delta_cd_rel={report.delta_cd_rel if report.delta_cd_rel is None else round(report.delta_cd_rel, 4)} "
        f"-> {out}"
    )
    return 0


def cmd_ablate_scf(args, config: PipelineConfig) -> int:
    manifest = _manifest_for(args, config, "ablate-scf")
    magnitudes = [float(v) for v in args.pulls.split(",") if v.strip()]
    synth_config = SynthConfig(
        point_count=args.points if args.points is not None else 4000,
        frame_count=args.frames if args.frames is not None else 10,
        noise_sigma_mm=args.noise_sigma if args.noise_sigma is not None else 0.0,
        outlier_fraction=args.outlier_fraction if args.outlier_fraction is not None else 0.05,
        outlier_magnitude_mm=args.outlier_magnitude if args.outlier_magnitude is not None else 2.0,
        seed=args.seed if args.seed is not None else config.seed,
    ).validate()
    with StageTimer(manifest, "ablate-scf"):
        table = scf_ablation(config, synth_config, magnitudes)
        out = _dump_json(table, Path(args.out))
    manifest.add_output(out)
    manifest.write(Path(args.out).with_suffix(".manifest.json"))
    for label in ("with_scf", "without_scf"):
        stress = table[label]["stress"]["bland_altman"]
        print(
            f"ablate-scf {label}: stress bias={stress['bias']:.5f} MPa, "
            f"upper LoA={stress['loa_upper']:.5f} MPa"
        )
    return 0


def cmd_report(args, config: PipelineConfig) -> int:
    manifest = _manifest_for(args, config, "report")
    manifest.add_input(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with StageTimer(manifest, "pipeline"):
        seq = load_sequence(args.input)
        curation = CurationEdit.load(args.curation) if args.curation else None
        filtered = filter_primitives(
            seq,
            min_radius=config.filter.min_radius_mm,
            min_opacity=config.filter.min_opacity,
            min_rgb_std=config.filter.min_rgb_std,
        )
        write_sequence(filtered, out_dir / "filtered.csv")
        builder = EdgeGraphBuilder(
            color_groups=config.cluster.color_groups,
            eps_mm=config.cluster.eps_mm,
            min_samples=config.cluster.min_samples,
            gamma=config.graph.gamma,
            random_state=config.seed,
        )
        graph = builder.fit_transform(filtered)
        save_assignment(builder.assignment_, filtered.ids, out_dir / "assignment.json")
        if curation is not None:
            graph.save(out_dir / "graph_raw.json")
            graph = apply_curation(graph, curation)
        graph.save(out_dir / "graph.json")
        field = displacement_from_graph(graph)
        smoother = CoherenceFilter(
            alpha=config.coherence.alpha,
            kappa=config.coherence.kappa,
            iterations=config.coherence.iterations,
            epsilon=config.coherence.epsilon,
            enabled=config.coherence.enabled,
        ).fit(graph)
        field = smoother.transform(field)
        write_displacement_csv(field, out_dir / "displacement.csv")
        stress = stress_from_graph(graph, field=field, material=config.material.params())

        payload: dict = {
            "vertices": graph.vertex_count,
            "edges": graph.edge_count,
            "frames": graph.frame_count,
            "curated": graph.curated,
            "coherence_enabled": config.coherence.enabled,
        }
        roi_path = args.rois or config.roi_file
        if roi_path:
            manifest.add_input(roi_path)
            rois = load_rois(roi_path)
            metrics = compute_roi_metrics(rois, graph, field, stress)
            write_metric_csvs(
                metrics, out_dir / "metrics_frames.csv", out_dir / "metrics_summary.csv"
            )
            payload["rois"] = {
                m.name: {
                    "d_max_mm": m.displacement_max_mm,
                    "stress_max_mpa": m.stress_max_mpa,
                }
                for m in metrics
            }
        if args.gt:
            bundle = read_bundle(args.gt)
            eval_report, _ = evaluate_bundle(bundle, config, pred_sequence=seq)
            payload["eval"] = eval_report.to_json_dict()
        _dump_json(payload, out_dir / "report.json")
    for name in ("filtered.csv", "assignment.json", "graph.json", "displacement.csv", "report.json"):
        manifest.add_output(out_dir / name)
    if (out_dir / "metrics_summary.csv").exists():
        manifest.add_output(out_dir / "metrics_frames.csv")
        manifest.add_output(out_dir / "metrics_summary.csv")
    manifest.write(out_dir / "manifest.json")
    print(f"report: artifacts in {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vessel4d",
        description="Edge-graph displacement and stress-proxy analysis for "
        "deforming vessel-surface point-cloud sequences.",
    )
    parser.add_argument("--config", help="pipeline config JSON (defaults are built in)")
    parser.add_argument(
        "--print-config",
        action="store_true",
        help="print the effective config as JSON and exit",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="load, validate, and filter a raw sequence")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["csv", "jsonl"], default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cluster", help="frame-0 RGB KMeans + per-group DBSCAN")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("graph", help="track centroids and build the pruned edge graph")
    p.add_argument("--input", required=True)
    p.add_argument("--assignment", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("curate", help="apply a saved curation edit and lock topology")
    p.add_argument("--graph", required=True)
    p.add_argument("--edit", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("smooth", help="spatial coherence filtering of displacements")
    p.add_argument("--graph", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("metrics", help="ROI displacement and stress-proxy tables")
    p.add_argument("--graph", required=True)
    p.add_argument("--displacement", required=True)
    p.add_argument("--rois", default=None)
    p.add_argument("--frames-out", required=True)
    p.add_argument("--summary-out", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("synth", help="generate a synthetic ground-truth bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--condition", choices=["bulk", "pull"], default=None)
    p.add_argument("--surface", choices=["tube", "y_bifurcation"], default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--pull-magnitude", type=float, default=None)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--outlier-fraction", type=float, default=None)
    p.add_argument("--outlier-magnitude", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score a reconstruction against a GT bundle")
    p.add_argument("--gt", required=True, help="ground-truth bundle directory")
    p.add_argument("--pred", default=None, help="override prediction sequence")
    p.add_argument("--out", required=True)
    p.add_argument("--tolerances", default=None, help="comma list of tau values in mm")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "ablate-scf", help="compare agreement with coherence filtering on/off"
    )
    p.add_argument("--out", required=True)
    p.add_argument("--pulls", default="1,2,3,4,5")
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--outlier-fraction", type=float, default=None)
    p.add_argument("--outlier-magnitude", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_ablate_scf)

    p = sub.add_parser("report", help="fused pipeline: all stages into one directory")
    p.add_argument("--input", required=True)
    p.add_argument("--rois", default=None)
    p.add_argument("--curation", default=None)
    p.add_argument("--gt", default=None, help="optional GT bundle for evaluation")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.print_config:
        sys.stdout.write(config.dumps())
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args, config)
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
