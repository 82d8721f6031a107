"""End-to-end orchestration: sequence -> graph -> smoothing -> metrics -> eval.

Stages are pure functions over the on-disk formats, so running them
separately through intermediate files produces bit-identical results to the
fused pipeline. Evaluation compares the pipeline's clustered vertex cloud
against the dense ground-truth point set and the bead-level ground-truth
graph from a synth bundle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherence import (
    CoherenceFilter,
    DisplacementField,
    displaced_positions,
    displacement_from_graph,
)
from .config import PipelineConfig
from .evaluation import (
    AgreementResult,
    EvalReport,
    agreement,
    cd_normalized,
    chamfer,
    precision_recall_f,
    roi_error,
    temporal_delta_cd,
)
from .graph import CurationEdit, EdgeGraph, EdgeGraphBuilder, apply_curation
from .metrics import (
    RoiMetrics,
    RoiSpec,
    StressField,
    compute_roi_metrics,
    stress_from_graph,
)
from .sequence import PrimitiveSequence, filter_primitives
from .synth import Bundle, SynthConfig, default_rois, degrade, generate


@dataclass
class PipelineResult:
    """All per-stage artifacts of one pipeline run."""

    filtered: PrimitiveSequence
    graph: EdgeGraph
    displacement: DisplacementField
    stress: StressField
    positions: np.ndarray  # (K, T, 3) reconstituted x0 + u

    @property
    def frame_points(self) -> list[np.ndarray]:
        return [self.positions[:, t] for t in range(self.positions.shape[1])]


def run_pipeline(
    sequence: PrimitiveSequence,
    config: PipelineConfig | None = None,
    curation: CurationEdit | None = None,
) -> PipelineResult:
    """Run filter -> cluster/graph -> (curate) -> smooth -> stress."""
    config = (config or PipelineConfig()).validate()
    filtered = filter_primitives(
        sequence,
        min_radius=config.filter.min_radius_mm,
        min_opacity=config.filter.min_opacity,
        min_rgb_std=config.filter.min_rgb_std,
    )
    builder = EdgeGraphBuilder(
        color_groups=config.cluster.color_groups,
        eps_mm=config.cluster.eps_mm,
        min_samples=config.cluster.min_samples,
        gamma=config.graph.gamma,
        random_state=config.seed,
    )
    graph = builder.fit_transform(filtered)
    if curation is not None:
        graph = apply_curation(graph, curation)
    lock = graph.topology_hash() if graph.curated else None

    field = displacement_from_graph(graph)
    smoother = CoherenceFilter(
        alpha=config.coherence.alpha,
        kappa=config.coherence.kappa,
        iterations=config.coherence.iterations,
        epsilon=config.coherence.epsilon,
        enabled=config.coherence.enabled,
    ).fit(graph)
    field = smoother.transform(field)
    positions = displaced_positions(graph, field)
    stress = stress_from_graph(graph, field=field, material=config.material.params())
    if lock is not None and graph.topology_hash() != lock:
        raise RuntimeError("locked topology changed during downstream processing")
    return PipelineResult(
        filtered=filtered,
        graph=graph,
        displacement=field,
        stress=stress,
        positions=positions,
    )


def pipeline_roi_metrics(
    result: PipelineResult, rois: list[RoiSpec]
) -> list[RoiMetrics]:
    return compute_roi_metrics(rois, result.graph, result.displacement, result.stress)


def _gt_roi_metrics(bundle: Bundle, config: PipelineConfig, rois: list[RoiSpec]):
    gt_stress = stress_from_graph(bundle.gt_graph, material=config.material.params())
    return compute_roi_metrics(rois, bundle.gt_graph, bundle.gt_displacement, gt_stress)


def evaluate_bundle(
    bundle: Bundle,
    config: PipelineConfig | None = None,
    pred_sequence: PrimitiveSequence | None = None,
    condition: str | None = None,
) -> tuple[EvalReport, PipelineResult]:
    """Run the pipeline on a bundle's input and score it against ground truth.

    The prediction defaults to the bundle's degraded sequence when present,
    otherwise the clean one. Point-set metrics compare the clustered vertex
    positions against the dense GT points; last-frame metrics follow the
    maximum-deformation convention.
    """
    from .sequence import load_sequence

    config = (config or PipelineConfig()).validate()
    if pred_sequence is None:
        if bundle.degraded_path is not None:
            pred_sequence = load_sequence(
                bundle.degraded_path, frame_rate=bundle.config.frame_rate
            )
        else:
            pred_sequence = bundle.gt_sequence
    result = run_pipeline(pred_sequence, config)

    pred_frames = result.frame_points
    gt_frames = [bundle.gt_sequence.positions[t] for t in range(bundle.gt_sequence.frame_count)]
    if len(pred_frames) != len(gt_frames):
        raise ValueError("prediction and ground truth frame counts differ")

    last = chamfer(pred_frames[-1], gt_frames[-1])
    cdn = cd_normalized(last.cd_sym, gt_frames[-1])
    if len(pred_frames) >= 2:
        delta_cd, delta_cd_rel = temporal_delta_cd(pred_frames, gt_frames)
    else:
        delta_cd, delta_cd_rel = 0.0, None
    overlap = []
    for tau in config.eval.tolerances_mm:
        p, r, f = precision_recall_f(pred_frames[-1], gt_frames[-1], tau)
        overlap.append({"tau_mm": float(tau), "precision": p, "recall": r, "fscore": f})

    rois = bundle.rois or default_rois(bundle.config)
    ours_metrics = pipeline_roi_metrics(result, rois)
    gt_metrics = _gt_roi_metrics(bundle, config, rois)
    ours_d = {m.name: m.displacement_max_mm for m in ours_metrics}
    gt_d = {m.name: m.displacement_max_mm for m in gt_metrics}
    ours_s = {m.name: m.stress_max_mpa for m in ours_metrics}
    gt_s = {m.name: m.stress_max_mpa for m in gt_metrics}
    d_results, d_err, d_pct = roi_error(ours_d, gt_d, aggregate=config.eval.roi_aggregate)
    s_results, s_err, _ = roi_error(ours_s, gt_s, aggregate=config.eval.roi_aggregate)

    roi_payload = {}
    for dr, sr in zip(d_results, s_results):
        roi_payload[dr.name] = {
            "d_max_mm_ours": ours_d[dr.name],
            "d_max_mm_gt": gt_d[dr.name],
            "displacement_error_mm": dr.error_mm,
            "displacement_error_pct": dr.percent,
            "stress_max_mpa_ours": ours_s[sr.name],
            "stress_max_mpa_gt": gt_s[sr.name],
            "stress_bias_mpa": sr.error_mm,
        }

    report = EvalReport(
        condition=condition or bundle.config.condition,
        cd_mm=last.cd_sym,
        cd_norm=cdn,
        d_p2g_mm=last.d_p2g_mean,
        d_g2p_mm=last.d_g2p_mean,
        delta_cd_mm=delta_cd,
        delta_cd_rel=delta_cd_rel,
        overlap=overlap,
        rois=roi_payload,
        displacement_error_mm=d_err,
        displacement_error_pct=d_pct,
        stress_bias_mpa=s_err,
    )
    if len(rois) >= 3:
        d_pairs = [(gt_d[name], ours_d[name]) for name in sorted(gt_d)]
        s_pairs = [(gt_s[name], ours_s[name]) for name in sorted(gt_s)]
        # degenerate ground truth (e.g. zero stress everywhere under rigid
        # motion) leaves the regression undefined; report it as absent
        try:
            report.displacement_agreement = agreement(d_pairs).to_json_dict()
        except ValueError:
            report.displacement_agreement = None
        try:
            report.stress_agreement = agreement(s_pairs).to_json_dict()
        except ValueError:
            report.stress_agreement = None
    return report, result


@dataclass
class SweepOutcome:
    """Per-metric agreement over a pull-magnitude sweep (ROI x magnitude pairs)."""

    displacement: AgreementResult
    stress: AgreementResult
    pairs_displacement: list[tuple[float, float]]
    pairs_stress: list[tuple[float, float]]


def pull_sweep_agreement(
    config: PipelineConfig,
    synth_config: SynthConfig,
    magnitudes: list[float],
    coherence_enabled: bool | None = None,
) -> SweepOutcome:
    """Agreement over (gt, ours) max-median pairs across ROIs and pull sizes.

    Each magnitude is generated and run as its own condition; the paired
    points (one per ROI per magnitude) feed regression and Bland-Altman, the
    layout used for condition-level agreement reporting.
    """
    from dataclasses import replace

    config = (config or PipelineConfig()).validate()
    if coherence_enabled is not None:
        config = PipelineConfig.from_dict(
            {**config.to_dict(), "coherence": {**config.to_dict()["coherence"], "enabled": coherence_enabled}}
        )
    d_pairs: list[tuple[float, float]] = []
    s_pairs: list[tuple[float, float]] = []
    for mag in magnitudes:
        cfg = replace(synth_config, condition="pull", pull_magnitude_mm=float(mag)).validate()
        gt = generate(cfg, material=config.material.params())
        pred = gt.sequence
        if cfg.noise_sigma_mm > 0 or (cfg.outlier_fraction > 0 and cfg.outlier_magnitude_mm > 0):
            pred = degrade(
                gt.sequence,
                noise_sigma=cfg.noise_sigma_mm,
                outlier_fraction=cfg.outlier_fraction,
                outlier_magnitude=cfg.outlier_magnitude_mm,
                seed=cfg.seed,
            )
        result = run_pipeline(pred, config)
        rois = default_rois(cfg)
        ours = pipeline_roi_metrics(result, rois)
        gt_stress = stress_from_graph(gt.gt_graph, material=config.material.params())
        gt_m = compute_roi_metrics(rois, gt.gt_graph, gt.gt_displacement, gt_stress)
        for om, gm in zip(ours, gt_m):
            d_pairs.append((gm.displacement_max_mm, om.displacement_max_mm))
            s_pairs.append((gm.stress_max_mpa, om.stress_max_mpa))
    return SweepOutcome(
        displacement=agreement(d_pairs),
        stress=agreement(s_pairs),
        pairs_displacement=d_pairs,
        pairs_stress=s_pairs,
    )


def scf_ablation(
    config: PipelineConfig,
    synth_config: SynthConfig,
    magnitudes: list[float] | None = None,
) -> dict:
    """Repeat the pull-sweep agreement with coherence filtering on and off.

    Emits the side-by-side agreement table used to assess what the smoothing
    step buys under injected reconstruction error.
    """
    magnitudes = magnitudes or [1.0, 2.0, 3.0, 4.0, 5.0]
    with_scf = pull_sweep_agreement(config, synth_config, magnitudes, coherence_enabled=True)
    without_scf = pull_sweep_agreement(config, synth_config, magnitudes, coherence_enabled=False)

    def rows(outcome: SweepOutcome) -> dict:
        return {
            "displacement": outcome.displacement.to_json_dict(),
            "stress": outcome.stress.to_json_dict(),
        }

    return {
        "magnitudes_mm": [float(m) for m in magnitudes],
        "n_pairs": len(with_scf.pairs_displacement),
        "with_scf": rows(with_scf),
        "without_scf": rows(without_scf),
    }
