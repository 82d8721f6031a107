import numpy as np
import pytest

from vessel4d.config import PipelineConfig
from vessel4d.graph import CurationEdit
from vessel4d.pipeline import (
    evaluate_bundle,
    pipeline_roi_metrics,
    run_pipeline,
    pull_sweep_agreement,
)
from vessel4d.synth import SynthConfig, degrade, default_rois, generate, read_bundle, write_bundle


@pytest.fixture(scope="module")
def pull_gt():
    return generate(SynthConfig(point_count=900, frame_count=5, condition="pull"))


def test_run_pipeline_stage_outputs(pull_gt):
    result = run_pipeline(pull_gt.sequence, PipelineConfig())
    assert result.graph.vertex_count > 50
    assert result.displacement.smoothed
    assert np.all(result.displacement.u[:, 0] == 0.0)
    assert result.stress.sigma.shape == (result.graph.edge_count, 5)
    assert np.allclose(result.positions[:, 0], result.graph.centroids[:, 0])


def test_run_pipeline_coherence_disabled(pull_gt):
    config = PipelineConfig()
    config.coherence.enabled = False
    result = run_pipeline(pull_gt.sequence, config)
    assert not result.displacement.smoothed
    raw = result.graph.centroids - result.graph.centroids[:, :1]
    assert np.array_equal(result.displacement.u, raw)


def test_run_pipeline_with_curation_locks_topology(pull_gt):
    base = run_pipeline(pull_gt.sequence, PipelineConfig())
    edit = CurationEdit(removed_vertices=[0, 1, 2])
    result = run_pipeline(pull_gt.sequence, PipelineConfig(), curation=edit)
    assert result.graph.curated
    assert result.graph.vertex_count == base.graph.vertex_count - 3
    # persisted old->new map survives
    assert list(result.graph.vertex_ids[:3]) == [3, 4, 5]
    assert result.stress.sigma.shape[0] == result.graph.edge_count


def test_evaluate_bundle_report_fields(tmp_path, pull_gt):
    cfg = SynthConfig(point_count=900, frame_count=5, condition="pull")
    bundle_dir = write_bundle(tmp_path / "bundle", pull_gt, cfg)
    report, result = evaluate_bundle(read_bundle(bundle_dir), PipelineConfig())
    payload = report.to_json_dict()
    for key in (
        "cd_mm",
        "cd_norm",
        "d_p2g_mm",
        "d_g2p_mm",
        "delta_cd_mm",
        "delta_cd_rel",
        "overlap",
        "rois",
        "displacement_error_mm",
        "displacement_error_pct",
        "stress_bias_mpa",
    ):
        assert key in payload
    assert payload["cd_mm"] == payload["d_p2g_mm"] + payload["d_g2p_mm"]
    assert len(payload["overlap"]) == 3
    assert set(payload["rois"]) == {"R1", "R2", "R3", "R4", "R5"}
    # clean input: the clustered cloud tracks GT closely
    assert abs(payload["rois"]["R1"]["displacement_error_mm"]) < 0.1
    assert result.graph.vertex_count > 50


def test_pipeline_roi_metrics_names(pull_gt):
    result = run_pipeline(pull_gt.sequence, PipelineConfig())
    rois = default_rois(SynthConfig(point_count=900, frame_count=5, condition="pull"))
    metrics = pipeline_roi_metrics(result, rois)
    assert [m.name for m in metrics] == ["R1", "R2", "R3", "R4", "R5"]
    assert all(m.displacement_max_mm >= 0 for m in metrics)


def test_sweep_agreement_close_to_identity():
    outcome = pull_sweep_agreement(
        PipelineConfig(),
        SynthConfig(point_count=900, frame_count=4),
        magnitudes=[1.0, 3.0, 5.0],
    )
    assert len(outcome.pairs_displacement) == 15
    assert outcome.displacement.slope == pytest.approx(1.0, abs=0.05)
    assert outcome.displacement.r2 > 0.99


def test_degraded_bundle_feeds_eval(tmp_path):
    cfg = SynthConfig(
        point_count=900,
        frame_count=4,
        condition="pull",
        noise_sigma_mm=0.05,
    )
    gt = generate(cfg)
    noisy = degrade(gt.sequence, noise_sigma=cfg.noise_sigma_mm, seed=cfg.seed)
    bundle_dir = write_bundle(tmp_path / "b", gt, cfg, degraded=noisy)
    bundle = read_bundle(bundle_dir)
    report, _ = evaluate_bundle(bundle, PipelineConfig())
    assert report.cd_mm > 0.0
    assert report.delta_cd_rel is not None
