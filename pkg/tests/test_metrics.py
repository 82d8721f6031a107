import numpy as np
import pytest

from vessel4d.coherence import DisplacementField
from vessel4d.graph import EdgeGraph
from vessel4d.metrics import (
    MaterialParams,
    RoiError,
    RoiSpec,
    compute_roi_metrics,
    edge_stress,
    load_rois,
    neo_hookean_stress,
    roi_displacement_max,
    roi_displacement_series,
    roi_stress_series,
    save_rois,
    stress_from_graph,
    write_metric_csvs,
)


def line_graph(k=4, t=3, spacing=1.0):
    centroids = np.zeros((k, t, 3))
    for i in range(k):
        centroids[i, :, 0] = i * spacing
    edges = [(i, i + 1) for i in range(k - 1)]
    return EdgeGraph(
        centroids=centroids,
        edges=np.asarray(edges),
        member_counts=np.ones((k, t), dtype=np.int64),
    )


# -- material and stress law --------------------------------------------------


def test_shear_modulus_from_silicone_constants():
    mat = MaterialParams(youngs_modulus_mpa=1.15, poisson=0.5)
    assert mat.shear_modulus_mpa == pytest.approx(0.3833, abs=0.0005)


def test_material_validation():
    with pytest.raises(ValueError):
        MaterialParams(youngs_modulus_mpa=-1.0)
    with pytest.raises(ValueError):
        MaterialParams(poisson=0.6)


def test_stress_zero_at_unit_stretch():
    assert neo_hookean_stress(1.0, mu=0.383) == 0.0


def test_stress_at_small_stretch():
    # lambda = 1.1: 1.21 - 1/1.1 = 0.300909...
    sigma = neo_hookean_stress(1.1, mu=0.383)
    assert sigma == pytest.approx(0.1153, abs=1e-4)
    assert sigma / 0.383 == pytest.approx(0.3009, abs=1e-4)


def test_stress_monotone_and_signed():
    lams = np.linspace(0.5, 2.0, 50)
    sigma = neo_hookean_stress(lams, mu=0.383)
    assert np.all(np.diff(sigma) > 0)
    assert np.all(sigma[lams > 1.0] > 0)
    assert np.all(sigma[lams < 1.0] < 0)


def test_stress_scales_with_mu():
    lams = np.array([0.8, 1.3, 1.7])
    assert np.allclose(
        neo_hookean_stress(lams, mu=2 * 0.383), 2 * neo_hookean_stress(lams, mu=0.383)
    )


def test_edge_stress_baseline_zero_and_growth():
    graph = line_graph(k=3, t=2)
    positions = graph.centroids.copy()
    positions[2, 1, 0] += 0.5  # stretch edge (1,2) at frame 1
    stress = edge_stress(positions, graph.edges, mu=0.383)
    assert np.all(stress.sigma[:, 0] == 0.0)
    assert stress.sigma[0, 1] == 0.0
    assert stress.sigma[1, 1] == pytest.approx(neo_hookean_stress(1.5, 0.383))


def test_edge_stress_zero_baseline_error():
    positions = np.zeros((2, 1, 3))
    with pytest.raises(ValueError, match="zero baseline"):
        edge_stress(positions, np.array([[0, 1]]), mu=0.383)


def test_rigid_motion_invariance(rng):
    k, t = 10, 4
    base = rng.uniform(0, 10, (k, 3))
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    positions = np.empty((k, t, 3))
    positions[:, 0] = base
    for fr in range(1, t):
        positions[:, fr] = base @ q.T + np.array([1.0, -2.0, 0.5]) * fr
    edges = np.asarray([(i, j) for i in range(k) for j in range(i + 1, k)])
    stress = edge_stress(positions, edges, mu=0.383)
    assert np.max(np.abs(stress.sigma)) < 1e-9


# -- ROI aggregation ----------------------------------------------------------


def test_roi_displacement_constant_field():
    u = np.tile([1.0, 0.0, 0.0], (5, 2, 1))
    u[:, 0, :] = 0
    field = DisplacementField(u=u)
    series = roi_displacement_series(field, np.arange(5))
    assert series[1] == pytest.approx(1.0)


def test_roi_displacement_odd_median():
    u = np.zeros((3, 1, 3))
    u[:, 0, 0] = [0.0, 1.0, 2.0]
    series = roi_displacement_series(DisplacementField(u=u), np.arange(3))
    assert series[0] == pytest.approx(1.0)


def test_roi_displacement_even_median_mean_of_central():
    u = np.zeros((2, 1, 3))
    u[:, 0, 0] = [1.0, 3.0]
    series = roi_displacement_series(DisplacementField(u=u), np.arange(2))
    assert series[0] == pytest.approx(2.0)


def test_roi_displacement_max_examples():
    assert roi_displacement_max(np.array([0.0, 0.5, 0.3])) == pytest.approx(0.5)
    assert roi_displacement_max(np.array([0.7, 0.7])) == pytest.approx(0.7)


def test_roi_empty_error():
    field = DisplacementField(u=np.zeros((2, 1, 3)))
    with pytest.raises(RoiError):
        roi_displacement_series(field, np.array([], dtype=np.int64))


def test_roi_stress_rigid_zero():
    graph = line_graph(k=4, t=3)
    stress = stress_from_graph(graph)  # static centroids: lambda == 1
    series = roi_stress_series(stress, np.arange(4))
    assert np.allclose(series, 0.0)


def test_roi_stress_single_edge_and_odd_median():
    graph = line_graph(k=4, t=1)
    stress = stress_from_graph(graph)
    stress.sigma = np.array([[0.01], [0.03], [0.05]])
    assert roi_stress_series(stress, np.array([0, 1]))[0] == pytest.approx(0.01)
    assert roi_stress_series(stress, np.arange(4))[0] == pytest.approx(0.03)


def test_roi_without_interior_edges():
    graph = line_graph(k=4, t=1)
    stress = stress_from_graph(graph)
    with pytest.raises(RoiError, match="no interior edges"):
        roi_stress_series(stress, np.array([0, 2]))


# -- ROI specs ----------------------------------------------------------------


def test_sphere_roi_resolves_on_frame0_only():
    graph = line_graph(k=4, t=2)
    graph.centroids[3, 1, 0] = 0.0  # vertex 3 moves into the sphere later
    roi = RoiSpec(name="R", kind="sphere", center=(0.0, 0.0, 0.0), radius=1.5)
    assert list(roi.resolve(graph)) == [0, 1]


def test_index_roi_bounds_checked():
    graph = line_graph(k=3)
    with pytest.raises(RoiError):
        RoiSpec(name="R", kind="index_list", indices=[0, 9]).resolve(graph)


def test_roi_spec_validation():
    with pytest.raises(RoiError):
        RoiSpec(name="R", kind="blob")
    with pytest.raises(RoiError):
        RoiSpec(name="R", kind="sphere", center=(0, 0, 0))
    with pytest.raises(RoiError):
        RoiSpec(name="R", kind="index_list", indices=[])


def test_roi_json_round_trip(tmp_path):
    rois = [
        RoiSpec(name="A", kind="index_list", indices=[0, 1, 2]),
        RoiSpec(name="B", kind="sphere", center=(1.0, 2.0, 3.0), radius=4.0),
    ]
    path = save_rois(rois, tmp_path / "rois.json")
    loaded = load_rois(path)
    assert [r.name for r in loaded] == ["A", "B"]
    assert loaded[0].indices == [0, 1, 2]
    assert loaded[1].center == (1.0, 2.0, 3.0)
    assert loaded[1].radius == 4.0


def test_metric_csv_output(tmp_path):
    graph = line_graph(k=4, t=2)
    graph.centroids[:, 1, 0] += np.array([0.0, 0.1, 0.2, 0.3])
    field = DisplacementField(u=graph.centroids - graph.centroids[:, :1])
    stress = stress_from_graph(graph, field=field)
    rois = [RoiSpec(name="R1", kind="index_list", indices=[0, 1, 2, 3])]
    metrics = compute_roi_metrics(rois, graph, field, stress)
    frames_path, summary_path = write_metric_csvs(
        metrics, tmp_path / "frames.csv", tmp_path / "summary.csv"
    )
    frames = frames_path.read_text().strip().splitlines()
    assert frames[0] == "roi,frame,d_med_mm,stress_med_mpa"
    assert len(frames) == 1 + 2  # header + T rows for one ROI
    summary = summary_path.read_text().strip().splitlines()
    assert summary[0] == "roi,d_max_mm,stress_max_mpa"
    assert summary[1].startswith("R1,")
    d_max = float(summary[1].split(",")[1])
    assert d_max == pytest.approx(metrics[0].displacement_max_mm)
