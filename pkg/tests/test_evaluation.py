import numpy as np
import pytest

from vessel4d.evaluation import (
    agreement,
    bland_altman,
    cd_normalized,
    chamfer,
    gt_point_spacing,
    nearest_neighbor_distances,
    ols_regression,
    precision_recall_f,
    roi_error,
    temporal_delta_cd,
)

from oracles import chamfer_brute, precision_recall_f_brute


def test_chamfer_identity(rng):
    p = rng.uniform(0, 5, (20, 3))
    result = chamfer(p, p.copy())
    assert result.cd_sym == 0.0


def test_chamfer_single_points():
    result = chamfer(np.array([[0.0, 0, 0]]), np.array([[3.0, 0, 0]]))
    assert result.d_p2g_mean == pytest.approx(3.0)
    assert result.d_g2p_mean == pytest.approx(3.0)
    assert result.cd_sym == pytest.approx(6.0)  # sum, no division by 2


def test_chamfer_symmetry_exact(rng):
    p = rng.uniform(0, 5, (40, 3))
    g = rng.uniform(0, 5, (25, 3))
    assert chamfer(p, g).cd_sym == chamfer(g, p).cd_sym


@pytest.mark.parametrize("seed", range(15))
def test_chamfer_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    # indexed NN must match brute force up to 500-point instances
    cap = 500 if seed < 3 else 200
    p = rng.uniform(0, 10, (int(rng.integers(1, cap)), 3))
    g = rng.uniform(0, 10, (int(rng.integers(1, cap)), 3))
    ours = chamfer(p, g)
    ref_sym, ref_pg, ref_gp = chamfer_brute(p, g)
    assert ours.cd_sym == pytest.approx(ref_sym, rel=1e-9)
    assert ours.d_p2g_mean == pytest.approx(ref_pg, rel=1e-9)
    assert ours.d_g2p_mean == pytest.approx(ref_gp, rel=1e-9)


def test_nn_distances_match_brute_force_500(rng):
    p = rng.uniform(0, 10, (500, 3))
    g = rng.uniform(0, 10, (500, 3))
    from oracles import cdist

    brute = cdist(p, g).min(axis=1)
    ours = nearest_neighbor_distances(p, g)
    assert np.allclose(ours, brute, rtol=1e-9, atol=0.0)


def test_chamfer_empty_error():
    with pytest.raises(ValueError):
        chamfer(np.zeros((0, 3)), np.zeros((1, 3)))


def test_translation_invariance(rng):
    p = rng.uniform(0, 5, (30, 3))
    g = rng.uniform(0, 5, (20, 3))
    v = np.array([10.0, -3.0, 7.0])
    assert chamfer(p, g).cd_sym == pytest.approx(chamfer(p + v, g + v).cd_sym, rel=1e-12)
    pr1 = precision_recall_f(p, g, 1.0)
    pr2 = precision_recall_f(p + v, g + v, 1.0)
    assert pr1 == pytest.approx(pr2, abs=1e-12)


# -- normalization ------------------------------------------------------------


def unit_grid(n=4):
    xs = np.arange(n, dtype=float)
    return np.array([[x, y, 0.0] for x in xs for y in xs])


def test_cd_norm_unit_spacing():
    g = unit_grid()
    assert gt_point_spacing(g) == pytest.approx(1.0)
    assert cd_normalized(2.5, g) == pytest.approx(2.5)


def test_cd_norm_half_spacing():
    g = unit_grid() * 0.5
    assert cd_normalized(1.714, g) == pytest.approx(3.428)


def test_cd_norm_zero_cd():
    assert cd_normalized(0.0, unit_grid()) == 0.0


def test_cd_norm_duplicate_points_error():
    g = np.zeros((5, 3))
    with pytest.raises(ValueError, match="spacing"):
        cd_normalized(1.0, g)


# -- temporal -----------------------------------------------------------------


def single_point_frames(xs):
    return [np.array([[x, 0.0, 0.0]]) for x in xs]


def test_temporal_static_sequences():
    frames = single_point_frames([0, 0, 0])
    delta, rel = temporal_delta_cd(frames, frames)
    assert delta == 0.0
    assert rel is None  # static ground truth: relative form undefined


def test_temporal_identical_moving_sequences():
    frames = single_point_frames([0, 1, 2])
    delta, rel = temporal_delta_cd(frames, [f.copy() for f in frames])
    assert delta == 0.0
    assert rel == 0.0


def test_temporal_three_frame_toy():
    # pred per-step CDs {2,2}; gt per-step CDs {1,3}
    pred = single_point_frames([0.0, 1.0, 2.0])
    gt = single_point_frames([0.0, 0.5, 2.0])
    delta, rel = temporal_delta_cd(pred, gt)
    assert delta == pytest.approx(1.0)
    assert rel == pytest.approx(0.5)


def test_temporal_needs_two_frames():
    with pytest.raises(ValueError):
        temporal_delta_cd(single_point_frames([0]), single_point_frames([0]))
    with pytest.raises(ValueError):
        temporal_delta_cd(single_point_frames([0, 1]), single_point_frames([0]))


# -- overlap ------------------------------------------------------------------


def test_prf_identity(rng):
    p = rng.uniform(0, 5, (30, 3))
    assert precision_recall_f(p, p.copy(), 1.0) == (1.0, 1.0, 1.0)


def test_prf_zero_guard():
    p, g = np.array([[0.0, 0, 0]]), np.array([[2.0, 0, 0]])
    assert precision_recall_f(p, g, 1.0) == (0.0, 0.0, 0.0)


def test_prf_strict_inequality():
    p, g = np.array([[0.0, 0, 0]]), np.array([[1.0, 0, 0]])
    assert precision_recall_f(p, g, 1.0) == (0.0, 0.0, 0.0)
    p2 = np.array([[0.999999, 0, 0]])
    assert precision_recall_f(p2, g, 1.0)[0] == 1.0


@pytest.mark.parametrize("seed", range(10))
def test_prf_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(0, 6, (int(rng.integers(1, 150)), 3))
    g = rng.uniform(0, 6, (int(rng.integers(1, 150)), 3))
    tau = float(rng.uniform(0.3, 3.0))
    assert precision_recall_f(p, g, tau) == precision_recall_f_brute(p, g, tau)


def test_precision_recall_swap_identity(rng):
    p = rng.uniform(0, 6, (40, 3))
    g = rng.uniform(0, 6, (30, 3))
    for tau in (0.5, 1.0, 2.0):
        assert precision_recall_f(p, g, tau)[0] == precision_recall_f(g, p, tau)[1]


def test_prf_monotone_in_tau(rng):
    p = rng.uniform(0, 6, (50, 3))
    g = rng.uniform(0, 6, (50, 3))
    taus = [0.25, 0.5, 1.0, 2.0, 4.0]
    values = [precision_recall_f(p, g, t) for t in taus]
    for (p1, r1, _), (p2, r2, _) in zip(values, values[1:]):
        assert p2 >= p1
        assert r2 >= r1


# -- ROI errors ---------------------------------------------------------------


def test_roi_error_zero():
    results, err, pct = roi_error({"R1": 1.0}, {"R1": 1.0})
    assert results[0].error_mm == 0.0
    assert results[0].percent == 0.0
    assert err == 0.0 and pct == 0.0


def test_roi_error_ten_percent():
    results, err, pct = roi_error({"R1": 1.1}, {"R1": 1.0})
    assert results[0].error_mm == pytest.approx(0.1)
    assert results[0].percent == pytest.approx(10.0)


def test_roi_error_zero_gt_percent_undefined():
    results, err, pct = roi_error({"R1": 0.2}, {"R1": 0.0})
    assert results[0].percent is None
    assert err == pytest.approx(0.2)
    assert pct is None


def test_roi_error_aggregates():
    ours = {"R1": 1.0, "R2": 3.0}
    gt = {"R1": 2.0, "R2": 2.0}
    _, mean_err, _ = roi_error(ours, gt, aggregate="mean")
    assert mean_err == pytest.approx(0.0)
    _, max_err, _ = roi_error(ours, gt, aggregate="max")
    assert abs(max_err) == pytest.approx(1.0)


def test_roi_error_name_mismatch():
    with pytest.raises(ValueError):
        roi_error({"R1": 1.0}, {"R2": 1.0})


# -- agreement ----------------------------------------------------------------


def test_agreement_identity_pairs():
    pairs = [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)]
    result = agreement(pairs)
    assert result.slope == pytest.approx(1.0, abs=1e-12)
    assert result.intercept == pytest.approx(0.0, abs=1e-12)
    assert result.r2 == pytest.approx(1.0, abs=1e-12)
    assert result.bias == 0.0
    assert result.loa_lower == 0.0 and result.loa_upper == 0.0


def test_bland_altman_unit_sd():
    gt = np.array([1.0, 2.0, 3.0])
    ours = gt + np.array([-1.0, 0.0, 1.0])
    bias, lo, hi = bland_altman(gt, ours)
    assert bias == pytest.approx(0.0, abs=1e-15)
    assert lo == pytest.approx(-1.96)
    assert hi == pytest.approx(1.96)


def test_ols_exact_linear(rng):
    gt = rng.uniform(0, 10, 25)
    ours = 1.7 * gt - 0.3
    slope, intercept, r2 = ols_regression(gt, ours)
    assert slope == pytest.approx(1.7, abs=1e-9)
    assert intercept == pytest.approx(-0.3, abs=1e-9)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_agreement_preconditions():
    with pytest.raises(ValueError, match="at least 3"):
        agreement([(1.0, 1.0), (2.0, 2.0)])
    with pytest.raises(ValueError, match="zero variance"):
        agreement([(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)])


def test_nn_distances_respect_thread_env(rng, monkeypatch):
    p = rng.uniform(0, 5, (50, 3))
    g = rng.uniform(0, 5, (40, 3))
    base = nearest_neighbor_distances(p, g)
    monkeypatch.setenv("VESSEL4D_THREADS", "4")
    assert np.array_equal(nearest_neighbor_distances(p, g), base)
    monkeypatch.setenv("VESSEL4D_THREADS", "not-a-number")
    assert np.array_equal(nearest_neighbor_distances(p, g), base)
