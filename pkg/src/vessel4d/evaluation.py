"""Reconstruction-vs-ground-truth evaluation metrics.

Covers symmetric Chamfer distance and its normalized form, frame-to-frame
temporal disagreement, precision/recall/F-score at distance tolerances, ROI
displacement/stress error, ordinary least squares agreement, and
Bland-Altman limits of agreement. Nearest-neighbor queries run on a KD-tree;
the brute-force reference lives in the test suite as an independent oracle.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .validation import check_nonempty_points

DEFAULT_TOLERANCES_MM = (1.0, 2.0, 3.0)


def _workers() -> int:
    """KD-tree query parallelism, capped by the VESSEL4D_THREADS env var."""
    raw = os.environ.get("VESSEL4D_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def nearest_neighbor_distances(query: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Distance from every query point to its nearest reference point."""
    query = check_nonempty_points(query, "query")
    ref = check_nonempty_points(ref, "ref")
    tree = cKDTree(ref)
    dist, _ = tree.query(query, k=1, workers=_workers())
    return np.asarray(dist, dtype=np.float64)


@dataclass
class ChamferResult:
    cd_sym: float  # mm, sum of both directed means
    d_p2g_mean: float  # mm
    d_g2p_mean: float  # mm


def chamfer(p: np.ndarray, g: np.ndarray) -> ChamferResult:
    """Symmetric Chamfer distance: sum of the two directed mean NN distances."""
    d_pg = float(np.mean(nearest_neighbor_distances(p, g)))
    d_gp = float(np.mean(nearest_neighbor_distances(g, p)))
    return ChamferResult(cd_sym=d_pg + d_gp, d_p2g_mean=d_pg, d_g2p_mean=d_gp)


def gt_point_spacing(g: np.ndarray) -> float:
    """Median nearest-neighbor spacing within the ground-truth point set."""
    g = check_nonempty_points(g, "g")
    if g.shape[0] < 2:
        raise ValueError("point spacing needs at least 2 points")
    tree = cKDTree(g)
    dist, _ = tree.query(g, k=2, workers=_workers())
    spacing = float(np.median(dist[:, 1]))
    if spacing <= 0.0:
        raise ValueError("ground-truth points are duplicates; spacing is zero")
    return spacing


def cd_normalized(cd_sym: float, g: np.ndarray) -> float:
    """Chamfer distance normalized by the median GT nearest-neighbor spacing."""
    return float(cd_sym) / gt_point_spacing(g)


def temporal_delta_cd(
    pred_frames: list[np.ndarray], gt_frames: list[np.ndarray]
) -> tuple[float, float | None]:
    """Mean |frame-to-frame CD difference| between prediction and ground truth.

    Returns (delta_cd, delta_cd_rel); the relative form divides by the median
    GT frame-to-frame CD and is None when the ground truth is static.
    """
    if len(pred_frames) != len(gt_frames):
        raise ValueError("prediction and ground truth must have equal frame counts")
    t = len(pred_frames)
    if t < 2:
        raise ValueError("temporal disagreement needs at least 2 frames")
    cd_pred = np.array(
        [chamfer(pred_frames[i], pred_frames[i + 1]).cd_sym for i in range(t - 1)]
    )
    cd_gt = np.array(
        [chamfer(gt_frames[i], gt_frames[i + 1]).cd_sym for i in range(t - 1)]
    )
    delta = float(np.mean(np.abs(cd_pred - cd_gt)))
    gt_median = float(np.median(cd_gt))
    rel = delta / gt_median if gt_median > 0.0 else None
    return delta, rel


def precision_recall_f(
    p: np.ndarray, g: np.ndarray, tau: float
) -> tuple[float, float, float]:
    """Overlap fractions at tolerance tau (strict d < tau) with a zero-sum guard."""
    d_pg = nearest_neighbor_distances(p, g)
    d_gp = nearest_neighbor_distances(g, p)
    precision = float(np.count_nonzero(d_pg < tau)) / d_pg.shape[0]
    recall = float(np.count_nonzero(d_gp < tau)) / d_gp.shape[0]
    if precision + recall > 0.0:
        fscore = 2.0 * precision * recall / (precision + recall)
    else:
        fscore = 0.0
    return precision, recall, fscore


@dataclass
class RoiErrorResult:
    name: str
    error_mm: float  # ours - gt
    percent: float | None  # None when gt is zero


def roi_error(
    ours: dict[str, float], gt: dict[str, float], aggregate: str = "mean"
) -> tuple[list[RoiErrorResult], float, float | None]:
    """Per-ROI (ours - gt) error with percent relative to gt.

    Returns (per-ROI results, aggregate error, aggregate percent). Percent is
    undefined (None) for ROIs with zero ground truth and those ROIs drop out
    of the aggregate percent. The condition-level aggregator defaults to the
    mean over ROIs; "max" picks the largest-magnitude error.
    """
    if set(ours) != set(gt):
        raise ValueError("ours and gt must cover the same ROI names")
    if aggregate not in ("mean", "max"):
        raise ValueError(f"unknown aggregate {aggregate!r}")
    results = []
    for name in sorted(ours):
        err = float(ours[name]) - float(gt[name])
        pct = 100.0 * err / float(gt[name]) if gt[name] != 0.0 else None
        results.append(RoiErrorResult(name=name, error_mm=err, percent=pct))
    errors = np.array([r.error_mm for r in results])
    pcts = [r.percent for r in results if r.percent is not None]
    if aggregate == "mean":
        agg_err = float(np.mean(errors))
        agg_pct = float(np.mean(pcts)) if pcts else None
    else:
        agg_err = float(errors[np.argmax(np.abs(errors))])
        agg_pct = float(max(pcts, key=abs)) if pcts else None
    return results, agg_err, agg_pct


@dataclass
class AgreementResult:
    slope: float
    intercept: float
    r2: float
    bias: float
    loa_lower: float
    loa_upper: float

    def to_json_dict(self) -> dict:
        return {
            "regression": {
                "slope": self.slope,
                "intercept": self.intercept,
                "r2": self.r2,
            },
            "bland_altman": {
                "bias": self.bias,
                "loa_lower": self.loa_lower,
                "loa_upper": self.loa_upper,
            },
        }


def ols_regression(gt: np.ndarray, ours: np.ndarray) -> tuple[float, float, float]:
    """Ordinary least squares of ours on gt: (slope, intercept, R^2)."""
    gt = np.asarray(gt, dtype=np.float64)
    ours = np.asarray(ours, dtype=np.float64)
    if gt.shape != ours.shape or gt.ndim != 1:
        raise ValueError("gt and ours must be 1D arrays of equal length")
    var = float(np.var(gt))
    if var == 0.0:
        raise ValueError("ground-truth values have zero variance; slope undefined")
    gm, om = float(np.mean(gt)), float(np.mean(ours))
    slope = float(np.mean((gt - gm) * (ours - om))) / var
    intercept = om - slope * gm
    residuals = ours - (slope * gt + intercept)
    ss_tot = float(np.sum((ours - om) ** 2))
    r2 = 1.0 - float(np.sum(residuals**2)) / ss_tot if ss_tot > 0.0 else 1.0
    return slope, intercept, r2


def bland_altman(gt: np.ndarray, ours: np.ndarray) -> tuple[float, float, float]:
    """Bland-Altman bias and 1.96-sample-SD limits of agreement (ours - gt)."""
    gt = np.asarray(gt, dtype=np.float64)
    ours = np.asarray(ours, dtype=np.float64)
    diff = ours - gt
    bias = float(np.mean(diff))
    sd = float(np.std(diff, ddof=1)) if diff.size > 1 else 0.0
    return bias, bias - 1.96 * sd, bias + 1.96 * sd


def agreement(pairs: list[tuple[float, float]]) -> AgreementResult:
    """Regression + Bland-Altman over (gt, ours) pairs; needs >= 3 pairs."""
    if len(pairs) < 3:
        raise ValueError(f"agreement needs at least 3 pairs, got {len(pairs)}")
    arr = np.asarray(pairs, dtype=np.float64)
    gt, ours = arr[:, 0], arr[:, 1]
    slope, intercept, r2 = ols_regression(gt, ours)
    bias, lo, hi = bland_altman(gt, ours)
    return AgreementResult(
        slope=slope, intercept=intercept, r2=r2, bias=bias, loa_lower=lo, loa_upper=hi
    )


@dataclass
class EvalReport:
    """Per-condition metric bundle mirroring the standard report layout."""

    condition: str
    cd_mm: float
    cd_norm: float
    d_p2g_mm: float
    d_g2p_mm: float
    delta_cd_mm: float
    delta_cd_rel: float | None
    overlap: list[dict] = field(default_factory=list)  # {tau_mm, precision, recall, fscore}
    rois: dict = field(default_factory=dict)
    displacement_error_mm: float | None = None
    displacement_error_pct: float | None = None
    stress_bias_mpa: float | None = None
    displacement_agreement: dict | None = None
    stress_agreement: dict | None = None

    def to_json_dict(self) -> dict:
        return {
            "condition": self.condition,
            "cd_mm": self.cd_mm,
            "cd_norm": self.cd_norm,
            "d_p2g_mm": self.d_p2g_mm,
            "d_g2p_mm": self.d_g2p_mm,
            "delta_cd_mm": self.delta_cd_mm,
            "delta_cd_rel": self.delta_cd_rel,
            "overlap": self.overlap,
            "rois": self.rois,
            "displacement_error_mm": self.displacement_error_mm,
            "displacement_error_pct": self.displacement_error_pct,
            "stress_bias_mpa": self.stress_bias_mpa,
            "displacement_agreement": self.displacement_agreement,
            "stress_agreement": self.stress_agreement,
        }
