"""Frame-0 clustering of primitive tracks: RGB KMeans, then per-group DBSCAN.

Color grouping first keeps differently colored surface beads apart; DBSCAN
within each color group then separates spatially distinct components. Labels
are assigned on frame 0 only and held fixed for the rest of the sequence.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.cluster import DBSCAN, KMeans

from .sequence import PrimitiveSequence
from .validation import check_points, check_positive

NOISE = -1

DEFAULT_COLOR_GROUPS = 5
DEFAULT_EPS_MM = 0.7
DEFAULT_MIN_SAMPLES = 3


@dataclass(eq=False)
class ClusterAssignment:
    """Immutable frame-0 labels: a color group and a spatial cluster per track.

    ``cluster_label`` is ``NOISE`` (-1) for tracks DBSCAN left unclustered;
    those tracks belong to no cluster and are excluded downstream.
    """

    color_group: np.ndarray  # (N,) int64
    cluster_label: np.ndarray  # (N,) int64, NOISE for unclustered
    n_clusters: int

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_label == k)


def _relabel_by_first_occurrence(labels: np.ndarray) -> np.ndarray:
    """Remap arbitrary non-negative labels to 0..K-1 in first-seen order."""
    out = np.full(labels.shape, NOISE, dtype=np.int64)
    mapping: dict[int, int] = {}
    for i, lab in enumerate(labels):
        if lab < 0:
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out


def kmeans_rgb(
    seq: PrimitiveSequence,
    n_color_groups: int = DEFAULT_COLOR_GROUPS,
    seed: int = 0,
) -> np.ndarray:
    """Assign each frame-0 primitive to one of ``n_color_groups`` RGB centers.

    Deterministic for a fixed seed. Group ids are canonicalized to
    first-occurrence order. Inputs with fewer distinct colors than groups
    collapse onto duplicate centers (extra groups stay empty).
    """
    if n_color_groups < 1:
        raise ValueError(f"n_color_groups must be >= 1, got {n_color_groups}")
    if seq.primitive_count == 0:
        raise ValueError("cannot cluster an empty sequence")
    colors = seq.colors[0]
    k = min(n_color_groups, seq.primitive_count)
    with warnings.catch_warnings():
        # duplicate RGB values legitimately collapse centers; not actionable
        warnings.simplefilter("ignore")
        labels = KMeans(n_clusters=k, random_state=seed, n_init=10).fit_predict(colors)
    return _relabel_by_first_occurrence(labels)


def dbscan_within_group(
    points: np.ndarray,
    eps: float = DEFAULT_EPS_MM,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> np.ndarray:
    """DBSCAN labels for the frame-0 positions of one color group.

    Classic semantics: a point's eps-neighborhood includes the point itself,
    so isolated pairs fall below ``min_samples`` and come back as NOISE.
    Cluster ids are ordered by lowest member index for determinism.
    """
    check_positive(eps, "eps")
    if min_samples < 1:
        raise ValueError(f"min_samples must be >= 1, got {min_samples}")
    points = check_points(points, "points")
    if points.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    labels = DBSCAN(eps=eps, min_samples=min_samples).fit_predict(points)
    return _relabel_by_first_occurrence(labels)


def cluster_frame0(
    seq: PrimitiveSequence,
    n_color_groups: int = DEFAULT_COLOR_GROUPS,
    eps: float = DEFAULT_EPS_MM,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    seed: int = 0,
) -> ClusterAssignment:
    """Two-stage frame-0 assignment: RGB KMeans, then DBSCAN per color group.

    Global cluster ids run over color groups in ascending order and, within a
    group, in DBSCAN's lowest-member order, so the mapping is deterministic.
    Noise points stay unassigned rather than being forced into a cluster.
    """
    groups = kmeans_rgb(seq, n_color_groups=n_color_groups, seed=seed)
    labels = np.full(seq.primitive_count, NOISE, dtype=np.int64)
    positions0 = seq.positions[0]
    next_id = 0
    for c in range(int(groups.max()) + 1):
        idx = np.flatnonzero(groups == c)
        if idx.size == 0:
            continue
        sub = dbscan_within_group(positions0[idx], eps=eps, min_samples=min_samples)
        n_sub = int(sub.max()) + 1 if sub.size and sub.max() >= 0 else 0
        for r in range(n_sub):
            labels[idx[sub == r]] = next_id + r
        next_id += n_sub
    return ClusterAssignment(color_group=groups, cluster_label=labels, n_clusters=next_id)


def save_assignment(assignment: ClusterAssignment, ids: np.ndarray, path) -> Path:
    """Persist an assignment as JSON, keyed to the sequence's primitive ids."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "ids": [int(v) for v in ids],
        "color_group": [int(v) for v in assignment.color_group],
        "cluster_label": [int(v) for v in assignment.cluster_label],
        "n_clusters": int(assignment.n_clusters),
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def load_assignment(path, expected_ids: np.ndarray | None = None) -> ClusterAssignment:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc
    try:
        ids = np.asarray(payload["ids"], dtype=np.int64)
        assignment = ClusterAssignment(
            color_group=np.asarray(payload["color_group"], dtype=np.int64),
            cluster_label=np.asarray(payload["cluster_label"], dtype=np.int64),
            n_clusters=int(payload["n_clusters"]),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: assignment JSON missing key {exc}") from exc
    if expected_ids is not None and not np.array_equal(ids, np.asarray(expected_ids)):
        raise ValueError(f"{path}: assignment ids do not match the sequence")
    return assignment
