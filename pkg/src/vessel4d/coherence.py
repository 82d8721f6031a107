"""Robust spatial-coherence filtering of per-frame displacement fields.

The update is a relaxed graph smoothing step on the locked edge graph:

    u_k <- (1 - alpha) * u_k + alpha * sum_j(w_kj u_j) / (sum_j w_kj + eps)

with Huber-like IRLS weights w_kj = 1 for residual r_kj <= tau and
tau / (r_kj + eps) above, tau = kappa * s, and s the per-frame MAD of edge
residuals. Each iteration recomputes residuals, the scale, and the weights,
then updates every vertex synchronously from the previous iterate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .graph import EdgeGraph
from .validation import check_in_unit_interval, check_positive

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.1
DEFAULT_KAPPA = 2.5
DEFAULT_ITERATIONS = 1
DEFAULT_EPSILON = 1e-12


@dataclass
class CoherenceParams:
    """Smoothing parameters; defaults match the standard analysis settings."""

    alpha: float = DEFAULT_ALPHA
    kappa: float = DEFAULT_KAPPA
    iterations: int = DEFAULT_ITERATIONS
    epsilon: float = DEFAULT_EPSILON

    def validate(self) -> "CoherenceParams":
        check_in_unit_interval(self.alpha, "alpha", open_low=True)
        check_positive(self.kappa, "kappa")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ValueError(f"iterations must be a non-negative integer, got {self.iterations}")
        check_positive(self.epsilon, "epsilon")
        return self


@dataclass(eq=False)
class DisplacementField:
    """Per-vertex displacement relative to frame 0, u_k(t) = x_k(t) - x_k(0)."""

    u: np.ndarray  # (K, T, 3) float64 mm
    reference_mode: str = "t0"
    smoothed: bool = False

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        if self.u.ndim != 3 or self.u.shape[2] != 3:
            raise ValueError(f"u must be (K, T, 3), got {self.u.shape}")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("displacement field contains non-finite values")
        if self.reference_mode != "t0":
            raise ValueError(f"unsupported reference_mode {self.reference_mode!r}")

    @property
    def vertex_count(self) -> int:
        return self.u.shape[0]

    @property
    def frame_count(self) -> int:
        return self.u.shape[1]

    def magnitudes(self) -> np.ndarray:
        """Per-vertex per-frame displacement magnitude, (K, T) in mm."""
        return np.linalg.norm(self.u, axis=2)


def displacement_from_graph(graph: EdgeGraph) -> DisplacementField:
    """Displacement of every vertex relative to its frame-0 centroid."""
    u = graph.centroids - graph.centroids[:, :1]
    return DisplacementField(u=u)


def displaced_positions(graph: EdgeGraph, field: DisplacementField) -> np.ndarray:
    """Reconstituted positions x_k(0) + u_k(t), shape (K, T, 3)."""
    if field.vertex_count != graph.vertex_count:
        raise ValueError("field and graph vertex counts differ")
    return graph.centroids[:, :1] + field.u


def mad_scale(residuals, epsilon: float = DEFAULT_EPSILON) -> float:
    """Median-absolute-deviation scale of edge residuals, stabilized by epsilon."""
    residuals = np.asarray(residuals, dtype=np.float64)
    if residuals.size == 0:
        raise ValueError("mad_scale needs at least one residual")
    med = np.median(residuals)
    return float(np.median(np.abs(residuals - med)) + epsilon)


def robust_weight(r, tau: float, epsilon: float = DEFAULT_EPSILON):
    """Huber-like IRLS weight: 1 for r <= tau (inclusive), tau/(r+eps) above."""
    r = np.asarray(r, dtype=np.float64)
    w = np.where(r <= tau, 1.0, tau / (r + epsilon))
    return float(w) if w.ndim == 0 else w


def smooth_frame(
    u_t: np.ndarray,
    edges: np.ndarray,
    params: CoherenceParams | None = None,
    updatable: np.ndarray | None = None,
) -> np.ndarray:
    """One frame of robust smoothing (``params.iterations`` synchronous passes).

    Every pass recomputes residuals over the full edge set, the MAD scale, and
    the weights, then updates all vertices from a frozen snapshot (Jacobi
    style). Vertices excluded via ``updatable`` (e.g. carried-forward empty
    clusters) keep their value but still contribute to neighbor averages;
    vertices with no neighbors are left unchanged.
    """
    params = (params or CoherenceParams()).validate()
    u = np.array(u_t, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] != 3:
        raise ValueError(f"u_t must be (K, 3), got {u.shape}")
    k = u.shape[0]
    edges = np.asarray(edges, dtype=np.int64)
    if updatable is None:
        updatable = np.ones(k, dtype=bool)
    else:
        updatable = np.asarray(updatable, dtype=bool)
        if updatable.shape != (k,):
            raise ValueError("updatable mask must be (K,)")
    if edges.shape[0] == 0:
        logger.warning("smooth_frame: graph has no edges; field left unchanged")
        return u

    degree = np.zeros(k, dtype=np.int64)
    np.add.at(degree, edges[:, 0], 1)
    np.add.at(degree, edges[:, 1], 1)
    isolated = degree == 0
    if np.any(isolated & updatable):
        logger.warning(
            "smooth_frame: %d vertices have no neighbors and are left unchanged",
            int(np.count_nonzero(isolated & updatable)),
        )
    mask = updatable & ~isolated
    eps = params.epsilon
    i, j = edges[:, 0], edges[:, 1]
    for _ in range(int(params.iterations)):
        r = np.linalg.norm(u[i] - u[j], axis=1)
        s = mad_scale(r, epsilon=eps)
        tau = params.kappa * s
        w = robust_weight(r, tau, epsilon=eps)
        wsum = np.zeros(k, dtype=np.float64)
        acc = np.zeros((k, 3), dtype=np.float64)
        np.add.at(wsum, i, w)
        np.add.at(wsum, j, w)
        np.add.at(acc, i, w[:, None] * u[j])
        np.add.at(acc, j, w[:, None] * u[i])
        avg = acc / (wsum + eps)[:, None]
        updated = (1.0 - params.alpha) * u + params.alpha * avg
        u = np.where(mask[:, None], updated, u)
    return u


def smooth_displacement(
    field: DisplacementField,
    graph: EdgeGraph,
    params: CoherenceParams | None = None,
) -> DisplacementField:
    """Smooth every frame of a displacement field on the graph's edge set.

    Frames are independent; vertices with no members at a frame (carried
    forward) are not updated but still enter their neighbors' averages.
    """
    params = (params or CoherenceParams()).validate()
    if field.vertex_count != graph.vertex_count:
        raise ValueError("field and graph vertex counts differ")
    out = np.empty_like(field.u)
    for t in range(field.frame_count):
        out[:, t] = smooth_frame(
            field.u[:, t],
            graph.edges,
            params=params,
            updatable=graph.member_counts[:, t] > 0,
        )
    return DisplacementField(u=out, reference_mode=field.reference_mode, smoothed=True)


class CoherenceFilter(BaseEstimator, TransformerMixin):
    """Transformer wrapper around :func:`smooth_displacement`.

    ``fit`` captures the locked graph topology; ``transform`` smooths a
    displacement field on it. ``enabled=False`` makes the transform an
    identity, which is the ablation switch used by the evaluation suite.
    """

    def __init__(
        self,
        alpha: float = DEFAULT_ALPHA,
        kappa: float = DEFAULT_KAPPA,
        iterations: int = DEFAULT_ITERATIONS,
        epsilon: float = DEFAULT_EPSILON,
        enabled: bool = True,
    ):
        self.alpha = alpha
        self.kappa = kappa
        self.iterations = iterations
        self.epsilon = epsilon
        self.enabled = enabled

    def _params(self) -> CoherenceParams:
        return CoherenceParams(
            alpha=self.alpha,
            kappa=self.kappa,
            iterations=self.iterations,
            epsilon=self.epsilon,
        ).validate()

    def fit(self, graph: EdgeGraph, y=None) -> "CoherenceFilter":
        self._params()
        self.graph_ = graph
        return self

    def transform(self, field: DisplacementField) -> DisplacementField:
        if not hasattr(self, "graph_"):
            raise RuntimeError("CoherenceFilter must be fitted with a graph first")
        if not self.enabled:
            return DisplacementField(
                u=field.u.copy(), reference_mode=field.reference_mode, smoothed=False
            )
        return smooth_displacement(field, self.graph_, params=self._params())


def write_displacement_csv(field: DisplacementField, path) -> Path:
    """CSV rows ``vertex,frame,ux,uy,uz`` (mm), exact float round-trip."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("vertex,frame,ux,uy,uz\n")
        k, t, _ = field.u.shape
        for v in range(k):
            for fr in range(t):
                ux, uy, uz = (repr(float(c)) for c in field.u[v, fr])
                fh.write(f"{v},{fr},{ux},{uy},{uz}\n")
    return path


def read_displacement_csv(path, smoothed: bool = False) -> DisplacementField:
    path = Path(path)
    rows: dict[tuple[int, int], np.ndarray] = {}
    with path.open() as fh:
        header = fh.readline().strip()
        if header != "vertex,frame,ux,uy,uz":
            raise ValueError(f"{path}: unexpected displacement header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields")
            v, fr = int(parts[0]), int(parts[1])
            rows[(v, fr)] = np.array([float(p) for p in parts[2:]], dtype=np.float64)
    if not rows:
        raise ValueError(f"{path}: no displacement rows")
    k = max(v for v, _ in rows) + 1
    t = max(fr for _, fr in rows) + 1
    u = np.zeros((k, t, 3), dtype=np.float64)
    for (v, fr), vec in rows.items():
        u[v, fr] = vec
    return DisplacementField(u=u, smoothed=smoothed)
