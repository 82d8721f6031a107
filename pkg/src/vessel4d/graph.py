"""Fixed-connectivity edge graphs over cluster centroids.

Vertices are frame-0 clusters tracked by centroid averaging; connectivity is
a 3D Delaunay neighborhood graph pruned by edge length at frame 0, optionally
followed by a one-time curation edit after which the topology is locked.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, QhullError
from sklearn.base import BaseEstimator

from .clustering import (
    DEFAULT_COLOR_GROUPS,
    DEFAULT_EPS_MM,
    DEFAULT_MIN_SAMPLES,
    ClusterAssignment,
    cluster_frame0,
)
from .sequence import PrimitiveSequence
from .validation import check_edges, check_nonempty_points

DEFAULT_GAMMA = 0.25

# tetrahedron vertex index pairs for edge enumeration
_TET_PAIRS = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])


class GraphError(ValueError):
    """Raised for invalid graph construction inputs."""


class CurationError(ValueError):
    """Raised for unresolvable or conflicting curation edits."""


@dataclass(eq=False)
class EdgeGraph:
    """Fixed vertex set with per-frame centroids and a static edge set.

    ``vertex_ids`` records, for each current vertex, its index in the graph
    the vertices originated from; before curation this is the identity, after
    curation it persists the old->new re-indexing.
    """

    centroids: np.ndarray  # (K, T, 3) float64 mm
    edges: np.ndarray  # (E, 2) int64, i < j, lexicographically sorted
    member_counts: np.ndarray  # (K, T) int64
    vertex_ids: np.ndarray = None  # (K,) int64
    curated: bool = False

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 3 or self.centroids.shape[2] != 3:
            raise GraphError(f"centroids must be (K, T, 3), got {self.centroids.shape}")
        if not np.all(np.isfinite(self.centroids)):
            raise GraphError("centroids contain non-finite values")
        k = self.centroids.shape[0]
        self.edges = check_edges(self.edges, k)
        self.member_counts = np.asarray(self.member_counts, dtype=np.int64)
        if self.member_counts.shape != self.centroids.shape[:2]:
            raise GraphError("member_counts must be (K, T)")
        if self.vertex_ids is None:
            self.vertex_ids = np.arange(k, dtype=np.int64)
        else:
            self.vertex_ids = np.asarray(self.vertex_ids, dtype=np.int64)
            if self.vertex_ids.shape != (k,):
                raise GraphError("vertex_ids must be (K,)")

    @property
    def vertex_count(self) -> int:
        return self.centroids.shape[0]

    @property
    def frame_count(self) -> int:
        return self.centroids.shape[1]

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    def positions(self, t: int) -> np.ndarray:
        return self.centroids[:, t]

    def neighbor_lists(self) -> list[np.ndarray]:
        """Adjacency as one sorted index array per vertex."""
        nbrs: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for i, j in self.edges:
            nbrs[i].append(int(j))
            nbrs[j].append(int(i))
        return [np.asarray(sorted(n), dtype=np.int64) for n in nbrs]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.vertex_count, dtype=np.int64)
        if self.edge_count:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def topology_hash(self) -> str:
        """Stable digest of (K, vertex_ids, edges); used to assert the lock."""
        h = hashlib.sha256()
        h.update(str(self.vertex_count).encode())
        h.update(self.vertex_ids.tobytes())
        h.update(self.edges.tobytes())
        return h.hexdigest()

    def copy(self) -> "EdgeGraph":
        return EdgeGraph(
            centroids=self.centroids.copy(),
            edges=self.edges.copy(),
            member_counts=self.member_counts.copy(),
            vertex_ids=self.vertex_ids.copy(),
            curated=self.curated,
        )

    # -- JSON schema: {vertices, centroids, edges, curated} -----------------

    def to_json_dict(self) -> dict:
        k, t = self.vertex_count, self.frame_count
        return {
            "vertices": [
                {"id": int(self.vertex_ids[i]), "x0": [float(v) for v in self.centroids[i, 0]]}
                for i in range(k)
            ],
            "centroids": {
                "frames": t,
                "data": [float(v) for v in self.centroids.reshape(-1)],
            },
            "edges": [[int(i), int(j)] for i, j in self.edges],
            "curated": bool(self.curated),
            "member_counts": [[int(c) for c in row] for row in self.member_counts],
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "EdgeGraph":
        try:
            vertices = payload["vertices"]
            frames = int(payload["centroids"]["frames"])
            data = np.asarray(payload["centroids"]["data"], dtype=np.float64)
            edges = payload["edges"]
            curated = bool(payload["curated"])
        except (KeyError, TypeError) as exc:
            raise GraphError(f"graph JSON missing required key: {exc}") from exc
        k = len(vertices)
        if data.size != k * frames * 3:
            raise GraphError("centroid data length does not match K*T*3")
        centroids = data.reshape(k, frames, 3)
        vertex_ids = np.asarray([int(v["id"]) for v in vertices], dtype=np.int64)
        counts = payload.get("member_counts")
        if counts is None:
            counts = np.ones((k, frames), dtype=np.int64)
        return cls(
            centroids=centroids,
            edges=edges,
            member_counts=counts,
            vertex_ids=vertex_ids,
            curated=curated,
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "EdgeGraph":
        path = Path(path)
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_json_dict(payload)


def track_centroids(
    seq: PrimitiveSequence,
    assignment: ClusterAssignment,
    present: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame cluster centroids with carry-forward for empty frames.

    ``present`` is an optional (N, T) mask of per-frame track validity; the
    canonical tracked formats have every id in every frame, so it defaults to
    all-true. When a cluster has no present member at frame t, its previous
    centroid is retained and its member count is recorded as 0.

    Returns (centroids (K, T, 3), member_counts (K, T)).
    """
    labels = assignment.cluster_label
    k = assignment.n_clusters
    if k == 0:
        raise GraphError("assignment contains no clusters")
    n, t = seq.primitive_count, seq.frame_count
    if labels.shape[0] != n:
        raise GraphError("assignment size does not match sequence")
    if present is None:
        present = np.ones((n, t), dtype=bool)
    else:
        present = np.asarray(present, dtype=bool)
        if present.shape != (n, t):
            raise GraphError(f"present mask must be (N, T)=({n}, {t})")

    centroids = np.empty((k, t, 3), dtype=np.float64)
    counts = np.zeros((k, t), dtype=np.int64)
    clustered = labels >= 0
    for fr in range(t):
        sel = clustered & present[:, fr]
        lab = labels[sel]
        cnt = np.bincount(lab, minlength=k)
        counts[:, fr] = cnt
        sums = np.empty((k, 3), dtype=np.float64)
        for axis in range(3):
            sums[:, axis] = np.bincount(
                lab, weights=seq.positions[fr, sel, axis], minlength=k
            )
        if fr == 0:
            if np.any(cnt == 0):
                empty = int(np.flatnonzero(cnt == 0)[0])
                raise GraphError(f"cluster {empty} has no members at frame 0")
            centroids[:, 0] = sums / cnt[:, None]
        else:
            filled = cnt > 0
            centroids[filled, fr] = sums[filled] / cnt[filled, None]
            centroids[~filled, fr] = centroids[~filled, fr - 1]
    return centroids, counts


def _delaunay_candidates(points: np.ndarray) -> np.ndarray:
    """Unique edges of the 3D Delaunay tetrahedralization.

    Degenerate inputs (coplanar/collinear) are retried with a tiny seeded
    perturbation (1e-9 mm upward) that has no visible geometric effect.
    """
    k = points.shape[0]
    if k < 4:
        i, j = np.triu_indices(k, 1)
        return np.column_stack([i, j]).astype(np.int64)
    last_exc: Exception | None = None
    rng = np.random.default_rng(0)
    for scale in (0.0, 1e-9, 1e-8, 1e-7):
        pts = points if scale == 0.0 else points + rng.normal(0.0, scale, points.shape)
        try:
            tess = Delaunay(pts)
        except QhullError as exc:
            last_exc = exc
            continue
        pairs = tess.simplices[:, _TET_PAIRS].reshape(-1, 2)
        pairs = np.sort(pairs, axis=1)
        return np.unique(pairs, axis=0).astype(np.int64)
    raise GraphError(f"Delaunay construction failed: {last_exc}")


def length_prune_mask(lengths: np.ndarray, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Keep-mask for candidate edges: d <= mu + gamma * sigma (population std).

    A tiny relative guard keeps fully symmetric inputs (all lengths equal,
    sigma = 0) from dropping edges to rounding noise.
    """
    lengths = np.asarray(lengths, dtype=np.float64)
    if lengths.size == 0:
        return np.zeros(0, dtype=bool)
    mu = float(np.mean(lengths))
    sigma = float(np.std(lengths))
    threshold = mu + float(gamma) * sigma
    return lengths <= threshold * (1.0 + 1e-12)


def build_edges(points0: np.ndarray, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Pruned Delaunay edge set on frame-0 vertex positions.

    Candidate edges come from the 3D Delaunay tetrahedralization; an edge
    (i, j) is retained iff its length passes :func:`length_prune_mask`. The
    result is independent of input point ordering (edges are canonicalized
    to sorted pairs).
    """
    points0 = check_nonempty_points(points0, "points0")
    k = points0.shape[0]
    if k < 2:
        raise GraphError("need at least 2 vertices to build edges")
    if np.all(np.ptp(points0, axis=0) == 0.0):
        raise GraphError("all vertices coincide; cannot build edges")
    candidates = _delaunay_candidates(points0)
    lengths = np.linalg.norm(points0[candidates[:, 0]] - points0[candidates[:, 1]], axis=1)
    keep = length_prune_mask(lengths, gamma)
    return check_edges(candidates[keep], k)


def graph_from_sequence(
    seq: PrimitiveSequence,
    assignment: ClusterAssignment,
    gamma: float = DEFAULT_GAMMA,
    edges: np.ndarray | None = None,
    present: np.ndarray | None = None,
) -> EdgeGraph:
    """Assemble an :class:`EdgeGraph` (centroids, counts, pruned edges)."""
    centroids, counts = track_centroids(seq, assignment, present=present)
    if edges is None:
        edges = build_edges(centroids[:, 0], gamma=gamma)
    return EdgeGraph(centroids=centroids, edges=edges, member_counts=counts)


# -- curation ---------------------------------------------------------------


@dataclass
class CurationEdit:
    """A one-time edit of the frame-0 graph, referencing pre-edit indices."""

    removed_vertices: list[int] = field(default_factory=list)
    removed_edges: list[tuple[int, int]] = field(default_factory=list)
    added_edges: list[tuple[int, int]] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not (self.removed_vertices or self.removed_edges or self.added_edges)

    def to_json_dict(self) -> dict:
        return {
            "removed_vertices": [int(v) for v in self.removed_vertices],
            "removed_edges": [[int(i), int(j)] for i, j in self.removed_edges],
            "added_edges": [[int(i), int(j)] for i, j in self.added_edges],
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "CurationEdit":
        def pairs(key):
            return [(int(i), int(j)) for i, j in payload.get(key, [])]

        return cls(
            removed_vertices=[int(v) for v in payload.get("removed_vertices", [])],
            removed_edges=pairs("removed_edges"),
            added_edges=pairs("added_edges"),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "CurationEdit":
        try:
            payload = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise CurationError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_json_dict(payload)


def _norm_pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def apply_curation(graph: EdgeGraph, edit: CurationEdit) -> EdgeGraph:
    """Apply a curation edit and lock the resulting topology.

    Removed vertices take their incident edges with them; surviving vertices
    are re-indexed (ascending old index) and the old->new map is persisted in
    ``vertex_ids``. Dangling references and duplicate edge additions are
    errors. An empty edit on an already curated graph is a no-op, so replaying
    a fully applied (remapped) edit is idempotent.
    """
    if graph.curated and not edit.is_empty:
        raise CurationError("graph topology is locked; curation was already applied")
    k = graph.vertex_count
    removed_vertices = set()
    for v in edit.removed_vertices:
        if not 0 <= v < k:
            raise CurationError(f"removed vertex {v} does not exist")
        removed_vertices.add(int(v))

    current = {_norm_pair(int(i), int(j)) for i, j in graph.edges}
    removed_edges = set()
    for i, j in edit.removed_edges:
        pair = _norm_pair(int(i), int(j))
        if pair not in current:
            raise CurationError(f"removed edge {pair} does not exist")
        removed_edges.add(pair)

    kept = {
        pair
        for pair in current
        if pair not in removed_edges
        and pair[0] not in removed_vertices
        and pair[1] not in removed_vertices
    }
    seen_added = set()
    for i, j in edit.added_edges:
        i, j = int(i), int(j)
        if i == j:
            raise CurationError(f"cannot add self-edge ({i}, {j})")
        if not (0 <= i < k and 0 <= j < k):
            raise CurationError(f"added edge ({i}, {j}) references a missing vertex")
        if i in removed_vertices or j in removed_vertices:
            raise CurationError(f"added edge ({i}, {j}) references a removed vertex")
        pair = _norm_pair(i, j)
        if pair in kept or pair in seen_added:
            raise CurationError(f"duplicate added edge {pair}")
        seen_added.add(pair)
    kept |= seen_added

    survivors = np.asarray(
        [v for v in range(k) if v not in removed_vertices], dtype=np.int64
    )
    if survivors.size == 0:
        raise CurationError("curation removed every vertex")
    old_to_new = np.full(k, -1, dtype=np.int64)
    old_to_new[survivors] = np.arange(survivors.size)
    new_edges = np.asarray(
        sorted((int(old_to_new[i]), int(old_to_new[j])) for i, j in kept), dtype=np.int64
    ).reshape(-1, 2)
    return EdgeGraph(
        centroids=graph.centroids[survivors].copy(),
        edges=new_edges,
        member_counts=graph.member_counts[survivors].copy(),
        vertex_ids=graph.vertex_ids[survivors].copy(),
        curated=True,
    )


def remap_edit(edit: CurationEdit, graph: EdgeGraph, curated: EdgeGraph) -> CurationEdit:
    """Translate an applied edit into post-curation indices.

    Entries consumed by the application (removed vertices/edges, additions now
    present) drop out, so the remapped edit of a fully applied edit is empty.
    """
    old_to_new = {int(old): new for new, old in enumerate(curated.vertex_ids)}
    # vertex_ids of `curated` refer to indices in `graph`
    removed_vertices = [v for v in edit.removed_vertices if int(v) in old_to_new]
    current = {_norm_pair(int(i), int(j)) for i, j in curated.edges}

    def translate(pairs, want_present):
        out = []
        for i, j in pairs:
            if int(i) not in old_to_new or int(j) not in old_to_new:
                continue
            pair = _norm_pair(old_to_new[int(i)], old_to_new[int(j)])
            if (pair in current) == want_present:
                out.append(pair)
        return out

    return CurationEdit(
        removed_vertices=removed_vertices,
        removed_edges=translate(edit.removed_edges, want_present=True),
        added_edges=translate(edit.added_edges, want_present=False),
    )


# -- estimator --------------------------------------------------------------


class EdgeGraphBuilder(BaseEstimator):
    """Learns frame-0 clusters and pruned Delaunay connectivity from a sequence.

    ``fit`` runs RGB KMeans + per-group DBSCAN on frame 0 and builds the static
    edge set from the frame-0 centroids; ``transform`` tracks the centroids of
    any sequence with the same primitive ids through the fitted assignment.

    Parameters
    ----------
    color_groups : number of RGB KMeans groups.
    eps_mm : DBSCAN neighborhood radius in mm.
    min_samples : DBSCAN core-point threshold (neighborhood includes self).
    gamma : edge-length pruning multiplier (d <= mu + gamma * sigma).
    random_state : KMeans seed.
    """

    def __init__(
        self,
        color_groups: int = DEFAULT_COLOR_GROUPS,
        eps_mm: float = DEFAULT_EPS_MM,
        min_samples: int = DEFAULT_MIN_SAMPLES,
        gamma: float = DEFAULT_GAMMA,
        random_state: int = 0,
    ):
        self.color_groups = color_groups
        self.eps_mm = eps_mm
        self.min_samples = min_samples
        self.gamma = gamma
        self.random_state = random_state

    def fit(self, sequence: PrimitiveSequence, y=None) -> "EdgeGraphBuilder":
        self.assignment_ = cluster_frame0(
            sequence,
            n_color_groups=self.color_groups,
            eps=self.eps_mm,
            min_samples=self.min_samples,
            seed=self.random_state,
        )
        if self.assignment_.n_clusters == 0:
            raise GraphError("no clusters found; check eps_mm/min_samples")
        self.ids_ = sequence.ids.copy()
        self.graph_ = graph_from_sequence(sequence, self.assignment_, gamma=self.gamma)
        self.edges_ = self.graph_.edges
        return self

    def transform(self, sequence: PrimitiveSequence) -> EdgeGraph:
        if not hasattr(self, "assignment_"):
            raise RuntimeError("EdgeGraphBuilder must be fitted before transform")
        if not np.array_equal(sequence.ids, self.ids_):
            raise GraphError("sequence ids do not match the fitted sequence")
        return graph_from_sequence(
            sequence, self.assignment_, edges=self.edges_.copy()
        )

    def fit_transform(self, sequence: PrimitiveSequence, y=None) -> EdgeGraph:
        return self.fit(sequence).graph_
