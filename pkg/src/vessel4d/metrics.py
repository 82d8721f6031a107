"""ROI displacement summaries and the edge-based hyperelastic stress proxy.

Per-frame ROI displacement is the vertex-wise median magnitude of u_k(t);
the condition-level summary is the temporal maximum of that median. Edge
stress maps stretch lambda = l(t)/l(0) through the incompressible
Neo-Hookean uniaxial form sigma = mu * (lambda^2 - 1/lambda); it is a
relative, surface-based comparative quantity, not an absolute wall stress,
and reports use |sigma|.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coherence import DisplacementField
from .graph import EdgeGraph
from .validation import check_positive

DEFAULT_YOUNGS_MODULUS_MPA = 1.15
DEFAULT_POISSON = 0.5


class RoiError(ValueError):
    """Raised for unresolvable or empty regions of interest."""


@dataclass
class RoiSpec:
    """A named vertex subset: an explicit index list or a sphere neighborhood.

    Sphere ROIs resolve against frame-0 centroids once; the resolved set is
    reused for all frames.
    """

    name: str
    kind: str  # "index_list" | "sphere"
    indices: list[int] | None = None
    center: tuple[float, float, float] | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("index_list", "sphere"):
            raise RoiError(f"ROI {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "index_list" and not self.indices:
            raise RoiError(f"ROI {self.name!r}: index_list requires indices")
        if self.kind == "sphere":
            if self.center is None or self.radius is None:
                raise RoiError(f"ROI {self.name!r}: sphere requires center and radius")
            check_positive(self.radius, f"ROI {self.name!r} radius")

    def resolve(self, graph: EdgeGraph) -> np.ndarray:
        """Vertex indices of this ROI on the given graph (frame-0 geometry)."""
        if self.kind == "index_list":
            idx = np.asarray(sorted(set(int(i) for i in self.indices)), dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= graph.vertex_count):
                raise RoiError(f"ROI {self.name!r}: index outside [0, {graph.vertex_count})")
        else:
            center = np.asarray(self.center, dtype=np.float64)
            d = np.linalg.norm(graph.centroids[:, 0] - center, axis=1)
            idx = np.flatnonzero(d <= float(self.radius))
        if idx.size == 0:
            raise RoiError(f"ROI {self.name!r} resolves to no vertices")
        return idx

    def to_json_dict(self) -> dict:
        payload: dict = {"name": self.name, "kind": self.kind}
        if self.kind == "index_list":
            payload["indices"] = [int(i) for i in self.indices]
        else:
            payload["center"] = [float(c) for c in self.center]
            payload["radius"] = float(self.radius)
        return payload

    @classmethod
    def from_json_dict(cls, payload: dict) -> "RoiSpec":
        return cls(
            name=str(payload["name"]),
            kind=str(payload["kind"]),
            indices=payload.get("indices"),
            center=tuple(payload["center"]) if "center" in payload else None,
            radius=payload.get("radius"),
        )


def load_rois(path) -> list[RoiSpec]:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise RoiError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(payload, dict):
        payload = payload.get("rois", [payload])
    return [RoiSpec.from_json_dict(item) for item in payload]


def save_rois(rois: list[RoiSpec], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps([r.to_json_dict() for r in rois], sort_keys=True, indent=2) + "\n"
    )
    return path


@dataclass
class MaterialParams:
    """Isotropic hyperelastic surrogate material (silicone by default)."""

    youngs_modulus_mpa: float = DEFAULT_YOUNGS_MODULUS_MPA
    poisson: float = DEFAULT_POISSON

    def __post_init__(self):
        check_positive(self.youngs_modulus_mpa, "youngs_modulus_mpa")
        self.poisson = float(self.poisson)
        if not 0.0 <= self.poisson <= 0.5:
            raise ValueError(f"poisson ratio must lie in [0, 0.5], got {self.poisson}")

    @property
    def shear_modulus_mpa(self) -> float:
        return self.youngs_modulus_mpa / (2.0 * (1.0 + self.poisson))


def neo_hookean_stress(stretch, mu: float):
    """Uniaxial Neo-Hookean stress sigma = mu * (lambda^2 - 1/lambda), signed."""
    lam = np.asarray(stretch, dtype=np.float64)
    sigma = mu * (lam**2 - 1.0 / lam)
    return float(sigma) if sigma.ndim == 0 else sigma


@dataclass(eq=False)
class StressField:
    """Signed per-edge stress over time; reports use the magnitude."""

    sigma: np.ndarray  # (E, T) float64 MPa, signed
    edges: np.ndarray  # (E, 2) int64
    mu: float  # MPa

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        self.edges = np.asarray(self.edges, dtype=np.int64)
        if self.sigma.shape[0] != self.edges.shape[0]:
            raise ValueError("sigma and edges disagree on edge count")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.sigma)

    @property
    def frame_count(self) -> int:
        return self.sigma.shape[1]


def edge_stress(positions: np.ndarray, edges: np.ndarray, mu: float) -> StressField:
    """Per-edge Neo-Hookean stress proxy from vertex positions over time.

    ``positions`` is (K, T, 3); stretch is edge length relative to frame 0,
    so sigma is exactly zero at the baseline frame. A zero-length baseline
    edge is a construction-time error.
    """
    positions = np.asarray(positions, dtype=np.float64)
    edges = np.asarray(edges, dtype=np.int64)
    vec = positions[edges[:, 0]] - positions[edges[:, 1]]  # (E, T, 3)
    lengths = np.linalg.norm(vec, axis=2)  # (E, T)
    l0 = lengths[:, :1]
    if np.any(l0 <= 0.0):
        bad = int(np.flatnonzero(l0[:, 0] <= 0.0)[0])
        i, j = edges[bad]
        raise ValueError(f"edge ({i}, {j}) has zero baseline length")
    stretch = lengths / l0
    return StressField(sigma=neo_hookean_stress(stretch, mu), edges=edges, mu=float(mu))


def stress_from_graph(
    graph: EdgeGraph,
    field: DisplacementField | None = None,
    material: MaterialParams | None = None,
) -> StressField:
    """Stress proxy on a graph, optionally from smoothed displacements.

    When a displacement field is given, positions are reconstituted as
    x_k(0) + u_k(t); otherwise the raw tracked centroids are used.
    """
    material = material or MaterialParams()
    if field is None:
        positions = graph.centroids
    else:
        if field.vertex_count != graph.vertex_count:
            raise ValueError("field and graph vertex counts differ")
        positions = graph.centroids[:, :1] + field.u
    return edge_stress(positions, graph.edges, material.shear_modulus_mpa)


# -- ROI aggregation ---------------------------------------------------------


def roi_displacement_series(field: DisplacementField, roi_indices: np.ndarray) -> np.ndarray:
    """Per-frame median displacement magnitude over the ROI vertices (mm).

    Medians of even-sized sets are the mean of the two central values.
    """
    roi_indices = np.asarray(roi_indices, dtype=np.int64)
    if roi_indices.size == 0:
        raise RoiError("ROI is empty")
    return np.median(np.linalg.norm(field.u[roi_indices], axis=2), axis=0)


def roi_displacement_max(series: np.ndarray) -> float:
    """Temporal maximum of the per-frame ROI median (mm)."""
    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        raise ValueError("empty displacement series")
    return float(np.max(series))


def roi_edge_indices(stress: StressField, roi_indices: np.ndarray) -> np.ndarray:
    """Indices of edges with both endpoints inside the ROI."""
    roi_indices = np.asarray(roi_indices, dtype=np.int64)
    size = max(int(stress.edges.max(initial=0)), int(roi_indices.max(initial=0))) + 1
    inside = np.zeros(size, dtype=bool)
    inside[roi_indices] = True
    return np.flatnonzero(inside[stress.edges[:, 0]] & inside[stress.edges[:, 1]])


def roi_stress_series(stress: StressField, roi_indices: np.ndarray) -> np.ndarray:
    """Per-frame median of |sigma| over edges induced by the ROI (MPa)."""
    edge_idx = roi_edge_indices(stress, roi_indices)
    if edge_idx.size == 0:
        raise RoiError("ROI induces no interior edges")
    return np.median(stress.magnitude[edge_idx], axis=0)


def roi_stress_max(series: np.ndarray) -> float:
    """Temporal maximum of the per-frame ROI stress median (MPa)."""
    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        raise ValueError("empty stress series")
    return float(np.max(series))


@dataclass
class RoiMetrics:
    """Per-ROI displacement/stress series and their max-median summaries."""

    name: str
    displacement_series_mm: np.ndarray
    displacement_max_mm: float
    stress_series_mpa: np.ndarray
    stress_max_mpa: float


def compute_roi_metrics(
    rois: list[RoiSpec],
    graph: EdgeGraph,
    field: DisplacementField,
    stress: StressField,
) -> list[RoiMetrics]:
    out = []
    for roi in rois:
        idx = roi.resolve(graph)
        d_series = roi_displacement_series(field, idx)
        s_series = roi_stress_series(stress, idx)
        out.append(
            RoiMetrics(
                name=roi.name,
                displacement_series_mm=d_series,
                displacement_max_mm=roi_displacement_max(d_series),
                stress_series_mpa=s_series,
                stress_max_mpa=roi_stress_max(s_series),
            )
        )
    return out


def write_metric_csvs(metrics: list[RoiMetrics], frames_path, summary_path) -> tuple[Path, Path]:
    """Write the per-frame and summary ROI metric tables.

    Split into two files so each CSV keeps a single schema:
    ``roi,frame,d_med_mm,stress_med_mpa`` and ``roi,d_max_mm,stress_max_mpa``.
    """
    frames_path, summary_path = Path(frames_path), Path(summary_path)
    frames_path.parent.mkdir(parents=True, exist_ok=True)
    with frames_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["roi", "frame", "d_med_mm", "stress_med_mpa"])
        for m in metrics:
            for t in range(len(m.displacement_series_mm)):
                writer.writerow(
                    [
                        m.name,
                        t,
                        repr(float(m.displacement_series_mm[t])),
                        repr(float(m.stress_series_mpa[t])),
                    ]
                )
    with summary_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["roi", "d_max_mm", "stress_max_mpa"])
        for m in metrics:
            writer.writerow(
                [m.name, repr(float(m.displacement_max_mm)), repr(float(m.stress_max_mpa))]
            )
    return frames_path, summary_path
