"""Synthetic ground truth: vessel-like bead clouds under known deformation.

Beads (tight clumps of point primitives) are laid out on a tube or Y-shaped
surface, colored in saturated patches so the RGB clustering can recover them
exactly, and deformed either by bulk translation or by a localized pull with
a smooth C1 falloff. The generator knows the exact bead-level graph,
displacement field, and stress proxy, which downstream evaluation treats as
ground truth. A separate degradation step adds Gaussian jitter and spike
outliers to emulate reconstruction error.
"""

from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .coherence import DisplacementField, write_displacement_csv
from .graph import DEFAULT_GAMMA, EdgeGraph, build_edges
from .metrics import MaterialParams, RoiSpec, StressField, save_rois, stress_from_graph
from .sequence import PrimitiveSequence, write_sequence

BEAD_CLUMP_RADIUS_MM = 0.08  # hard bound keeps beads separable at eps=0.7
BEAD_JITTER_FRAC = 0.05  # grid jitter, fraction of bead spacing
BEAD_RADIUS_ATTR_MM = 0.15
BEAD_OPACITY = 0.9


class SynthError(ValueError):
    """Raised for invalid generator configurations."""


@dataclass
class SynthConfig:
    """Ground-truth generator settings; all lengths in mm."""

    surface: str = "tube"  # tube | y_bifurcation
    point_count: int = 4000
    points_per_bead: int = 8
    color_count: int = 5
    frame_count: int = 20
    frame_rate: float = 20.0
    condition: str = "pull"  # bulk | pull
    pull_magnitude_mm: float = 5.0
    pull_center: tuple[float, float, float] | None = None
    pull_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    falloff_radius_mm: float = 10.0
    translation_mm: tuple[float, float, float] = (5.0, 0.0, 0.0)
    noise_sigma_mm: float = 0.0
    outlier_fraction: float = 0.0
    outlier_magnitude_mm: float = 0.0
    seed: int = 0

    def validate(self) -> "SynthConfig":
        if self.surface not in ("tube", "y_bifurcation"):
            raise SynthError(f"unknown surface {self.surface!r}")
        if self.condition not in ("bulk", "pull"):
            raise SynthError(f"unknown condition {self.condition!r}")
        if self.frame_count < 1:
            raise SynthError("frame_count must be >= 1")
        if self.points_per_bead < 3:
            raise SynthError("points_per_bead must be >= 3 so beads form clusters")
        if self.point_count < 4 * self.points_per_bead:
            raise SynthError("point_count too small for a usable bead layout")
        if self.pull_magnitude_mm < 0 or self.outlier_magnitude_mm < 0:
            raise SynthError("magnitudes must be >= 0")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise SynthError("outlier_fraction must lie in [0, 1]")
        if self.noise_sigma_mm < 0:
            raise SynthError("noise_sigma_mm must be >= 0")
        if self.condition == "pull" and self.falloff_radius_mm <= 0:
            raise SynthError("falloff_radius_mm must be > 0 for pull")
        if np.linalg.norm(self.pull_direction) == 0.0:
            raise SynthError("pull_direction must be non-zero")
        return self

    def resolved_pull_center(self) -> np.ndarray:
        if self.pull_center is not None:
            return np.asarray(self.pull_center, dtype=np.float64)
        # top of the surface at the axial midpoint / junction
        return np.array([0.0, 0.0, 3.0])

    def to_json_dict(self) -> dict:
        payload = asdict(self)
        for key in ("pull_center", "pull_direction", "translation_mm"):
            if payload[key] is not None:
                payload[key] = [float(v) for v in payload[key]]
        return payload

    @classmethod
    def from_json_dict(cls, payload: dict) -> "SynthConfig":
        kwargs = dict(payload)
        for key in ("pull_center", "pull_direction", "translation_mm"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(float(v) for v in kwargs[key])
        return cls(**kwargs).validate()


@dataclass
class GroundTruth:
    """Clean sequence plus the generator's own graph/displacement/stress."""

    sequence: PrimitiveSequence
    gt_graph: EdgeGraph
    gt_displacement: DisplacementField
    gt_stress: StressField
    bead_centers: np.ndarray = None  # (K, 3) frame-0 bead centers


@dataclass
class _Segment:
    start: np.ndarray
    end: np.ndarray
    radius: float

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    @property
    def area(self) -> float:
        return 2.0 * np.pi * self.radius * self.length

    def frame_vectors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        axis = (self.end - self.start) / self.length
        helper = np.array([0.0, 0.0, 1.0])
        if abs(np.dot(axis, helper)) > 0.9:
            helper = np.array([0.0, 1.0, 0.0])
        e1 = np.cross(axis, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(axis, e1)
        return axis, e1, e2


def _surface_segments(surface: str) -> list[_Segment]:
    if surface == "tube":
        return [_Segment(np.array([-30.0, 0.0, 0.0]), np.array([30.0, 0.0, 0.0]), 3.0)]
    ang = np.deg2rad(35.0)
    branch = 25.0 * np.array([np.cos(ang), np.sin(ang), 0.0])
    return [
        _Segment(np.array([-30.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.0]), 3.0),
        _Segment(np.array([0.0, 0.0, 0.0]), branch.copy(), 2.2),
        _Segment(np.array([0.0, 0.0, 0.0]), branch * np.array([1.0, -1.0, 1.0]), 2.2),
    ]


def _bead_layout(config: SynthConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Bead centers on the surface and a patch color per bead.

    Beads sit on a jittered parametric grid with spacing well above the
    clustering eps so each bead comes back as exactly one spatial cluster.
    Returns (centers (B, 3), colors (B, 3)).
    """
    segments = _surface_segments(config.surface)
    n_beads_total = max(8, config.point_count // config.points_per_bead)
    areas = np.array([s.area for s in segments])
    quota = np.maximum(4, np.round(n_beads_total * areas / areas.sum()).astype(int))
    palette = np.array(
        [colorsys.hsv_to_rgb(h, 1.0, 1.0) for h in np.arange(config.color_count) / config.color_count]
    )
    centers, colors = [], []
    for seg_idx, (seg, n_target) in enumerate(zip(segments, quota)):
        axis, e1, e2 = seg.frame_vectors()
        circumference = 2.0 * np.pi * seg.radius
        n_around = max(4, int(round(np.sqrt(n_target * circumference / seg.length))))
        n_axial = max(2, int(round(n_target / n_around)))
        ds, dtheta = seg.length / n_axial, 2.0 * np.pi / n_around
        jitter = rng.uniform(-BEAD_JITTER_FRAC, BEAD_JITTER_FRAC, size=(n_axial, n_around, 2))
        for a in range(n_axial):
            for c in range(n_around):
                s_par = (a + 0.5 + jitter[a, c, 0]) / n_axial
                theta = (c + 0.5 + jitter[a, c, 1]) * dtheta
                center = (
                    seg.start
                    + s_par * seg.length * axis
                    + seg.radius * (np.cos(theta) * e1 + np.sin(theta) * e2)
                )
                band = min(config.color_count - 1, int(s_par * config.color_count))
                centers.append(center)
                colors.append(palette[(seg_idx + band) % config.color_count])
    return np.asarray(centers), np.asarray(colors)


def smooth_falloff(distance: np.ndarray, radius: float) -> np.ndarray:
    """C1 falloff weight: 1 at the center, 0 at/beyond ``radius`` (smoothstep)."""
    s = np.clip(np.asarray(distance, dtype=np.float64) / float(radius), 0.0, 1.0)
    return 1.0 - (3.0 * s**2 - 2.0 * s**3)


def displacement_at(points: np.ndarray, frac: float, config: SynthConfig) -> np.ndarray:
    """Ground-truth displacement of ``points`` at ramp fraction ``frac``."""
    points = np.asarray(points, dtype=np.float64)
    if config.condition == "bulk":
        return np.broadcast_to(
            frac * np.asarray(config.translation_mm, dtype=np.float64), points.shape
        ).copy()
    center = config.resolved_pull_center()
    direction = np.asarray(config.pull_direction, dtype=np.float64)
    direction = direction / np.linalg.norm(direction)
    w = smooth_falloff(
        np.linalg.norm(points - center, axis=-1), config.falloff_radius_mm
    )
    return config.pull_magnitude_mm * frac * w[..., None] * direction


def _ramp(config: SynthConfig) -> np.ndarray:
    t = config.frame_count
    return np.zeros(1) if t == 1 else np.arange(t, dtype=np.float64) / (t - 1)


def generate(config: SynthConfig, material: MaterialParams | None = None) -> GroundTruth:
    """Build the clean ground-truth bundle for one deformation condition.

    Deterministic for a fixed seed: identical configs yield bit-identical
    sequences, graphs, and fields.
    """
    config.validate()
    material = material or MaterialParams()
    rng = np.random.default_rng(config.seed)
    bead_centers, bead_colors = _bead_layout(config, rng)
    n_beads = bead_centers.shape[0]

    counts = np.full(n_beads, config.point_count // n_beads, dtype=np.int64)
    counts[: config.point_count - int(counts.sum())] += 1
    if counts.min() < 3:
        raise SynthError(
            f"point_count {config.point_count} spreads below 3 points per bead"
        )
    bead_of_point = np.repeat(np.arange(n_beads), counts)
    n_points = bead_of_point.shape[0]

    # uniform-in-ball clump offsets: bounded so beads stay separable
    directions = rng.normal(size=(n_points, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = BEAD_CLUMP_RADIUS_MM * rng.uniform(0.0, 1.0, n_points) ** (1.0 / 3.0)
    base_points = bead_centers[bead_of_point] + directions * radii[:, None]

    ramp = _ramp(config)
    t = config.frame_count
    positions = np.empty((t, n_points, 3), dtype=np.float64)
    bead_traj = np.empty((n_beads, t, 3), dtype=np.float64)
    for fr in range(t):
        positions[fr] = base_points + displacement_at(base_points, ramp[fr], config)
        bead_traj[:, fr] = bead_centers + displacement_at(bead_centers, ramp[fr], config)

    colors = np.broadcast_to(bead_colors[bead_of_point], (t, n_points, 3)).copy()
    sequence = PrimitiveSequence(
        ids=np.arange(n_points, dtype=np.int64),
        positions=positions,
        colors=colors,
        radii=np.full((t, n_points), BEAD_RADIUS_ATTR_MM),
        opacities=np.full((t, n_points), BEAD_OPACITY),
        frame_rate=config.frame_rate,
    ).validate()

    edges = build_edges(bead_centers, gamma=DEFAULT_GAMMA)
    gt_graph = EdgeGraph(
        centroids=bead_traj,
        edges=edges,
        member_counts=np.broadcast_to(counts[:, None], (n_beads, t)).copy(),
    )
    gt_displacement = DisplacementField(u=bead_traj - bead_traj[:, :1])
    gt_stress = stress_from_graph(gt_graph, material=material)
    return GroundTruth(
        sequence=sequence,
        gt_graph=gt_graph,
        gt_displacement=gt_displacement,
        gt_stress=gt_stress,
        bead_centers=bead_centers,
    )


def degrade(
    sequence: PrimitiveSequence,
    noise_sigma: float = 0.0,
    outlier_fraction: float = 0.0,
    outlier_magnitude: float = 0.0,
    seed: int = 0,
) -> PrimitiveSequence:
    """Emulate reconstruction error on a clean sequence.

    Adds per-point isotropic Gaussian jitter at every frame, then gives
    exactly floor(outlier_fraction * N) randomly chosen tracks a constant
    spike of the given magnitude in a random direction at all frames t > 0.
    Ids are preserved; zero parameters return an identical copy.
    """
    if noise_sigma < 0 or outlier_fraction < 0 or outlier_magnitude < 0:
        raise SynthError("degradation parameters must be >= 0")
    rng = np.random.default_rng(seed)
    positions = sequence.positions.copy()
    n = sequence.primitive_count
    if noise_sigma > 0.0:
        positions += rng.normal(0.0, noise_sigma, positions.shape)
    n_out = int(np.floor(outlier_fraction * n))
    if n_out > 0 and outlier_magnitude > 0.0:
        chosen = rng.permutation(n)[:n_out]
        dirs = rng.normal(size=(n_out, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        positions[1:, chosen] += outlier_magnitude * dirs
    return PrimitiveSequence(
        ids=sequence.ids.copy(),
        positions=positions,
        colors=sequence.colors.copy(),
        radii=sequence.radii.copy(),
        opacities=sequence.opacities.copy(),
        frame_rate=sequence.frame_rate,
    )


def default_rois(config: SynthConfig, radius: float = 5.0, count: int = 5) -> list[RoiSpec]:
    """Sphere ROIs along the vessel axis; the first sits at the pull center."""
    center = config.resolved_pull_center()
    offsets = [0.0, -15.0, -7.5, 7.5, 15.0][:count]
    rois = []
    for i, off in enumerate(offsets):
        c = center + np.array([off, 0.0, 0.0])
        rois.append(
            RoiSpec(
                name=f"R{i + 1}",
                kind="sphere",
                center=(float(c[0]), float(c[1]), float(c[2])),
                radius=radius,
            )
        )
    return rois


def write_stress_csv(stress: StressField, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("i,j,frame,sigma_mpa\n")
        for e, (i, j) in enumerate(stress.edges):
            for fr in range(stress.frame_count):
                fh.write(f"{int(i)},{int(j)},{fr},{repr(float(stress.sigma[e, fr]))}\n")
    return path


def write_bundle(
    out_dir,
    gt: GroundTruth,
    config: SynthConfig,
    degraded: PrimitiveSequence | None = None,
) -> Path:
    """Write the ground-truth bundle directory emitted by the synth stage."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_sequence(gt.sequence, out_dir / "sequence.csv")
    gt.gt_graph.save(out_dir / "gt_graph.json")
    write_displacement_csv(gt.gt_displacement, out_dir / "gt_displacement.csv")
    write_stress_csv(gt.gt_stress, out_dir / "gt_stress.csv")
    (out_dir / "config.json").write_text(
        json.dumps(config.to_json_dict(), sort_keys=True, indent=2) + "\n"
    )
    save_rois(default_rois(config), out_dir / "rois.json")
    if degraded is not None:
        write_sequence(degraded, out_dir / "sequence_degraded.csv")
    return out_dir


@dataclass
class Bundle:
    """A ground-truth bundle read back from disk."""

    directory: Path
    config: SynthConfig
    gt_graph: EdgeGraph
    gt_sequence: PrimitiveSequence
    rois: list[RoiSpec] = field(default_factory=list)
    degraded_path: Path | None = None

    @property
    def gt_displacement(self) -> DisplacementField:
        return DisplacementField(u=self.gt_graph.centroids - self.gt_graph.centroids[:, :1])


def read_bundle(directory) -> Bundle:
    from .metrics import load_rois
    from .sequence import load_sequence

    directory = Path(directory)
    config = SynthConfig.from_json_dict(json.loads((directory / "config.json").read_text()))
    gt_graph = EdgeGraph.load(directory / "gt_graph.json")
    gt_sequence = load_sequence(directory / "sequence.csv", frame_rate=config.frame_rate)
    rois = load_rois(directory / "rois.json") if (directory / "rois.json").exists() else []
    degraded = directory / "sequence_degraded.csv"
    return Bundle(
        directory=directory,
        config=config,
        gt_graph=gt_graph,
        gt_sequence=gt_sequence,
        rois=rois,
        degraded_path=degraded if degraded.exists() else None,
    )
