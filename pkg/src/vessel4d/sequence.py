"""Primitive-sequence ingest: loading, validation, and track-level filtering.

The canonical on-disk formats are CSV with header
``frame,id,x,y,z,r,g,b,radius,opacity`` and JSONL with one object per
primitive-frame carrying the same keys. Positions are millimetres, colors
are RGB in [0, 1], radius is millimetres, opacity is in [0, 1].
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .validation import check_nonnegative

COLUMNS = ("frame", "id", "x", "y", "z", "r", "g", "b", "radius", "opacity")

DEFAULT_MIN_RADIUS_MM = 0.07
DEFAULT_MIN_OPACITY = 0.05
DEFAULT_MIN_RGB_STD = 0.05


class SequenceError(ValueError):
    """Raised for malformed or invariant-violating sequence data."""


@dataclass(frozen=True)
class Primitive:
    """A single tracked point primitive at one frame."""

    id: int
    position: np.ndarray  # (3,) mm
    color: np.ndarray  # (3,) RGB in [0, 1]
    radius: float  # mm
    opacity: float


@dataclass(eq=False)
class PrimitiveSequence:
    """Tracked point primitives over T frames.

    Every primitive id present in frame 0 is present in all frames, and rows
    are stored in ascending-id order, so all per-frame attributes share one
    (T, N) indexing. ``frame_rate`` is metadata only and is not persisted by
    the canonical text formats.
    """

    ids: np.ndarray  # (N,) int64, ascending
    positions: np.ndarray  # (T, N, 3) float64 mm
    colors: np.ndarray  # (T, N, 3) float64
    radii: np.ndarray  # (T, N) float64 mm
    opacities: np.ndarray  # (T, N) float64
    frame_rate: float = 1.0  # Hz, metadata only

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.colors = np.asarray(self.colors, dtype=np.float64)
        self.radii = np.asarray(self.radii, dtype=np.float64)
        self.opacities = np.asarray(self.opacities, dtype=np.float64)
        n = self.ids.shape[0]
        t = self.positions.shape[0] if self.positions.ndim == 3 else -1
        if self.positions.shape != (t, n, 3) or self.colors.shape != (t, n, 3):
            raise SequenceError("positions/colors must have shape (T, N, 3)")
        if self.radii.shape != (t, n) or self.opacities.shape != (t, n):
            raise SequenceError("radii/opacities must have shape (T, N)")
        if t < 1:
            raise SequenceError("a sequence needs at least one frame")

    @property
    def frame_count(self) -> int:
        return self.positions.shape[0]

    @property
    def primitive_count(self) -> int:
        return self.ids.shape[0]

    def primitive(self, t: int, row: int) -> Primitive:
        return Primitive(
            id=int(self.ids[row]),
            position=self.positions[t, row],
            color=self.colors[t, row],
            radius=float(self.radii[t, row]),
            opacity=float(self.opacities[t, row]),
        )

    def validate(self) -> "PrimitiveSequence":
        """Check value-range invariants; raises :class:`SequenceError`."""
        if self.primitive_count == 0:
            raise SequenceError("sequence contains no primitives")
        if np.unique(self.ids).shape[0] != self.primitive_count:
            raise SequenceError("duplicate primitive ids")
        if np.any(np.diff(self.ids) < 0):
            raise SequenceError("ids must be stored in ascending order")
        for name, arr in (
            ("positions", self.positions),
            ("colors", self.colors),
            ("radii", self.radii),
            ("opacities", self.opacities),
        ):
            if not np.all(np.isfinite(arr)):
                t = int(np.argwhere(~np.isfinite(arr))[0][0])
                raise SequenceError(f"non-finite {name} value at frame {t}")
        if np.any(self.radii < 0):
            raise SequenceError("negative radius")
        if np.any((self.opacities < 0) | (self.opacities > 1)):
            raise SequenceError("opacity outside [0, 1]")
        if np.any((self.colors < 0) | (self.colors > 1)):
            raise SequenceError("color component outside [0, 1]")
        return self

    def __eq__(self, other) -> bool:
        if not isinstance(other, PrimitiveSequence):
            return NotImplemented
        return (
            np.array_equal(self.ids, other.ids)
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.colors, other.colors)
            and np.array_equal(self.radii, other.radii)
            and np.array_equal(self.opacities, other.opacities)
            and self.frame_rate == other.frame_rate
        )


@dataclass
class _RowAccumulator:
    """Collects raw parsed rows keyed by (frame, id) before canonicalization."""

    frames: dict = field(default_factory=dict)  # frame -> {id: (pos, color, radius, opacity)}

    def add(self, where: str, frame: int, pid: int, values: np.ndarray):
        per_frame = self.frames.setdefault(frame, {})
        if pid in per_frame:
            raise SequenceError(f"{where}: duplicate id {pid} in frame {frame}")
        per_frame[pid] = values

    def build(self, frame_rate: float) -> PrimitiveSequence:
        if not self.frames:
            raise SequenceError("no rows parsed")
        frame_keys = sorted(self.frames)
        expected = list(range(len(frame_keys)))
        if frame_keys != expected:
            raise SequenceError(
                f"frame indices must be contiguous 0..T-1, got {frame_keys[:5]}..."
            )
        base_ids = sorted(self.frames[0])
        n, t = len(base_ids), len(frame_keys)
        id_row = {pid: i for i, pid in enumerate(base_ids)}
        data = np.empty((t, n, 8), dtype=np.float64)
        for fr in frame_keys:
            rows = self.frames[fr]
            missing = set(base_ids) - set(rows)
            if missing:
                raise SequenceError(
                    f"id {min(missing)} present in frame 0 but missing in frame {fr}"
                )
            extra = set(rows) - set(base_ids)
            if extra:
                raise SequenceError(
                    f"id {min(extra)} appears in frame {fr} but not in frame 0"
                )
            for pid, values in rows.items():
                data[fr, id_row[pid]] = values
        seq = PrimitiveSequence(
            ids=np.asarray(base_ids, dtype=np.int64),
            positions=data[:, :, 0:3].copy(),
            colors=data[:, :, 3:6].copy(),
            radii=data[:, :, 6].copy(),
            opacities=data[:, :, 7].copy(),
            frame_rate=float(frame_rate),
        )
        return seq.validate()


def _parse_row(where: str, record: dict) -> tuple[int, int, np.ndarray]:
    try:
        frame = int(record["frame"])
        pid = int(record["id"])
        values = np.array(
            [float(record[k]) for k in ("x", "y", "z", "r", "g", "b", "radius", "opacity")],
            dtype=np.float64,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SequenceError(f"{where}: unparseable row ({exc})") from exc
    if not np.all(np.isfinite(values)):
        raise SequenceError(f"{where}: non-finite value for id {pid}, frame {frame}")
    return frame, pid, values


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "jsonl"):
            raise SequenceError(f"unknown sequence format {fmt!r}")
        return fmt
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    raise SequenceError(f"cannot infer format from {path.name!r}; pass format=")


def load_sequence(path, fmt: str | None = None, frame_rate: float = 1.0) -> PrimitiveSequence:
    """Load and validate a primitive sequence from CSV or JSONL.

    Errors carry file/line context. ``frame_rate`` is attached as metadata
    because the canonical text formats do not persist it.
    """
    path = Path(path)
    if not path.exists():
        raise SequenceError(f"sequence file not found: {path}")
    fmt = _infer_format(path, fmt)
    acc = _RowAccumulator()
    if fmt == "csv":
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SequenceError(f"{path}: empty file") from None
            header = [h.strip() for h in header]
            missing = [c for c in COLUMNS if c not in header]
            if missing:
                raise SequenceError(f"{path}: missing column(s) {', '.join(missing)}")
            col = {name: header.index(name) for name in COLUMNS}
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) < len(header):
                    raise SequenceError(f"{path}:{lineno}: truncated row")
                record = {name: row[col[name]] for name in COLUMNS}
                frame, pid, values = _parse_row(f"{path}:{lineno}", record)
                acc.add(f"{path}:{lineno}", frame, pid, values)
    else:
        with path.open() as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SequenceError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
                frame, pid, values = _parse_row(f"{path}:{lineno}", record)
                acc.add(f"{path}:{lineno}", frame, pid, values)
    return acc.build(frame_rate)


def write_sequence(seq: PrimitiveSequence, path, fmt: str | None = None) -> Path:
    """Write a sequence in a canonical text form that round-trips exactly.

    Floats are emitted with ``repr`` (shortest exact form); rows are ordered
    frame-major, then ascending id.
    """
    path = Path(path)
    fmt = _infer_format(path, fmt)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(COLUMNS)
            for t in range(seq.frame_count):
                for n in range(seq.primitive_count):
                    writer.writerow(
                        [t, int(seq.ids[n])]
                        + [repr(float(v)) for v in seq.positions[t, n]]
                        + [repr(float(v)) for v in seq.colors[t, n]]
                        + [repr(float(seq.radii[t, n])), repr(float(seq.opacities[t, n]))]
                    )
    else:
        with path.open("w") as fh:
            for t in range(seq.frame_count):
                for n in range(seq.primitive_count):
                    x, y, z = (float(v) for v in seq.positions[t, n])
                    r, g, b = (float(v) for v in seq.colors[t, n])
                    record = {
                        "frame": t,
                        "id": int(seq.ids[n]),
                        "x": x,
                        "y": y,
                        "z": z,
                        "r": r,
                        "g": g,
                        "b": b,
                        "radius": float(seq.radii[t, n]),
                        "opacity": float(seq.opacities[t, n]),
                    }
                    fh.write(json.dumps(record) + "\n")
    return path


def rgb_std(colors: np.ndarray) -> np.ndarray:
    """Population standard deviation over the 3 RGB channels, per primitive."""
    colors = np.asarray(colors, dtype=np.float64)
    return np.std(colors, axis=-1)


def filter_primitives(
    seq: PrimitiveSequence,
    min_radius: float = DEFAULT_MIN_RADIUS_MM,
    min_opacity: float = DEFAULT_MIN_OPACITY,
    min_rgb_std: float = DEFAULT_MIN_RGB_STD,
) -> PrimitiveSequence:
    """Drop low-quality primitive tracks based on frame-0 attributes.

    A track is removed when its frame-0 radius is below ``min_radius``, its
    frame-0 opacity is below ``min_opacity``, or the population std of its
    frame-0 RGB triple is below ``min_rgb_std`` (near-gray points). The
    decision is made once on frame 0 and applied to the whole track so the
    downstream clustering sees a stable primitive set. Survivor attributes
    are carried over bit-identically.
    """
    check_nonnegative(min_radius, "min_radius")
    check_nonnegative(min_opacity, "min_opacity")
    check_nonnegative(min_rgb_std, "min_rgb_std")
    remove = (
        (seq.radii[0] < min_radius)
        | (seq.opacities[0] < min_opacity)
        | (rgb_std(seq.colors[0]) < min_rgb_std)
    )
    keep = ~remove
    if not np.any(keep):
        raise SequenceError(
            "filtering removed all primitives; loosen min_radius/min_opacity/min_rgb_std"
        )
    return PrimitiveSequence(
        ids=seq.ids[keep].copy(),
        positions=seq.positions[:, keep].copy(),
        colors=seq.colors[:, keep].copy(),
        radii=seq.radii[:, keep].copy(),
        opacities=seq.opacities[:, keep].copy(),
        frame_rate=seq.frame_rate,
    )
