import numpy as np
import pytest

from vessel4d.sequence import PrimitiveSequence


def make_sequence(
    positions,
    colors=None,
    radii=None,
    opacities=None,
    ids=None,
    frame_rate=1.0,
) -> PrimitiveSequence:
    """Build a sequence from (T, N, 3) positions with sane default attributes."""
    positions = np.asarray(positions, dtype=np.float64)
    t, n = positions.shape[0], positions.shape[1]
    if colors is None:
        colors = np.tile(np.array([1.0, 0.0, 0.0]), (t, n, 1))
    else:
        colors = np.asarray(colors, dtype=np.float64)
        if colors.ndim == 2:  # (N, 3) per-track constant colors
            colors = np.tile(colors[None, :, :], (t, 1, 1))
    radii = np.full((t, n), 0.2) if radii is None else np.asarray(radii, dtype=np.float64)
    opacities = (
        np.full((t, n), 0.9) if opacities is None else np.asarray(opacities, dtype=np.float64)
    )
    ids = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
    return PrimitiveSequence(
        ids=ids,
        positions=positions,
        colors=colors,
        radii=radii,
        opacities=opacities,
        frame_rate=frame_rate,
    )


def random_sequence(rng, n=12, t=3, spread=10.0) -> PrimitiveSequence:
    positions = rng.uniform(-spread, spread, size=(t, n, 3))
    colors = rng.uniform(0.0, 1.0, size=(t, n, 3))
    radii = rng.uniform(0.05, 0.5, size=(t, n))
    opacities = rng.uniform(0.0, 1.0, size=(t, n))
    return PrimitiveSequence(
        ids=np.arange(n, dtype=np.int64),
        positions=positions,
        colors=colors,
        radii=radii,
        opacities=opacities,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
