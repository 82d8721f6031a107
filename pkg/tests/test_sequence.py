import numpy as np
import pytest

from vessel4d.sequence import (
    PrimitiveSequence,
    SequenceError,
    filter_primitives,
    load_sequence,
    rgb_std,
    write_sequence,
)

from conftest import make_sequence, random_sequence

HEADER = "frame,id,x,y,z,r,g,b,radius,opacity"


def write_csv(tmp_path, rows, header=HEADER, name="seq.csv"):
    path = tmp_path / name
    path.write_text(header + "\n" + "\n".join(rows) + "\n")
    return path


def test_load_single_frame_three_rows(tmp_path):
    path = write_csv(
        tmp_path,
        [
            "0,1,0.0,0.0,0.0,1.0,0.0,0.0,0.2,0.9",
            "0,2,1.0,0.0,0.0,0.0,1.0,0.0,0.2,0.9",
            "0,3,0.0,1.0,0.0,0.0,0.0,1.0,0.2,0.9",
        ],
    )
    seq = load_sequence(path)
    assert seq.frame_count == 1
    assert seq.primitive_count == 3
    assert list(seq.ids) == [1, 2, 3]


def test_load_id_missing_in_later_frame(tmp_path):
    path = write_csv(
        tmp_path,
        [
            "0,7,0,0,0,1,0,0,0.2,0.9",
            "0,8,1,0,0,1,0,0,0.2,0.9",
            "1,8,1,0,0,1,0,0,0.2,0.9",
        ],
    )
    with pytest.raises(SequenceError, match="id 7.*missing in frame 1"):
        load_sequence(path)


def test_load_id_appearing_only_later(tmp_path):
    path = write_csv(
        tmp_path,
        [
            "0,1,0,0,0,1,0,0,0.2,0.9",
            "1,1,0,0,0,1,0,0,0.2,0.9",
            "1,2,1,0,0,1,0,0,0.2,0.9",
        ],
    )
    with pytest.raises(SequenceError, match="id 2 appears in frame 1"):
        load_sequence(path)


def test_load_two_identical_frames_zero_motion(tmp_path):
    rows = ["0,1,0.5,1.5,-2.0,1,0,0,0.2,0.9", "1,1,0.5,1.5,-2.0,1,0,0,0.2,0.9"]
    seq = load_sequence(write_csv(tmp_path, rows))
    assert seq.frame_count == 2
    assert np.array_equal(seq.positions[0], seq.positions[1])


def test_load_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("frame,id,x,y,z,r,g,b,radius\n0,1,0,0,0,1,0,0,0.2\n")
    with pytest.raises(SequenceError, match="missing column.*opacity"):
        load_sequence(path)


def test_load_nonfinite_with_context(tmp_path):
    path = write_csv(tmp_path, ["0,1,nan,0,0,1,0,0,0.2,0.9"])
    with pytest.raises(SequenceError, match="non-finite.*frame 0"):
        load_sequence(path)


def test_load_duplicate_id_in_frame(tmp_path):
    rows = ["0,1,0,0,0,1,0,0,0.2,0.9", "0,1,1,0,0,1,0,0,0.2,0.9"]
    with pytest.raises(SequenceError, match="duplicate id 1"):
        load_sequence(write_csv(tmp_path, rows))


def test_load_noncontiguous_frames(tmp_path):
    rows = ["0,1,0,0,0,1,0,0,0.2,0.9", "2,1,0,0,0,1,0,0,0.2,0.9"]
    with pytest.raises(SequenceError, match="contiguous"):
        load_sequence(write_csv(tmp_path, rows))


def test_load_rejects_out_of_range_attributes(tmp_path):
    rows = ["0,1,0,0,0,1,0,0,0.2,1.5"]
    with pytest.raises(SequenceError, match="opacity"):
        load_sequence(write_csv(tmp_path, rows))


def test_load_unknown_suffix_needs_format(tmp_path):
    path = tmp_path / "seq.dat"
    path.write_text("x")
    with pytest.raises(SequenceError, match="cannot infer format"):
        load_sequence(path)


def test_load_missing_file(tmp_path):
    with pytest.raises(SequenceError, match="not found"):
        load_sequence(tmp_path / "nope.csv")


@pytest.mark.parametrize("fmt,name", [("csv", "seq.csv"), ("jsonl", "seq.jsonl")])
def test_round_trip_exact(tmp_path, rng, fmt, name):
    seq = random_sequence(rng, n=9, t=4)
    path = write_sequence(seq, tmp_path / name, fmt=fmt)
    assert load_sequence(path, fmt=fmt) == seq


def test_rgb_std_matches_direct_formula():
    # population std of (1, 0, 0): mean 1/3, var = ((2/3)^2 + 2*(1/3)^2) / 3 = 2/9
    expected = np.sqrt(2.0) / 3.0
    assert rgb_std(np.array([1.0, 0.0, 0.0])) == pytest.approx(expected, abs=1e-15)
    assert expected > 0.05  # retained under the default threshold


def test_filter_radius_below_default_removed():
    seq = make_sequence(np.zeros((1, 2, 3)), radii=np.array([[0.06, 0.2]]))
    kept = filter_primitives(seq)
    assert list(kept.ids) == [1]


def test_filter_radius_boundary_kept():
    seq = make_sequence(np.zeros((1, 2, 3)), radii=np.array([[0.07, 0.2]]))
    assert filter_primitives(seq).primitive_count == 2


def test_filter_gray_removed():
    colors = np.array([[0.5, 0.5, 0.5], [1.0, 0.0, 0.0]])
    seq = make_sequence(np.zeros((1, 2, 3)), colors=colors)
    kept = filter_primitives(seq)
    assert list(kept.ids) == [1]


def test_filter_saturated_red_retained():
    seq = make_sequence(
        np.zeros((1, 1, 3)),
        colors=np.array([[1.0, 0.0, 0.0]]),
        radii=np.array([[0.2]]),
        opacities=np.array([[0.9]]),
    )
    assert filter_primitives(seq).primitive_count == 1


def test_filter_low_opacity_removed():
    seq = make_sequence(np.zeros((1, 2, 3)), opacities=np.array([[0.04, 0.9]]))
    assert list(filter_primitives(seq).ids) == [1]


def test_filter_decided_on_frame0_applied_trackwide():
    # radius degrades after frame 0; the track must survive whole
    radii = np.array([[0.2, 0.2], [0.01, 0.2]])
    seq = make_sequence(np.zeros((2, 2, 3)), radii=radii)
    assert filter_primitives(seq).primitive_count == 2


def test_filter_idempotent(rng):
    seq = random_sequence(rng, n=40, t=2)
    once = filter_primitives(seq)
    twice = filter_primitives(once)
    assert once == twice


def test_filter_subset_and_bit_identical_positions(rng):
    seq = random_sequence(rng, n=40, t=3)
    kept = filter_primitives(seq)
    assert set(kept.ids).issubset(set(seq.ids))
    rows = np.searchsorted(seq.ids, kept.ids)
    assert np.array_equal(kept.positions, seq.positions[:, rows])


def test_filter_everything_removed_is_error():
    seq = make_sequence(np.zeros((1, 2, 3)), radii=np.array([[0.01, 0.02]]))
    with pytest.raises(SequenceError, match="removed all primitives"):
        filter_primitives(seq)


def test_filter_rejects_negative_thresholds(rng):
    seq = random_sequence(rng)
    with pytest.raises(ValueError):
        filter_primitives(seq, min_radius=-1.0)


def test_sequence_validate_rejects_bad_shapes():
    with pytest.raises(SequenceError):
        PrimitiveSequence(
            ids=np.array([0, 1]),
            positions=np.zeros((1, 2, 3)),
            colors=np.zeros((1, 2, 3)),
            radii=np.zeros((1, 3)),
            opacities=np.zeros((1, 2)),
        )
