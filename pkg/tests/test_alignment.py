"""Posteriorgram alignment: argmax, run-length coding, resampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdsm.alignment import (
    frame_argmax,
    labels_from_segments,
    resample_segmentation,
    segmentation_from_ppg,
    segments_from_labels,
)
from pdsm.errors import ValidationError
from pdsm.interchange import PhonemeSegmentation, Posteriorgram, Segment

label_seqs = st.lists(st.integers(0, 5), min_size=1, max_size=80)


def test_frame_argmax_basic():
    cols = np.array([
        [0.1, 0.1, 0.5, 0.3],
        [0.8, 0.8, 0.25, 0.3],
        [0.1, 0.1, 0.25, 0.4],
    ])
    assert list(frame_argmax(Posteriorgram(cols))) == [1, 1, 0, 2]


def test_frame_argmax_tie_breaks_low():
    ppg = Posteriorgram(np.full((3, 2), 1 / 3))
    assert list(frame_argmax(ppg)) == [0, 0]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_frame_argmax_column_scale_invariance(seed):
    rng = np.random.default_rng(seed)
    data = rng.uniform(0.0, 1.0, size=(4, 10))
    # strictly positive per-column rescaling cannot change the argmax
    scales = rng.uniform(0.1, 10.0, size=10)
    a = frame_argmax(Posteriorgram(data))
    b = frame_argmax(Posteriorgram(data * scales[None, :]))
    assert np.array_equal(a, b)


def test_segments_from_labels_examples():
    seg = segments_from_labels([0, 0, 2, 2, 2, 1])
    assert seg.segments == [Segment(0, 0, 2), Segment(2, 2, 5), Segment(1, 5, 6)]
    assert segments_from_labels([7]).segments == [Segment(7, 0, 1)]
    with pytest.raises(ValidationError):
        segments_from_labels([])


@settings(max_examples=200, deadline=None)
@given(label_seqs)
def test_run_length_round_trip(labels):
    seg = segments_from_labels(labels)
    assert list(labels_from_segments(seg)) == labels


def test_round_trip_bulk():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        labels = rng.integers(0, 8, size=rng.integers(1, 60))
        seg = segments_from_labels(labels)
        assert np.array_equal(labels_from_segments(seg), labels)


def test_resample_identity():
    seg = segments_from_labels([0, 0, 2, 2, 2, 1])
    assert resample_segmentation(seg, 6) == seg


def test_resample_halving():
    seg = PhonemeSegmentation([Segment(0, 0, 3), Segment(1, 3, 6)], 6)
    out = resample_segmentation(seg, 2)
    assert out.segments == [Segment(0, 0, 1), Segment(1, 1, 2)]


def test_resample_rejects_bad_target():
    seg = segments_from_labels([0, 1])
    with pytest.raises(ValidationError):
        resample_segmentation(seg, 0)


def _phoneme_sequence(seg):
    return [s.phoneme_id for s in seg]


def _is_subsequence(short, long):
    it = iter(long)
    return all(p in it for p in short)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 300))
def test_resample_preserves_partition_and_order(seed, t_target):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 6, size=100)
    seg = segments_from_labels(labels)
    out = resample_segmentation(seg, t_target)
    # the PhonemeSegmentation constructor validates the partition and
    # run-length invariants; surviving phonemes must keep their order
    assert out.total_frames == t_target
    assert _is_subsequence(_phoneme_sequence(out), _phoneme_sequence(seg))


@settings(max_examples=100, deadline=None)
@given(label_seqs)
def test_resample_idempotent_at_same_length(labels):
    seg = segments_from_labels(labels)
    assert resample_segmentation(seg, seg.total_frames) == seg


def test_segmentation_from_ppg_resamples():
    data = np.zeros((3, 6))
    data[0, :2] = 1.0
    data[2, 2:5] = 1.0
    data[1, 5] = 1.0
    seg = segmentation_from_ppg(Posteriorgram(data))
    assert seg.segments == [Segment(0, 0, 2), Segment(2, 2, 5), Segment(1, 5, 6)]
    seg12 = segmentation_from_ppg(Posteriorgram(data), t_target=12)
    assert seg12.total_frames == 12
    assert seg12.segments == [Segment(0, 0, 4), Segment(2, 4, 10), Segment(1, 10, 12)]
