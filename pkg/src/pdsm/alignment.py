"""Posteriorgram-to-segmentation conversion.

The pipeline is: per-frame argmax over the phoneme scores, run-length
encoding of the label sequence into spans, and (when the posteriorgram
hop differs from the saliency map's) proportional resampling of the
span boundaries.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError
from .interchange import PhonemeSegmentation, Posteriorgram, Segment


def frame_argmax(ppg: Posteriorgram) -> np.ndarray:
    """Per-frame most likely phoneme index; ties go to the lowest row."""
    return np.argmax(ppg.data, axis=0)


def segments_from_labels(labels) -> PhonemeSegmentation:
    """Run-length encode a frame label sequence into phoneme spans."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.size == 0:
        raise ValidationError("labels must be a nonempty 1-D sequence")
    change = np.flatnonzero(np.diff(labels)) + 1
    bounds = np.concatenate(([0], change, [labels.size]))
    segs = [
        Segment(int(labels[s]), int(s), int(e))
        for s, e in zip(bounds[:-1], bounds[1:])
    ]
    return PhonemeSegmentation(segs, int(labels.size))


def labels_from_segments(seg: PhonemeSegmentation) -> np.ndarray:
    """Inverse of :func:`segments_from_labels`."""
    out = np.empty(seg.total_frames, dtype=np.int64)
    for s in seg:
        out[s.start : s.end] = s.phoneme_id
    return out


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def resample_segmentation(seg: PhonemeSegmentation, t_target: int) -> PhonemeSegmentation:
    """Rescale span boundaries from seg.total_frames to t_target frames.

    Boundaries map to round(b * t_target / T') with half-up rounding;
    spans emptied by rounding are dropped and adjacent equal-phoneme
    runs merged, preserving the partition and run-length invariants.
    """
    if t_target < 1:
        raise ValidationError("t_target must be >= 1")
    scale = t_target / seg.total_frames
    merged: list[Segment] = []
    for s in seg:
        ns, ne = _round_half_up(s.start * scale), _round_half_up(s.end * scale)
        if ne <= ns:
            continue
        if merged and merged[-1].phoneme_id == s.phoneme_id:
            merged[-1] = Segment(s.phoneme_id, merged[-1].start, ne)
        else:
            merged.append(Segment(s.phoneme_id, ns, ne))
    return PhonemeSegmentation(merged, t_target)


def segmentation_from_ppg(ppg: Posteriorgram, t_target: int | None = None) -> PhonemeSegmentation:
    """Full alignment path: argmax, run-length encode, optional resample."""
    seg = segments_from_labels(frame_argmax(ppg))
    if t_target is not None and t_target != seg.total_frames:
        seg = resample_segmentation(seg, t_target)
    return seg
