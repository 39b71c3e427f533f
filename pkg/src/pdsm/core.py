"""Phoneme discretization of saliency maps.

Given a saliency map and a phoneme segmentation, pool the preprocessed
map inside each phoneme span, keep the k highest-energy spans, and emit
a binary column-constant mask covering exactly those spans.  A seeded
random-span baseline is provided for faithfulness comparisons.

Randomness contract: all stochastic choices use numpy's PCG64 generator
seeded through ``numpy.random.SeedSequence``, which is documented,
portable, and splittable across samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .alignment import segmentation_from_ppg
from .errors import ValidationError
from .interchange import DiscretizedMask, PhonemeSegmentation, Posteriorgram, SaliencyMap

POOLS = ("mean", "sum", "max")
THRESHOLD_MODES = ("none", "absolute", "quantile")


@dataclass(frozen=True)
class PdsmConfig:
    """Hyperparameters of the discretization.

    threshold_value is the cutoff tau in absolute mode and the quantile
    q in quantile mode; it is ignored in mode "none".
    """

    use_abs: bool = False
    threshold_mode: str = "none"
    threshold_value: float = 0.0
    pool: str = "mean"
    k: int = 3
    exclude_silence: bool = False
    silence_index: int | None = None

    def __post_init__(self):
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValidationError(f"unknown threshold_mode {self.threshold_mode!r}")
        if self.pool not in POOLS:
            raise ValidationError(f"unknown pool {self.pool!r}")
        if self.threshold_mode == "quantile" and not 0.0 <= self.threshold_value <= 1.0:
            raise ValidationError("quantile threshold_value must lie in [0, 1]")
        if self.k < 0:
            raise ValidationError("k must be >= 0")


#: Named presets.  "tt2": threshold without abs, mean pooling.
#: "fs2": threshold with abs, sum pooling.  q = 0.8 in both.
PRESETS = {
    "tt2": PdsmConfig(use_abs=False, threshold_mode="quantile", threshold_value=0.8, pool="mean"),
    "fs2": PdsmConfig(use_abs=True, threshold_mode="quantile", threshold_value=0.8, pool="sum"),
}


def get_preset(name: str, **overrides) -> PdsmConfig:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides)


def quantile_cutoff(values: np.ndarray, q: float) -> float:
    """Sort-based quantile: entries strictly below the cutoff get zeroed.

    The cutoff is the value at index ceil(q * n) of the ascending sort,
    so with distinct values exactly ceil(q * n) entries fall below it.
    At q = 1 the maximum is kept.
    """
    flat = np.sort(values, axis=None)
    i = math.ceil(q * flat.size)
    return float(flat[min(i, flat.size - 1)])


def preprocess(m, cfg: PdsmConfig) -> np.ndarray:
    """Optional abs followed by optional thresholding, in that order."""
    data = m.data if isinstance(m, SaliencyMap) else np.asarray(m, dtype=np.float64)
    out = np.abs(data) if cfg.use_abs else data.copy()
    if cfg.threshold_mode == "absolute":
        out[out < cfg.threshold_value] = 0.0
    elif cfg.threshold_mode == "quantile":
        out[out < quantile_cutoff(out, cfg.threshold_value)] = 0.0
    return out


def phoneme_energies(m_pre: np.ndarray, seg: PhonemeSegmentation, pool: str = "mean") -> np.ndarray:
    """Pool the preprocessed map inside each phoneme span."""
    m_pre = np.asarray(m_pre, dtype=np.float64)
    if m_pre.ndim != 2 or m_pre.shape[1] != seg.total_frames:
        raise ValidationError(
            f"map has {m_pre.shape} but segmentation covers {seg.total_frames} frames"
        )
    if pool not in POOLS:
        raise ValidationError(f"unknown pool {pool!r}")
    out = np.empty(len(seg))
    for i, s in enumerate(seg):
        block = m_pre[:, s.start : s.end]
        if pool == "mean":
            out[i] = block.mean()
        elif pool == "sum":
            out[i] = block.sum()
        else:
            out[i] = block.max()
    return out


def select_top_k(energies, k: int, forbidden=()) -> list[int]:
    """Indices of the k highest energies, ties broken by earlier span.

    Returns the selection in descending-energy order (stable).  Indices
    in ``forbidden`` are skipped.  Saturates at the number of available
    spans.
    """
    if k < 0:
        raise ValidationError("k must be >= 0")
    energies = np.asarray(energies, dtype=np.float64)
    skip = set(forbidden)
    order = np.argsort(-energies, kind="stable")
    picked = [int(i) for i in order if i not in skip]
    return picked[: min(k, len(picked))]


def build_mask(seg: PhonemeSegmentation, selected, n_freq: int, k_requested: int | None = None) -> DiscretizedMask:
    """Binary mask turning on the columns of the selected spans."""
    selected = list(selected)
    if any(j < 0 or j >= len(seg) for j in selected):
        raise ValidationError("selected indices must reference existing segments")
    data = np.zeros((n_freq, seg.total_frames))
    for j in selected:
        s = seg.segments[j]
        data[:, s.start : s.end] = 1.0
    return DiscretizedMask(
        data,
        selected=frozenset(selected),
        k_requested=len(selected) if k_requested is None else k_requested,
    )


def _silence_forbidden(cfg: PdsmConfig, seg: PhonemeSegmentation):
    if not cfg.exclude_silence:
        return ()
    if cfg.silence_index is None:
        raise ValidationError("exclude_silence requires silence_index")
    return tuple(i for i, s in enumerate(seg) if s.phoneme_id == cfg.silence_index)


def pdsm_select(m, seg: PhonemeSegmentation, cfg: PdsmConfig) -> list[int]:
    """Preprocess, pool and select; the shared core of pdsm and ranking."""
    m_pre = preprocess(m, cfg)
    energies = phoneme_energies(m_pre, seg, cfg.pool)
    return select_top_k(energies, cfg.k, forbidden=_silence_forbidden(cfg, seg))


def pdsm(m: SaliencyMap, ppg: Posteriorgram, cfg: PdsmConfig) -> DiscretizedMask:
    """Full discretization: saliency map + posteriorgram -> binary mask.

    The posteriorgram's segmentation is resampled to the map's frame
    count when the two time axes disagree.
    """
    n_freq, n_frames = m.shape
    seg = segmentation_from_ppg(ppg, t_target=n_frames)
    selected = pdsm_select(m, seg, cfg)
    return build_mask(seg, selected, n_freq, k_requested=cfg.k)


def pdsm_from_segmentation(m, seg: PhonemeSegmentation, cfg: PdsmConfig, n_freq: int | None = None) -> DiscretizedMask:
    """Like :func:`pdsm` but with a precomputed segmentation."""
    data = m.data if isinstance(m, SaliencyMap) else np.asarray(m)
    selected = pdsm_select(m, seg, cfg)
    return build_mask(seg, selected, data.shape[0] if n_freq is None else n_freq, k_requested=cfg.k)


def random_phoneme_mask(seg: PhonemeSegmentation, k: int, seed: int, n_freq: int) -> DiscretizedMask:
    """Baseline: k spans drawn uniformly without replacement, seeded."""
    if k < 0:
        raise ValidationError("k must be >= 0")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n = len(seg)
    selected = rng.choice(n, size=min(k, n), replace=False)
    return build_mask(seg, [int(j) for j in selected], n_freq, k_requested=k)
