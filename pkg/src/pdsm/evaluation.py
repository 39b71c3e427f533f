"""Faithfulness and understandability metrics.

Faithfulness of a mask M for class c is the drop in the class
probability when the masked region is removed:

    FF = f(X)_c - f(X * (1 - M))_c

It accepts both binary discretized masks and continuous maps in [0, 1];
continuous saliency maps are evaluated after abs + min-max
normalization.  The sweep produces one row per sample x k x variant
(pdsm / random / continuous) and writes CSV + JSON reports with stable
ordering.
"""

from __future__ import annotations

import csv
import json
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .alignment import segmentation_from_ppg
from .core import PdsmConfig, pdsm_from_segmentation, phoneme_energies, preprocess, random_phoneme_mask, select_top_k
from .errors import ValidationError
from .interchange import DiscretizedMask, PhonemeSegmentation, Posteriorgram, SaliencyMap, Spectrogram
from .toy_model import ToyClassifier, forward

FRACTION_BIN_WIDTH = 0.05
VARIANTS = ("pdsm", "random", "continuous")


@dataclass
class ReportRow:
    sample_id: str
    method: str
    k: int
    variant: str
    ff: float
    mask_fraction: float


@dataclass
class FaithfulnessReport:
    rows: list[ReportRow] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def aggregate(self) -> dict:
        """Mean FF per (method, variant, k); equals a naive group-by."""
        groups: dict[tuple, list[float]] = {}
        for r in self.rows:
            groups.setdefault((r.method, r.variant, r.k), []).append(r.ff)
        return {
            f"{m}/{v}/k={k}": float(np.mean(vals))
            for (m, v, k), vals in sorted(groups.items())
        }


def _mask_array(mask):
    if isinstance(mask, DiscretizedMask):
        return mask.data
    return np.asarray(mask, dtype=np.float64)


def faithfulness(model: ToyClassifier, x, m_eval, c: int) -> float:
    """FF = f(X)_c - f(X * (1 - M))_c with M entries in [0, 1]."""
    x = x.data if isinstance(x, Spectrogram) else np.asarray(x, dtype=np.float64)
    m = _mask_array(m_eval)
    if m.shape != x.shape:
        raise ValidationError(f"mask shape {m.shape} does not match input {x.shape}")
    if np.any(m < 0) or np.any(m > 1):
        raise ValidationError("mask entries must lie in [0, 1]")
    return float(forward(model, x)[c] - forward(model, x * (1.0 - m))[c])


def normalize_continuous_map(m) -> np.ndarray:
    """abs + min-max to [0, 1]; constant maps normalize to all-zeros."""
    data = np.abs(m.data if isinstance(m, SaliencyMap) else np.asarray(m, dtype=np.float64))
    lo, hi = data.min(), data.max()
    if hi - lo <= 0.0:
        return np.zeros_like(data)
    return (data - lo) / (hi - lo)


def mask_fraction(mask) -> float:
    m = _mask_array(mask)
    return float(m[0].sum() / m.shape[1]) if isinstance(mask, DiscretizedMask) else float(m.mean())


@dataclass
class SweepItem:
    """One evaluated sample: its spectrogram, saliency map and alignment."""

    sample_id: str
    spectrogram: np.ndarray
    saliency: SaliencyMap
    segmentation: PhonemeSegmentation


def sweep_item(sample_id, spectrogram, saliency: SaliencyMap, ppg: Posteriorgram) -> SweepItem:
    x = spectrogram.data if isinstance(spectrogram, Spectrogram) else np.asarray(spectrogram)
    seg = segmentation_from_ppg(ppg, t_target=x.shape[1])
    return SweepItem(sample_id, x, saliency, seg)


def sweep_k(model: ToyClassifier, items: list[SweepItem], cfg: PdsmConfig,
            k_range, seeds=(0, 1, 2), c: int = 1, method: str | None = None) -> FaithfulnessReport:
    """FF of PDSM, random-baseline and continuous maps over a k range.

    The random-baseline row for each (sample, k) is the mean FF over
    the given seeds; seed streams are derived per (seed, sample, k) so
    the sweep is reproducible and order-independent.
    """
    k_range = list(k_range)
    if not k_range:
        raise ValidationError("k_range must be nonempty")
    report = FaithfulnessReport(metadata={"pdsm_config": repr(cfg), "seeds": list(seeds), "class": c})
    for item in sorted(items, key=lambda it: it.sample_id):
        x = item.spectrogram
        n_freq = x.shape[0]
        mname = method or item.saliency.method_id
        cont = normalize_continuous_map(item.saliency)
        ff_cont = faithfulness(model, x, cont, c)
        for k in k_range:
            mask = pdsm_from_segmentation(item.saliency, item.segmentation, replace(cfg, k=k), n_freq=n_freq)
            report.rows.append(ReportRow(
                item.sample_id, mname, k, "pdsm",
                faithfulness(model, x, mask, c), mask_fraction(mask),
            ))
            rand_ffs, rand_fracs = [], []
            for seed in seeds:
                sid_key = zlib.crc32(item.sample_id.encode("utf-8"))
                sub = int(np.random.SeedSequence(seed, spawn_key=(sid_key, k)).generate_state(1)[0])
                rmask = random_phoneme_mask(item.segmentation, k, sub, n_freq)
                rand_ffs.append(faithfulness(model, x, rmask, c))
                rand_fracs.append(mask_fraction(rmask))
            report.rows.append(ReportRow(
                item.sample_id, mname, k, "random",
                float(np.mean(rand_ffs)), float(np.mean(rand_fracs)),
            ))
            report.rows.append(ReportRow(
                item.sample_id, mname, k, "continuous", ff_cont, mask_fraction(cont),
            ))
    return report


def length_normalized_curve(rows: list[ReportRow]) -> list[dict]:
    """Mean FF per mask-fraction bin of width 0.05; empty bins omitted."""
    bins: dict[int, list[float]] = {}
    for r in rows:
        bins.setdefault(int(r.mask_fraction / FRACTION_BIN_WIDTH), []).append(r.ff)
    return [
        {
            "fraction_lo": b * FRACTION_BIN_WIDTH,
            "fraction_hi": (b + 1) * FRACTION_BIN_WIDTH,
            "mean_ff": float(np.mean(vals)),
            "count": len(vals),
        }
        for b, vals in sorted(bins.items())
    ]


def global_importance(items: list[tuple[SaliencyMap, PhonemeSegmentation]], vocab: list[str],
                      cfg: PdsmConfig) -> list[dict]:
    """Dataset-level pooled energy per phoneme label, duration-normalized.

    Sum-pools the preprocessed maps inside every span, accumulates per
    label over all samples, divides by the label's total frame count,
    and sorts descending by the normalized importance.  Labels that
    never occur are excluded.
    """
    energy = np.zeros(len(vocab))
    frames = np.zeros(len(vocab), dtype=np.int64)
    for smap, seg in items:
        m_pre = preprocess(smap, cfg)
        e = phoneme_energies(m_pre, seg, pool="sum")
        for i, s in enumerate(seg):
            energy[s.phoneme_id] += e[i]
            frames[s.phoneme_id] += s.end - s.start
    table = [
        {
            "label": vocab[p],
            "total_energy": float(energy[p]),
            "total_frames": int(frames[p]),
            "normalized_importance": float(energy[p] / frames[p]),
        }
        for p in range(len(vocab))
        if frames[p] > 0
    ]
    table.sort(key=lambda r: -r["normalized_importance"])
    return table


def rank_phonemes(m: SaliencyMap, ppg: Posteriorgram, cfg: PdsmConfig, top_m: int) -> list[dict]:
    """Spans ordered by descending pooled energy (stable tie-break)."""
    seg = segmentation_from_ppg(ppg, t_target=m.shape[1])
    m_pre = preprocess(m, cfg)
    energies = phoneme_energies(m_pre, seg, cfg.pool)
    order = select_top_k(energies, min(top_m, len(seg)))
    vocab = ppg.vocab or [str(i) for i in range(ppg.n_phonemes)]
    return [
        {
            "rank": r,
            "label": vocab[seg.segments[j].phoneme_id],
            "start": seg.segments[j].start,
            "end": seg.segments[j].end,
            "energy": float(energies[j]),
        }
        for r, j in enumerate(order)
    ]


def localization_score(mask_or_map, window) -> dict:
    """Overlap between a mask/map and a ground-truth frame window.

    recall and precision are frame-based (meaningful for binary masks);
    energy_fraction is mass-based and is the right statistic for
    continuous maps.
    """
    start, end = int(window[0]), int(window[1])
    data = _mask_array(mask_or_map)
    t = data.shape[1]
    if not 0 <= start < end <= t:
        raise ValidationError(f"window [{start}, {end}) must be nonempty and within [0, {t})")
    mass = np.abs(data)
    total_mass = mass.sum()
    energy_fraction = float(mass[:, start:end].sum() / total_mass) if total_mass > 0 else 0.0
    on = np.flatnonzero(mass.max(axis=0) > 0)
    inside = int(np.count_nonzero((on >= start) & (on < end)))
    return {
        "recall": inside / (end - start),
        "precision": inside / on.size if on.size else 0.0,
        "energy_fraction": energy_fraction,
    }


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_report_csv(report: FaithfulnessReport, path) -> None:
    """One row per sample x method x k x variant, 17-digit reals, LF."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "method", "k", "variant", "ff", "mask_fraction"])
        for r in report.rows:
            w.writerow([r.sample_id, r.method, r.k, r.variant, _fmt(r.ff), _fmt(r.mask_fraction)])


def read_report_csv(path) -> FaithfulnessReport:
    report = FaithfulnessReport()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            report.rows.append(ReportRow(
                row["sample_id"], row["method"], int(row["k"]), row["variant"],
                float(row["ff"]), float(row["mask_fraction"]),
            ))
    return report


def write_aggregate_json(reports: list[FaithfulnessReport], path, k: int | None = None) -> None:
    """Table-style aggregate: mean FF per method x {pdsm, continuous, random}.

    When k is given only rows at that k contribute; otherwise rows are
    averaged over all k present.
    """
    table: dict[str, dict[str, list[float]]] = {}
    for rep in reports:
        for r in rep.rows:
            if k is not None and r.k != k:
                continue
            table.setdefault(r.method, {v: [] for v in VARIANTS})[r.variant].append(r.ff)
    doc = {
        "k": k,
        "methods": {
            m: {v: (float(np.mean(vals)) if vals else None) for v, vals in variants.items()}
            for m, variants in sorted(table.items())
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
