"""Seeded synthetic datasets with known ground truth.

Two tasks:

* noise detection: procedural harmonic-plus-formant "speech"
  spectrograms, half of them contaminated with a broadband energy block
  over a random frame window (the spectrogram-domain analog of
  time-limited additive noise).  Ground truth is the window.

* fake-phoneme detection: spectrograms assembled from per-phoneme
  spectral templates along a random phoneme segmentation, paired with a
  consistent one-hot-plus-noise posteriorgram.  "fake" samples copy a
  real sample and corrupt a few segments (high-band additive noise or a
  spectral tilt).  Ground truth is the set of corrupted segment
  indices; the fake sample shares its source's posteriorgram.

Every random choice flows from ``numpy.random.SeedSequence(seed,
spawn_key=...)`` streams keyed by task and sample index, so generation
is deterministic per seed and independent of generation order.

Generative recipe constants (all uniform ranges are sampled per
sample unless noted): fundamental bin in [2.5, 6], harmonic amplitude
1/k with Gaussian line width 0.6 bins, formant envelope of three
Gaussians (centers in [0, 0.7F], widths in [3, 10], weights in
[0.5, 1]) on a 0.15 floor, slow amplitude contour in [0.4, 1], and an
exponential(0.02) noise floor.  Phoneme templates are three Gaussian
bumps (weights in [0.3, 1], widths in [2, 8]) on a 0.05 floor; the
silence template is the bare floor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .interchange import (
    SILENCE_LABEL,
    DatasetManifest,
    ManifestEntry,
    save_manifest,
    save_matrix,
)

_NOISE_TASK, _FAKE_TASK = 0, 1

DEFAULT_VOCAB = ["<>", "aa", "iy", "uw", "eh", "ow", "s", "sh", "f", "t", "k", "m"]


@dataclass
class SynthConfig:
    n_train: int = 2000
    n_test: int = 500
    n_freq: int = 64
    t_range: tuple[int, int] = (96, 160)
    vocab_size: int = 12
    seg_dur_range: tuple[int, int] = (4, 20)
    noise_frac_range: tuple[float, float] = (0.1, 0.3)
    snr_db: float = 0.0
    n_corrupt_segments: int = 2
    corruption_gain: float = 3.0
    corruption_kind: str = "additive_noise"
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 2 or self.n_test < 2:
            raise ValidationError("n_train and n_test must each be >= 2")
        if self.n_freq < 8:
            raise ValidationError("n_freq must be >= 8")
        if not (1 <= self.seg_dur_range[0] <= self.seg_dur_range[1]):
            raise ValidationError("seg_dur_range must be a nonempty positive range")
        if not (0 < self.noise_frac_range[0] <= self.noise_frac_range[1] <= 1):
            raise ValidationError("noise_frac_range must lie in (0, 1]")
        if self.vocab_size < 2:
            raise ValidationError("vocab_size must be >= 2")
        if self.corruption_kind not in ("additive_noise", "spectral_tilt"):
            raise ValidationError(f"unknown corruption_kind {self.corruption_kind!r}")
        if self.t_range[0] < 8 or self.t_range[0] > self.t_range[1]:
            raise ValidationError("t_range must be a nonempty range with minimum >= 8")


def fake_phoneme_defaults(**overrides) -> SynthConfig:
    """Smaller default sizes for the fake-phoneme task."""
    base = {"n_train": 400, "n_test": 120}
    base.update(overrides)
    return SynthConfig(**base)


def _rng(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _smooth_contour(rng, t, lo, hi, knots=8):
    anchors = rng.uniform(lo, hi, size=max(2, t // knots))
    return np.interp(np.linspace(0, 1, t), np.linspace(0, 1, len(anchors)), anchors)


def _clean_spectrogram(rng, n_freq, t):
    f = np.arange(n_freq, dtype=np.float64)
    f0 = rng.uniform(2.5, 6.0)
    harm = np.zeros(n_freq)
    for k in range(1, int(n_freq / f0) + 1):
        harm += (1.0 / k) * np.exp(-((f - k * f0) ** 2) / (2 * 0.6**2))
    env = np.full(n_freq, 0.15)
    for _ in range(3):
        c = rng.uniform(0.0, 0.7 * n_freq)
        w = rng.uniform(3.0, 10.0)
        env += rng.uniform(0.5, 1.0) * np.exp(-((f - c) ** 2) / (2 * w**2))
    env /= env.max()
    amp = _smooth_contour(rng, t, 0.4, 1.0)
    spec = (env * harm)[:, None] * amp[None, :]
    return spec + rng.exponential(0.02, size=(n_freq, t))


def _sample_t(rng, cfg):
    return int(rng.integers(cfg.t_range[0], cfg.t_range[1] + 1))


def _gen_noise_sample(rng, cfg, noisy):
    t = _sample_t(rng, cfg)
    spec = _clean_spectrogram(rng, cfg.n_freq, t)
    gt = None
    if noisy:
        frac = rng.uniform(*cfg.noise_frac_range)
        length = min(t, max(1, int(round(frac * t))))
        start = int(rng.integers(0, t - length + 1))
        block = np.abs(rng.normal(size=(cfg.n_freq, length)))
        target = spec[:, start : start + length].mean() * 10 ** (-cfg.snr_db / 10.0)
        spec[:, start : start + length] += block * (target / block.mean())
        gt = {"noise_window": [start, start + length]}
    return spec, gt


def gen_noise_dataset(cfg: SynthConfig, out_dir) -> DatasetManifest:
    """Generate the noise-detection dataset into out_dir."""
    out_dir = Path(out_dir)
    (out_dir / "spectrograms").mkdir(parents=True, exist_ok=True)
    entries = []
    counts = {"train": cfg.n_train, "test": cfg.n_test}
    for split, count in counts.items():
        offset = 0 if split == "train" else cfg.n_train
        for i in range(count):
            rng = _rng(cfg.seed, _NOISE_TASK, offset + i)
            noisy = i % 2 == 1
            spec, gt = _gen_noise_sample(rng, cfg, noisy)
            sid = f"noise_{split}_{i:05d}"
            rel = f"spectrograms/{sid}.npy"
            save_matrix(spec, out_dir / rel, precision="f32")
            entries.append(
                ManifestEntry(sid, "noisy" if noisy else "clean", rel, ground_truth=gt, split=split)
            )
    manifest = DatasetManifest(entries, seed=cfg.seed, config={"task": "noise", **asdict(cfg)}, root=out_dir)
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest


# ---------------------------------------------------------------------------
# Fake-phoneme task
# ---------------------------------------------------------------------------

def _make_vocab(n):
    if n == len(DEFAULT_VOCAB):
        return list(DEFAULT_VOCAB)
    return [SILENCE_LABEL] + [f"p{i:02d}" for i in range(1, n)]


def _phoneme_templates(rng, n_freq, vocab_size):
    f = np.arange(n_freq, dtype=np.float64)
    templates = np.full((vocab_size, n_freq), 0.05)
    for p in range(1, vocab_size):
        for _ in range(3):
            c = rng.uniform(0.0, n_freq - 1.0)
            w = rng.uniform(2.0, 8.0)
            templates[p] += rng.uniform(0.3, 1.0) * np.exp(-((f - c) ** 2) / (2 * w**2))
    return templates


def _random_segmentation(rng, cfg, t):
    labels = np.empty(t, dtype=np.int64)
    pos, prev = 0, -1
    while pos < t:
        dur = int(rng.integers(cfg.seg_dur_range[0], cfg.seg_dur_range[1] + 1))
        dur = min(dur, t - pos)
        choices = [p for p in range(cfg.vocab_size) if p != prev]
        p = int(choices[rng.integers(0, len(choices))])
        labels[pos : pos + dur] = p
        pos += dur
        prev = p
    return labels


def _ppg_from_labels(rng, labels, vocab_size):
    t = labels.size
    ppg = rng.uniform(0.0, 0.35, size=(vocab_size, t))
    ppg[labels, np.arange(t)] = 1.0 + rng.uniform(0.0, 0.2, size=t)
    return ppg


def _corrupt(rng, spec, bounds, indices, cfg):
    # Per-segment strength jitter in [0.1, 1.5] x gain: the classifier
    # then has to detect weak corruption too, which keeps it sensitive
    # to the residual evidence left by partial (continuous) masking.
    n_freq = spec.shape[0]
    for j in indices:
        s, e = bounds[j]
        gain = cfg.corruption_gain * rng.uniform(0.1, 1.5)
        if cfg.corruption_kind == "additive_noise":
            hi = n_freq // 2
            block = np.abs(rng.normal(size=(n_freq - hi, e - s)))
            spec[hi:, s:e] += gain * spec.mean() * block
        else:
            ramp = np.exp(gain * (np.linspace(0.0, 1.0, n_freq) - 0.5))
            spec[:, s:e] *= ramp[:, None]
    return spec


def _segment_bounds(labels):
    change = np.flatnonzero(np.diff(labels)) + 1
    bounds = np.concatenate(([0], change, [labels.size]))
    return list(zip(bounds[:-1].tolist(), bounds[1:].tolist()))


def gen_fake_phoneme_dataset(cfg: SynthConfig, out_dir) -> DatasetManifest:
    """Generate paired real/fake samples with known corrupted segments.

    n_train and n_test count total samples; each split holds
    count // 2 real/fake pairs (counts are rounded down to even).
    """
    out_dir = Path(out_dir)
    (out_dir / "spectrograms").mkdir(parents=True, exist_ok=True)
    (out_dir / "ppgs").mkdir(parents=True, exist_ok=True)
    vocab = _make_vocab(cfg.vocab_size)
    templates = _phoneme_templates(_rng(cfg.seed, _FAKE_TASK, 2**31), cfg.n_freq, cfg.vocab_size)
    entries = []
    counts = {"train": cfg.n_train // 2, "test": cfg.n_test // 2}
    for split, pairs in counts.items():
        offset = 0 if split == "train" else cfg.n_train
        for i in range(pairs):
            rng = _rng(cfg.seed, _FAKE_TASK, offset + i)
            t = _sample_t(rng, cfg)
            labels = _random_segmentation(rng, cfg, t)
            bounds = _segment_bounds(labels)
            jitter = _smooth_contour(rng, t, 0.85, 1.15)
            real = templates[labels].T * jitter[None, :] + rng.exponential(0.02, size=(cfg.n_freq, t))
            ppg = _ppg_from_labels(rng, labels, cfg.vocab_size)
            n_corrupt = cfg.n_corrupt_segments
            if n_corrupt > len(bounds):
                warnings.warn(
                    f"n_corrupt_segments={n_corrupt} exceeds {len(bounds)} segments; clamping"
                )
                n_corrupt = len(bounds)
            corrupt_idx = sorted(int(j) for j in rng.choice(len(bounds), size=n_corrupt, replace=False))
            fake = _corrupt(rng, real.copy(), bounds, corrupt_idx, cfg)

            rid, fid = f"fp_{split}_{i:05d}_real", f"fp_{split}_{i:05d}_fake"
            real_rel, fake_rel = f"spectrograms/{rid}.npy", f"spectrograms/{fid}.npy"
            ppg_rel = f"ppgs/{rid}.npy"
            save_matrix(real, out_dir / real_rel, precision="f32")
            save_matrix(fake, out_dir / fake_rel, precision="f32")
            save_matrix(ppg, out_dir / ppg_rel, precision="f32")
            entries.append(ManifestEntry(rid, "real", real_rel, posteriorgram=ppg_rel, split=split))
            entries.append(
                ManifestEntry(
                    fid, "fake", fake_rel, posteriorgram=ppg_rel,
                    ground_truth={
                        "corrupt_segments": corrupt_idx,
                        "source": rid,
                        "kind": cfg.corruption_kind,
                    },
                    split=split,
                )
            )
    manifest = DatasetManifest(
        entries, seed=cfg.seed, config={"task": "fakephoneme", **asdict(cfg)},
        vocab=vocab, root=out_dir,
    )
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest
