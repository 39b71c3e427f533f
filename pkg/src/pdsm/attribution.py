"""Saliency methods over the toy classifier.

Six methods: plain gradient, gradient x input, integrated gradients
(midpoint Riemann rule), GradSHAP (expected-gradients sampling), guided
backprop and DeepLift with the Rescale rule.  All stochastic methods
are bit-deterministic given their seed.  Every method targets the
class *probability*, not the logit.

Default baseline is the zero spectrogram; a dataset-mean baseline is
available where zero is not a meaningful "absence of signal".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .interchange import SaliencyMap, Spectrogram, save_matrix
from .toy_model import (
    ToyClassifier,
    backprop_to_input,
    forward_caches,
    input_gradient,
    prob_logit_grad,
)

_GRAD_CHUNK = 64  # bound peak memory of batched gradient evaluations
_DELTA_CUTOFF = 1e-10


@dataclass
class AttributionConfig:
    method_id: str = "ig"
    ig_steps: int = 128
    baseline_mode: str = "zero"
    n_samples: int = 32
    noise_sigma: float | None = None  # None: 0.1 x std of the input
    seed: int = 0

    def __post_init__(self):
        if self.ig_steps < 1 or self.n_samples < 1:
            raise ValidationError("ig_steps and n_samples must be >= 1")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        if self.baseline_mode not in ("zero", "dataset_mean"):
            raise ValidationError(f"unknown baseline_mode {self.baseline_mode!r}")


def _as_array(x):
    return x.data if isinstance(x, Spectrogram) else np.asarray(x, dtype=np.float64)


def _batched_gradients(model, points, c):
    grads = np.empty_like(points)
    for start in range(0, points.shape[0], _GRAD_CHUNK):
        chunk = points[start : start + _GRAD_CHUNK]
        grads[start : start + _GRAD_CHUNK] = input_gradient(model, chunk, c)
    return grads


def gradient_saliency(model: ToyClassifier, x, c: int) -> SaliencyMap:
    """Raw signed gradient of the class probability."""
    return SaliencyMap(input_gradient(model, _as_array(x), c), "gradient", c)


def grad_input(model: ToyClassifier, x, c: int) -> SaliencyMap:
    x = _as_array(x)
    return SaliencyMap(x * input_gradient(model, x, c), "grad_input", c)


def integrated_gradients(model: ToyClassifier, x, c: int, steps: int = 128, baseline=None) -> SaliencyMap:
    """Midpoint-rule path integral of gradients from baseline to x.

    attribution = (x - x0) * mean_i grad f_c at x0 + (i - 0.5)/m (x - x0)
    """
    x = _as_array(x)
    x0 = np.zeros_like(x) if baseline is None else _as_array(baseline)
    if x0.shape != x.shape:
        raise ValidationError("baseline shape must match the input")
    diff = x - x0
    alphas = (np.arange(steps) + 0.5) / steps
    points = x0[None] + alphas[:, None, None] * diff[None]
    grads = _batched_gradients(model, points, c)
    return SaliencyMap(diff * grads.mean(axis=0), "ig", c)


def gradient_shap(model: ToyClassifier, x, c: int, cfg: AttributionConfig, baseline_set=None) -> SaliencyMap:
    """Expected gradients over jittered interpolations to sampled baselines."""
    x = _as_array(x)
    if baseline_set is None:
        baseline_set = [np.zeros_like(x)]
    baselines = [_as_array(b) for b in baseline_set]
    if not baselines:
        raise ValidationError("baseline set must be nonempty")
    sigma = cfg.noise_sigma if cfg.noise_sigma is not None else 0.1 * float(np.std(x))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    n = cfg.n_samples
    picks = rng.integers(0, len(baselines), size=n)
    alphas = rng.uniform(0.0, 1.0, size=n)
    noise = rng.normal(0.0, 1.0, size=(n,) + x.shape) * sigma
    bstack = np.stack([baselines[i] for i in picks])
    diffs = x[None] - bstack
    points = bstack + alphas[:, None, None] * diffs + noise
    grads = _batched_gradients(model, points, c)
    return SaliencyMap((diffs * grads).mean(axis=0), "gradshap", c)


def guided_backprop(model: ToyClassifier, x, c: int) -> SaliencyMap:
    """Backward pass where each ReLU passes gradient only where both its
    forward input and the incoming backward signal are positive."""
    return SaliencyMap(input_gradient(model, _as_array(x), c, relu_rule="guided"), "guided_bp", c)


def _rescale_mult(delta_out, delta_in, local):
    safe = np.abs(delta_in) > _DELTA_CUTOFF
    return np.where(safe, delta_out / np.where(safe, delta_in, 1.0), local)


def deeplift_rescale(model: ToyClassifier, x, c: int, baseline=None) -> SaliencyMap:
    """DeepLift with the Rescale rule for the ReLUs and the softmax head.

    Linear layers propagate multipliers exactly like gradients, so the
    attributions satisfy summation-to-delta up to the |delta| cutoff.
    """
    x = _as_array(x)
    x0 = np.zeros_like(x) if baseline is None else _as_array(baseline)
    if x0.shape != x.shape:
        raise ValidationError("baseline shape must match the input")
    cur = forward_caches(model, x)
    ref = forward_caches(model, x0)
    m1 = _rescale_mult(cur["a1"] - ref["a1"], cur["z1"] - ref["z1"], (cur["z1"] > 0).astype(float))
    m2 = _rescale_mult(cur["a2"] - ref["a2"], cur["z2"] - ref["z2"], (cur["z2"] > 0).astype(float))
    # Two-class softmax collapses to a sigmoid of the logit difference.
    other = 1 - c
    d = cur["logits"][:, c] - cur["logits"][:, other]
    d0 = ref["logits"][:, c] - ref["logits"][:, other]
    p, p0 = cur["probs"][:, c], ref["probs"][:, c]
    m_soft = _rescale_mult(p - p0, d - d0, p * (1.0 - p))
    g_logits = np.zeros_like(cur["logits"])
    g_logits[:, c] = m_soft
    g_logits[:, other] = -m_soft
    mult = backprop_to_input(model, cur, g_logits, relu_mults=(m1, m2))
    return SaliencyMap(mult[0] * (x - x0), "deeplift", c)


def attribute(model: ToyClassifier, x, c: int, cfg: AttributionConfig, baseline=None, baseline_set=None) -> SaliencyMap:
    """Dispatch on cfg.method_id with the configured parameters."""
    if cfg.method_id == "gradient":
        return gradient_saliency(model, x, c)
    if cfg.method_id == "grad_input":
        return grad_input(model, x, c)
    if cfg.method_id == "ig":
        return integrated_gradients(model, x, c, steps=cfg.ig_steps, baseline=baseline)
    if cfg.method_id == "gradshap":
        return gradient_shap(model, x, c, cfg, baseline_set=baseline_set)
    if cfg.method_id == "guided_bp":
        return guided_backprop(model, x, c)
    if cfg.method_id == "deeplift":
        return deeplift_rescale(model, x, c, baseline=baseline)
    raise ValidationError(f"unknown method_id {cfg.method_id!r}")


def write_saliency(smap: SaliencyMap, path, cfg: AttributionConfig | None = None, model_hash: str | None = None) -> None:
    """Write the map plus a sidecar JSON recording its provenance."""
    path = Path(path)
    save_matrix(smap.data, path)
    sidecar = {
        "method_id": smap.method_id,
        "target_class": smap.target_class,
        "config": None if cfg is None else {
            "ig_steps": cfg.ig_steps,
            "baseline_mode": cfg.baseline_mode,
            "n_samples": cfg.n_samples,
            "noise_sigma": cfg.noise_sigma,
            "seed": cfg.seed,
        },
        "model_hash": model_hash,
    }
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
