"""Small differentiable spectrogram classifier with hand-derived gradients.

Architecture (fixed): two 3x3 same-padded cross-correlation stages
(channels 1 -> 8 -> 16), each followed by ReLU and 2x2 average
downsampling, then a global mean pool, an affine head and a two-class
softmax.  Everything runs in float64; gradients are exact analytic
expressions, which lets finite-difference checks and attribution
completeness tests use tight tolerances.

The backward pass is parameterized by the ReLU propagation rule so the
same code serves plain gradients, guided backprop (mask on forward
input AND incoming signal) and DeepLift-Rescale (externally supplied
multipliers).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .interchange import DatasetManifest, Spectrogram, load_matrix, save_matrix

CHANNELS = (1, 8, 16)
N_CLASSES = 2
MIN_SIDE = 4

_PARAM_NAMES = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "fc_w", "fc_b")


@dataclass
class ToyClassifier:
    """Fixed-architecture classifier.

    input_shift/input_scale are frozen dataset statistics applied as a
    linear standardization in front of the first convolution; they make
    the all-positive energy inputs trainable with plain SGD and, being
    linear, leave every gradient and attribution identity exact.
    """

    conv1_w: np.ndarray  # (8, 1, 3, 3)
    conv1_b: np.ndarray  # (8,)
    conv2_w: np.ndarray  # (16, 8, 3, 3)
    conv2_b: np.ndarray  # (16,)
    fc_w: np.ndarray     # (2, 16)
    fc_b: np.ndarray     # (2,)
    input_shift: float = 0.0
    input_scale: float = 1.0

    def params(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in _PARAM_NAMES}


@dataclass
class TrainConfig:
    epochs: int = 25
    batch_size: int = 16
    learning_rate: float = 0.05
    lr_decay: float = 0.93
    seed: int = 0
    optimizer: str = "sgd_momentum"
    momentum: float = 0.9

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValidationError("epochs, batch_size and learning_rate must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ValidationError("lr_decay must lie in (0, 1]")
        if self.optimizer not in ("sgd", "sgd_momentum"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")


def init_model(seed: int = 0) -> ToyClassifier:
    """He-initialized convolutions, small random head."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    c0, c1, c2 = CHANNELS
    return ToyClassifier(
        conv1_w=rng.normal(0.0, np.sqrt(2.0 / (c0 * 9)), size=(c1, c0, 3, 3)),
        conv1_b=np.zeros(c1),
        conv2_w=rng.normal(0.0, np.sqrt(2.0 / (c1 * 9)), size=(c2, c1, 3, 3)),
        conv2_b=np.zeros(c2),
        fc_w=rng.normal(0.0, 0.3, size=(N_CLASSES, c2)),
        fc_b=np.zeros(N_CLASSES),
    )


# ---------------------------------------------------------------------------
# Layer primitives (batched, NCHW)
# ---------------------------------------------------------------------------

def _windows(x):
    """All 3x3 patches of x padded by one zero ring: (B, C, F, T, 3, 3)."""
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    return np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(2, 3))


def _conv_forward(x, w, b):
    win = _windows(x)
    out = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))  # (B, F, T, Cout)
    return np.moveaxis(out, 3, 1) + b[None, :, None, None]


def _conv_backward_input(gy, w):
    # Stride-1 pad-1 cross-correlation: input grad is the correlation of
    # the padded output grad with the spatially flipped kernels.
    win = _windows(gy)
    out = np.tensordot(win, w[:, :, ::-1, ::-1], axes=([1, 4, 5], [0, 2, 3]))
    return np.moveaxis(out, 3, 1)


def _conv_backward_params(gy, x):
    win = _windows(x)
    gw = np.tensordot(gy, win, axes=([0, 2, 3], [0, 2, 3]))  # (Cout, Cin, 3, 3)
    gb = gy.sum(axis=(0, 2, 3))
    return gw, gb


def _avgpool(x):
    b, c, f, t = x.shape
    f2, t2 = f // 2, t // 2
    y = x[:, :, : f2 * 2, : t2 * 2].reshape(b, c, f2, 2, t2, 2).mean(axis=(3, 5))
    return y


def _avgpool_backward(gy, in_shape):
    b, c, f, t = in_shape
    f2, t2 = f // 2, t // 2
    gx = np.zeros(in_shape)
    up = np.repeat(np.repeat(gy, 2, axis=2), 2, axis=3) / 4.0
    gx[:, :, : f2 * 2, : t2 * 2] = up
    return gx


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def _as_batch(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise ValidationError("input must be F x T or B x F x T")
    if x.shape[1] < MIN_SIDE or x.shape[2] < MIN_SIDE:
        raise ValidationError(f"input sides must be >= {MIN_SIDE}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("input must be finite")
    return x


def forward_caches(model: ToyClassifier, x) -> dict:
    """Run the network keeping every intermediate needed for backprop."""
    x = _as_batch(x)[:, None]  # (B, 1, F, T)
    x = (x - model.input_shift) / model.input_scale
    z1 = _conv_forward(x, model.conv1_w, model.conv1_b)
    a1 = np.maximum(z1, 0.0)
    p1 = _avgpool(a1)
    z2 = _conv_forward(p1, model.conv2_w, model.conv2_b)
    a2 = np.maximum(z2, 0.0)
    p2 = _avgpool(a2)
    feat = p2.mean(axis=(2, 3))  # (B, 16)
    logits = feat @ model.fc_w.T + model.fc_b
    return {
        "x": x, "z1": z1, "a1": a1, "p1": p1, "z2": z2, "a2": a2, "p2": p2,
        "feat": feat, "logits": logits, "probs": _softmax(logits),
    }


def forward(model: ToyClassifier, x) -> np.ndarray:
    """Class probability vector(s); (2,) for a single F x T input."""
    if isinstance(x, Spectrogram):
        x = x.data
    single = np.asarray(x).ndim == 2
    probs = forward_caches(model, x)["probs"]
    return probs[0] if single else probs


def _relu_backward(g, z, rule, mult):
    if mult is not None:
        return g * mult
    if rule == "guided":
        return g * ((z > 0) & (g > 0))
    return g * (z > 0)


def backprop_to_input(model, caches, g_logits, relu_rule="linear", relu_mults=(None, None)):
    """Propagate a gradient (or DeepLift multiplier) at the logits back
    to the input plane.  Returns (B, F, T)."""
    p2, z2, p1, z1 = caches["p2"], caches["z2"], caches["p1"], caches["z1"]
    b = g_logits.shape[0]
    g_feat = g_logits @ model.fc_w  # (B, 16)
    n_cells = p2.shape[2] * p2.shape[3]
    g_p2 = np.broadcast_to(
        (g_feat / n_cells)[:, :, None, None], p2.shape
    ).copy()
    g_a2 = _avgpool_backward(g_p2, z2.shape)
    g_z2 = _relu_backward(g_a2, z2, relu_rule, relu_mults[1])
    g_p1 = _conv_backward_input(g_z2, model.conv2_w)
    g_a1 = _avgpool_backward(g_p1, z1.shape)
    g_z1 = _relu_backward(g_a1, z1, relu_rule, relu_mults[0])
    g_x = _conv_backward_input(g_z1, model.conv1_w)
    return g_x[:, 0] / model.input_scale


def prob_logit_grad(probs, c):
    """d p_c / d logits for a softmax: p_c * (e_c - p).  (B, 2)."""
    b = probs.shape[0]
    g = -probs * probs[:, c][:, None]
    g[:, c] += probs[:, c]
    return g


def input_gradient(model: ToyClassifier, x, c: int, relu_rule="linear"):
    """Exact gradient of the class-c probability w.r.t. every input cell.

    Accepts F x T (returns F x T) or B x F x T (returns B x F x T).
    """
    if isinstance(x, Spectrogram):
        x = x.data
    if c not in (0, 1):
        raise ValidationError("class index must be 0 or 1")
    single = np.asarray(x).ndim == 2
    caches = forward_caches(model, x)
    g = backprop_to_input(model, caches, prob_logit_grad(caches["probs"], c), relu_rule)
    return g[0] if single else g


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _param_grads(model, caches, y):
    """Cross-entropy gradients for one batch of equal-shape inputs."""
    probs = caches["probs"]
    b = probs.shape[0]
    g_logits = probs.copy()
    g_logits[np.arange(b), y] -= 1.0
    g_logits /= b
    g_fc_w = g_logits.T @ caches["feat"]
    g_fc_b = g_logits.sum(axis=0)
    p2, z2, p1, z1, x = caches["p2"], caches["z2"], caches["p1"], caches["z1"], caches["x"]
    g_feat = g_logits @ model.fc_w
    n_cells = p2.shape[2] * p2.shape[3]
    g_p2 = np.broadcast_to((g_feat / n_cells)[:, :, None, None], p2.shape).copy()
    g_z2 = _avgpool_backward(g_p2, z2.shape) * (z2 > 0)
    g_conv2_w, g_conv2_b = _conv_backward_params(g_z2, p1)
    g_p1 = _conv_backward_input(g_z2, model.conv2_w)
    g_z1 = _avgpool_backward(g_p1, z1.shape) * (z1 > 0)
    g_conv1_w, g_conv1_b = _conv_backward_params(g_z1, x)
    return {
        "conv1_w": g_conv1_w, "conv1_b": g_conv1_b,
        "conv2_w": g_conv2_w, "conv2_b": g_conv2_b,
        "fc_w": g_fc_w, "fc_b": g_fc_b,
    }


LABEL_TO_CLASS = {"real": 0, "fake": 1, "clean": 0, "noisy": 1}


def class_of_label(label: str) -> int:
    if label not in LABEL_TO_CLASS:
        raise ValidationError(f"unknown label {label!r}")
    return LABEL_TO_CLASS[label]


def load_training_set(manifest: DatasetManifest):
    """Materialize (spectrogram, class) pairs in manifest order."""
    xs, ys = [], []
    for e in manifest.entries:
        xs.append(load_matrix(manifest.resolve(e.spectrogram)))
        ys.append(class_of_label(e.label))
    return xs, np.asarray(ys, dtype=np.int64)


def train(xs, ys, cfg: TrainConfig) -> tuple[ToyClassifier, list[dict]]:
    """Seeded mini-batch training; returns the model and an epoch log.

    Inputs may have different widths, so each batch accumulates
    per-sample gradients (batch statistics are still exact: the loss is
    the mean over the batch).
    """
    ys = np.asarray(ys, dtype=np.int64)
    if len(set(ys.tolist())) < 2:
        raise ValidationError("training set must contain both classes")
    model = init_model(cfg.seed)
    model.input_shift = float(np.mean([x.mean() for x in xs]))
    model.input_scale = max(float(np.mean([x.std() for x in xs])), 1e-12)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((cfg.seed, 1))))
    velocity = {n: np.zeros_like(p) for n, p in model.params().items()}
    log = []
    n = len(xs)
    lr = cfg.learning_rate
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        losses, correct = [], 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads = {name: np.zeros_like(p) for name, p in model.params().items()}
            batch_loss = 0.0
            for i in idx:
                caches = forward_caches(model, xs[i])
                g = _param_grads(model, caches, np.array([ys[i]]))
                for name in grads:
                    grads[name] += g[name] / len(idx)
                p = caches["probs"][0]
                batch_loss += -np.log(max(p[ys[i]], 1e-300)) / len(idx)
                correct += int(np.argmax(p) == ys[i])
            for name, param in model.params().items():
                if cfg.optimizer == "sgd_momentum":
                    velocity[name] = cfg.momentum * velocity[name] + grads[name]
                    param -= lr * velocity[name]
                else:
                    param -= lr * grads[name]
            losses.append(batch_loss)
        lr *= cfg.lr_decay
        log.append({"epoch": epoch, "loss": float(np.mean(losses)), "train_acc": correct / n})
    return model, log


def accuracy(model: ToyClassifier, xs, ys) -> float:
    preds = [int(np.argmax(forward(model, x))) for x in xs]
    return float(np.mean(np.asarray(preds) == np.asarray(ys)))


# ---------------------------------------------------------------------------
# Serialization: JSON index + one NPY per tensor
# ---------------------------------------------------------------------------

def save_model(model: ToyClassifier, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = {
        "arch": "conv3x3x2_avgpool_gap_affine_softmax",
        "channels": list(CHANNELS),
        "input_shift": model.input_shift,
        "input_scale": model.input_scale,
        "tensors": {},
    }
    for name, p in model.params().items():
        fname = f"{name}.npy"
        save_matrix(p.reshape(p.shape[0], -1) if p.ndim > 2 else p, out_dir / fname)
        index["tensors"][name] = {"file": fname, "shape": list(p.shape)}
    with open(out_dir / "index.json", "w", encoding="utf-8") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(model_dir) -> ToyClassifier:
    model_dir = Path(model_dir)
    with open(model_dir / "index.json", "r", encoding="utf-8") as fh:
        index = json.load(fh)
    tensors = {}
    for name, meta in index["tensors"].items():
        flat = load_matrix(model_dir / meta["file"])
        tensors[name] = flat.reshape(meta["shape"])
    return ToyClassifier(
        **{n: tensors[n] for n in _PARAM_NAMES},
        input_shift=index.get("input_shift", 0.0),
        input_scale=index.get("input_scale", 1.0),
    )


def model_hash(model: ToyClassifier) -> str:
    h = hashlib.sha256()
    h.update(struct.pack("<dd", model.input_shift, model.input_scale))
    for name in _PARAM_NAMES:
        h.update(name.encode())
        h.update(np.ascontiguousarray(getattr(model, name)).tobytes())
    return h.hexdigest()
