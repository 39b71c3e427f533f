"""Classifier forward/backward correctness, training, serialization."""

import numpy as np
import pytest

from pdsm.errors import ValidationError
from pdsm.toy_model import (
    TrainConfig,
    ToyClassifier,
    accuracy,
    class_of_label,
    forward,
    forward_caches,
    init_model,
    input_gradient,
    load_model,
    model_hash,
    save_model,
    train,
)


def _rand_input(rng, f=8, t=10):
    return rng.uniform(0.0, 1.0, size=(f, t))


def _zero_head(model):
    model.fc_w = np.zeros_like(model.fc_w)
    model.fc_b = np.zeros_like(model.fc_b)
    return model


# ---------------------------------------------------------------------------
# Forward
# ---------------------------------------------------------------------------

def test_zero_head_is_uniform():
    model = _zero_head(init_model(0))
    p = forward(model, _rand_input(np.random.default_rng(0)))
    assert np.array_equal(p, [0.5, 0.5])


def test_probabilities_sum_to_one():
    rng = np.random.default_rng(1)
    model = init_model(3)
    for _ in range(20):
        p = forward(model, _rand_input(rng, f=int(rng.integers(4, 20)), t=int(rng.integers(4, 30))))
        assert abs(p.sum() - 1.0) <= 1e-12
        assert np.all(p >= 0)


def test_forward_deterministic_and_batched():
    rng = np.random.default_rng(2)
    model = init_model(1)
    x = _rand_input(rng)
    assert np.array_equal(forward(model, x), forward(model, x))
    batch = np.stack([_rand_input(rng) for _ in range(5)])
    probs = forward(model, batch)
    for i in range(5):
        assert np.allclose(probs[i], forward(model, batch[i]), atol=1e-14)


def test_forward_rejects_bad_input():
    model = init_model(0)
    with pytest.raises(ValidationError):
        forward(model, np.full((8, 8), np.nan))
    with pytest.raises(ValidationError):
        forward(model, np.ones((2, 8)))  # below minimum side


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------

def test_constant_model_zero_gradient():
    model = init_model(0)
    model.conv1_w = np.zeros_like(model.conv1_w)
    g = input_gradient(model, _rand_input(np.random.default_rng(3)), 1)
    assert np.all(g == 0.0)


def test_two_class_complementarity():
    rng = np.random.default_rng(4)
    model = init_model(5)
    x = _rand_input(rng)
    g0 = input_gradient(model, x, 0)
    g1 = input_gradient(model, x, 1)
    assert np.allclose(g0, -g1, atol=1e-15)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    h = 1e-5
    for trial in range(3):
        model = init_model(trial)
        model.input_shift, model.input_scale = 0.3, 0.7
        x = _rand_input(rng, f=6, t=7)
        g = input_gradient(model, x, 1)
        idx = [(int(rng.integers(6)), int(rng.integers(7))) for _ in range(12)]
        for (i, j) in idx:
            xp, xm = x.copy(), x.copy()
            xp[i, j] += h
            xm[i, j] -= h
            fd = (forward(model, xp)[1] - forward(model, xm)[1]) / (2 * h)
            denom = max(abs(fd), abs(g[i, j]), 1e-8)
            assert abs(fd - g[i, j]) / denom <= 1e-4


def test_gradient_rejects_bad_class():
    with pytest.raises(ValidationError):
        input_gradient(init_model(0), np.ones((8, 8)), 2)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _separable_set(rng, n=20):
    # class 1 carries a bright block in the top bands; trivially separable
    xs, ys = [], []
    for i in range(n):
        x = rng.uniform(0.0, 0.2, size=(8, 12))
        if i % 2 == 1:
            x[:4] += 1.0
        xs.append(x)
        ys.append(i % 2)
    return xs, np.array(ys)


def test_train_refuses_single_class():
    xs = [np.ones((8, 8)), np.ones((8, 8)) * 2]
    with pytest.raises(ValidationError):
        train(xs, [1, 1], TrainConfig(epochs=1))


def test_train_reaches_full_accuracy_on_separable_set():
    xs, ys = _separable_set(np.random.default_rng(6))
    model, log = train(xs, ys, TrainConfig(epochs=50, seed=0))
    assert any(rec["train_acc"] == 1.0 for rec in log)
    assert accuracy(model, xs, ys) == 1.0
    # cross-entropy decreases on the moving average
    losses = [rec["loss"] for rec in log]
    head, tail = np.mean(losses[:5]), np.mean(losses[-5:])
    assert tail < head


def test_train_same_seed_byte_identical(tmp_path):
    xs, ys = _separable_set(np.random.default_rng(7), n=8)
    cfg = TrainConfig(epochs=2, seed=3)
    m1, _ = train(xs, ys, cfg)
    m2, _ = train(xs, ys, cfg)
    save_model(m1, tmp_path / "a")
    save_model(m2, tmp_path / "b")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    assert model_hash(m1) == model_hash(m2)


def test_train_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(epochs=0)
    with pytest.raises(ValidationError):
        TrainConfig(lr_decay=0.0)
    with pytest.raises(ValidationError):
        TrainConfig(optimizer="adam")


def test_class_of_label():
    assert class_of_label("real") == 0 and class_of_label("fake") == 1
    assert class_of_label("clean") == 0 and class_of_label("noisy") == 1
    with pytest.raises(ValidationError):
        class_of_label("bogus")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def test_model_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    model = init_model(9)
    model.input_shift, model.input_scale = 0.12, 0.34
    save_model(model, tmp_path / "m")
    back = load_model(tmp_path / "m")
    assert model_hash(back) == model_hash(model)
    x = _rand_input(rng)
    assert np.array_equal(forward(back, x), forward(model, x))


def test_model_hash_sensitive_to_params():
    m1, m2 = init_model(0), init_model(0)
    assert model_hash(m1) == model_hash(m2)
    m2.fc_b = m2.fc_b + 1e-9
    assert model_hash(m1) != model_hash(m2)
    m3 = init_model(0)
    m3.input_scale = 2.0
    assert model_hash(m3) != model_hash(m1)


def test_standardization_is_linear_rescale():
    # shift/scale folded into the model must equal running the plain
    # model (shift 0, scale 1) on the standardized input
    rng = np.random.default_rng(9)
    model = init_model(2)
    model.input_shift, model.input_scale = 0.4, 1.7
    plain = ToyClassifier(**model.params())
    x = _rand_input(rng)
    assert np.allclose(forward(model, x), forward(plain, (x - 0.4) / 1.7), atol=1e-12)
