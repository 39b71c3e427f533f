"""Fake-phoneme faithfulness sweep at reduced scale.

Trains the classifier on the fake-phoneme task, discretizes IG maps,
and compares PDSM faithfulness against the random-phoneme baseline and
the raw continuous map across k. Takes a couple of minutes.

Run: python3 demos/fake_phoneme_sweep.py
"""

import tempfile
from pathlib import Path

import numpy as np

from pdsm import Posteriorgram, gen_fake_phoneme_dataset, get_preset
from pdsm.attribution import integrated_gradients
from pdsm.evaluation import sweep_item, sweep_k
from pdsm.interchange import load_matrix
from pdsm.synthgen import fake_phoneme_defaults
from pdsm.toy_model import TrainConfig, accuracy, class_of_label, train

root = Path(tempfile.mkdtemp(prefix="pdsm_demo_"))
cfg = fake_phoneme_defaults(n_train=120, n_test=40, seed=11)
man = gen_fake_phoneme_dataset(cfg, root / "data")
print(f"generated {len(man.entries)} samples under {root}")

xs, ys, test_x, test_y, fakes = [], [], [], [], []
for e in man.entries:
    x = load_matrix(man.resolve(e.spectrogram))
    if e.split == "train":
        xs.append(x)
        ys.append(class_of_label(e.label))
    else:
        test_x.append(x)
        test_y.append(class_of_label(e.label))
        if e.label == "fake":
            fakes.append((e, x))

model, _ = train(xs, np.array(ys), TrainConfig(seed=2, epochs=30))
print(f"test accuracy: {accuracy(model, test_x, test_y):.3f}")

items = []
for e, x in fakes:
    smap = integrated_gradients(model, x, 1, steps=64)
    ppg = Posteriorgram(load_matrix(man.resolve(e.posteriorgram)))
    items.append(sweep_item(e.sample_id, x, smap, ppg))

agg = sweep_k(model, items, get_preset("fs2"), range(1, 8)).aggregate()
print(f"{'k':>3} {'pdsm':>8} {'random':>8} {'continuous':>10}")
for k in range(1, 8):
    print(f"{k:>3} {agg[f'ig/pdsm/k={k}']:>8.3f} {agg[f'ig/random/k={k}']:>8.3f} "
          f"{agg[f'ig/continuous/k={k}']:>10.4f}")
