"""Step-by-step walkthrough of the discretization on a tiny example.

Run: python3 demos/discretize_walkthrough.py
"""

import numpy as np

from pdsm import PdsmConfig, Posteriorgram, SaliencyMap, pdsm
from pdsm.alignment import frame_argmax, segments_from_labels
from pdsm.core import phoneme_energies, preprocess, select_top_k

# A 2 x 6 saliency map whose energy sits on frames 2..4.
m = np.zeros((2, 6))
m[:, 2:5] = [[0.2, 0.9, 0.4], [0.1, 0.3, 0.2]]

# A 3-phoneme posteriorgram planting the alignment [0,0,2,2,2,1].
ppg = np.zeros((3, 6))
ppg[0, :2] = 1.0
ppg[2, 2:5] = 1.0
ppg[1, 5] = 1.0

cfg = PdsmConfig(pool="sum", k=1)

labels = frame_argmax(Posteriorgram(ppg))
print("frame argmax:", labels)

seg = segments_from_labels(labels)
print("segments:", [(s.phoneme_id, s.start, s.end) for s in seg])

m_pre = preprocess(m, cfg)
energies = phoneme_energies(m_pre, seg, cfg.pool)
print("pooled energies:", energies)

selected = select_top_k(energies, cfg.k)
print("top-k selection:", selected)

mask = pdsm(SaliencyMap(m, "ig", 1), Posteriorgram(ppg), cfg)
print("mask column indicator:", mask.column_indicator)
