"""Symmetry-based corpus filtering.

Builds a synthetic corpus with a controlled range of left/right asymmetry,
scores every face with the mirrored-pair quadratic index, and keeps the
most symmetric 15 percent. Writes the best and worst faces as PGM so the
difference is visible.
"""

import os

import numpy as np

from facesearch import faceio, synthetic

OUT = os.path.join(os.path.dirname(__file__), "output", "symmetry")
os.makedirs(OUT, exist_ok=True)

dataset = synthetic.synthetic_dataset(200, seed=42, asymmetry_range=(0.0, 1.5))
scores = np.array([faceio.symmetry_index(f) for f in dataset.faces])
print(f"corpus: {len(dataset)} faces, symmetry index "
      f"min={scores.min():.5f} median={np.median(scores):.5f} max={scores.max():.5f}")

kept = faceio.filter_symmetric(dataset, percentile=0.15)
print(f"15th percentile filter keeps {len(kept)} faces")
print("survivor ids:", kept.ids[:5], "...")

for rank, idx in enumerate(np.argsort(scores)[:3]):
    path = os.path.join(OUT, f"most_symmetric_{rank}.pgm")
    open(path, "wb").write(faceio.encode_image(dataset.faces[idx]))
for rank, idx in enumerate(np.argsort(scores)[-3:]):
    path = os.path.join(OUT, f"least_symmetric_{rank}.pgm")
    open(path, "wb").write(faceio.encode_image(dataset.faces[idx]))
print(f"sample images written to {OUT}")
