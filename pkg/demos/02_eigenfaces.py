"""Eigenface basis and reduced reconstruction.

Fits the top-K eigenface basis to a synthetic corpus, prints how much
variance each prefix of the basis explains, and reconstructs one held-out
face at several ranks to show the compression behave monotonically.
"""

import os

import numpy as np

from facesearch import eigenspace, faceio, synthetic

OUT = os.path.join(os.path.dirname(__file__), "output", "eigenfaces")
os.makedirs(OUT, exist_ok=True)

dataset = synthetic.synthetic_dataset(150, seed=7, asymmetry_range=(0.0, 0.4))
held_out = dataset.faces[-1]
train = faceio.FaceDataset(faces=dataset.faces[:-1], ids=dataset.ids[:-1])

model = eigenspace.fit_eigenmodel(train, K=60)
print("cumulative explained variance:")
for k in (1, 2, 5, 10, 20, 40, 60):
    print(f"  k={k:3d}  {eigenspace.explained_variance(model, k):.4f}")

open(os.path.join(OUT, "mean_face.pgm"), "wb").write(
    faceio.encode_image(faceio.FaceVector(model.mean_face, model.width, model.height))
)
for j in range(6):
    col = model.basis[:, j]
    normalized = (col - col.min()) / (col.max() - col.min())
    face = faceio.FaceVector(normalized, model.width, model.height)
    open(os.path.join(OUT, f"eigenface_{j}.pgm"), "wb").write(
        faceio.encode_image(face)
    )

print("\nheld-out reconstruction error by rank:")
for k in (1, 10, 30, 60):
    sub = eigenspace.EigenModel(
        mean_face=model.mean_face,
        basis=model.basis[:, :k],
        eigenvalues=model.eigenvalues[:k],
        total_variance=model.total_variance,
        width=model.width,
        height=model.height,
        n_train=model.n_train,
    )
    approx = eigenspace.reconstruct(sub, eigenspace.project(sub, held_out))
    mse = float(np.mean((approx.pixels - held_out.pixels) ** 2))
    print(f"  k={k:3d}  mse={mse:.6f}")
    open(os.path.join(OUT, f"reconstruction_k{k}.pgm"), "wb").write(
        faceio.encode_image(approx)
    )
open(os.path.join(OUT, "held_out_original.pgm"), "wb").write(
    faceio.encode_image(held_out)
)
print(f"\nimages written to {OUT}")
