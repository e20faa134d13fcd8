"""Synthetic face-like images for tests and demos.

Smooth grayscale "faces" built from an elliptical head, eye and mouth
blobs, and a low-frequency random field. The field splits into a
horizontally even part and an odd part so the amount of left/right
asymmetry is controllable, which makes the symmetry filter exercisable
without shipping any real face data.
"""

from __future__ import annotations

import numpy as np

from .faceio import FaceDataset, FaceVector


def _blob(xx, yy, cx, cy, sx, sy):
    return np.exp(-(((xx - cx) / sx) ** 2 + ((yy - cy) / sy) ** 2))


def synthetic_face(
    rng: np.random.Generator,
    width: int = 64,
    height: int = 64,
    asymmetry: float = 0.0,
) -> FaceVector:
    """One random face; `asymmetry` scales the horizontally odd component."""
    x = np.linspace(-1.0, 1.0, width)
    y = np.linspace(-1.0, 1.0, height)
    xx, yy = np.meshgrid(x, y)

    eye_dx = 0.35 + 0.08 * rng.standard_normal()
    eye_y = -0.25 + 0.06 * rng.standard_normal()
    mouth_y = 0.45 + 0.06 * rng.standard_normal()
    head_w = 0.75 + 0.05 * rng.standard_normal()
    head_h = 0.95 + 0.05 * rng.standard_normal()

    img = 0.15 + 0.65 * _blob(xx, yy, 0.0, 0.05, head_w, head_h)
    img -= 0.35 * _blob(xx, yy, -eye_dx, eye_y, 0.13, 0.09)
    img -= 0.35 * _blob(xx, yy, eye_dx, eye_y, 0.13, 0.09)
    img -= 0.25 * _blob(xx, yy, 0.0, mouth_y, 0.30, 0.08)

    # low-frequency random field, split into even/odd parts in x
    field = np.zeros_like(img)
    for _ in range(6):
        fx, fy = rng.uniform(0.5, 2.5, size=2)
        px, py = rng.uniform(0.0, 2.0 * np.pi, size=2)
        amp = 0.06 * rng.standard_normal()
        field += amp * np.cos(fx * np.pi * xx + px) * np.cos(fy * np.pi * yy + py)
    even = 0.5 * (field + field[:, ::-1])
    odd = 0.5 * (field - field[:, ::-1])
    img += even + asymmetry * odd

    return FaceVector(np.clip(img, 0.0, 1.0).reshape(-1), width, height)


def synthetic_dataset(
    n: int,
    width: int = 64,
    height: int = 64,
    seed: int = 0,
    asymmetry_range: tuple[float, float] = (0.0, 1.0),
) -> FaceDataset:
    """A dataset of n faces with asymmetry drawn uniformly from the range."""
    rng = np.random.default_rng(seed)
    lo, hi = asymmetry_range
    faces = [
        synthetic_face(rng, width, height, asymmetry=rng.uniform(lo, hi))
        for _ in range(n)
    ]
    ids = [f"synthetic-{i:04d}" for i in range(n)]
    return FaceDataset(faces=faces, ids=ids)
