"""Eigenface basis: fitting, projection, reconstruction and persistence.

The basis columns are the top-K eigenvectors of the sample covariance
(divisor N-1) of the centered face vectors. For N < p the decomposition
runs through a thin SVD of the centered data matrix, which is
mathematically identical to eigendecomposing the p x p covariance but
never forms it.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .faceio import FaceVector

_MAGIC = b"FACEEIG\x00"
_VERSION = 1


class ModelFormatError(ValueError):
    """Raised for unreadable model files (magic/version/truncation/checksum)."""


@dataclass
class EigenModel:
    """Mean face plus an orthonormal top-K eigenface basis."""

    mean_face: np.ndarray  # (p,)
    basis: np.ndarray  # (p, K), orthonormal columns
    eigenvalues: np.ndarray  # (K,), non-increasing
    total_variance: float  # trace of the full sample covariance
    width: int
    height: int
    n_train: int

    @property
    def K(self) -> int:
        return self.basis.shape[1]

    @property
    def p(self) -> int:
        return self.basis.shape[0]


def fit_eigenmodel(dataset, K: int) -> EigenModel:
    """Fit the top-K eigenface basis to a dataset.

    Requires N >= 2 and K <= min(p, N-1). The sample covariance uses
    divisor N-1; each basis column's sign is fixed so its
    largest-magnitude entry is positive.
    """
    X = dataset.matrix()
    n, p = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 faces to fit, got {n}")
    max_k = min(p, n - 1)
    if not 1 <= K <= max_k:
        raise ValueError(f"K={K} out of range 1..{max_k} (p={p}, N={n})")

    mean = X.mean(axis=0)
    centered = X - mean
    # thin SVD of the (N, p) data matrix; singular values give the spectrum
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    eigenvalues = (s**2) / (n - 1)
    basis = vt[:K].T.copy()
    # deterministic sign: largest-magnitude entry of each column positive
    flip = basis[np.abs(basis).argmax(axis=0), np.arange(K)] < 0
    basis[:, flip] *= -1.0
    total_variance = float(np.sum(centered**2) / (n - 1))
    return EigenModel(
        mean_face=mean,
        basis=basis,
        eigenvalues=eigenvalues[:K].copy(),
        total_variance=total_variance,
        width=dataset.width,
        height=dataset.height,
        n_train=n,
    )


def project(model: EigenModel, face: FaceVector) -> np.ndarray:
    """Reduced coordinates c = basis^T (x - mean_face)."""
    if (face.width, face.height) != (model.width, model.height):
        raise ValueError(
            f"geometry mismatch: face {face.width}x{face.height}, "
            f"model {model.width}x{model.height}"
        )
    return model.basis.T @ (face.pixels - model.mean_face)


def reconstruct(model: EigenModel, coords: np.ndarray) -> FaceVector:
    """Face x = mean_face + basis c. Values are NOT clamped here."""
    coords = np.asarray(coords, dtype=np.float64).reshape(-1)
    if coords.size != model.K:
        raise ValueError(f"expected {model.K} coordinates, got {coords.size}")
    pixels = model.mean_face + model.basis @ coords
    return FaceVector(pixels, model.width, model.height)


def explained_variance(model: EigenModel, k: int) -> float:
    """Cumulative fraction of total variance in the first k eigenfaces."""
    if not 1 <= k <= model.K:
        raise ValueError(f"k={k} out of range 1..{model.K}")
    if model.total_variance == 0.0:
        return 1.0  # zero-variance corpus: everything is "explained"
    return float(np.sum(model.eigenvalues[:k]) / model.total_variance)


def save_model(model: EigenModel, path: str):
    """Write the model to a single versioned binary file (lossless)."""
    head = _MAGIC + struct.pack(
        "<IQQQII",
        _VERSION,
        model.p,
        model.K,
        model.n_train,
        model.width,
        model.height,
    )
    body = (
        struct.pack("<d", model.total_variance)
        + model.mean_face.astype("<f8").tobytes()
        + model.eigenvalues.astype("<f8").tobytes()
        + np.ascontiguousarray(model.basis, dtype="<f8").tobytes()
    )
    payload = head + body
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_model(path: str) -> EigenModel:
    """Read a model written by save_model, verifying version and checksum."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 4:
        raise ModelFormatError("truncated file: header incomplete")
    if blob[: len(_MAGIC)] != _MAGIC:
        raise ModelFormatError(
            f"bad magic {blob[:len(_MAGIC)]!r}: not an eigenmodel file"
        )
    off = len(_MAGIC)
    (version,) = struct.unpack_from("<I", blob, off)
    if version != _VERSION:
        raise ModelFormatError(f"version mismatch: file v{version}, reader v{_VERSION}")
    off += 4
    try:
        p, K, n_train, width, height = struct.unpack_from("<QQQII", blob, off)
    except struct.error:
        raise ModelFormatError("truncated file: header incomplete") from None
    off += struct.calcsize("<QQQII")
    expected = off + 8 + 8 * (p + K + p * K) + 4
    if len(blob) < expected:
        raise ModelFormatError(
            f"truncated file: {len(blob)} bytes, expected {expected}"
        )
    (stored_crc,) = struct.unpack_from("<I", blob, expected - 4)
    if zlib.crc32(blob[: expected - 4]) != stored_crc:
        raise ModelFormatError("checksum failure: file is corrupt")
    (total_variance,) = struct.unpack_from("<d", blob, off)
    off += 8
    mean = np.frombuffer(blob, dtype="<f8", count=p, offset=off).copy()
    off += 8 * p
    eigenvalues = np.frombuffer(blob, dtype="<f8", count=K, offset=off).copy()
    off += 8 * K
    basis = (
        np.frombuffer(blob, dtype="<f8", count=p * K, offset=off)
        .reshape(p, K)
        .copy()
    )
    return EigenModel(
        mean_face=mean,
        basis=basis,
        eigenvalues=eigenvalues,
        total_variance=total_variance,
        width=width,
        height=height,
        n_train=n_train,
    )
