"""Grayscale face image codec, dataset ingestion and the symmetry filter.

Faces are flat row-major intensity vectors in [0, 1]. Supported file
formats are binary PGM (P5) with 8-bit samples and 8-bit grayscale PNG;
everything downstream works on the decoded vectors, so the codec is the
only place where quantization and clamping happen.
"""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

DEFAULT_WIDTH = 64
DEFAULT_HEIGHT = 64

#: fraction of most-symmetric faces kept by the corpus filter
DEFAULT_SYMMETRY_PERCENTILE = 0.15

DATASET_FORMAT_VERSION = 1


class ImageFormatError(ValueError):
    """Raised for malformed or unsupported image files."""


class ImageDimensionError(ImageFormatError):
    """Raised when an image's geometry does not match the configured one."""


@dataclass
class FaceVector:
    """A single face as a flat vector of ``width*height`` intensities."""

    pixels: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64).reshape(-1)
        if self.pixels.size != self.width * self.height:
            raise ImageDimensionError(
                f"pixel count {self.pixels.size} != width*height "
                f"{self.width}x{self.height}"
            )

    def as_image(self) -> np.ndarray:
        """Return the pixels reshaped to (height, width)."""
        return self.pixels.reshape(self.height, self.width)


@dataclass
class FaceDataset:
    """An ordered collection of equally sized faces with unique ids."""

    faces: list[FaceVector]
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.ids:
            self.ids = [str(i) for i in range(len(self.faces))]
        if len(self.ids) != len(self.faces):
            raise ValueError("ids and faces must have equal length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("dataset ids must be unique")
        if self.faces:
            w, h = self.faces[0].width, self.faces[0].height
            for f in self.faces:
                if (f.width, f.height) != (w, h):
                    raise ImageDimensionError(
                        f"mixed geometries in dataset: {f.width}x{f.height} vs {w}x{h}"
                    )

    def __len__(self) -> int:
        return len(self.faces)

    @property
    def width(self) -> int:
        return self.faces[0].width

    @property
    def height(self) -> int:
        return self.faces[0].height

    def matrix(self) -> np.ndarray:
        """Stack the faces into an (N, p) array."""
        return np.stack([f.pixels for f in self.faces])


def _parse_pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read `count` whitespace-separated header tokens, skipping # comments.

    Returns the tokens and the offset of the byte right after the single
    whitespace character that terminates the last token.
    """
    tokens: list[bytes] = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise ImageFormatError("malformed PGM header: truncated")
        tokens.append(data[start:i])
        if len(tokens) == count:
            if i >= n:
                raise ImageFormatError("malformed PGM header: missing raster")
            i += 1  # exactly one whitespace byte after maxval
    return tokens, i


def _decode_pgm(data: bytes, width: int, height: int) -> FaceVector:
    if not data.startswith(b"P5"):
        raise ImageFormatError(f"malformed PGM header: magic {data[:2]!r} != b'P5'")
    tokens, offset = _parse_pgm_tokens(data[2:], 3)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ImageFormatError(
            f"malformed PGM header: non-numeric fields {tokens!r}"
        ) from None
    if maxval <= 0 or maxval > 255:
        raise ImageFormatError(f"unsupported bit depth: maxval={maxval}, want 1..255")
    if (w, h) != (width, height):
        raise ImageDimensionError(
            f"wrong dimensions: {w}x{h}, expected {width}x{height}"
        )
    raster = data[2 + offset : 2 + offset + w * h]
    if len(raster) < w * h:
        raise ImageFormatError(
            f"truncated PGM raster: {len(raster)} bytes, expected {w * h}"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).astype(np.float64) / maxval
    return FaceVector(pixels, w, h)


def _decode_png(data: bytes, width: int, height: int) -> FaceVector:
    from PIL import Image, UnidentifiedImageError

    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError:
        raise ImageFormatError("malformed PNG data") from None
    if img.format != "PNG":
        raise ImageFormatError(f"unsupported container: {img.format}")
    if img.mode != "L":
        raise ImageFormatError(
            f"unsupported bit depth/mode: {img.mode}, want 8-bit grayscale 'L'"
        )
    if img.size != (width, height):
        raise ImageDimensionError(
            f"wrong dimensions: {img.size[0]}x{img.size[1]}, "
            f"expected {width}x{height}"
        )
    pixels = np.asarray(img, dtype=np.float64).reshape(-1) / 255.0
    return FaceVector(pixels, width, height)


def decode_image(
    data: bytes, width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT
) -> FaceVector:
    """Decode PGM (P5) or 8-bit grayscale PNG bytes into a FaceVector.

    Pixel k maps to value/maxval in [0, 1], row-major. Raises
    ImageFormatError (malformed header, unsupported bit depth) or
    ImageDimensionError (geometry mismatch).
    """
    if data.startswith(b"P5"):
        return _decode_pgm(data, width, height)
    if data.startswith(b"\x89PNG"):
        return _decode_png(data, width, height)
    raise ImageFormatError(
        f"malformed header: leading bytes {data[:8]!r} are neither PGM P5 nor PNG"
    )


def _quantize(face: FaceVector) -> np.ndarray:
    # clamp reconstruction overshoot here, never inside the linear algebra
    clipped = np.clip(face.pixels, 0.0, 1.0)
    return np.rint(clipped * 255.0).astype(np.uint8)


def encode_image(face: FaceVector, fmt: str = "pgm") -> bytes:
    """Encode a face as PGM P5 (maxval 255, no comments) or 8-bit PNG.

    Values outside [0, 1] are clamped before quantization; a decode of the
    result reproduces the input within one quantization step (1/255).
    """
    data = _quantize(face)
    if fmt == "pgm":
        header = f"P5\n{face.width} {face.height}\n255\n".encode("ascii")
        return header + data.tobytes()
    if fmt == "png":
        from PIL import Image

        img = Image.fromarray(data.reshape(face.height, face.width), mode="L")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}, want 'pgm' or 'png'")


def symmetry_index(face: FaceVector) -> float:
    """Mean squared difference between horizontally mirrored pixel pairs.

    S(x) = (2/p) * sum over rows i, columns j < width/2 of
    (x[i,j] - x[i,width-1-j])^2. Zero for a mirror-symmetric image; lower
    values mean more symmetric. Requires even width.
    """
    if face.width % 2 != 0:
        raise ValueError(f"symmetry index requires even width, got {face.width}")
    img = face.as_image()
    half = face.width // 2
    left = img[:, :half]
    right = img[:, ::-1][:, :half]
    p = face.pixels.size
    return float(2.0 / p * np.sum((left - right) ** 2))


def filter_symmetric(
    dataset: FaceDataset, percentile: float = DEFAULT_SYMMETRY_PERCENTILE
) -> FaceDataset:
    """Keep the ceil(percentile*N) most symmetric faces.

    Survivors are the faces with the lowest symmetry index; ties break in
    favor of earlier dataset position, and the original relative order is
    preserved in the result.
    """
    if len(dataset) == 0:
        raise ValueError("cannot filter an empty dataset")
    if not 0.0 < percentile <= 1.0:
        raise ValueError(f"percentile must be in (0, 1], got {percentile}")
    scores = np.array([symmetry_index(f) for f in dataset.faces])
    keep = math.ceil(percentile * len(dataset))
    chosen = np.sort(np.argsort(scores, kind="stable")[:keep])
    return FaceDataset(
        faces=[dataset.faces[i] for i in chosen],
        ids=[dataset.ids[i] for i in chosen],
    )


def load_directory(
    dirpath: str,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
    errors: dict[str, str] | None = None,
) -> FaceDataset:
    """Ingest all .pgm/.png files in a directory, lexicographically ordered.

    With `errors=None` any unreadable file raises; otherwise failures are
    recorded as filename -> message and skipped.
    """
    names = sorted(
        n for n in os.listdir(dirpath) if n.lower().endswith((".pgm", ".png"))
    )
    faces, ids = [], []
    for name in names:
        path = os.path.join(dirpath, name)
        try:
            with open(path, "rb") as fh:
                faces.append(decode_image(fh.read(), width, height))
            ids.append(name)
        except (OSError, ImageFormatError) as exc:
            if errors is None:
                raise
            errors[name] = str(exc)
    return FaceDataset(faces=faces, ids=ids)


def save_dataset(dataset: FaceDataset, path: str, manifest: dict | None = None):
    """Persist a dataset as a .npz archive (pixels, ids, geometry, manifest)."""
    np.savez_compressed(
        path,
        format_version=DATASET_FORMAT_VERSION,
        pixels=dataset.matrix(),
        ids=np.array(dataset.ids, dtype=np.str_),
        width=dataset.width,
        height=dataset.height,
        manifest=json.dumps(manifest or {}),
    )


def load_dataset(path: str) -> tuple[FaceDataset, dict]:
    """Load a .npz dataset archive; returns (dataset, manifest)."""
    with np.load(path, allow_pickle=False) as npz:
        version = int(npz["format_version"])
        if version != DATASET_FORMAT_VERSION:
            raise ValueError(f"unsupported dataset archive version {version}")
        width = int(npz["width"])
        height = int(npz["height"])
        faces = [FaceVector(row, width, height) for row in npz["pixels"]]
        ids = [str(s) for s in npz["ids"]]
        manifest = json.loads(str(npz["manifest"]))
    return FaceDataset(faces=faces, ids=ids), manifest
