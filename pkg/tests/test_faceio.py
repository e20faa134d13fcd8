import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facesearch import faceio
from facesearch.faceio import (
    FaceDataset,
    FaceVector,
    ImageDimensionError,
    ImageFormatError,
    decode_image,
    encode_image,
    filter_symmetric,
    symmetry_index,
)


def pgm_bytes(width, height, data, maxval=255):
    return f"P5\n{width} {height}\n{maxval}\n".encode() + bytes(data)


class TestDecode:
    def test_all_zero_pgm(self):
        face = decode_image(pgm_bytes(64, 64, [0] * 4096))
        assert face.pixels.shape == (4096,)
        assert np.all(face.pixels == 0.0)

    def test_saturated_pgm_is_exactly_one(self):
        face = decode_image(pgm_bytes(64, 64, [255] * 4096))
        assert np.all(face.pixels == 1.0)

    def test_saturation_with_smaller_maxval(self):
        face = decode_image(pgm_bytes(64, 64, [100] * 4096, maxval=100))
        assert np.all(face.pixels == 1.0)

    def test_wrong_dimensions_rejected(self):
        with pytest.raises(ImageDimensionError, match="32x32"):
            decode_image(pgm_bytes(32, 32, [0] * 1024))

    def test_values_are_value_over_maxval(self):
        face = decode_image(pgm_bytes(2, 2, [0, 51, 102, 255]), width=2, height=2)
        assert np.allclose(face.pixels, [0, 51 / 255, 102 / 255, 1.0])

    def test_row_major_order(self):
        data = list(range(4))
        face = decode_image(pgm_bytes(2, 2, data), width=2, height=2)
        img = face.as_image()
        assert img[0, 1] == 1 / 255
        assert img[1, 0] == 2 / 255

    def test_pgm_comments_skipped(self):
        raw = b"P5\n# a comment\n2 2\n255\n" + bytes([7, 8, 9, 10])
        face = decode_image(raw, width=2, height=2)
        assert face.pixels[0] == 7 / 255

    def test_bad_magic(self):
        with pytest.raises(ImageFormatError, match="malformed header"):
            decode_image(b"GIF89a....")

    def test_p6_rejected(self):
        with pytest.raises(ImageFormatError):
            decode_image(b"P6\n2 2\n255\n" + bytes(12), width=2, height=2)

    def test_sixteen_bit_pgm_rejected(self):
        with pytest.raises(ImageFormatError, match="bit depth"):
            decode_image(pgm_bytes(2, 2, [0] * 8, maxval=65535), width=2, height=2)

    def test_truncated_raster(self):
        with pytest.raises(ImageFormatError, match="truncated"):
            decode_image(pgm_bytes(64, 64, [0] * 100))

    def test_png_roundtrip(self):
        face = FaceVector(np.linspace(0, 1, 64), width=8, height=8)
        again = decode_image(encode_image(face, "png"), width=8, height=8)
        assert np.max(np.abs(again.pixels - face.pixels)) <= 1 / 255 / 2 + 1e-12

    def test_png_wrong_size(self):
        face = FaceVector(np.zeros(64), width=8, height=8)
        raw = encode_image(face, "png")
        with pytest.raises(ImageDimensionError, match="expected 4x4"):
            decode_image(raw, width=4, height=4)


class TestEncode:
    def test_all_zero_face_encodes_zero_bytes(self):
        face = FaceVector(np.zeros(16), width=4, height=4)
        raw = encode_image(face)
        assert raw == b"P5\n4 4\n255\n" + bytes(16)

    def test_roundtrip_identity_on_quantized_grid(self):
        rng = np.random.default_rng(3)
        pixels = rng.integers(0, 256, size=64) / 255.0
        face = FaceVector(pixels, width=8, height=8)
        again = decode_image(encode_image(face), width=8, height=8)
        assert np.array_equal(again.pixels, face.pixels)

    def test_overshoot_clamped(self):
        face = FaceVector(np.full(16, 1.2), width=4, height=4)
        again = decode_image(encode_image(face), width=4, height=4)
        assert np.all(again.pixels == 1.0)
        face = FaceVector(np.full(16, -0.3), width=4, height=4)
        again = decode_image(encode_image(face), width=4, height=4)
        assert np.all(again.pixels == 0.0)

    @given(st.integers(min_value=0, max_value=255), st.integers(min_value=1, max_value=8))
    @settings(max_examples=30, deadline=None)
    def test_roundtrip_within_one_step(self, level, size):
        # arbitrary values land within half a quantization step
        value = (level + 0.4) / 255.0
        face = FaceVector(np.full(size * size, min(value, 1.0)), size, size)
        again = decode_image(encode_image(face), width=size, height=size)
        assert np.max(np.abs(again.pixels - face.pixels)) <= 1 / 255


class TestSymmetry:
    def test_mirror_symmetric_is_zero(self, rng):
        half = rng.uniform(size=(6, 3))
        img = np.hstack([half, half[:, ::-1]])
        face = FaceVector(img.reshape(-1), width=6, height=6)
        assert symmetry_index(face) == 0.0

    def test_half_black_half_white(self):
        img = np.hstack([np.ones((4, 2)), np.zeros((4, 2))])
        face = FaceVector(img.reshape(-1), width=4, height=4)
        assert symmetry_index(face) == pytest.approx(1.0)

    def test_single_differing_pair(self):
        d = 0.37
        img = np.zeros((4, 4))
        img[2, 0] = d
        face = FaceVector(img.reshape(-1), width=4, height=4)
        assert symmetry_index(face) == pytest.approx(2 * d**2 / 16)

    def test_odd_width_rejected(self):
        face = FaceVector(np.zeros(15), width=5, height=3)
        with pytest.raises(ValueError, match="even width"):
            symmetry_index(face)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_mirror_invariance(self, seed):
        rng = np.random.default_rng(seed)
        img = rng.uniform(size=(4, 6))
        face = FaceVector(img.reshape(-1), width=6, height=4)
        mirrored = FaceVector(img[:, ::-1].reshape(-1), width=6, height=4)
        assert symmetry_index(face) == pytest.approx(symmetry_index(mirrored), abs=1e-15)


def graded_dataset(n, width=4, height=4):
    """Faces whose symmetry index strictly increases with their position."""
    faces = []
    for i in range(n):
        img = np.zeros((height, width))
        img[0, 0] = i / (2 * n)  # one asymmetric pixel, growing
        faces.append(FaceVector(img.reshape(-1), width, height))
    return FaceDataset(faces=faces, ids=[f"g{i}" for i in range(n)])


class TestFilterSymmetric:
    def test_percentile_one_keeps_everything(self):
        ds = graded_dataset(7)
        out = filter_symmetric(ds, 1.0)
        assert out.ids == ds.ids

    def test_paper_percentile_on_twenty_faces(self):
        ds = graded_dataset(20)
        out = filter_symmetric(ds, 0.15)
        # brute-force oracle: sort (score, position), keep ceil(0.15*20)=3
        scores = [symmetry_index(f) for f in ds.faces]
        order = sorted(range(20), key=lambda i: (scores[i], i))
        expected = sorted(order[: math.ceil(0.15 * 20)])
        assert out.ids == [ds.ids[i] for i in expected]
        assert len(out) == 3

    def test_shuffled_input_against_brute_force(self, rng):
        ds = graded_dataset(23)
        perm = rng.permutation(23)
        shuffled = FaceDataset(
            faces=[ds.faces[i] for i in perm], ids=[ds.ids[i] for i in perm]
        )
        out = filter_symmetric(shuffled, 0.3)
        scores = [symmetry_index(f) for f in shuffled.faces]
        order = sorted(range(23), key=lambda i: (scores[i], i))
        expected = sorted(order[: math.ceil(0.3 * 23)])
        assert out.ids == [shuffled.ids[i] for i in expected]

    def test_ties_break_by_original_order(self):
        img = np.zeros(16)
        faces = [FaceVector(img.copy(), 4, 4) for _ in range(5)]
        ds = FaceDataset(faces=faces, ids=list("abcde"))
        out = filter_symmetric(ds, 0.4)  # ceil(2.0) = 2
        assert out.ids == ["a", "b"]

    def test_survivors_preserve_relative_order(self, rng):
        ds = graded_dataset(15)
        out = filter_symmetric(ds, 0.5)
        positions = [ds.ids.index(i) for i in out.ids]
        assert positions == sorted(positions)
        assert len(out) == math.ceil(0.5 * 15)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            filter_symmetric(FaceDataset(faces=[], ids=[]), 0.5)


class TestDirectoryAndArchive:
    def test_lexicographic_ingestion(self, tmp_path):
        for name, fill in [("b.pgm", 10), ("a.pgm", 20), ("c.png", 30)]:
            face = FaceVector(np.full(16, fill / 255.0), 4, 4)
            fmt = "png" if name.endswith("png") else "pgm"
            (tmp_path / name).write_bytes(encode_image(face, fmt))
        ds = faceio.load_directory(str(tmp_path), width=4, height=4)
        assert ds.ids == ["a.pgm", "b.pgm", "c.png"]
        assert ds.faces[0].pixels[0] == pytest.approx(20 / 255)

    def test_unreadable_file_collected(self, tmp_path):
        (tmp_path / "ok.pgm").write_bytes(pgm_bytes(4, 4, [0] * 16))
        (tmp_path / "bad.pgm").write_bytes(b"P5 garbage")
        errors = {}
        ds = faceio.load_directory(str(tmp_path), 4, 4, errors=errors)
        assert ds.ids == ["ok.pgm"]
        assert "bad.pgm" in errors

    def test_unreadable_file_raises_in_strict_mode(self, tmp_path):
        (tmp_path / "bad.pgm").write_bytes(b"P5 garbage")
        with pytest.raises(ImageFormatError):
            faceio.load_directory(str(tmp_path), 4, 4)

    def test_archive_roundtrip(self, tmp_path, rng):
        faces = [FaceVector(rng.uniform(size=16), 4, 4) for _ in range(5)]
        ds = FaceDataset(faces=faces, ids=[f"x{i}" for i in range(5)])
        path = str(tmp_path / "corpus.npz")
        faceio.save_dataset(ds, path, {"note": "test"})
        again, manifest = faceio.load_dataset(path)
        assert again.ids == ds.ids
        assert manifest == {"note": "test"}
        for a, b in zip(again.faces, ds.faces):
            assert np.array_equal(a.pixels, b.pixels)


class TestFaceVectorInvariants:
    def test_pixel_count_must_match_geometry(self):
        with pytest.raises(ImageDimensionError):
            FaceVector(np.zeros(10), width=4, height=4)

    def test_dataset_rejects_mixed_geometry(self):
        a = FaceVector(np.zeros(16), 4, 4)
        b = FaceVector(np.zeros(4), 2, 2)
        with pytest.raises(ImageDimensionError, match="mixed"):
            FaceDataset(faces=[a, b], ids=["a", "b"])

    def test_dataset_rejects_duplicate_ids(self):
        a = FaceVector(np.zeros(16), 4, 4)
        with pytest.raises(ValueError, match="unique"):
            FaceDataset(faces=[a, a], ids=["a", "a"])
