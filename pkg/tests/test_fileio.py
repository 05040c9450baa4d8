"""File interchange tests: .flo bytes, sidecars, pixmaps."""

import struct
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowfield import FlowError, FlowField, Reference, read_flo, write_flo, zeros
from flowfield.fileio import (
    FLO_MAGIC,
    INVALID_SENTINEL,
    load_flow,
    read_image,
    read_reference_sidecar,
    save_flow,
    write_image,
    write_mask,
    write_reference_sidecar,
)


def random_f32_field(rng, h, w, invalid_frac=0.3):
    vec = rng.normal(scale=100.0, size=(h, w, 2)).astype(np.float32).astype(np.float64)
    mask = rng.uniform(size=(h, w)) > invalid_frac
    vec[~mask] = 0.0
    return FlowField(vec, "s" if rng.integers(2) else "t", mask)


class TestFloRoundtrip:
    def test_vectors_and_mask_survive(self, tmp_path, rng):
        f = random_f32_field(rng, 7, 9)
        path = tmp_path / "field.flo"
        write_flo(path, f)
        back = read_flo(path, f.reference)
        assert np.array_equal(back.vectors, f.vectors)
        assert np.array_equal(back.mask, f.mask)
        assert back.reference is f.reference

    def test_second_roundtrip_is_byte_stable(self, tmp_path, rng):
        f = random_f32_field(rng, 5, 6)
        first = tmp_path / "a.flo"
        second = tmp_path / "b.flo"
        write_flo(first, f)
        write_flo(second, read_flo(first))
        assert first.read_bytes() == second.read_bytes()

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_property_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        h, w = int(rng.integers(1, 12)), int(rng.integers(1, 12))
        f = random_f32_field(rng, h, w)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "field.flo"
            write_flo(path, f)
            back = read_flo(path, f.reference)
        assert np.array_equal(back.vectors, f.vectors)
        assert np.array_equal(back.mask, f.mask)


class TestFloFormat:
    def test_golden_bytes_parse_to_known_values(self, tmp_path):
        # 2 wide x 1 high: one real vector, one sentinel-invalid cell.
        blob = struct.pack("<fii", FLO_MAGIC, 2, 1)
        blob += struct.pack("<4f", 1.5, -2.25, INVALID_SENTINEL, INVALID_SENTINEL)
        path = tmp_path / "golden.flo"
        path.write_bytes(blob)
        f = read_flo(path)
        assert f.shape == (1, 2)
        assert f.reference is Reference.SOURCE
        assert np.array_equal(f.vectors[0, 0], [1.5, -2.25])
        assert np.array_equal(f.vectors[0, 1], [0.0, 0.0])
        assert list(f.mask[0]) == [True, False]

    def test_written_bytes_are_little_endian_interleaved(self, tmp_path):
        vec = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        path = tmp_path / "layout.flo"
        write_flo(path, FlowField(vec, "s"))
        blob = path.read_bytes()
        magic, w, h = struct.unpack("<fii", blob[:12])
        assert (magic, w, h) == (FLO_MAGIC, 2, 1)
        assert blob[:4] == b"PIEH"
        assert struct.unpack("<4f", blob[12:]) == (1.0, 2.0, 3.0, 4.0)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.flo"
        path.write_bytes(struct.pack("<fii", 0.0, 1, 1) + b"\0" * 8)
        with pytest.raises(FlowError, match="magic"):
            read_flo(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.flo"
        path.write_bytes(b"")
        with pytest.raises(FlowError, match="truncated"):
            read_flo(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "short.flo"
        path.write_bytes(struct.pack("<fii", FLO_MAGIC, 4, 4) + b"\0" * 10)
        with pytest.raises(FlowError, match="truncated"):
            read_flo(path)

    @pytest.mark.parametrize("w, h", [(0, 4), (-1, 4), (4, 70000)])
    def test_implausible_dims_rejected(self, tmp_path, w, h):
        path = tmp_path / "dims.flo"
        path.write_bytes(struct.pack("<fii", FLO_MAGIC, w, h) + b"\0" * 64)
        with pytest.raises(FlowError, match="dims"):
            read_flo(path)

    def test_oversized_field_refused_on_write(self, tmp_path):
        wide = zeros((1, 65536))
        with pytest.raises(FlowError, match="dims"):
            write_flo(tmp_path / "wide.flo", wide)


class TestSidecar:
    def test_save_load_carries_reference(self, tmp_path):
        path = tmp_path / "f.flo"
        save_flow(path, zeros((3, 3), "t"))
        assert (tmp_path / "f.ref").read_text().strip() == "t"
        assert load_flow(path).reference is Reference.TARGET

    def test_explicit_reference_overrides_sidecar(self, tmp_path):
        path = tmp_path / "f.flo"
        save_flow(path, zeros((3, 3), "t"))
        assert load_flow(path, "s").reference is Reference.SOURCE

    def test_missing_sidecar_defaults_to_source(self, tmp_path):
        path = tmp_path / "f.flo"
        write_flo(path, zeros((3, 3), "t"))
        assert read_reference_sidecar(path) is None
        assert load_flow(path).reference is Reference.SOURCE

    def test_sidecar_roundtrip(self, tmp_path):
        path = tmp_path / "f.flo"
        write_reference_sidecar(path, "t")
        assert read_reference_sidecar(path) is Reference.TARGET


class TestPixmaps:
    def test_rgb_roundtrip_bit_exact(self, tmp_path, rng):
        image = rng.integers(0, 256, size=(2, 2, 3), dtype=np.uint8)
        path = tmp_path / "img.ppm"
        write_image(path, image)
        assert np.array_equal(read_image(path), image)

    def test_gray_roundtrip_bit_exact(self, tmp_path, rng):
        image = rng.integers(0, 256, size=(5, 3), dtype=np.uint8)
        path = tmp_path / "img.pgm"
        write_image(path, image)
        assert np.array_equal(read_image(path), image)

    def test_mask_encodes_0_255(self, tmp_path):
        path = tmp_path / "mask.pgm"
        write_mask(path, np.array([[True, False]]))
        assert np.array_equal(read_image(path), [[255, 0]])
        write_mask(path, np.ones((2, 2), bool))
        assert np.array_equal(read_image(path), np.full((2, 2), 255))
        write_mask(path, np.zeros((2, 2), bool))
        assert np.array_equal(read_image(path), np.zeros((2, 2)))

    def test_comments_in_header_are_skipped(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 1\n255\n\x07\x09")
        assert np.array_equal(read_image(path), [[7, 9]])

    def test_non_uint8_rejected(self, tmp_path):
        with pytest.raises(FlowError):
            write_image(tmp_path / "x.ppm", np.zeros((2, 2, 3), dtype=np.float64))

    def test_unwritable_path_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            write_image(tmp_path / "no" / "dir.ppm", np.zeros((2, 2, 3), np.uint8))
