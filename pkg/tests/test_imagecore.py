import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from PIL import Image

from focalstyle import (
    AlphaMap,
    ImageFormatError,
    ImageTensor,
    RegionPartition,
    load_image,
    read_alphamap,
    resample_alpha,
    resize_image,
    save_image,
    save_mask_png,
    write_alphamap,
)
from focalstyle.imagecore import bilinear_resize, resize_partition_nearest


class TestImageTensor:
    def test_valid(self):
        img = ImageTensor(np.zeros((4, 5, 3)))
        assert img.height == 4 and img.width == 5
        assert img.data.dtype == np.float64

    @pytest.mark.parametrize(
        "bad",
        [
            np.zeros((4, 5)),            # missing channel axis
            np.zeros((4, 5, 4)),         # wrong channel count
            np.full((2, 2, 3), 1.5),     # out of range
            np.full((2, 2, 3), -0.1),
            np.full((2, 2, 3), np.nan),
            np.zeros((0, 5, 3)),         # empty
        ],
    )
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            ImageTensor(bad)

    def test_immutable(self):
        img = ImageTensor(np.zeros((2, 2, 3)))
        with pytest.raises(ValueError):
            img.data[0, 0, 0] = 1.0


class TestAlphaMap:
    def test_valid_and_dtype(self):
        m = AlphaMap(np.ones((3, 4), dtype=np.float32) * 2.5)
        assert m.data.dtype == np.float32
        assert m.height == 3 and m.width == 4

    @pytest.mark.parametrize(
        "bad",
        [np.ones((3, 4, 1), dtype=np.float32), np.full((2, 2), np.inf, dtype=np.float32)],
    )
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            AlphaMap(bad)


class TestRegionPartition:
    def test_valid(self):
        labels = np.array([[0, 1], [2, 2]], dtype=np.int32)
        part = RegionPartition(labels, 3)
        assert part.region_count == 3

    def test_rejects_sparse_labels(self):
        labels = np.array([[0, 2], [2, 2]], dtype=np.int32)  # label 1 missing
        with pytest.raises(ValueError):
            RegionPartition(labels, 3)

    def test_rejects_wrong_count(self):
        labels = np.array([[0, 1], [1, 1]], dtype=np.int32)
        with pytest.raises(ValueError):
            RegionPartition(labels, 3)


class TestPngRoundTrip:
    def test_round_trip_within_one_level(self, tmp_path, rng):
        img = ImageTensor(rng.random((13, 9, 3)))
        path = tmp_path / "img.png"
        save_image(img, path)
        back = load_image(path)
        assert back.data.shape == img.data.shape
        assert np.abs(back.data - img.data).max() <= 1.0 / 255.0 + 1e-12

    def test_exact_for_quantized_values(self, tmp_path):
        img = ImageTensor(np.linspace(0, 1, 256).repeat(3).reshape(16, 16, 3).round(8))
        quantized = np.rint(img.data * 255) / 255.0
        path = tmp_path / "img.png"
        save_image(ImageTensor(quantized), path)
        assert np.array_equal(load_image(path).data, quantized)

    def test_grayscale_png_loads_as_rgb(self, tmp_path):
        path = tmp_path / "gray.png"
        Image.fromarray(np.arange(16, dtype=np.uint8).reshape(4, 4) * 16, mode="L").save(path)
        img = load_image(path)
        assert img.data.shape == (4, 4, 3)
        assert np.array_equal(img.data[..., 0], img.data[..., 1])

    def test_rejects_non_png_jpeg(self, tmp_path):
        path = tmp_path / "img.bmp"
        Image.new("RGB", (4, 4)).save(path, format="BMP")
        with pytest.raises(ImageFormatError):
            load_image(path)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "junk.png"
        path.write_bytes(b"not an image at all")
        with pytest.raises(ImageFormatError):
            load_image(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")


class TestAlphamapFormat:
    def test_bit_exact_round_trip(self, tmp_path, rng):
        values = (rng.random((7, 11)) * 100).astype(np.float32)
        mask = AlphaMap(values)
        path = tmp_path / "m.alphamap"
        write_alphamap(mask, path)
        back = read_alphamap(path)
        assert back.data.dtype == np.float32
        assert np.array_equal(back.data, values)
        assert back.data.tobytes() == values.tobytes()  # bit-exact

    def test_file_layout(self, tmp_path):
        mask = AlphaMap(np.array([[1.5]], dtype=np.float32))
        path = tmp_path / "m.alphamap"
        write_alphamap(mask, path)
        raw = path.read_bytes()
        assert len(raw) == 16 + 4  # header + one f32
        assert raw[:4] == b"ALPH"
        assert int.from_bytes(raw[4:8], "little") == 1  # version
        assert int.from_bytes(raw[8:12], "little") == 1  # width
        assert int.from_bytes(raw[12:16], "little") == 1  # height
        assert np.frombuffer(raw, dtype="<f4", offset=16)[0] == np.float32(1.5)

    def test_row_major_payload(self, tmp_path):
        mask = AlphaMap(np.arange(6, dtype=np.float32).reshape(2, 3))
        path = tmp_path / "m.alphamap"
        write_alphamap(mask, path)
        payload = np.frombuffer(path.read_bytes(), dtype="<f4", offset=16)
        assert np.array_equal(payload, np.arange(6, dtype=np.float32))
        header = path.read_bytes()[:16]
        assert int.from_bytes(header[8:12], "little") == 3  # width
        assert int.from_bytes(header[12:16], "little") == 2  # height

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda raw: b"XLPH" + raw[4:],                 # bad magic
            lambda raw: raw[:4] + b"\x02\x00\x00\x00" + raw[8:],  # bad version
            lambda raw: raw[:-2],                           # truncated payload
            lambda raw: raw + b"\x00\x00\x00\x00",          # trailing junk
            lambda raw: raw[:8],                            # truncated header
        ],
    )
    def test_rejects_corrupt_files(self, tmp_path, rng, mutate):
        mask = AlphaMap(rng.random((3, 4)).astype(np.float32))
        path = tmp_path / "m.alphamap"
        write_alphamap(mask, path)
        bad = tmp_path / "bad.alphamap"
        bad.write_bytes(mutate(path.read_bytes()))
        with pytest.raises(ImageFormatError):
            read_alphamap(bad)

    def test_rejects_non_finite_payload(self, tmp_path):
        mask = AlphaMap(np.zeros((1, 2), dtype=np.float32))
        path = tmp_path / "m.alphamap"
        write_alphamap(mask, path)
        raw = bytearray(path.read_bytes())
        raw[16:20] = np.array([np.nan], dtype="<f4").tobytes()
        path.write_bytes(bytes(raw))
        with pytest.raises(ImageFormatError):
            read_alphamap(path)


class TestMaskPng:
    def test_min_max_stretch(self, tmp_path):
        mask = AlphaMap(np.array([[0.0, 5.0], [10.0, 5.0]], dtype=np.float32))
        path = tmp_path / "m.png"
        save_mask_png(mask, path)
        arr = np.asarray(Image.open(path))
        assert arr.shape == (2, 2)
        assert arr[0, 0] == 0 and arr[1, 0] == 255
        assert arr[0, 1] == 128  # rint(0.5 * 255)

    def test_flat_mask_is_mid_gray(self, tmp_path):
        save_mask_png(AlphaMap(np.full((3, 3), 7.0, dtype=np.float32)), tmp_path / "f.png")
        arr = np.asarray(Image.open(tmp_path / "f.png"))
        assert np.all(arr == 128)


class TestResampleAlpha:
    def test_same_size_identity(self, rng):
        mask = AlphaMap(rng.random((5, 6)).astype(np.float32))
        out = resample_alpha(mask, 5, 6)
        assert np.array_equal(out.data, mask.data)

    def test_corner_alignment(self):
        mask = AlphaMap(np.array([[0.0, 3.0]], dtype=np.float32))
        out = resample_alpha(mask, 1, 4)
        np.testing.assert_allclose(out.data, [[0.0, 1.0, 2.0, 3.0]], atol=1e-6)

    def test_downsample_corners_preserved(self):
        grid = np.arange(25, dtype=np.float32).reshape(5, 5)
        out = resample_alpha(AlphaMap(grid), 2, 2)
        np.testing.assert_allclose(out.data, [[0.0, 4.0], [20.0, 24.0]], atol=1e-5)

    def test_single_pixel_target_is_center(self):
        grid = np.arange(9, dtype=np.float32).reshape(3, 3)
        out = resample_alpha(AlphaMap(grid), 1, 1)
        np.testing.assert_allclose(out.data, [[4.0]], atol=1e-6)

    @given(
        data=hnp.arrays(
            np.float32,
            st.tuples(st.integers(1, 8), st.integers(1, 8)),
            elements=st.floats(0, 100, width=32),
        ),
        th=st.integers(1, 12),
        tw=st.integers(1, 12),
    )
    def test_output_within_input_range(self, data, th, tw):
        mask = AlphaMap(data)
        out = resample_alpha(mask, th, tw)
        assert out.data.shape == (th, tw)
        lo, hi = float(data.min()), float(data.max())
        assert out.data.min() >= lo - 1e-4
        assert out.data.max() <= hi + 1e-4

    def test_rejects_bad_target(self, rng):
        with pytest.raises(ValueError):
            resample_alpha(AlphaMap(rng.random((3, 3)).astype(np.float32)), 0, 4)


class TestResize:
    def test_image_resize_constant(self):
        img = ImageTensor(np.full((10, 10, 3), 0.25))
        out = resize_image(img, 4, 7)
        np.testing.assert_allclose(out.data, 0.25, atol=1e-12)

    def test_bilinear_matches_1d_interp(self):
        row = np.array([[0.0, 1.0, 4.0, 9.0]])
        out = bilinear_resize(row, 1, 7)
        expected = np.interp(np.linspace(0, 3, 7), np.arange(4), row[0])
        np.testing.assert_allclose(out[0], expected, atol=1e-12)

    def test_partition_nearest_resize(self):
        labels = np.array([[0, 0, 1, 1], [0, 0, 1, 1], [2, 2, 3, 3], [2, 2, 3, 3]], dtype=np.int32)
        part = RegionPartition(labels, 4)
        out = resize_partition_nearest(part, 2, 2)
        assert np.array_equal(out.labels, [[0, 1], [2, 3]])

    def test_partition_resize_relabels_densely(self):
        labels = np.array([[0, 1, 2, 3]], dtype=np.int32)
        part = RegionPartition(labels, 4)
        out = resize_partition_nearest(part, 1, 2)  # samples columns 0 and 3
        assert np.array_equal(out.labels, [[0, 1]])
        assert out.region_count == 2


class TestAtomicWrites:
    def test_no_temp_file_left_behind(self, tmp_path, rng):
        save_image(ImageTensor(rng.random((4, 4, 3))), tmp_path / "a.png")
        write_alphamap(AlphaMap(rng.random((4, 4)).astype(np.float32)), tmp_path / "a.alphamap")
        leftovers = [p.name for p in tmp_path.iterdir() if p.suffix == ".tmp"]
        assert leftovers == []

    def test_overwrite_existing(self, tmp_path):
        path = tmp_path / "a.png"
        save_image(ImageTensor(np.zeros((2, 2, 3))), path)
        save_image(ImageTensor(np.ones((2, 2, 3))), path)
        assert np.all(load_image(path).data == 1.0)
