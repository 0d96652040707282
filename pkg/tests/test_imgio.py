import gzip

import numpy as np
import pytest
from PIL import Image

from conftest import bools, nums
from imgql import imgio
from imgql.errors import ImageIOError


def write_png(path, rows, mode="L"):
    Image.fromarray(np.asarray(rows, dtype=np.uint8), mode=mode).save(path)


class TestPng:
    def test_gray_2x2(self, tmp_path):
        p = str(tmp_path / "g.png")
        write_png(p, [[0, 85], [170, 255]])
        m = imgio.load_model(p)
        assert m.geometry.dims == (2, 2) and m.geometry.spacing == (1.0, 1.0)
        f = imgio.channel("intensity", m)
        # row 0 of the picture is y = 0
        assert f.data[0, 0] == 0 and f.data[1, 0] == 85 and f.data[0, 1] == 170 and f.data[1, 1] == 255
        assert sorted(f.flat()) == [0, 85, 170, 255]

    def test_rgb_channels(self, tmp_path):
        p = str(tmp_path / "c.png")
        rgb = np.zeros((1, 2, 3), np.uint8)
        rgb[0, 0] = (200, 10, 20)
        rgb[0, 1] = (0, 0, 255)
        Image.fromarray(rgb, mode="RGB").save(p)
        m = imgio.load_model(p)
        assert list(imgio.channel("red", m).flat()) == [200, 0]
        assert list(imgio.channel("blue", m).flat()) == [20, 255]
        lum = imgio.channel("intensity", m).flat()
        assert lum[1] == pytest.approx(0.0722 * 255)

    def test_red_of_gray_fails(self, tmp_path):
        p = str(tmp_path / "g.png")
        write_png(p, [[1, 2]])
        with pytest.raises(ImageIOError):
            imgio.channel("red", imgio.load_model(p))

    def test_bool_save(self, tmp_path):
        p = str(tmp_path / "b.png")
        imgio.save_field(p, bools([[1, 0], [0, 1]]))
        assert list(imgio.channel("intensity", imgio.load_model(p)).flat()) == [255, 0, 0, 255]

    def test_numeric_scaling(self):
        assert list(imgio.scale_to_uint8(np.array([0.0, 0.5, 1.0]))) == [0, 127, 255]
        assert list(imgio.scale_to_uint8(np.array([3.0, 3.0]))) == [0, 0]

    def test_png_round_trip_of_scaled_values(self, tmp_path):
        p = str(tmp_path / "n.png")
        imgio.save_field(p, nums([[0.0, 0.5, 1.0]]))
        assert list(imgio.channel("intensity", imgio.load_model(p)).flat()) == [0, 127, 255]

    def test_3d_rejected(self):
        with pytest.raises(ImageIOError):
            imgio.png_bytes(nums(np.zeros((2, 2, 2))))

    def test_png_bytes_deterministic(self, rng):
        f = nums(rng.random((7, 5)))
        assert imgio.png_bytes(f) == imgio.png_bytes(f)


class TestNifti:
    @pytest.mark.parametrize("name", ["v.nii", "v.nii.gz"])
    @pytest.mark.parametrize("dims, spacing", [((4, 3), (0.5, 2.0)), ((4, 3, 5), (1.0, 1.5, 3.0))])
    def test_numeric_round_trip(self, tmp_path, rng, name, dims, spacing):
        p = str(tmp_path / name)
        data = rng.random(dims).astype(np.float32).astype(np.float64)
        imgio.save_field(p, nums(data, spacing))
        m = imgio.load_model(p)
        assert m.geometry.dims == dims and m.geometry.spacing == spacing
        assert np.array_equal(imgio.channel("intensity", m).data, data)

    def test_bool_round_trip(self, tmp_path, rng):
        p = str(tmp_path / "b.nii")
        mask = rng.random((3, 4, 2)) < 0.5
        imgio.save_field(p, bools(mask))
        m = imgio.load_model(p)
        assert m.source_dtype == "uint8"
        assert np.array_equal(imgio.channel("intensity", m).data, mask.astype(float))

    def test_header_fields(self):
        raw = imgio.nifti_bytes(bools(np.ones((2, 3, 4))))
        hdr, order = imgio.parse_nifti_header(raw)
        assert order == "<" and int(hdr["datatype"]) == 2 and list(hdr["dim"][:4]) == [3, 2, 3, 4]
        assert len(raw) == imgio.DATA_OFFSET + 24

    def test_x_fastest_layout(self):
        raw = imgio.nifti_bytes(nums(np.arange(6.0).reshape(2, 3)))
        voxels = np.frombuffer(raw, "<f4", offset=imgio.DATA_OFFSET)
        assert list(voxels) == [0, 3, 1, 4, 2, 5]

    def test_bad_magic(self, tmp_path):
        raw = bytearray(imgio.nifti_bytes(nums(np.zeros((2, 2)))))
        raw[344:348] = b"abc\0"
        p = tmp_path / "bad.nii"
        p.write_bytes(bytes(raw))
        with pytest.raises(ImageIOError) as err:
            imgio.load_model(str(p))
        assert "magic" in str(err.value)

    def test_truncated(self, tmp_path):
        p = tmp_path / "t.nii"
        p.write_bytes(imgio.nifti_bytes(nums(np.zeros((4, 4))))[:-5])
        with pytest.raises(ImageIOError):
            imgio.load_model(str(p))

    def test_corrupt_gzip(self, tmp_path):
        p = tmp_path / "c.nii.gz"
        p.write_bytes(b"not gzip at all")
        with pytest.raises(ImageIOError):
            imgio.load_model(str(p))

    def test_big_endian(self, tmp_path):
        data = np.arange(12, dtype=">i2").reshape(3, 4, order="F")
        hdr = np.zeros(1, imgio.NIFTI_HEADER.newbyteorder(">"))[0]
        hdr["sizeof_hdr"] = imgio.HEADER_SIZE
        hdr["dim"] = [2, 3, 4, 1, 1, 1, 1, 1]
        hdr["datatype"] = 4
        hdr["bitpix"] = 16
        hdr["pixdim"] = [1, 0.25, 4, 1, 1, 1, 1, 1]
        hdr["vox_offset"] = imgio.DATA_OFFSET
        hdr["scl_slope"] = 2.0
        hdr["scl_inter"] = 1.0
        hdr["magic"] = b"n+1"
        p = tmp_path / "be.nii.gz"
        p.write_bytes(gzip.compress(hdr.tobytes() + b"\0" * 4 + data.tobytes(order="F")))
        m = imgio.load_model(str(p))
        assert m.geometry.spacing == (0.25, 4.0)
        assert np.array_equal(m.channels[0], data.astype(float) * 2 + 1)

    def test_4d_singleton_is_3d(self, tmp_path):
        raw = bytearray(imgio.nifti_bytes(nums(np.zeros((2, 2, 2)))))
        hdr = np.frombuffer(bytes(raw[:imgio.HEADER_SIZE]), imgio.NIFTI_HEADER).copy()
        hdr["dim"][0][0] = 4
        raw[:imgio.HEADER_SIZE] = hdr.tobytes()
        p = tmp_path / "four.nii"
        p.write_bytes(bytes(raw))
        assert imgio.load_model(str(p)).geometry.dims == (2, 2, 2)


class TestPaths:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ImageIOError):
            imgio.load_model(str(tmp_path / "no.png"))

    def test_unknown_extension(self, tmp_path):
        p = tmp_path / "x.jpg"
        p.write_bytes(b"")
        with pytest.raises(ImageIOError):
            imgio.load_model(str(p))
        with pytest.raises(ImageIOError):
            imgio.save_field(str(tmp_path / "x.tif"), nums([[1.0]]))

    def test_creates_parent_directories(self, tmp_path):
        p = tmp_path / "a" / "b" / "m.nii"
        imgio.save_field(str(p), bools([[1]]))
        assert p.exists()

    def test_gz_output_is_reproducible(self, tmp_path, rng):
        f = nums(rng.random((5, 5, 5)))
        imgio.save_field(str(tmp_path / "1.nii.gz"), f)
        imgio.save_field(str(tmp_path / "2.nii.gz"), f)
        assert (tmp_path / "1.nii.gz").read_bytes() == (tmp_path / "2.nii.gz").read_bytes()
