import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groundsight.depth import (
    DepthFrame,
    Roi,
    VerticalDepthMap,
    decode_vertical,
    depth_stats,
    encode_gray,
    export_point_cloud,
    read_depth_frame,
    write_depth_frame,
)
from groundsight.errors import DimensionMismatch, RangeExceeded, RoiOutOfBounds

from conftest import BLAZE, BLAZE_TOF


def frame_with(pixels, fill=0):
    gray = np.full((480, 640), fill, dtype=np.uint16)
    for (row, col), g in pixels.items():
        gray[row, col] = g
    return DepthFrame(gray=gray)


class TestDecode:
    def test_near_principal_point(self):
        # 1-based pixel (313, 240) is array index (312, 239); the angular
        # factor there is 1.0000003, so z ~ 23628 * 0.0229 - 23.97
        z = decode_vertical(frame_with({(239, 312): 23628}), BLAZE, BLAZE_TOF)
        assert z.valid[239, 312]
        assert z.z_mm[239, 312] == pytest.approx(517.1110309341204, abs=1e-9)

    def test_image_corner(self):
        # 1-based pixel (1, 1), array index (0, 0): factor
        # sqrt((312.05/509.935)^2 + (238.6/509.935)^2 + 1) = 1.2623013
        z = decode_vertical(frame_with({(0, 0): 30000}), BLAZE, BLAZE_TOF)
        assert z.z_mm[0, 0] == pytest.approx(520.2740896901805, abs=1e-9)

    def test_zero_gray_is_invalid(self):
        z = decode_vertical(frame_with({}), BLAZE, BLAZE_TOF)
        assert not z.valid.any()
        assert np.isnan(z.z_mm).all()

    def test_out_of_range_invalid(self):
        # g=1000 decodes to ~-1 mm, far below range_min
        z = decode_vertical(frame_with({(10, 10): 1000}), BLAZE, BLAZE_TOF)
        assert not z.valid[10, 10]

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            decode_vertical(DepthFrame(gray=np.zeros((10, 10), np.uint16)),
                            BLAZE, BLAZE_TOF)

    def test_monotone_in_gray_at_fixed_pixel(self):
        z1 = decode_vertical(frame_with({(100, 100): 20000}), BLAZE, BLAZE_TOF)
        z2 = decode_vertical(frame_with({(100, 100): 20001}), BLAZE, BLAZE_TOF)
        assert z1.z_mm[100, 100] < z2.z_mm[100, 100]

    def test_constant_gray_peaks_at_principal_point(self):
        z = decode_vertical(
            DepthFrame(gray=np.full((480, 640), 30000, np.uint16)),
            BLAZE, BLAZE_TOF)
        peak = np.unravel_index(np.nanargmax(z.z_mm), z.z_mm.shape)
        # principal point (313.05, 239.60) 1-based -> nearest index (239, 312)
        assert peak == (239, 312)
        # strictly decreasing along a row moving away from the peak
        row = z.z_mm[239, 312:]
        assert np.all(np.diff(row) < 0)


class TestEncode:
    def test_inverse_of_decode_example(self):
        z = np.full((480, 640), np.nan)
        valid = np.zeros((480, 640), bool)
        z[239, 312] = 517.11
        valid[239, 312] = True
        frame = encode_gray(VerticalDepthMap(z_mm=z, valid=valid), BLAZE, BLAZE_TOF)
        assert frame.gray[239, 312] == 23628
        assert frame.gray[0, 0] == 0

    def test_invalid_roundtrips_through_zero(self):
        z = np.full((480, 640), np.nan)
        valid = np.zeros((480, 640), bool)
        frame = encode_gray(VerticalDepthMap(z_mm=z, valid=valid), BLAZE, BLAZE_TOF)
        assert (frame.gray == 0).all()
        back = decode_vertical(frame, BLAZE, BLAZE_TOF)
        assert not back.valid.any()

    def test_range_exceeded(self):
        z = np.full((480, 640), 2000.0)
        z[0, 0] = 9999.0 * 1.3  # gray count above 65535 at the corner factor
        with pytest.raises(RangeExceeded):
            encode_gray(VerticalDepthMap(z_mm=z, valid=np.ones_like(z, bool)),
                        BLAZE, BLAZE_TOF)

    def test_encoding_saturates_past_1500mm_radial(self):
        # 65535 counts x 0.0229 mm/count tops out at ~1477 mm vertical on
        # the optical axis; beyond that the 16-bit encoding cannot represent
        # the distance at all
        z = np.full((480, 640), 1500.0)
        with pytest.raises(RangeExceeded):
            encode_gray(VerticalDepthMap(z_mm=z, valid=np.ones_like(z, bool)),
                        BLAZE, BLAZE_TOF)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_roundtrip_quantization_bound(self, seed):
        # 301..1100 mm keeps corners encodable and rounding above range_min
        rng = np.random.default_rng(seed)
        z = rng.uniform(301.0, 1100.0, size=(480, 640))
        z_map = VerticalDepthMap(z_mm=z, valid=np.ones_like(z, bool))
        back = decode_vertical(encode_gray(z_map, BLAZE, BLAZE_TOF),
                               BLAZE, BLAZE_TOF)
        assert back.valid.all()
        # rounding moves g by at most half a count: |dz| <= mu/2 (the
        # spec-level bound of one quantum x max factor = 0.029 is looser)
        assert np.abs(back.z_mm - z).max() <= 0.0229 / 2 + 1e-9


class TestStats:
    def uniform_map(self, value=518.0):
        z = np.full((480, 640), value)
        return VerticalDepthMap(z_mm=z, valid=np.ones_like(z, bool))

    def test_uniform_field(self):
        st_ = depth_stats(self.uniform_map(), Roi(0, 0, 640, 480))
        assert st_.count == 640 * 480
        assert st_.median_mm == 518.0

    def test_all_invalid_is_empty(self):
        z = np.full((480, 640), np.nan)
        m = VerticalDepthMap(z_mm=z, valid=np.zeros_like(z, bool))
        st_ = depth_stats(m, Roi(0, 0, 640, 480))
        assert st_.count == 0
        assert st_.median_mm is None

    def test_roi_out_of_bounds(self):
        with pytest.raises(RoiOutOfBounds):
            depth_stats(self.uniform_map(), Roi(600, 0, 100, 100))


class TestPersistence:
    def test_depth_frame_file_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        frame = DepthFrame(gray=rng.integers(0, 65536, (480, 640), dtype=np.uint16))
        write_depth_frame(tmp_path / "f.pgm", frame)
        back = read_depth_frame(tmp_path / "f.pgm")
        np.testing.assert_array_equal(back.gray, frame.gray)

    def test_point_cloud_export(self, tmp_path):
        z = np.full((480, 640), 500.0)
        valid = np.zeros((480, 640), bool)
        valid[239, 313] = True  # continuous principal point is (313.05, 239.6)
        m = VerticalDepthMap(z_mm=z, valid=valid)
        export_point_cloud(m, BLAZE, tmp_path / "pc.txt")
        x, y, zz = (float(t) for t in
                    (tmp_path / "pc.txt").read_text().split())
        assert zz == 500.0
        assert abs(x) < 0.1 and abs(y) < 0.6
