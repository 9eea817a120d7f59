import numpy as np
import pytest

from groundsight.depth import decode_vertical
from groundsight.errors import SpecOutOfRange
from groundsight.simscene import (
    GroundTruth,
    SceneSpec,
    Straw,
    render_pair,
    render_sequence,
    scatter_straws,
)

from conftest import BLAZE, SIM_TOF


def flat_spec(**kw):
    defaults = dict(camera_distance_mm=518.0, color_jitter=0)
    defaults.update(kw)
    return SceneSpec(**defaults)


class TestSpec:
    def test_json_roundtrip(self):
        spec = flat_spec(
            soil_profile=((1000.0, 0.0), (1000.0, 20.0)),
            straws=(Straw(100.0, -40.0, 30.0, 90.0, 6.0, 1),),
            noise_sigma_mm=2.0, seed=7)
        back = SceneSpec.from_json(spec.to_json())
        assert back == spec

    def test_bad_inputs(self):
        with pytest.raises(SpecOutOfRange):
            SceneSpec(camera_distance_mm=0.0)
        with pytest.raises(SpecOutOfRange):
            flat_spec(soil_profile=((0.0, 5.0),))
        with pytest.raises(SpecOutOfRange):
            Straw(0.0, 0.0, 0.0, 100.0, 0.0)

    def test_spec_is_hashable(self):
        hash(flat_spec(straws=(Straw(0.0, 0.0, 0.0, 100.0, 5.0),)))


class TestFlatScene:
    def test_noise_free_flat_decode(self, default_rig, sim_tof):
        depth, rgb, truth = render_pair(flat_spec(), 0.0, default_rig, sim_tof)
        zm = decode_vertical(depth, BLAZE, sim_tof)
        assert zm.valid.all()
        # only the gray quantization separates decode from the spec distance
        assert np.abs(zm.z_mm - 518.0).max() <= sim_tof.gray_scale_mm
        assert truth.true_distance_mm == pytest.approx(518.0)
        assert truth.coverage_fraction == 0.0

    def test_rgb_is_uniform_soil_color(self, default_rig, sim_tof):
        _, rgb, _ = render_pair(flat_spec(), 0.0, default_rig, sim_tof)
        c = default_rig.rgb_intrinsics
        assert rgb.pixels.shape == (c.height, c.width, 3)
        assert (rgb.pixels == np.array([60, 45, 30], np.uint8)).all()

    def test_determinism(self, default_rig, sim_tof):
        spec = flat_spec(noise_sigma_mm=2.0, color_jitter=10, seed=3)
        a = render_pair(spec, 12.5, default_rig, sim_tof)
        b = render_pair(spec, 12.5, default_rig, sim_tof)
        np.testing.assert_array_equal(a[0].gray, b[0].gray)
        np.testing.assert_array_equal(a[1].pixels, b[1].pixels)

    def test_noise_changes_frames_but_not_truth(self, default_rig, sim_tof):
        spec = flat_spec(noise_sigma_mm=2.0, seed=3)
        a = render_pair(spec, 0.0, default_rig, sim_tof)
        b = render_pair(spec, 10.0, default_rig, sim_tof)
        assert (a[0].gray != b[0].gray).any()
        assert a[2].true_distance_mm == b[2].true_distance_mm

    def test_surface_out_of_range_rejected(self, default_rig, sim_tof):
        with pytest.raises(SpecOutOfRange):
            render_pair(flat_spec(camera_distance_mm=50.0), 0.0,
                        default_rig, sim_tof)


class TestProfile:
    def test_step_profile_shifts_with_offset(self, default_rig, sim_tof):
        # two 1000 mm segments: bare, then a 30 mm riser
        spec = flat_spec(camera_distance_mm=518.0,
                         soil_profile=((1000.0, 0.0), (1000.0, 30.0)))
        _, _, t0 = render_pair(spec, 500.0, default_rig, sim_tof)
        _, _, t1 = render_pair(spec, 1500.0, default_rig, sim_tof)
        assert t0.true_distance_mm == pytest.approx(518.0)
        assert t1.true_distance_mm == pytest.approx(488.0)

    def test_profile_wraps_periodically(self, default_rig, sim_tof):
        spec = flat_spec(soil_profile=((1000.0, 0.0), (1000.0, 30.0)))
        _, _, a = render_pair(spec, 500.0, default_rig, sim_tof)
        _, _, b = render_pair(spec, 2500.0, default_rig, sim_tof)
        assert a.true_distance_mm == pytest.approx(b.true_distance_mm)


class TestStraws:
    def test_single_straw_raises_surface(self, default_rig, sim_tof):
        straw = Straw(0.0, 0.0, 0.0, 200.0, 8.0)
        spec = flat_spec(straws=(straw,))
        depth, rgb, truth = render_pair(spec, 0.0, default_rig, sim_tof)
        zm = decode_vertical(depth, BLAZE, sim_tof)
        cy, cx = int(BLAZE.cy), int(BLAZE.cx)
        # near the apex: full diameter above soil, give or take the pixel
        # center sitting ~0.6 mm off the straw axis
        assert zm.z_mm[cy, cx] == pytest.approx(518.0 - 8.0, abs=0.2)
        assert truth.residue_footprint[cy, cx]
        # far corner is bare soil
        assert zm.z_mm[5, 5] == pytest.approx(518.0, abs=sim_tof.gray_scale_mm)
        assert not truth.residue_footprint[5, 5]
        # truth ignores the straw
        assert truth.true_distance_mm == pytest.approx(518.0)
        assert 0.0 < truth.coverage_fraction < 0.05

    def test_layered_straw_sits_higher(self, default_rig, sim_tof):
        base = Straw(0.0, 0.0, 0.0, 200.0, 8.0)
        top = Straw(0.0, 0.0, 0.0, 200.0, 8.0, layer=1)
        zb = decode_vertical(render_pair(flat_spec(straws=(base,)), 0.0,
                                         default_rig, sim_tof)[0],
                             BLAZE, sim_tof)
        zt = decode_vertical(render_pair(flat_spec(straws=(top,)), 0.0,
                                         default_rig, sim_tof)[0],
                             BLAZE, sim_tof)
        cy, cx = int(BLAZE.cy), int(BLAZE.cx)
        assert zt.z_mm[cy, cx] == pytest.approx(zb.z_mm[cy, cx] - 8.0,
                                                abs=2 * sim_tof.gray_scale_mm)

    def test_straw_colored_in_rgb(self, default_rig, sim_tof):
        spec = flat_spec(straws=(Straw(0.0, 0.0, 0.0, 200.0, 8.0),))
        _, rgb, _ = render_pair(spec, 0.0, default_rig, sim_tof)
        ch, cw = rgb.pixels.shape[0] // 2, rgb.pixels.shape[1] // 2
        np.testing.assert_array_equal(rgb.pixels[ch, cw],
                                      [210, 190, 110])
        np.testing.assert_array_equal(rgb.pixels[5, 5], [60, 45, 30])

    def test_straws_scroll_with_platform(self, default_rig, sim_tof):
        spec = flat_spec(straws=(Straw(0.0, 0.0, 90.0, 200.0, 8.0),))
        _, _, t0 = render_pair(spec, 0.0, default_rig, sim_tof)
        _, _, t1 = render_pair(spec, 100.0, default_rig, sim_tof)
        scale = 518.0 / BLAZE.focal_px
        shift_px = 100.0 / scale
        col0 = np.flatnonzero(t0.residue_footprint[int(BLAZE.cy)])
        col1 = np.flatnonzero(t1.residue_footprint[int(BLAZE.cy)])
        assert col0.mean() - col1.mean() == pytest.approx(shift_px, abs=1.5)


class TestSequence:
    def test_offsets_and_timestamps(self, default_rig, sim_tof):
        spec = flat_spec(soil_profile=((1000.0, 0.0), (1000.0, 30.0)))
        seq = render_sequence(spec, speed_mm_per_frame=400.0, frames=6,
                              rig=default_rig, tof=sim_tof)
        ts = [d.timestamp_ms for d, _, _ in seq]
        assert ts == [0.0, 50.0, 100.0, 150.0, 200.0, 250.0]
        dists = [t.true_distance_mm for _, _, t in seq]
        # offsets 0,400,800,1200,1600,0(wrapped) -> steps onto the riser
        assert dists[0] == pytest.approx(518.0)
        assert dists[3] == pytest.approx(488.0)
        assert dists[5] == pytest.approx(dists[0])

    def test_needs_a_frame(self, default_rig, sim_tof):
        with pytest.raises(SpecOutOfRange):
            render_sequence(flat_spec(), 10.0, 0, default_rig, sim_tof)


class TestScatter:
    def test_reaches_target_coverage(self, default_rig, sim_tof):
        region = (-400.0, 400.0, -300.0, 300.0)
        straws = scatter_straws(0.4, region, seed=5)
        spec = flat_spec(straws=straws)
        _, _, truth = render_pair(spec, 0.0, default_rig, sim_tof)
        assert truth.coverage_fraction >= 0.35

    def test_zero_target_is_empty(self):
        assert scatter_straws(0.0, (-100, 100, -100, 100)) == ()

    def test_deterministic_per_seed(self):
        region = (-200.0, 200.0, -150.0, 150.0)
        assert scatter_straws(0.2, region, seed=9) == \
            scatter_straws(0.2, region, seed=9)
        assert scatter_straws(0.2, region, seed=9) != \
            scatter_straws(0.2, region, seed=10)

    def test_invalid_target(self):
        with pytest.raises(SpecOutOfRange):
            scatter_straws(1.0, (-100, 100, -100, 100))
