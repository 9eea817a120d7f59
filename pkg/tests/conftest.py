import numpy as np
import pytest

from groundsight.calib import (
    CameraIntrinsics,
    RigCalibration,
    TofConstants,
    load_default_calibration,
)

BLAZE = CameraIntrinsics(focal_px=509.935, cx=313.05, cy=239.60,
                         width=640, height=480)
BLAZE_TOF = TofConstants(gray_scale_mm=0.0229, z_offset_mm=23.97,
                         range_min_mm=300, range_max_mm=10000)
# simulator profiles lower range_min so bench geometries plus negative noise
# excursions never trip the range check
SIM_TOF = TofConstants(gray_scale_mm=0.0229, z_offset_mm=23.97,
                       range_min_mm=100, range_max_mm=10000)

RGB_NATIVE = CameraIntrinsics(focal_px=1019.87, cx=639.5, cy=511.5,
                              width=1280, height=1024)


def rot_z(deg):
    c, s = np.cos(np.deg2rad(deg)), np.sin(np.deg2rad(deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_x(deg):
    c, s = np.cos(np.deg2rad(deg)), np.sin(np.deg2rad(deg))
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


@pytest.fixture(scope="session")
def default_rig():
    rig, _ = load_default_calibration()
    return rig


@pytest.fixture(scope="session")
def default_tof():
    _, tof = load_default_calibration()
    return tof


@pytest.fixture(scope="session")
def sim_tof():
    return SIM_TOF


def identity_rig(intr=BLAZE):
    """Both cameras identical, co-located: the alignment must be a no-op."""
    return RigCalibration(rotation=np.eye(3), translation=np.zeros(3),
                          depth_intrinsics=intr, rgb_intrinsics=intr)


def translation_rig(t, depth_intr=BLAZE, rgb_intr=None):
    return RigCalibration(rotation=np.eye(3), translation=np.asarray(t, float),
                          depth_intrinsics=depth_intr,
                          rgb_intrinsics=rgb_intr or depth_intr)


def zrot_rig(deg, t=(0.0, 0.0, 0.0)):
    """In-plane rotation: exactly representable by the runtime map."""
    return RigCalibration(rotation=rot_z(deg), translation=np.asarray(t, float),
                          depth_intrinsics=BLAZE, rgb_intrinsics=RGB_NATIVE)


def tilt_rig(deg=0.1, t=(25.0, 0.0, 0.0)):
    """Small out-of-plane tilt: representable only within the 0.5 px budget."""
    return RigCalibration(rotation=rot_x(deg), translation=np.asarray(t, float),
                          depth_intrinsics=BLAZE, rgb_intrinsics=RGB_NATIVE)
