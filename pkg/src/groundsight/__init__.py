"""Ground-distance measurement for crop-residue-covered soil.

Decodes TOF depth frames to vertical distance, aligns the RGB image onto
the depth grid, masks out residue pixels by color, and reduces the result
to a scalar soil-surface distance. A parametric scene simulator stands in
for the physical camera rig.
"""

from .calib import (
    CameraIntrinsics,
    RigCalibration,
    TofConstants,
    backproject,
    load_calibration,
    load_default_calibration,
    project,
)
from .depth import (
    DepthFrame,
    Roi,
    VerticalDepthMap,
    decode_vertical,
    depth_stats,
    encode_gray,
    read_depth_frame,
    write_depth_frame,
)
from .align import (
    AlignedRgbFrame,
    AlignmentMap,
    RgbFrame,
    apply_alignment,
    build_alignment_map,
    oracle_reproject,
    warp_rgb_to_depth,
)
from .segment import (
    BinaryMask,
    ColorClassifierConfig,
    apply_mask,
    classify_residue,
    dilate,
)
from .ranging import (
    ErrorStatistics,
    GroundDistanceEstimate,
    error_statistics,
    estimate_distance,
    smooth_stream,
)
from .simscene import GroundTruth, SceneSpec, Straw, render_pair, render_sequence, scatter_straws
from .pipeline import (
    BenchmarkReport,
    FrameMetrics,
    PipelineConfig,
    benchmark,
    directory_source,
    process_pair,
    run_pipeline,
    simulator_source,
)

__version__ = "0.1.0"
