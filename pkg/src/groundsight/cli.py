"""Command-line front end: every pipeline stage and experiment as a subcommand.

Each subcommand is a thin shell over the library; its numeric output is
bit-identical to the corresponding library calls. All file outputs are
written atomically.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import pnm
from .align import RgbFrame, build_alignment_map, warp_rgb_to_depth
from .calib import default_profile_path, load_calibration
from .depth import (
    Roi,
    decode_vertical,
    depth_stats,
    export_point_cloud,
    full_roi,
    read_depth_frame,
)
from .errors import GroundSightError
from .pipeline import (
    DEFAULT_FRAME_PERIOD_MS,
    PipelineConfig,
    benchmark,
    directory_source,
    process_pair,
    run_pipeline,
    simulator_source,
    write_metrics_csv,
)
from .ranging import error_statistics, statistics_summary, write_estimates_csv
from .segment import (
    ColorClassifierConfig,
    apply_mask,
    classify_residue,
    dilate,
    read_mask,
    write_mask,
)
from .simscene import SceneSpec, render_sequence


def _parse_roi(text):
    parts = [int(p) for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("roi must be x,y,width,height")
    return Roi(*parts)


def _add_profile(p):
    p.add_argument("--profile", default=None,
                   help="rig profile file (default: shipped blaze101.profile)")


def _add_pipeline_overrides(p):
    p.add_argument("--roi", type=_parse_roi, default=None,
                   help="estimation rectangle x,y,width,height (default: full frame)")
    p.add_argument("--brightness", type=float, default=None,
                   help="residue brightness threshold (0-255)")
    p.add_argument("--excess-yellow", type=float, default=None,
                   help="residue excess-yellow threshold")
    p.add_argument("--dilation", type=int, default=None,
                   help="residue dilation radius in pixels")
    p.add_argument("--min-soil-fraction", type=float, default=None,
                   help="below this visible-soil fraction a frame is invalid")
    p.add_argument("--window", type=int, default=None,
                   help="stream smoothing window (1 = off)")
    p.add_argument("--aggregator", choices=("median", "mean"), default=None)
    p.add_argument("--external-mask", default=None,
                   help="use this mask image instead of the color classifier")


def _load_rig(args):
    return load_calibration(Path(args.profile) if args.profile
                            else default_profile_path())


def _make_config(args, rig, tof):
    classifier_kwargs = {}
    if getattr(args, "brightness", None) is not None:
        classifier_kwargs["brightness_threshold"] = args.brightness
    if getattr(args, "excess_yellow", None) is not None:
        classifier_kwargs["excess_yellow_threshold"] = args.excess_yellow
    external = None
    if getattr(args, "external_mask", None):
        external = read_mask(args.external_mask)
        classifier_kwargs["mode"] = "external-mask"
    kwargs = {"rig": rig, "tof": tof,
              "classifier": ColorClassifierConfig(**classifier_kwargs),
              "external_mask": external}
    if getattr(args, "dilation", None) is not None:
        kwargs["dilation_radius"] = args.dilation
    if getattr(args, "roi", None) is not None:
        kwargs["roi"] = args.roi
    if getattr(args, "min_soil_fraction", None) is not None:
        kwargs["min_soil_fraction"] = args.min_soil_fraction
    if getattr(args, "window", None) is not None:
        kwargs["smoothing_window"] = args.window
    if getattr(args, "aggregator", None) is not None:
        kwargs["aggregator"] = args.aggregator
    return PipelineConfig(**kwargs)


def _fmt_estimate(est) -> str:
    dist = "nan" if est.distance_mm is None else f"{est.distance_mm:.4f}"
    return (f"distance_mm={dist} valid={'true' if est.valid else 'false'} "
            f"soil_fraction={est.soil_fraction:.6f}")


# -- subcommand handlers --------------------------------------------------------

def _cmd_decode(args):
    rig, tof = _load_rig(args)
    frame = read_depth_frame(args.depth)
    z_map = decode_vertical(frame, rig.depth_intrinsics, tof)
    if args.pointcloud:
        export_point_cloud(z_map, rig.depth_intrinsics, args.pointcloud)
    st = depth_stats(z_map, args.roi or full_roi(z_map))
    if st.count:
        print(f"count={st.count} min_mm={st.min_mm:.3f} "
              f"max_mm={st.max_mm:.3f} median_mm={st.median_mm:.3f}")
    else:
        print("count=0")
    return 0


def _cmd_align(args):
    rig, tof = _load_rig(args)
    amap = build_alignment_map(rig)
    if args.dump_map:
        sys.stdout.write(amap.dump())
    z_map = decode_vertical(read_depth_frame(args.depth),
                            rig.depth_intrinsics, tof)
    rgb = RgbFrame(pixels=pnm.read_pnm(args.rgb))
    aligned = warp_rgb_to_depth(rgb, z_map, amap)
    pnm.write_ppm(args.out, aligned.pixels)
    return 0


def _cmd_segment(args):
    rig, tof = _load_rig(args)
    config = _make_config(args, rig, tof)
    z_map = decode_vertical(read_depth_frame(args.depth),
                            rig.depth_intrinsics, tof)
    aligned = warp_rgb_to_depth(RgbFrame(pixels=pnm.read_pnm(args.rgb)),
                                z_map, build_alignment_map(rig))
    if config.classifier.mode == "external-mask":
        mask = config.external_mask
    else:
        mask = classify_residue(aligned, config.classifier)
    mask = dilate(mask, config.dilation_radius)
    write_mask(args.out, mask)
    masked = apply_mask(z_map, mask)
    print(f"soil_fraction={mask.soil_fraction:.6f} "
          f"valid_pixels={int(masked.valid.sum())}")
    return 0


def _cmd_measure(args):
    rig, tof = _load_rig(args)
    config = _make_config(args, rig, tof)
    depth_frame = read_depth_frame(args.depth)
    rgb = RgbFrame(pixels=pnm.read_pnm(args.rgb))
    est, _ = process_pair(depth_frame, rgb, config)
    print(_fmt_estimate(est))
    return 0 if est.valid or args.allow_invalid else 1


def _cmd_simulate(args):
    rig, tof = _load_rig(args)
    spec = SceneSpec.from_file(args.spec)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rendered = render_sequence(spec, args.speed, args.frames, rig, tof,
                               frame_period_ms=DEFAULT_FRAME_PERIOD_MS)
    truth_rows = ["frame_index,timestamp_ms,true_distance_mm,coverage_fraction"]
    from .depth import write_depth_frame
    for k, (depth_frame, rgb_frame, truth) in enumerate(rendered):
        write_depth_frame(out / f"{k:04d}_depth.pgm", depth_frame)
        pnm.write_ppm(out / f"{k:04d}_rgb.ppm", rgb_frame.pixels)
        truth_rows.append(f"{k},{depth_frame.timestamp_ms:.3f},"
                          f"{truth.true_distance_mm:.4f},"
                          f"{truth.coverage_fraction:.6f}")
    pnm.atomic_write_text(out / "truth.csv", "\n".join(truth_rows) + "\n")
    print(f"wrote {len(rendered)} pairs to {out}")
    return 0


def _cmd_replay(args):
    rig, tof = _load_rig(args)
    config = _make_config(args, rig, tof)
    estimates, metrics = run_pipeline(directory_source(args.dir), config)
    if args.out:
        write_estimates_csv(args.out, estimates)
    if args.metrics:
        write_metrics_csv(args.metrics, metrics)
    if args.plot:
        from .plots import plot_distance_series
        plot_distance_series(estimates, args.plot)
    n_valid = sum(e.valid for e in estimates)
    print(f"frames={len(estimates)} valid={n_valid}")
    return 0


def _cmd_bench(args):
    rig, tof = _load_rig(args)
    config = _make_config(args, rig, tof)
    spec = SceneSpec.from_file(args.spec)
    source = simulator_source(spec, rig, tof, args.speed, args.frames)
    report, _ = benchmark(source, config, args.warmup, args.frames)
    sys.stdout.write(report.to_json())
    if args.out:
        pnm.atomic_write_text(args.out, report.to_json())
    if args.plot and report.frames:
        from .plots import plot_latency_report
        plot_latency_report(report, args.plot)
    return 0


def _cmd_stats(args):
    errors = [float(x) for x in args.errors.split(",")]
    st = error_statistics(errors)
    print(f"mean_mm={st.mean_mm:.4f} std_mm={st.sample_std_mm:.4f} "
          f"ci95=[{st.ci95_low_mm:.4f}, {st.ci95_high_mm:.4f}] n={st.n}")
    if args.out:
        pnm.atomic_write_text(args.out, statistics_summary(st))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundsight",
        description="Ground-distance measurement for residue-covered soil "
                    "from paired depth + RGB frames.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="decode a raw depth frame to vertical distance")
    _add_profile(p)
    p.add_argument("--depth", required=True, help="16-bit PGM depth frame")
    p.add_argument("--pointcloud", default=None, help="write x y z text file")
    p.add_argument("--roi", type=_parse_roi, default=None)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("align", help="warp an RGB frame onto the depth grid")
    _add_profile(p)
    p.add_argument("--depth", required=True)
    p.add_argument("--rgb", required=True)
    p.add_argument("--out", required=True, help="aligned PPM output")
    p.add_argument("--dump-map", action="store_true",
                   help="print the eight alignment coefficients")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("segment", help="classify residue and write the soil mask")
    _add_profile(p)
    p.add_argument("--depth", required=True)
    p.add_argument("--rgb", required=True)
    p.add_argument("--out", required=True, help="mask PGM output (255 = soil)")
    _add_pipeline_overrides(p)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("measure", help="single-shot ground distance from one pair")
    _add_profile(p)
    p.add_argument("--depth", required=True)
    p.add_argument("--rgb", required=True)
    p.add_argument("--allow-invalid", action="store_true",
                   help="exit 0 even when the frame is flagged invalid")
    _add_pipeline_overrides(p)
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("simulate", help="render synthetic frame pairs to a directory")
    _add_profile(p)
    p.add_argument("--spec", required=True, help="scene spec JSON")
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--speed", type=float, default=0.0,
                   help="platform advance per frame (mm)")
    p.add_argument("--seed", type=int, default=None, help="override scene seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("replay", help="run the pipeline over a frame directory")
    _add_profile(p)
    p.add_argument("--dir", required=True)
    p.add_argument("--out", default=None, help="estimates CSV")
    p.add_argument("--metrics", default=None, help="per-frame latency CSV")
    p.add_argument("--plot", default=None, help="distance-vs-time figure (PNG)")
    _add_pipeline_overrides(p)
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("bench", help="throughput benchmark over simulator frames")
    _add_profile(p)
    p.add_argument("--spec", required=True)
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--warmup", type=int, default=20)
    p.add_argument("--speed", type=float, default=20.0)
    p.add_argument("--out", default=None, help="report JSON")
    p.add_argument("--plot", default=None, help="latency figure (PNG)")
    _add_pipeline_overrides(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("stats", help="error statistics over a list of errors (mm)")
    p.add_argument("--errors", required=True,
                   help="comma-separated error values in mm")
    p.add_argument("--out", default=None, help="summary JSON")
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GroundSightError as exc:
        print(f'error={type(exc).__name__} msg="{exc}"', file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
