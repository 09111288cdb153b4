"""Procedural vessel masks: synthesis, fitting and scoring."""

from ._core import (
    DomainError,
    IoError,
    ParseError,
    ShapeError,
    __version__,
    bezier_point,
    curvature,
    dilate,
    edge_smoothness,
    erode,
    evaluate_pair,
    fit,
    generate_sample,
    iou,
    mse,
    noise_schedule,
    rasterize_curve,
    run_cli,
    skeletonize,
    ssim,
)


def main(argv=None):
    """Console entry point mirroring the C++ binary."""
    import sys

    code, out, err = run_cli(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


__all__ = [
    "DomainError",
    "IoError",
    "ParseError",
    "ShapeError",
    "__version__",
    "bezier_point",
    "curvature",
    "dilate",
    "edge_smoothness",
    "erode",
    "evaluate_pair",
    "fit",
    "generate_sample",
    "iou",
    "main",
    "mse",
    "noise_schedule",
    "rasterize_curve",
    "run_cli",
    "skeletonize",
    "ssim",
]
