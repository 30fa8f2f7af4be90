"""Trimap generation, compositing, fusion and evaluation for image matting."""

from .imgcore import (
    AlphaMatte,
    BinaryMask,
    GrayMap,
    Image,
    PyramidStack,
    Trimap,
    TRIMAP_BG,
    TRIMAP_FG,
    TRIMAP_UNKNOWN,
    boundary,
    dilate,
    distance_transform,
    erode,
    laplacian_pyramid,
    load_png,
    reconstruct_pyramid,
    resize_bilinear,
    resize_nearest,
    save_png,
)
from .trimapgen import (
    BoundaryClass,
    BoundaryClassMap,
    TrimapParams,
    adaptive_trimap,
    classify_boundary,
    conventional_trimap,
    noisy_trimap,
    object_scale,
)
from .compose import (
    CompositeSample,
    SynthRecord,
    augment,
    composite,
    make_sample,
    read_manifest,
    render_record,
    render_record_full,
    sample_crop,
    synthesize_manifest,
    write_manifest,
)
from .fuse import (
    ProbTrimap,
    fuse,
    harden,
    read_ptm,
    soften,
    write_ptm,
)
from .evalmetrics import (
    JointBatchSupervision,
    LossWeights,
    MetricsReport,
    connectivity_error,
    evaluate,
    gradient_error,
    joint_loss,
    laplacian_loss,
    matting_loss,
    mse,
    sad,
    stn_ce_loss,
)

__version__ = "0.1.0"
