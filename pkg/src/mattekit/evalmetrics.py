"""Matting losses and benchmark evaluation metrics.

Loss functionals: L1 alpha, compositional L1, weighted Laplacian-pyramid
loss, their weighted sum, a foreground-constrained joint term, and a
per-pixel cross-entropy for trimap predictions.

Metrics: SAD, MSE, gradient error and connectivity error following the
standard matting-benchmark methodology (Gaussian-derivative gradients at
sigma 1.4, 4-connected components at threshold step 0.1). SAD and the L1
losses are raw sums with no display scaling; MSE is a raw mean.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .compose import composite
from .fuse import ProbTrimap
from .imgcore import (
    AlphaMatte,
    BinaryMask,
    GrayMap,
    Image,
    Trimap,
    TRIMAP_BG,
    TRIMAP_FG,
    TRIMAP_UNKNOWN,
    laplacian_pyramid,
)

REGION_MODES = ("whole", "unknown")

_GRAD_EPSILON = 1e-2
_CONN_DEGREE_KNEE = 0.15
_CE_FLOOR = 1e-7


@dataclass(frozen=True)
class LossWeights:
    """Term weights (w1 alpha L1, w2 composition L1, w3 Laplacian, w4 joint)."""

    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0
    w4: float = 1.0

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True, eq=False)
class JointBatchSupervision:
    """Coarse foreground-map supervision pair (ground truth F_s, predicted)."""

    coarse_fg_map: GrayMap
    predicted_fg_map: GrayMap

    def __post_init__(self):
        gt, pred = self.coarse_fg_map.plane, self.predicted_fg_map.plane
        if gt.shape != pred.shape:
            raise ValueError("foreground maps disagree on dimensions")
        for name, arr in (("coarse_fg_map", gt), ("predicted_fg_map", pred)):
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise ValueError(f"{name} values outside [0,1]")


@dataclass(frozen=True)
class MetricsReport:
    sad: float
    mse: float
    grad: float
    conn: float
    region: str
    pixel_count: int

    def __post_init__(self):
        if self.region not in REGION_MODES:
            raise ValueError(f"region must be one of {REGION_MODES}")
        for name in ("sad", "mse", "grad", "conn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "sad": self.sad,
            "mse": self.mse,
            "mse_x100": self.mse * 100.0,
            "grad": self.grad,
            "conn": self.conn,
            "region": self.region,
            "pixels": self.pixel_count,
        }


def _check_pair(pred: AlphaMatte, gt: AlphaMatte, region):
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ValueError("pred and gt dimensions differ")
    if region is not None and region.plane.shape != pred.plane.shape:
        raise ValueError("region mask dimensions differ from mattes")


def _select(plane, region):
    return plane[region.plane] if region is not None else plane.ravel()


def sad(pred: AlphaMatte, gt: AlphaMatte, region: BinaryMask | None = None) -> float:
    """Sum of absolute alpha differences over the region (or the whole image)."""
    _check_pair(pred, gt, region)
    return float(np.abs(_select(pred.plane - gt.plane, region)).sum())


def mse(pred: AlphaMatte, gt: AlphaMatte, region: BinaryMask | None = None) -> float:
    """Mean squared alpha difference over the evaluated pixels."""
    _check_pair(pred, gt, region)
    diff = _select(pred.plane - gt.plane, region)
    if diff.size == 0:
        raise ValueError("empty evaluation region")
    return float(np.mean(diff * diff))


def _gauss(x, sigma):
    return np.exp(-(x ** 2) / (2.0 * sigma ** 2)) / (sigma * np.sqrt(2.0 * np.pi))


def _dgauss(x, sigma):
    return -x * _gauss(x, sigma) / sigma ** 2


def _gradient_magnitude(plane, sigma):
    half = int(np.ceil(sigma * np.sqrt(
        -2.0 * np.log(np.sqrt(2.0 * np.pi) * sigma * _GRAD_EPSILON))))
    u = np.arange(-half, half + 1, dtype=np.float64)
    hx = np.outer(_gauss(u, sigma), _dgauss(u, sigma))
    hx = hx / np.sqrt(np.sum(hx * hx))
    gx = ndimage.convolve(plane, hx, mode="nearest")
    gy = ndimage.convolve(plane, hx.T, mode="nearest")
    return np.hypot(gx, gy)


def gradient_error(pred: AlphaMatte, gt: AlphaMatte, region: BinaryMask | None = None,
                   sigma: float = 1.4, q: float = 2.0) -> float:
    """Sum over the region of |grad-magnitude difference|^q.

    Gradients come from first-order Gaussian derivative filters at the
    given scale (benchmark methodology; zero for any two constant mattes).
    """
    _check_pair(pred, gt, region)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    amp_p = _gradient_magnitude(pred.plane, sigma)
    amp_g = _gradient_magnitude(gt.plane, sigma)
    return float((np.abs(_select(amp_p - amp_g, region)) ** q).sum())


def _largest_component(mask):
    labels, count = ndimage.label(mask)  # default structure: 4-connectivity
    if count == 0:
        return np.zeros(mask.shape, dtype=bool)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0  # label 0 is the background, never a component
    return labels == sizes.argmax()


def connectivity_error(pred: AlphaMatte, gt: AlphaMatte,
                       region: BinaryMask | None = None,
                       theta_step: float = 0.1) -> float:
    """Connectivity-degree difference summed over the region.

    Sweeps thresholds theta = step, 2*step, ... 1; the source at each theta
    is the largest 4-connected component of {pred >= theta} & {gt >= theta}.
    Each pixel records the last theta at which it still belonged to the
    source; the connectedness degree phi decays linearly once a pixel's
    value exceeds that level by 0.15 or more.
    """
    _check_pair(pred, gt, region)
    if not 0.0 < theta_step <= 1.0:
        raise ValueError("theta_step must be in (0, 1]")
    p, g = pred.plane, gt.plane
    steps = int(round(1.0 / theta_step))
    thresholds = [i * theta_step for i in range(1, steps + 1)]
    if not ((p >= thresholds[0]) & (g >= thresholds[0])).any():
        warnings.warn("no source region at any threshold; connectivity error is 0")
        return 0.0
    l_map = np.full(p.shape, -1.0)
    prev = 0.0
    for theta in thresholds:
        omega = _largest_component((p >= theta) & (g >= theta))
        dropped = (l_map == -1.0) & ~omega
        l_map[dropped] = prev
        prev = theta
    l_map[l_map == -1.0] = 1.0
    dp = p - l_map
    dg = g - l_map
    phi_p = 1.0 - dp * (dp >= _CONN_DEGREE_KNEE)
    phi_g = 1.0 - dg * (dg >= _CONN_DEGREE_KNEE)
    return float(np.abs(_select(phi_p - phi_g, region)).sum())


def laplacian_loss(pred: AlphaMatte, gt: AlphaMatte, levels: int = 5) -> float:
    """Sum over pyramid levels i of 2^(i-1) * ||L_i(pred) - L_i(gt)||_1."""
    _check_pair(pred, gt, None)
    pyr_p = laplacian_pyramid(pred, levels)
    pyr_g = laplacian_pyramid(gt, levels)
    total = 0.0
    for i, (lp, lg) in enumerate(zip(pyr_p.levels, pyr_g.levels)):
        total += 2.0 ** i * np.abs(lp.plane - lg.plane).sum()
    return float(total)


def matting_loss(pred_alpha: AlphaMatte, gt_alpha: AlphaMatte, fg: Image, bg: Image,
                 real_image: Image, weights: LossWeights = LossWeights(),
                 region: BinaryMask | None = None) -> float:
    """w1*||alpha diff||_1 + w2*||composition diff||_1 + w3*Laplacian loss.

    The L1 terms restrict to the region when given; the Laplacian term is
    always whole-image (its pyramid has no meaningful region restriction).
    Zero-weight terms are skipped entirely.
    """
    _check_pair(pred_alpha, gt_alpha, region)
    if fg.planes.shape != real_image.planes.shape or bg.planes.shape != real_image.planes.shape:
        raise ValueError("image dimensions differ")
    if real_image.planes.shape[:2] != pred_alpha.plane.shape:
        raise ValueError("image and alpha dimensions differ")
    total = 0.0
    if weights.w1 > 0:
        total += weights.w1 * float(np.abs(_select(pred_alpha.plane - gt_alpha.plane, region)).sum())
    if weights.w2 > 0:
        comp = composite(fg, bg, pred_alpha)
        diff = np.abs(comp.planes - real_image.planes).sum(axis=2)
        total += weights.w2 * float(_select(diff, region).sum())
    if weights.w3 > 0:
        total += weights.w3 * laplacian_loss(pred_alpha, gt_alpha)
    return total


def joint_loss(pred_alpha: AlphaMatte, gt_alpha: AlphaMatte, fg: Image, bg: Image,
               real_image: Image, supervision: JointBatchSupervision,
               weights: LossWeights = LossWeights(),
               region: BinaryMask | None = None) -> float:
    """Matting loss plus w4 * sum over pixels with F_s > 0 of |predicted - F_s|."""
    base = matting_loss(pred_alpha, gt_alpha, fg, bg, real_image, weights, region)
    if weights.w4 == 0:
        return base
    f_s = supervision.coarse_fg_map.plane
    f_hat = supervision.predicted_fg_map.plane
    inside = f_s > 0
    return base + weights.w4 * float(np.abs(f_hat[inside] - f_s[inside]).sum())


def stn_ce_loss(prob: ProbTrimap, gt: Trimap) -> float:
    """Mean per-pixel -log(probability of the ground-truth class)."""
    if (prob.height, prob.width) != (gt.height, gt.width):
        raise ValueError("probability planes and trimap dimensions differ")
    planes = {
        TRIMAP_BG: prob.bg_plane,
        TRIMAP_UNKNOWN: prob.unk_plane,
        TRIMAP_FG: prob.fg_plane,
    }
    t = gt.plane
    picked = np.empty(t.shape, dtype=np.float64)
    for value, plane in planes.items():
        sel = t == value
        picked[sel] = plane[sel]
    picked = np.clip(picked, _CE_FLOOR, 1.0)
    return float(np.mean(-np.log(picked)))


def evaluate(pred: AlphaMatte, gt: AlphaMatte, trimap: Trimap | None = None,
             region_mode: str = "whole") -> MetricsReport:
    """Run SAD, MSE, gradient and connectivity under the selected region mode."""
    if region_mode not in REGION_MODES:
        raise ValueError(f"region_mode must be one of {REGION_MODES}")
    if region_mode == "unknown":
        if trimap is None:
            raise ValueError("unknown region mode requires a trimap")
        region = trimap.region(TRIMAP_UNKNOWN)
        pixels = int(region.plane.sum())
    else:
        region = None
        pixels = pred.plane.size
    return MetricsReport(
        sad=sad(pred, gt, region),
        mse=mse(pred, gt, region),
        grad=gradient_error(pred, gt, region),
        conn=connectivity_error(pred, gt, region),
        region=region_mode,
        pixel_count=pixels,
    )
