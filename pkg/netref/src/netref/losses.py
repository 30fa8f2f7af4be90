"""Torch ports of the matting losses and the fusion rule.

These are written against the same numeric conventions as mattekit's
evalmetrics (raw sums, [1,4,6,4,1]/16 smoothing with edge replication,
half-pixel bilinear upsampling) so values agree with the primary package
within float tolerance. All functions preserve the input dtype and are
differentiable; inputs are NCHW tensors.
"""

import torch
from torch.nn import functional as tnf

from mattekit import LossWeights

_KERNEL = (1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16)


def _check_pair(a, b, what="inputs"):
    if a.shape != b.shape:
        raise ValueError(f"{what} shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")


def _smooth(x):
    k = torch.tensor(_KERNEL, dtype=x.dtype, device=x.device)
    channels = x.shape[1]
    k_rows = k.view(1, 1, 5, 1).repeat(channels, 1, 1, 1)
    k_cols = k.view(1, 1, 1, 5).repeat(channels, 1, 1, 1)
    y = tnf.pad(x, (0, 0, 2, 2), mode="replicate")
    y = tnf.conv2d(y, k_rows, groups=channels)
    y = tnf.pad(y, (2, 2, 0, 0), mode="replicate")
    return tnf.conv2d(y, k_cols, groups=channels)


def _upsample_axis(x, new_n, dim):
    """Half-pixel bilinear along one axis, matching the primary's formula."""
    n = x.shape[dim]
    if new_n == n:
        return x
    centers = (torch.arange(new_n, dtype=x.dtype, device=x.device) + 0.5) * (n / new_n) - 0.5
    base = torch.floor(centers)
    t = centers - base
    lo = base.long().clamp(0, n - 1)
    hi = (base.long() + 1).clamp(0, n - 1)
    shape = [1] * x.ndim
    shape[dim] = new_n
    t = t.view(shape)
    return (1.0 - t) * x.index_select(dim, lo) + t * x.index_select(dim, hi)


def _upsample_to(x, height, width):
    return _upsample_axis(_upsample_axis(x, height, -2), width, -1)


def laplacian_pyramid_t(x, levels):
    """Band-pass levels plus the coarsest Gaussian; inverse of summed upsampling."""
    if x.ndim != 4:
        raise ValueError(f"expected NCHW input, got {tuple(x.shape)}")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    need = 2 ** (levels - 1)
    if x.shape[-2] < need or x.shape[-1] < need:
        raise ValueError(
            f"{x.shape[-2]}x{x.shape[-1]} input too small for {levels} levels")
    out = []
    g = x
    for _ in range(levels - 1):
        coarse = _smooth(g)[..., ::2, ::2]
        up = _upsample_to(coarse, g.shape[-2], g.shape[-1])
        out.append(g - up)
        g = coarse
    out.append(g)
    return out


def laplacian_loss_t(pred, gt, levels=5):
    """Sum over levels of 2^i times the level's absolute difference."""
    _check_pair(pred, gt)
    pred_levels = laplacian_pyramid_t(pred, levels)
    gt_levels = laplacian_pyramid_t(gt, levels)
    total = pred.new_zeros(())
    for i, (lp, lg) in enumerate(zip(pred_levels, gt_levels)):
        total = total + (2.0 ** i) * (lp - lg).abs().sum()
    return total


def alpha_l1(pred, gt, region=None):
    _check_pair(pred, gt)
    diff = (pred - gt).abs()
    if region is None:
        return diff.sum()
    return (diff * region.to(pred.dtype)).sum()


def composition_l1(pred_alpha, fg, bg, real, region=None):
    """Channel-summed L1 between the recomposited and the real image."""
    _check_pair(fg, bg, "fg/bg")
    _check_pair(fg, real, "fg/real")
    comp = pred_alpha * fg + (1.0 - pred_alpha) * bg
    diff = (comp - real).abs().sum(dim=1, keepdim=True)
    if region is None:
        return diff.sum()
    return (diff * region.to(diff.dtype)).sum()


def matting_loss_t(pred_alpha, gt_alpha, fg, bg, real, weights=None,
                   region=None, levels=5):
    """w1 alpha-L1 + w2 composition-L1 + w3 Laplacian; zero-weight terms skipped.

    The L1 terms honor the region mask; the pyramid term is whole-image.
    """
    weights = weights if weights is not None else LossWeights()
    total = pred_alpha.new_zeros(())
    if weights.w1 != 0.0:
        total = total + weights.w1 * alpha_l1(pred_alpha, gt_alpha, region)
    if weights.w2 != 0.0:
        total = total + weights.w2 * composition_l1(pred_alpha, fg, bg, real, region)
    if weights.w3 != 0.0:
        total = total + weights.w3 * laplacian_loss_t(pred_alpha, gt_alpha, levels)
    return total


def foreground_constraint(pred_fg, coarse_fg):
    """L1 over pixels where the coarse foreground supervision is positive."""
    _check_pair(pred_fg, coarse_fg, "foreground maps")
    mask = (coarse_fg > 0).to(pred_fg.dtype)
    return ((pred_fg - coarse_fg).abs() * mask).sum()


def joint_loss_t(pred_alpha, gt_alpha, fg, bg, real, pred_fg, coarse_fg,
                 weights=None, region=None, levels=5):
    weights = weights if weights is not None else LossWeights()
    total = matting_loss_t(pred_alpha, gt_alpha, fg, bg, real, weights, region, levels)
    if weights.w4 != 0.0:
        total = total + weights.w4 * foreground_constraint(pred_fg, coarse_fg)
    return total


def fuse_t(probs, alpha_m):
    """alpha = F + U * alpha_m from (background, unknown, foreground) planes."""
    if probs.ndim != 4 or probs.shape[1] != 3:
        raise ValueError(f"expected (N, 3, H, W) probabilities, got {tuple(probs.shape)}")
    return probs[:, 2:3] + probs[:, 1:2] * alpha_m
