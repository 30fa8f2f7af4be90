"""Central-difference validation of the loss gradients.

The losses are piecewise linear in the prediction, so away from the L1 kinks
a central difference is exact up to float rounding; the check constructs
inputs whose kink margins are verified and reported alongside the errors.
"""

import torch

from .losses import alpha_l1, composition_l1, laplacian_loss_t, laplacian_pyramid_t

GRADCHECK_STEP = 1e-4
GRADCHECK_TOL = 1e-3


def autodiff_grad(fn, x):
    x = x.detach().clone().requires_grad_(True)
    fn(x).backward()
    return x.grad.detach()


def finite_difference_grad(fn, x, step=GRADCHECK_STEP):
    x = x.detach()
    grad = torch.zeros_like(x)
    flat = grad.view(-1)
    for i in range(x.numel()):
        bump = torch.zeros_like(x)
        bump.view(-1)[i] = step
        flat[i] = (fn(x + bump) - fn(x - bump)) / (2.0 * step)
    return grad


def _rel_err(fn, pred):
    g_ad = autodiff_grad(fn, pred)
    g_fd = finite_difference_grad(fn, pred)
    scale = max(float(g_ad.abs().max()), 1e-12)
    return float((g_fd - g_ad).abs().max()) / scale


def loss_gradcheck():
    """Compare autodiff against central differences on 8x8 float64 inputs.

    Returns per-loss relative errors plus the kink margins that make the
    comparison valid: every |pred-gt|, per-channel composition residual and
    Laplacian band difference stays far above the step size.
    """
    dtype = torch.float64
    torch.manual_seed(7)
    gt = 0.2 + 0.4 * torch.rand(1, 1, 8, 8, dtype=dtype)
    checker = ((torch.arange(8).view(-1, 1) + torch.arange(8).view(1, -1)) % 2).to(dtype)
    # offset in {0.1, 0.3}: positive (alpha margin) with a high-frequency
    # component so no Laplacian band difference sits near zero
    pred = gt + 0.2 + 0.1 * (2.0 * checker - 1.0)
    fg = 0.6 + 0.4 * torch.rand(1, 3, 8, 8, dtype=dtype)
    bg = 0.4 * torch.rand(1, 3, 8, 8, dtype=dtype)
    real = gt * fg + (1.0 - gt) * bg

    levels = 2  # 8x8 cannot host the 5-level default
    band_margin = min(
        float((lp - lg).abs().min())
        for lp, lg in zip(laplacian_pyramid_t(pred, levels),
                          laplacian_pyramid_t(gt, levels))
    )
    report = {
        "step": GRADCHECK_STEP,
        "tolerance": GRADCHECK_TOL,
        "alpha": {
            "rel_err": _rel_err(lambda p: alpha_l1(p, gt), pred),
            "margin": float((pred - gt).abs().min()),
        },
        "composition": {
            "rel_err": _rel_err(lambda p: composition_l1(p, fg, bg, real), pred),
            "margin": float((pred - gt).abs().min() * (fg - bg).abs().min()),
        },
        "laplacian": {
            "rel_err": _rel_err(lambda p: laplacian_loss_t(p, gt, levels=levels), pred),
            "margin": band_margin,
        },
    }
    report["passed"] = all(
        report[name]["rel_err"] < GRADCHECK_TOL and report[name]["margin"] > 10 * GRADCHECK_STEP
        for name in ("alpha", "composition", "laplacian")
    )
    return report
