"""Joint training of the STN stub and DensePN on manifest-rendered samples.

The dataset comes from a mattekit synthesis manifest, rendered through the
primary package's deterministic pipeline; training itself is plain full-batch
Adam. Loss columns logged per step: L_M, joint_term, L_F.
"""

import csv

import numpy as np
import torch

from mattekit import LossWeights, read_manifest, render_record_full

from .losses import foreground_constraint, fuse_t, matting_loss_t
from .models import build_densepn, build_stn_stub

LOG_FIELDS = ("step", "L_M", "joint_term", "L_F")


def load_training_batch(manifest_path, out_size=64, dtype=torch.float32):
    """Render every manifest record into one stacked NCHW tensor batch.

    Returns a dict with image (the composite), alpha, fg, bg (N,C,H,W) and
    coarse_fg, the one-hot foreground plane of each sample's trimap.
    """
    records = read_manifest(manifest_path)
    if not records:
        raise ValueError(f"empty dataset: {manifest_path}")
    images, alphas, fgs, bgs, coarse = [], [], [], [], []
    for record in records:
        sample, trimap = render_record_full(record, out_size=out_size)
        images.append(np.moveaxis(sample.composite.planes, 2, 0))
        fgs.append(np.moveaxis(sample.foreground.planes, 2, 0))
        bgs.append(np.moveaxis(sample.background.planes, 2, 0))
        alphas.append(sample.alpha.plane[None])
        coarse.append((trimap.plane == 255).astype(np.float64)[None])
    def stack(arrs):
        return torch.tensor(np.stack(arrs), dtype=dtype)
    return {
        "image": stack(images),
        "alpha": stack(alphas),
        "fg": stack(fgs),
        "bg": stack(bgs),
        "coarse_fg": stack(coarse),
    }


def train_joint(manifest_path, steps, weights=None, out_size=64, lr=1e-2,
                seed=0, log_path=None, densepn_config=None, encoder_config=None,
                levels=5):
    """Optimize L_F = L_M + w4 * foreground constraint over both networks.

    The STN stub sees the composite and emits (B, U, F); DensePN sees the
    composite plus the U plane and emits alpha_m; the optimized alpha is the
    fusion F + U * alpha_m. Returns the per-step log rows; also writes them
    as CSV when log_path is given. Deterministic under a fixed seed.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    weights = weights if weights is not None else LossWeights()
    batch = load_training_batch(manifest_path, out_size=out_size)

    torch.manual_seed(seed)
    stn = build_stn_stub()
    densepn = build_densepn(densepn_config, encoder_config)
    params = list(stn.parameters()) + list(densepn.parameters())
    optimizer = torch.optim.Adam(params, lr=lr)

    image, alpha_gt = batch["image"], batch["alpha"]
    fg, bg, coarse_fg = batch["fg"], batch["bg"], batch["coarse_fg"]
    rows = []
    for step in range(1, steps + 1):
        probs = stn(image)
        unknown, foreground = probs[:, 1:2], probs[:, 2:3]
        alpha_m = densepn(torch.cat([image, unknown], dim=1))
        alpha_f = fuse_t(probs, alpha_m)
        loss_m = matting_loss_t(alpha_f, alpha_gt, fg, bg, image,
                                weights, levels=levels)
        if weights.w4 != 0.0:
            joint_term = weights.w4 * foreground_constraint(foreground, coarse_fg)
        else:
            joint_term = alpha_f.new_zeros(())
        loss_f = loss_m + joint_term
        rows.append({"step": step, "L_M": float(loss_m.detach()),
                     "joint_term": float(joint_term.detach()),
                     "L_F": float(loss_f.detach())})
        if loss_f.requires_grad:
            optimizer.zero_grad()
            loss_f.backward()
            optimizer.step()

    if log_path is not None:
        with open(log_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=LOG_FIELDS)
            writer.writeheader()
            writer.writerows(rows)
    return rows
