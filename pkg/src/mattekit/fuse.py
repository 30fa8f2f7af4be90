"""Probabilistic trimaps and the alpha fusion rule alpha_f = F + U*alpha_m.

The PTM container carries the per-pixel (background, unknown, foreground)
distribution from a trimap predictor to the matting side, in memory and as
a small binary interchange format.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .imgcore import (
    AlphaMatte,
    Trimap,
    TRIMAP_BG,
    TRIMAP_FG,
    TRIMAP_UNKNOWN,
)

PTM_MAGIC = b"PTMAP\x00\x00\x01"
# Per-pixel plane sums may drift this far from 1 before the container
# rejects them (readers renormalize instead).
PTM_SUM_TOL = 1e-4


def _as_prob_plane(arr, name):
    plane = np.asarray(arr, dtype=np.float32)
    if plane.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {plane.shape}")
    if plane.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.isfinite(plane).all():
        raise ValueError(f"{name} contains non-finite values")
    if plane.min() < 0.0 or plane.max() > 1.0:
        raise ValueError(f"{name} values outside [0,1]")
    plane = plane.copy()
    plane.flags.writeable = False
    return plane


@dataclass(frozen=True, eq=False)
class ProbTrimap:
    """Per-pixel probability planes over (background, unknown, foreground)."""

    bg_plane: np.ndarray
    unk_plane: np.ndarray
    fg_plane: np.ndarray

    def __post_init__(self):
        b = _as_prob_plane(self.bg_plane, "bg_plane")
        u = _as_prob_plane(self.unk_plane, "unk_plane")
        f = _as_prob_plane(self.fg_plane, "fg_plane")
        if not (b.shape == u.shape == f.shape):
            raise ValueError("probability planes disagree on dimensions")
        total = b.astype(np.float64) + u.astype(np.float64) + f.astype(np.float64)
        dev = np.abs(total - 1.0).max()
        if dev > PTM_SUM_TOL:
            raise ValueError(f"plane sums deviate from 1 by {dev:.2e} (tol {PTM_SUM_TOL})")
        object.__setattr__(self, "bg_plane", b)
        object.__setattr__(self, "unk_plane", u)
        object.__setattr__(self, "fg_plane", f)

    @property
    def height(self) -> int:
        return self.bg_plane.shape[0]

    @property
    def width(self) -> int:
        return self.bg_plane.shape[1]


def fuse(prob: ProbTrimap, alpha_m: AlphaMatte) -> AlphaMatte:
    """Per pixel alpha_f = F + U * alpha_m, clamped to [0,1]."""
    if (prob.height, prob.width) != (alpha_m.height, alpha_m.width):
        raise ValueError("probability planes and alpha dimensions differ")
    fused = prob.fg_plane.astype(np.float64) \
        + prob.unk_plane.astype(np.float64) * alpha_m.plane
    return AlphaMatte(np.clip(fused, 0.0, 1.0))


def harden(prob: ProbTrimap) -> Trimap:
    """Per-pixel argmax over (B,U,F) as {0,128,255}; ties resolve toward 128."""
    # argmax takes the first of equal maxima, so stacking U first gives
    # the unknown class priority on ties.
    stacked = np.stack([prob.unk_plane, prob.bg_plane, prob.fg_plane])
    winner = np.argmax(stacked, axis=0)
    lut = np.array([TRIMAP_UNKNOWN, TRIMAP_BG, TRIMAP_FG], dtype=np.uint8)
    return Trimap(lut[winner])


def soften(trimap: Trimap) -> ProbTrimap:
    """One-hot lift of a hard trimap; harden(soften(t)) == t."""
    t = trimap.plane
    return ProbTrimap(
        (t == TRIMAP_BG).astype(np.float32),
        (t == TRIMAP_UNKNOWN).astype(np.float32),
        (t == TRIMAP_FG).astype(np.float32),
    )


def write_ptm(prob: ProbTrimap, path) -> None:
    """Magic, width/height as uint32 LE, then B, U, F planes float32 LE row-major."""
    with open(path, "wb") as fh:
        fh.write(PTM_MAGIC)
        fh.write(struct.pack("<II", prob.width, prob.height))
        for plane in (prob.bg_plane, prob.unk_plane, prob.fg_plane):
            fh.write(np.ascontiguousarray(plane, dtype="<f4").tobytes())


def read_ptm(path) -> ProbTrimap:
    """Read a PTM file; renormalizes (with a warning) drifted plane sums."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:len(PTM_MAGIC)] != PTM_MAGIC:
        raise ValueError(f"{path}: bad magic, not a PTM file")
    header_end = len(PTM_MAGIC) + 8
    if len(data) < header_end:
        raise ValueError(f"{path}: truncated header")
    width, height = struct.unpack("<II", data[len(PTM_MAGIC):header_end])
    if width == 0 or height == 0:
        raise ValueError(f"{path}: zero dimension in header")
    expect = header_end + 3 * 4 * width * height
    if len(data) != expect:
        raise ValueError(f"{path}: size {len(data)} does not match header "
                         f"({width}x{height}, expected {expect})")
    planes = np.frombuffer(data, dtype="<f4", offset=header_end)
    planes = planes.reshape(3, height, width)
    b, u, f = planes[0], planes[1], planes[2]
    if np.isnan(planes).any() or planes.min() < 0.0 or planes.max() > 1.0:
        raise ValueError(f"{path}: plane values outside [0,1]")
    total = b.astype(np.float64) + u.astype(np.float64) + f.astype(np.float64)
    dev = np.abs(total - 1.0).max()
    if dev > PTM_SUM_TOL:
        warnings.warn(f"{path}: plane sums off by up to {dev:.2e}; renormalizing")
        b = (b / total).astype(np.float32)
        u = (u / total).astype(np.float32)
        f = (f / total).astype(np.float32)
    return ProbTrimap(b, u, f)
