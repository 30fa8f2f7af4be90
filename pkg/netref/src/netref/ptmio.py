"""Probabilistic-trimap file I/O, implemented independently of mattekit.

Same wire format: 8-byte magic, little-endian uint32 width and height, then
the background, unknown and foreground planes as row-major little-endian
float32. Writing the same planes here and in mattekit must produce identical
bytes; that equivalence is what the cross-component tests pin.
"""

import struct
from pathlib import Path

import numpy as np

PTM_MAGIC = b"PTMAP\x00\x00\x01"


def _plane(arr):
    out = np.ascontiguousarray(np.asarray(arr, dtype=np.float32))
    if out.ndim != 2 or out.size == 0:
        raise ValueError("PTM planes must be non-empty 2-D arrays")
    return out


def write_ptm_file(bg, unk, fg, path) -> None:
    planes = [_plane(p) for p in (bg, unk, fg)]
    if not (planes[0].shape == planes[1].shape == planes[2].shape):
        raise ValueError("PTM planes must share one shape")
    height, width = planes[0].shape
    with open(path, "wb") as fh:
        fh.write(PTM_MAGIC)
        fh.write(struct.pack("<II", width, height))
        for plane in planes:
            fh.write(plane.tobytes())


def read_ptm_file(path):
    """Return (background, unknown, foreground) float32 planes."""
    data = Path(path).read_bytes()
    header_end = len(PTM_MAGIC) + 8
    if data[:len(PTM_MAGIC)] != PTM_MAGIC:
        raise ValueError(f"bad PTM magic in {path}")
    if len(data) < header_end:
        raise ValueError(f"truncated PTM header in {path}")
    width, height = struct.unpack("<II", data[len(PTM_MAGIC):header_end])
    expected = header_end + 3 * 4 * width * height
    if width == 0 or height == 0 or len(data) != expected:
        raise ValueError(f"PTM size mismatch in {path}")
    raw = np.frombuffer(data, dtype="<f4", offset=header_end)
    planes = raw.reshape(3, height, width)
    return planes[0].copy(), planes[1].copy(), planes[2].copy()
