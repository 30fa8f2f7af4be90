"""Raster types, PNG I/O, morphology, distance transform, resizing and pyramids.

All rasters wrap read-only float64 (or uint8/bool) numpy planes. Every
operation is a pure function; nothing here mutates its inputs. The frame
boundary is treated as background (false) for morphology, boundary
extraction and the distance transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage
from scipy import ndimage

TRIMAP_BG = 0
TRIMAP_UNKNOWN = 128
TRIMAP_FG = 255
TRIMAP_VALUES = (TRIMAP_BG, TRIMAP_UNKNOWN, TRIMAP_FG)

# Binomial smoothing kernel used for Gaussian/Laplacian pyramids.
PYRAMID_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0

_UNIT_TOL = 1e-6


def _as_unit_plane(plane, name):
    arr = np.array(plane, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} expects a non-empty 2-D plane, got shape {arr.shape}")
    if arr.min() < -_UNIT_TOL or arr.max() > 1.0 + _UNIT_TOL:
        raise ValueError(
            f"{name} samples must lie in [0,1], got range "
            f"[{arr.min():g}, {arr.max():g}]"
        )
    return np.clip(arr, 0.0, 1.0)


def _freeze(obj, **arrays):
    for name, arr in arrays.items():
        arr.setflags(write=False)
        object.__setattr__(obj, name, arr)


@dataclass(frozen=True, eq=False)
class Image:
    """3-channel RGB raster, float samples in [0,1], shape (h, w, 3)."""

    planes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.planes, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError(f"Image expects shape (h, w, 3), got {arr.shape}")
        if arr.min() < -_UNIT_TOL or arr.max() > 1.0 + _UNIT_TOL:
            raise ValueError("Image samples must lie in [0,1]")
        _freeze(self, planes=np.clip(arr, 0.0, 1.0))

    @property
    def width(self):
        return self.planes.shape[1]

    @property
    def height(self):
        return self.planes.shape[0]


@dataclass(frozen=True, eq=False)
class GrayMap:
    """Single float plane, values unbounded (distance maps, loss intermediates)."""

    plane: np.ndarray

    def __post_init__(self):
        arr = np.array(self.plane, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"GrayMap expects a non-empty 2-D plane, got {arr.shape}")
        _freeze(self, plane=arr)

    @property
    def width(self):
        return self.plane.shape[1]

    @property
    def height(self):
        return self.plane.shape[0]


@dataclass(frozen=True, eq=False)
class AlphaMatte:
    """Per-pixel opacity plane in [0,1]."""

    plane: np.ndarray

    def __post_init__(self):
        _freeze(self, plane=_as_unit_plane(self.plane, "AlphaMatte"))

    @property
    def width(self):
        return self.plane.shape[1]

    @property
    def height(self):
        return self.plane.shape[0]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Strictly two-valued mask plane."""

    plane: np.ndarray

    def __post_init__(self):
        arr = np.array(self.plane)
        if arr.dtype != np.bool_:
            uniq = np.unique(arr)
            if not np.isin(uniq, (0, 1)).all():
                raise ValueError("BinaryMask plane must be two-valued")
            arr = arr.astype(bool)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"BinaryMask expects a non-empty 2-D plane, got {arr.shape}")
        _freeze(self, plane=arr)

    @property
    def width(self):
        return self.plane.shape[1]

    @property
    def height(self):
        return self.plane.shape[0]


@dataclass(frozen=True, eq=False)
class Trimap:
    """Hard trimap: background 0, unknown 128, foreground 255.

    ``snapped`` records whether load-time byte snapping changed any sample.
    """

    plane: np.ndarray
    snapped: bool = field(default=False, compare=False)

    def __post_init__(self):
        arr = np.array(self.plane, dtype=np.uint8)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"Trimap expects a non-empty 2-D plane, got {arr.shape}")
        if not np.isin(arr, TRIMAP_VALUES).all():
            raise ValueError("Trimap samples must be in {0, 128, 255}")
        _freeze(self, plane=arr)

    @property
    def width(self):
        return self.plane.shape[1]

    @property
    def height(self):
        return self.plane.shape[0]

    def region(self, value) -> BinaryMask:
        return BinaryMask(self.plane == value)


@dataclass(frozen=True, eq=False)
class PyramidStack:
    """Ordered pyramid levels, each at ceil(previous/2) resolution."""

    levels: tuple

    def __post_init__(self):
        levels = tuple(self.levels)
        if not levels:
            raise ValueError("PyramidStack needs at least one level")
        for prev, cur in zip(levels, levels[1:]):
            want = ((prev.height + 1) // 2, (prev.width + 1) // 2)
            if (cur.height, cur.width) != want:
                raise ValueError(
                    f"pyramid level dims {cur.height}x{cur.width} != ceil(prev/2) {want}"
                )
        object.__setattr__(self, "levels", levels)

    @property
    def count(self):
        return len(self.levels)


# ---------------------------------------------------------------------------
# PNG I/O


def _snap_trimap_bytes(raw):
    snapped = not np.isin(raw, TRIMAP_VALUES).all()
    out = np.full(raw.shape, TRIMAP_UNKNOWN, dtype=np.uint8)
    out[raw < 64] = TRIMAP_BG        # nearest of {0,128}, tie at 64 -> 128
    out[raw >= 192] = TRIMAP_FG      # nearest of {128,255}, tie at 191.5
    return out, snapped


def load_png(path, kind):
    """Load an 8- or 16-bit PNG as ``image``, ``gray``, ``mask`` or ``trimap``.

    Gray-family kinds accept single-channel PNGs and the alpha channel of
    LA/RGBA PNGs (internet cut-out masks); ``image`` requires 3-channel RGB.
    """
    path = Path(path)
    with _PILImage.open(path) as im:
        if im.format != "PNG":
            raise ValueError(f"{path}: not a PNG file (format={im.format})")
        mode = im.mode
        arr = np.asarray(im)

    if kind == "image":
        if mode != "RGB":
            raise ValueError(f"{path}: kind=image needs a 3-channel RGB PNG, got mode {mode}")
        return Image(arr.astype(np.float64) / 255.0)

    if kind not in ("gray", "mask", "trimap"):
        raise ValueError(f"unknown load kind: {kind!r}")

    if mode in ("LA", "RGBA"):
        arr = arr[..., -1]  # alpha channel
        scale = 255.0
    elif mode == "L":
        scale = 255.0
    elif mode in ("I", "I;16"):
        scale = 65535.0
    else:
        raise ValueError(f"{path}: kind={kind} needs a single-channel PNG, got mode {mode}")

    norm = arr.astype(np.float64) / scale
    if kind == "gray":
        return GrayMap(norm)
    if kind == "mask":
        return BinaryMask(norm >= 0.5)
    raw = np.rint(norm * 255.0).astype(np.uint8)
    snapped_plane, snapped = _snap_trimap_bytes(raw)
    return Trimap(snapped_plane, snapped=snapped)


def save_png(raster, path):
    """Write a raster as an 8-bit PNG (values clipped to [0,1], rounded)."""
    path = Path(path)
    if isinstance(raster, Trimap):
        pil = _PILImage.fromarray(raster.plane, mode="L")
    elif isinstance(raster, BinaryMask):
        pil = _PILImage.fromarray(np.where(raster.plane, 255, 0).astype(np.uint8), mode="L")
    elif isinstance(raster, Image):
        bytes_ = np.rint(np.clip(raster.planes, 0.0, 1.0) * 255.0).astype(np.uint8)
        pil = _PILImage.fromarray(bytes_, mode="RGB")
    elif isinstance(raster, (GrayMap, AlphaMatte)):
        bytes_ = np.rint(np.clip(raster.plane, 0.0, 1.0) * 255.0).astype(np.uint8)
        pil = _PILImage.fromarray(bytes_, mode="L")
    else:
        raise TypeError(f"cannot save raster of type {type(raster).__name__}")
    pil.save(path, format="PNG")


# ---------------------------------------------------------------------------
# Morphology (Euclidean disk structuring element, frame treated as false)


def _check_radius(radius):
    if radius < 0 or int(radius) != radius:
        raise ValueError(f"radius must be a nonnegative integer, got {radius}")
    return int(radius)


def dilate(mask: BinaryMask, radius) -> BinaryMask:
    """True wherever some true pixel lies within Euclidean distance <= radius."""
    radius = _check_radius(radius)
    if radius == 0 or not mask.plane.any():
        return BinaryMask(mask.plane.copy())
    dist_to_true = ndimage.distance_transform_edt(~mask.plane)
    return BinaryMask(dist_to_true <= radius)


def erode(mask: BinaryMask, radius) -> BinaryMask:
    """Dual of dilate under complement; outside-frame counts as false."""
    radius = _check_radius(radius)
    if radius == 0:
        return BinaryMask(mask.plane.copy())
    return BinaryMask(distance_transform(mask).plane > radius)


def distance_transform(mask: BinaryMask) -> GrayMap:
    """Exact Euclidean distance of each true pixel to the nearest false pixel.

    The frame boundary counts as false; false pixels map to 0.
    """
    padded = np.pad(mask.plane, 1, constant_values=False)
    dist = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    return GrayMap(dist)


def boundary(mask: BinaryMask) -> BinaryMask:
    """True pixels with at least one false 4-neighbor (frame edge counts as false)."""
    p = np.pad(mask.plane, 1, constant_values=False)
    interior = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return BinaryMask(mask.plane & ~interior)


# ---------------------------------------------------------------------------
# Resampling


def _interp_axis(arr, new_n, axis):
    n = arr.shape[axis]
    if new_n == n:
        return arr
    x = (np.arange(new_n) + 0.5) * (n / new_n) - 0.5
    x0 = np.floor(x).astype(np.int64)
    t = x - x0
    lo = np.clip(x0, 0, n - 1)
    hi = np.clip(x0 + 1, 0, n - 1)
    shape = [1] * arr.ndim
    shape[axis] = new_n
    t = t.reshape(shape)
    return (1.0 - t) * np.take(arr, lo, axis=axis) + t * np.take(arr, hi, axis=axis)


def _resize_plane(plane, new_width, new_height):
    if new_width < 1 or new_height < 1:
        raise ValueError("target dimensions must be positive")
    if (plane.shape[0], plane.shape[1]) == (new_height, new_width):
        return plane.copy()
    out = _interp_axis(plane, new_height, axis=0)
    return _interp_axis(out, new_width, axis=1)


def resize_bilinear(raster, new_width, new_height):
    """Bilinear resize (half-pixel centers, edge clamp); identity when dims match."""
    if isinstance(raster, Image):
        return Image(_resize_plane(raster.planes, new_width, new_height))
    if isinstance(raster, AlphaMatte):
        return AlphaMatte(_resize_plane(raster.plane, new_width, new_height))
    if isinstance(raster, GrayMap):
        return GrayMap(_resize_plane(raster.plane, new_width, new_height))
    raise TypeError(f"cannot bilinearly resize {type(raster).__name__}")


def resize_nearest(trimap: Trimap, new_width, new_height) -> Trimap:
    """Nearest-neighbor trimap resize; source index = floor(i * src / dst).

    This mapping sends the output center pixel (dst//2) exactly onto the
    source center pixel (src//2) for even sizes, which the synthesis
    pipeline relies on.
    """
    if new_width < 1 or new_height < 1:
        raise ValueError("target dimensions must be positive")
    rows = (np.arange(new_height) * trimap.height) // new_height
    cols = (np.arange(new_width) * trimap.width) // new_width
    return Trimap(trimap.plane[np.ix_(rows, cols)])


# ---------------------------------------------------------------------------
# Pyramids


def _smooth(plane):
    out = ndimage.correlate1d(plane, PYRAMID_KERNEL, axis=0, mode="nearest")
    return ndimage.correlate1d(out, PYRAMID_KERNEL, axis=1, mode="nearest")


def laplacian_pyramid(map_, levels) -> PyramidStack:
    """Laplacian pyramid: L_i = G_i - upsample(G_{i+1}); last level is Gaussian.

    Smoothing uses the separable [1,4,6,4,1]/16 kernel with edge-replicate
    padding; downsampling keeps every second sample; upsampling is bilinear
    to the finer level's exact dims, so reconstruction is exact.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    plane = map_.plane if isinstance(map_, (GrayMap, AlphaMatte)) else None
    if plane is None:
        raise TypeError(f"cannot build a pyramid from {type(map_).__name__}")
    need = 2 ** (levels - 1)
    if plane.shape[0] < need or plane.shape[1] < need:
        raise ValueError(
            f"map {plane.shape[1]}x{plane.shape[0]} too small for {levels} levels"
        )
    gauss = [np.asarray(plane, dtype=np.float64)]
    for _ in range(levels - 1):
        gauss.append(_smooth(gauss[-1])[::2, ::2])
    out = []
    for fine, coarse in zip(gauss, gauss[1:]):
        up = _resize_plane(coarse, fine.shape[1], fine.shape[0])
        out.append(GrayMap(fine - up))
    out.append(GrayMap(gauss[-1]))
    return PyramidStack(tuple(out))


def reconstruct_pyramid(stack: PyramidStack) -> GrayMap:
    """Invert laplacian_pyramid: G_i = L_i + upsample(G_{i+1})."""
    acc = stack.levels[-1].plane
    for level in reversed(stack.levels[:-1]):
        acc = level.plane + _resize_plane(acc, level.width, level.height)
    return GrayMap(acc)
