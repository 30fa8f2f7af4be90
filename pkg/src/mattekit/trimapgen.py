"""Trimap generation: adaptive (from coarse masks) and erosion-dilation (from alphas).

The adaptive scheme classifies coarse-mask boundary pixels as hair, fur or
solid and dilates each class by its own fraction of the object scale D
(the maximum of the mask's distance map): 3.5% for hair, 2.5% for fur,
1.5% for solid. The unknown band straddles the boundary symmetrically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imgcore import (
    AlphaMatte,
    BinaryMask,
    Trimap,
    TRIMAP_BG,
    TRIMAP_FG,
    TRIMAP_UNKNOWN,
    boundary,
    dilate,
    distance_transform,
    erode,
)

RATE_HAIR = 0.035
RATE_FUR = 0.025
RATE_SOLID = 0.015


class BoundaryClass(enum.IntEnum):
    NONE = 0
    HAIR = 1
    FUR = 2
    SOLID = 3


@dataclass(frozen=True, eq=False)
class BoundaryClassMap:
    """Per-pixel boundary label in {none, hair, fur, solid}."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.labels, dtype=np.uint8)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"BoundaryClassMap expects a 2-D plane, got {arr.shape}")
        if arr.max(initial=0) > int(BoundaryClass.SOLID):
            raise ValueError("invalid boundary class label")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)

    @property
    def width(self):
        return self.labels.shape[1]

    @property
    def height(self):
        return self.labels.shape[0]


def _round_half_up(x):
    return int(np.floor(x + 0.5))


@dataclass(frozen=True)
class TrimapParams:
    """Object scale D plus the per-class dilation rates."""

    object_scale_D: float
    rate_hair: float = RATE_HAIR
    rate_fur: float = RATE_FUR
    rate_solid: float = RATE_SOLID
    min_radius: int = 1

    def __post_init__(self):
        if self.object_scale_D < 0:
            raise ValueError("object_scale_D must be >= 0")
        if min(self.rate_hair, self.rate_fur, self.rate_solid) <= 0:
            raise ValueError("dilation rates must be positive")

    def radius(self, cls: BoundaryClass) -> int:
        rate = {
            BoundaryClass.HAIR: self.rate_hair,
            BoundaryClass.FUR: self.rate_fur,
            BoundaryClass.SOLID: self.rate_solid,
        }[BoundaryClass(cls)]
        return max(self.min_radius, _round_half_up(rate * self.object_scale_D))

    def radii(self) -> dict:
        return {
            "hair": self.radius(BoundaryClass.HAIR),
            "fur": self.radius(BoundaryClass.FUR),
            "solid": self.radius(BoundaryClass.SOLID),
        }


def object_scale(mask: BinaryMask) -> float:
    """Maximum of the mask's Euclidean distance map; 0 for an empty mask."""
    return float(distance_transform(mask).plane.max())


def classify_boundary(mask: BinaryMask, parsing_mask=None, fur_object=False) -> BoundaryClassMap:
    """Label each boundary pixel of the coarse mask as hair, fur or solid.

    fur_object marks every boundary pixel as fur. Otherwise, with a parsing
    mask (true = hair), a boundary pixel is hair when its nearest labeled
    pixel in the two-class hair/non-hair raster is hair (ties -> hair);
    without one, every boundary pixel is solid.
    """
    if fur_object and parsing_mask is not None:
        raise ValueError("fur_object and parsing_mask are mutually exclusive")
    edge = boundary(mask).plane
    labels = np.zeros(mask.plane.shape, dtype=np.uint8)
    if fur_object:
        labels[edge] = BoundaryClass.FUR
    elif parsing_mask is not None:
        if parsing_mask.plane.shape != mask.plane.shape:
            raise ValueError("parsing_mask dimensions do not match mask")
        hair = parsing_mask.plane
        if hair.all():
            near_hair = np.ones_like(hair)
        elif not hair.any():
            near_hair = np.zeros_like(hair)
        else:
            d_hair = ndimage.distance_transform_edt(~hair)
            d_non = ndimage.distance_transform_edt(hair)
            near_hair = d_hair <= d_non
        labels[edge & near_hair] = BoundaryClass.HAIR
        labels[edge & ~near_hair] = BoundaryClass.SOLID
    else:
        labels[edge] = BoundaryClass.SOLID
    return BoundaryClassMap(labels)


def adaptive_trimap(mask: BinaryMask, classes: BoundaryClassMap, params: TrimapParams) -> Trimap:
    """Build the hard trimap by dilating each boundary class by its radius."""
    if classes.labels.shape != mask.plane.shape:
        raise ValueError("class map dimensions do not match mask")
    unknown = np.zeros(mask.plane.shape, dtype=bool)
    for cls in (BoundaryClass.HAIR, BoundaryClass.FUR, BoundaryClass.SOLID):
        sel = classes.labels == cls
        if sel.any():
            unknown |= dilate(BinaryMask(sel), params.radius(cls)).plane
    return _assemble(mask.plane & ~unknown, unknown)


def conventional_trimap(alpha: AlphaMatte, kernel_radius) -> Trimap:
    """Erosion-dilation trimap from a ground-truth alpha.

    binary = {a > 0.5}; unknown = (dilate(binary,k) \\ erode(binary,k))
    union dilate({0 < a < 1}, k); foreground = erode(binary,k) \\ unknown.
    """
    if kernel_radius < 1:
        raise ValueError("kernel_radius must be >= 1")
    a = alpha.plane
    binary = BinaryMask(a > 0.5)
    dil = dilate(binary, kernel_radius).plane
    ero = erode(binary, kernel_radius).plane
    unknown = dil & ~ero
    partial = (a > 0.0) & (a < 1.0)
    if partial.any():
        unknown |= dilate(BinaryMask(partial), kernel_radius).plane
    return _assemble(ero & ~unknown, unknown)


def noisy_kernel_radius(seed, k_min, k_max) -> int:
    """Deterministic uniform kernel radius in [k_min, k_max]."""
    if not (1 <= k_min <= k_max):
        raise ValueError("need 1 <= k_min <= k_max")
    rng = np.random.default_rng(seed)
    return int(rng.integers(k_min, k_max + 1))


def noisy_trimap(alpha: AlphaMatte, seed, k_min, k_max) -> Trimap:
    """conventional_trimap with a seed-drawn kernel radius (trimap augmentation)."""
    return conventional_trimap(alpha, noisy_kernel_radius(seed, k_min, k_max))


def _assemble(fg, unknown):
    plane = np.full(fg.shape, TRIMAP_BG, dtype=np.uint8)
    plane[fg] = TRIMAP_FG
    plane[unknown] = TRIMAP_UNKNOWN
    return Trimap(plane)
