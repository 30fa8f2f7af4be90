"""Alpha compositing and synthetic matting-dataset synthesis.

Synthesis draws unknown-centered crops of 320/480/640 px from foreground/
alpha pairs, pairs them with backgrounds from multiple pools in equal
proportion, applies flip + color jitter, and renders 320x320 samples.
Everything is reproducible from the manifest seed alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imgcore import (
    AlphaMatte,
    BinaryMask,
    Image,
    Trimap,
    TRIMAP_UNKNOWN,
    load_png,
    resize_bilinear,
    resize_nearest,
)
from .trimapgen import noisy_trimap

CROP_SIZES = (320, 480, 640)
DEFAULT_JITTER_STRENGTH = 0.2
# Kernel range for the noisy source trimaps regenerated from jitter_seed.
TRIMAP_K_MIN = 3
TRIMAP_K_MAX = 25

_COMPOSITE_TOL = 1e-6
_MANIFEST_KEYS = ("fg", "alpha", "bg", "x", "y", "size", "flip", "jitter_seed")


@dataclass(frozen=True, eq=False)
class CompositeSample:
    """A matting training sample: fg, bg, alpha and their composite."""

    foreground: Image
    background: Image
    alpha: AlphaMatte
    composite: Image

    def __post_init__(self):
        dims = {(r.height, r.width) for r in
                (self.foreground, self.background, self.alpha, self.composite)}
        if len(dims) != 1:
            raise ValueError(f"sample rasters disagree on dimensions: {sorted(dims)}")
        expect = _blend(self.foreground, self.background, self.alpha)
        if np.abs(expect - self.composite.planes).max() > _COMPOSITE_TOL:
            raise ValueError("composite does not equal alpha*fg + (1-alpha)*bg")


@dataclass(frozen=True)
class SynthRecord:
    """One manifest line: where to crop a foreground and what to compose it on."""

    fg_path: str
    alpha_path: str
    bg_path: str
    x: int
    y: int
    size: int
    flip: bool
    jitter_seed: int

    def __post_init__(self):
        if self.size not in CROP_SIZES:
            raise ValueError(f"crop size {self.size} not in {CROP_SIZES}")
        if self.x < 0 or self.y < 0:
            raise ValueError("crop origin must be nonnegative")

    def to_json_line(self) -> str:
        values = (self.fg_path, self.alpha_path, self.bg_path,
                  self.x, self.y, self.size, self.flip, self.jitter_seed)
        return json.dumps(dict(zip(_MANIFEST_KEYS, values)))

    @classmethod
    def from_json_line(cls, line: str) -> "SynthRecord":
        obj = json.loads(line)
        return cls(obj["fg"], obj["alpha"], obj["bg"], int(obj["x"]), int(obj["y"]),
                   int(obj["size"]), bool(obj["flip"]), int(obj["jitter_seed"]))


def _blend(fg: Image, bg: Image, alpha: AlphaMatte):
    a = alpha.plane[..., None]
    return a * fg.planes + (1.0 - a) * bg.planes


def composite(fg: Image, bg: Image, alpha: AlphaMatte) -> Image:
    """Per-channel I = alpha*F + (1-alpha)*B."""
    if not (fg.planes.shape == bg.planes.shape
            and fg.planes.shape[:2] == alpha.plane.shape):
        raise ValueError("composite inputs disagree on dimensions")
    return Image(np.clip(_blend(fg, bg, alpha), 0.0, 1.0))


def make_sample(fg: Image, bg: Image, alpha: AlphaMatte) -> CompositeSample:
    return CompositeSample(fg, bg, alpha, composite(fg, bg, alpha))


def sample_crop(alpha: AlphaMatte, trimap: Trimap, size, seed):
    """Pick a crop origin whose center pixel is unknown in the trimap.

    Chosen uniformly among unknown pixels whose centered window fits;
    clamped to the frame when no centered window fits.
    """
    if size not in CROP_SIZES:
        raise ValueError(f"crop size {size} not in {CROP_SIZES}")
    if (alpha.height, alpha.width) != (trimap.height, trimap.width):
        raise ValueError("alpha and trimap dimensions differ")
    h, w = trimap.height, trimap.width
    if w < size or h < size:
        raise ValueError(f"source {w}x{h} smaller than crop size {size}")
    unk = np.argwhere(trimap.plane == TRIMAP_UNKNOWN)
    if len(unk) == 0:
        raise ValueError("trimap contains no unknown pixels")
    half = size // 2
    rows, cols = unk[:, 0], unk[:, 1]
    fits = ((rows - half >= 0) & (rows - half + size <= h)
            & (cols - half >= 0) & (cols - half + size <= w))
    rng = np.random.default_rng(seed)
    if fits.any():
        cand = unk[fits]
        r, c = cand[rng.integers(len(cand))]
        return int(c - half), int(r - half)
    r, c = unk[rng.integers(len(unk))]
    x = int(np.clip(c - half, 0, w - size))
    y = int(np.clip(r - half, 0, h - size))
    return x, y


def augment(sample: CompositeSample, flip, jitter_seed, jitter_strength=DEFAULT_JITTER_STRENGTH) -> CompositeSample:
    """Optional horizontal flip plus independent per-channel color jitter.

    Jitter multiplies each fg and bg channel by a factor from
    [1-s, 1+s] (alpha is never jittered); the composite is recomputed.
    """
    if not 0.0 <= jitter_strength <= 1.0:
        raise ValueError("jitter_strength must be in [0,1]")
    fg, bg, a = sample.foreground.planes, sample.background.planes, sample.alpha.plane
    if flip:
        fg, bg, a = (np.flip(arr, axis=1) for arr in (fg, bg, a))
    rng = np.random.default_rng(jitter_seed)
    f_fg = rng.uniform(1.0 - jitter_strength, 1.0 + jitter_strength, 3)
    f_bg = rng.uniform(1.0 - jitter_strength, 1.0 + jitter_strength, 3)
    fg = np.clip(fg * f_fg, 0.0, 1.0)
    bg = np.clip(bg * f_bg, 0.0, 1.0)
    return make_sample(Image(fg), Image(bg), AlphaMatte(a))


def _png_stems(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise ValueError(f"not a directory: {directory}")
    return {p.stem: p for p in sorted(directory.glob("*.png"))}


def _upscale_to_fit(raster, size):
    h = raster.height
    w = raster.width
    if w >= size and h >= size:
        return raster
    scale = max(size / w, size / h)
    new_w = max(size, int(np.ceil(w * scale)))
    new_h = max(size, int(np.ceil(h * scale)))
    return resize_bilinear(raster, new_w, new_h)


def _flip_raster(raster):
    if isinstance(raster, Image):
        return Image(np.flip(raster.planes, axis=1))
    if isinstance(raster, AlphaMatte):
        return AlphaMatte(np.flip(raster.plane, axis=1))
    raise TypeError(type(raster).__name__)


def _load_alpha(path) -> AlphaMatte:
    return AlphaMatte(load_png(path, "gray").plane)


def synthesize_manifest(fg_dir, alpha_dir, bg_dirs, per_fg, seed,
                        k_min=TRIMAP_K_MIN, k_max=TRIMAP_K_MAX):
    """Emit per_fg SynthRecords per foreground, backgrounds in equal proportion.

    Foregrounds pair with alphas by filename stem (unpaired files are
    errors). Background directories are visited round-robin over pools
    shuffled once by the seed; crop sizes are drawn uniformly from
    {320, 480, 640}. Fully reproducible from the seed.
    """
    if per_fg < 0:
        raise ValueError("per_fg must be >= 0")
    fgs = _png_stems(fg_dir)
    alphas = _png_stems(alpha_dir)
    if not fgs:
        raise ValueError(f"no foreground PNGs in {fg_dir}")
    missing_alpha = sorted(set(fgs) - set(alphas))
    missing_fg = sorted(set(alphas) - set(fgs))
    if missing_alpha or missing_fg:
        parts = []
        if missing_alpha:
            parts.append(f"fg without alpha: {missing_alpha}")
        if missing_fg:
            parts.append(f"alpha without fg: {missing_fg}")
        raise ValueError("unpaired files: " + "; ".join(parts))
    if not bg_dirs:
        raise ValueError("need at least one background directory")
    pools = []
    for d in bg_dirs:
        files = list(_png_stems(d).values())
        if not files:
            raise ValueError(f"empty background pool: {d}")
        pools.append(files)

    rng = np.random.default_rng(seed)
    order = [list(rng.permutation(len(pool))) for pool in pools]
    used = [0] * len(pools)
    records = []
    index = 0
    for stem in sorted(fgs):
        alpha_src = _load_alpha(alphas[stem])
        for _ in range(per_fg):
            size = int(CROP_SIZES[rng.integers(len(CROP_SIZES))])
            flip = bool(rng.integers(2))
            jitter_seed = int(rng.integers(2**31 - 1))
            crop_seed = int(rng.integers(2**31 - 1))
            pool_i = index % len(pools)
            pool = pools[pool_i]
            bg_path = pool[order[pool_i][used[pool_i] % len(pool)]]
            used[pool_i] += 1

            a = _upscale_to_fit(alpha_src, size)
            if flip:
                a = _flip_raster(a)
            tri = noisy_trimap(a, jitter_seed, k_min, k_max)
            x, y = sample_crop(a, tri, size, crop_seed)
            records.append(SynthRecord(str(fgs[stem]), str(alphas[stem]), str(bg_path),
                                       x, y, size, flip, jitter_seed))
            index += 1
    return records


def write_manifest(records, path):
    """Write records as JSON Lines (keys: fg, alpha, bg, x, y, size, flip, jitter_seed)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json_line() + "\n")


def read_manifest(path):
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(SynthRecord.from_json_line(line))
    return records


def _render(record: SynthRecord, out_size):
    fg = load_png(record.fg_path, "image")
    alpha = _load_alpha(record.alpha_path)
    if (fg.height, fg.width) != (alpha.height, alpha.width):
        raise ValueError(f"{record.fg_path}: foreground and alpha dimensions differ")
    size = record.size
    fg = _upscale_to_fit(fg, size)
    alpha = _upscale_to_fit(alpha, size)
    if record.flip:
        fg, alpha = _flip_raster(fg), _flip_raster(alpha)
    if record.x + size > fg.width or record.y + size > fg.height:
        raise ValueError(f"crop ({record.x},{record.y})+{size} out of bounds "
                         f"for {fg.width}x{fg.height} source")
    tri = noisy_trimap(alpha, record.jitter_seed, TRIMAP_K_MIN, TRIMAP_K_MAX)

    sl = np.s_[record.y:record.y + size, record.x:record.x + size]
    fg_c = Image(fg.planes[sl])
    alpha_c = AlphaMatte(alpha.plane[sl])
    tri_c = Trimap(tri.plane[sl])
    fg_c = resize_bilinear(fg_c, out_size, out_size)
    alpha_c = resize_bilinear(alpha_c, out_size, out_size)
    tri_c = resize_nearest(tri_c, out_size, out_size)

    bg = load_png(record.bg_path, "image")
    bg = _upscale_to_fit(bg, size)
    if record.flip:
        bg = _flip_raster(bg)
    rng = np.random.default_rng([record.jitter_seed, 1])
    bx = int(rng.integers(0, bg.width - size + 1))
    by = int(rng.integers(0, bg.height - size + 1))
    bg_c = Image(bg.planes[by:by + size, bx:bx + size])
    bg_c = resize_bilinear(bg_c, out_size, out_size)

    sample = make_sample(fg_c, bg_c, alpha_c)
    sample = augment(sample, flip=False, jitter_seed=record.jitter_seed)
    return sample, tri_c


def render_record(record: SynthRecord, out_size=320) -> CompositeSample:
    """Crop, resize, augment and composite one manifest record."""
    return _render(record, out_size)[0]


def render_record_full(record: SynthRecord, out_size=320):
    """render_record plus the matching trimap (NN-resized source trimap)."""
    return _render(record, out_size)
