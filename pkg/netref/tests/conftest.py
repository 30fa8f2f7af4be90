"""Synthetic pools and manifests shared by the torch reference tests."""

import numpy as np
import pytest
from PIL import Image as PILImage

from mattekit import synthesize_manifest, write_manifest


def _soft_disk(size, center, r_full, r_zero, peak=1.0):
    yy, xx = np.mgrid[0:size, 0:size]
    d = np.hypot(yy - center[0], xx - center[1])
    alpha = peak * np.clip((r_zero - d) / (r_zero - r_full), 0.0, 1.0)
    return np.rint(alpha * 255).astype(np.uint8)


def _textured(size, seed, base):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    img = np.zeros((size, size, 3))
    for ch in range(3):
        img[..., ch] = (base[ch] + 60 * np.sin(xx / (17 + 5 * ch))
                        + 40 * np.cos(yy / (23 + 3 * ch)))
    return np.clip(img + rng.normal(0, 12, img.shape), 0, 255).astype(np.uint8)


def _build_pools(root, peak):
    size = 1000
    fg_dir, alpha_dir, bg_dir = root / "fg", root / "alpha", root / "bg"
    for d in (fg_dir, alpha_dir, bg_dir):
        d.mkdir()
    PILImage.fromarray(_textured(size, 1, (180, 120, 60)), "RGB").save(fg_dir / "owl.png")
    PILImage.fromarray(_textured(size, 2, (70, 140, 200)), "RGB").save(fg_dir / "vase.png")
    PILImage.fromarray(_soft_disk(size, (500, 500), 150, 190, peak), "L").save(alpha_dir / "owl.png")
    PILImage.fromarray(_soft_disk(size, (480, 520), 140, 200, peak), "L").save(alpha_dir / "vase.png")
    PILImage.fromarray(_textured(size, 10, (90, 160, 120)), "RGB").save(bg_dir / "field.png")
    PILImage.fromarray(_textured(size, 20, (150, 90, 170)), "RGB").save(bg_dir / "wall.png")
    return fg_dir, alpha_dir, bg_dir


@pytest.fixture(scope="session")
def manifest4(tmp_path_factory):
    """Four records over opaque-center disk alphas (normal trimaps)."""
    root = tmp_path_factory.mktemp("netref_pools")
    fg_dir, alpha_dir, bg_dir = _build_pools(root, peak=1.0)
    records = synthesize_manifest(fg_dir, alpha_dir, [bg_dir], per_fg=2, seed=11)
    path = root / "manifest.jsonl"
    write_manifest(records, path)
    return path


@pytest.fixture(scope="session")
def manifest_no_foreground(tmp_path_factory):
    """Two records whose alphas never exceed 0.5: trimaps carry no foreground."""
    root = tmp_path_factory.mktemp("netref_pools_soft")
    fg_dir, alpha_dir, bg_dir = _build_pools(root, peak=0.45)
    records = synthesize_manifest(fg_dir, alpha_dir, [bg_dir], per_fg=1, seed=12)
    path = root / "manifest.jsonl"
    write_manifest(records, path)
    return path
