"""Shared fixtures: a synthetic fg/alpha/bg source pool."""

from types import SimpleNamespace

import pytest

from helpers import soft_disk, textured_rgb, write_gray, write_rgb


@pytest.fixture(scope="session")
def pools(tmp_path_factory):
    """Two fg/alpha pairs and three background pools, 1000x1000.

    The alpha blobs sit near the center with wide partial-opacity rings,
    so even 640-px crops find unknown pixels whose centered window fits.
    """
    root = tmp_path_factory.mktemp("pools")
    fg_dir, alpha_dir = root / "fg", root / "alpha"
    bg_dirs = (root / "bg_a", root / "bg_b", root / "bg_c")
    for d in (fg_dir, alpha_dir) + bg_dirs:
        d.mkdir()
    size = 1000
    write_rgb(fg_dir / "owl.png", textured_rgb(size, 1, (180, 120, 60)))
    write_rgb(fg_dir / "vase.png", textured_rgb(size, 2, (70, 140, 200)))
    write_gray(alpha_dir / "owl.png", soft_disk(size, (500, 500), 150, 190))
    write_gray(alpha_dir / "vase.png", soft_disk(size, (480, 520), 140, 200))
    for i, d in enumerate(bg_dirs):
        write_rgb(d / "field.png", textured_rgb(size, 10 + i, (90 + 30 * i, 160, 120)))
        write_rgb(d / "wall.png", textured_rgb(size, 20 + i, (150, 90 + 40 * i, 170)))
    return SimpleNamespace(fg=fg_dir, alpha=alpha_dir, bgs=list(bg_dirs))
