"""PNG writers and synthetic raster builders shared across test modules.

Lives outside conftest so test modules can import it by a unique name even
when another test tree contributes its own conftest to the run.
"""

import numpy as np
from PIL import Image as PILImage


def write_gray(path, arr):
    PILImage.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(path, format="PNG")


def write_rgb(path, arr):
    PILImage.fromarray(np.asarray(arr, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def soft_disk(size, center, r_full, r_zero):
    """Alpha bytes: opaque inside r_full, transparent beyond r_zero, linear ramp."""
    yy, xx = np.mgrid[0:size, 0:size]
    d = np.hypot(yy - center[0], xx - center[1])
    alpha = np.clip((r_zero - d) / (r_zero - r_full), 0.0, 1.0)
    return np.rint(alpha * 255).astype(np.uint8)


def textured_rgb(size, seed, base):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    img = np.zeros((size, size, 3))
    for ch in range(3):
        img[..., ch] = (base[ch] + 60 * np.sin(xx / (17 + 5 * ch))
                        + 40 * np.cos(yy / (23 + 3 * ch)))
    img += rng.normal(0, 12, img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)
