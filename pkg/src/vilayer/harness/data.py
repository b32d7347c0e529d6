"""Synthetic images, patching, batching and noise for the denoising runs."""

import numpy as np
from scipy.ndimage import gaussian_filter


def child_seed(master, *tags):
    """Deterministic integer seed for the stream named by ``tags``."""
    return int(np.random.SeedSequence([int(master), *tags]).generate_state(1)[0])


def add_gaussian_noise(image, sigma, seed):
    """``image + sigma * n`` with ``n`` i.i.d. standard normal; no clipping."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    image = np.asarray(image, dtype=np.float64)
    if sigma == 0:
        return image.copy()
    rng = np.random.default_rng(seed)
    return image + sigma * rng.standard_normal(image.shape)


def phantom(size, seed, n_ellipses=8, blur=0.8):
    """Piecewise-smooth test image in ``[0, 1]``: overlapping ellipses of
    random intensity inside a bright oval, lightly blurred."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    u = (xx + 0.5) / size * 2 - 1
    v = (yy + 0.5) / size * 2 - 1
    img = np.where(u ** 2 / 0.85 ** 2 + v ** 2 / 0.95 ** 2 <= 1, 0.6, 0.0)
    for _ in range(n_ellipses):
        cx, cy = rng.uniform(-0.6, 0.6, 2)
        a, b = rng.uniform(0.08, 0.45, 2)
        phi = rng.uniform(0, np.pi)
        du, dv = u - cx, v - cy
        ru = du * np.cos(phi) + dv * np.sin(phi)
        rv = -du * np.sin(phi) + dv * np.cos(phi)
        img = img + rng.uniform(-0.3, 0.4) * (ru ** 2 / a ** 2 + rv ** 2 / b ** 2 <= 1)
    img = gaussian_filter(img, blur, mode="nearest")
    lo, hi = img.min(), img.max()
    return (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)


def split_patches(image, patch):
    """Non-overlapping ``patch x patch`` tiles in row-major tile order."""
    image = np.asarray(image, dtype=np.float64)
    H, W = image.shape
    if H % patch or W % patch:
        raise ValueError(f"image {image.shape} is not a multiple of patch size {patch}")
    tiles = image.reshape(H // patch, patch, W // patch, patch).transpose(0, 2, 1, 3)
    return tiles.reshape(-1, patch, patch).copy()


def merge_patches(patches, shape):
    """Inverse of :func:`split_patches`."""
    patches = np.asarray(patches, dtype=np.float64)
    H, W = shape
    p = patches.shape[-1]
    tiles = patches.reshape(H // p, W // p, p, p).transpose(0, 2, 1, 3)
    return tiles.reshape(H, W).copy()


def normalize01(batch):
    """Jointly rescale a batch of patches to ``[0, 1]``."""
    lo, hi = batch.min(), batch.max()
    return (batch - lo) / (hi - lo) if hi > lo else np.zeros_like(batch)


def position_batches(images, patch, batch_size):
    """Group images into consecutive sets of ``batch_size`` and, inside each
    group, collect the patches found at the same tile position.

    Returns ``(clean, blocks)`` where ``clean`` stacks every patch (each
    batch normalized to ``[0, 1]``) and ``blocks`` lists, per batch, the
    row indices of its patches.
    """
    n = len(images)
    if n % batch_size:
        raise ValueError(f"{n} images cannot be grouped into batches of {batch_size}")
    tiles = np.stack([split_patches(img, patch) for img in images])  # (n, positions, p, p)
    clean, blocks = [], []
    for g in range(0, n, batch_size):
        for pos in range(tiles.shape[1]):
            batch = normalize01(tiles[g:g + batch_size, pos])
            start = len(clean)
            clean.extend(batch)
            blocks.append(tuple(range(start, start + batch_size)))
    return np.stack(clean), tuple(blocks)
