"""Image-quality metrics: PSNR and SSIM.

SSIM uses an 11x11 Gaussian window (sigma 1.5), C1 = 0.01**2,
C2 = 0.03**2, dynamic range 1, and averages the local index over every
window position that lies fully inside the image.
"""

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

WIN = 11
WIN_SIGMA = 1.5
K1, K2 = 0.01, 0.03


def psnr(reference, candidate, peak=1.0) -> float:
    """``10 log10(peak^2 / MSE)``; ``inf`` for identical images."""
    reference = np.asarray(reference, dtype=np.float64)
    candidate = np.asarray(candidate, dtype=np.float64)
    if reference.shape != candidate.shape:
        raise ValueError(f"shape mismatch {reference.shape} vs {candidate.shape}")
    mse = float(np.mean((reference - candidate) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def gaussian_window(size=WIN, sigma=WIN_SIGMA):
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r ** 2) / (2 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def _check_pair(x, y, size):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    if x.ndim != 2:
        raise ValueError(f"SSIM needs grayscale 2-D images, got shape {x.shape}")
    if min(x.shape) < size:
        raise ValueError(f"image {x.shape} is smaller than the {size}x{size} window")
    return x, y


def ssim_map(reference, candidate, data_range=1.0):
    x, y = _check_pair(reference, candidate, WIN)
    w = gaussian_window()
    c1, c2 = (K1 * data_range) ** 2, (K2 * data_range) ** 2

    def filt(img):
        return np.tensordot(sliding_window_view(img, (WIN, WIN)), w, axes=([2, 3], [0, 1]))

    mx, my = filt(x), filt(y)
    vx = filt(x * x) - mx * mx
    vy = filt(y * y) - my * my
    cxy = filt(x * y) - mx * my
    return ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))


def ssim(reference, candidate, data_range=1.0) -> float:
    return float(ssim_map(reference, candidate, data_range).mean())


def ssim_direct(reference, candidate, data_range=1.0) -> float:
    """Window-by-window SSIM with two-pass moments.

    Independent of :func:`ssim` (no sliding views, centred second moments);
    used to cross-check it.
    """
    x, y = _check_pair(reference, candidate, WIN)
    g = [math.exp(-((i - (WIN - 1) / 2) ** 2) / (2 * WIN_SIGMA ** 2)) for i in range(WIN)]
    total = sum(g) ** 2
    weights = [[g[a] * g[b] / total for b in range(WIN)] for a in range(WIN)]
    c1, c2 = (K1 * data_range) ** 2, (K2 * data_range) ** 2
    xs, ys = x.tolist(), y.tolist()
    acc = 0.0
    count = 0
    for i in range(x.shape[0] - WIN + 1):
        for j in range(x.shape[1] - WIN + 1):
            mx = my = 0.0
            for a in range(WIN):
                for b in range(WIN):
                    mx += weights[a][b] * xs[i + a][j + b]
                    my += weights[a][b] * ys[i + a][j + b]
            vx = vy = cxy = 0.0
            for a in range(WIN):
                for b in range(WIN):
                    dx = xs[i + a][j + b] - mx
                    dy = ys[i + a][j + b] - my
                    vx += weights[a][b] * dx * dx
                    vy += weights[a][b] * dy * dy
                    cxy += weights[a][b] * dx * dy
            acc += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
            count += 1
    return acc / count


def summarize(references, candidates):
    """Mean and (population) std of SSIM plus mean PSNR over image pairs."""
    s = np.array([ssim(r, c) for r, c in zip(references, candidates)])
    p = np.array([psnr(r, c) for r, c in zip(references, candidates)])
    return {"ssim_mean": float(s.mean()), "ssim_std": float(s.std()), "psnr_mean": float(p.mean())}
