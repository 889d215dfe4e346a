"""Image quality and model-fit metrics for reconstructed data."""

import numpy as np

PSNR_CAP_DB = 300.0


def gsr(image, support):
    """Ghost-to-signal ratio: mean magnitude off support over on support.

    ``image`` may be complex; only magnitudes enter, so the measure is
    invariant to any global phase.
    """
    mag = np.abs(np.asarray(image))
    support = np.asarray(support, dtype=bool)
    if mag.shape != support.shape:
        raise ValueError("image and support shapes differ")
    inside = mag[support]
    outside = mag[~support]
    if inside.size == 0 or outside.size == 0:
        raise ValueError("support must split the grid in two")
    signal = inside.mean()
    if signal == 0:
        raise ValueError("no signal on support")
    return float(outside.mean() / signal)


def psnr(image, reference):
    """Peak SNR in dB of magnitudes, peak taken from the reference.

    Identical inputs would be infinite, so the value is capped at
    PSNR_CAP_DB and the cap reported for any all-but-equal pair.
    """
    mag = np.abs(np.asarray(image))
    ref = np.abs(np.asarray(reference))
    if mag.shape != ref.shape:
        raise ValueError("image and reference shapes differ")
    peak = ref.max()
    if peak == 0:
        raise ValueError("reference is empty")
    err = np.sqrt(np.mean((mag - ref) ** 2))
    if err == 0:
        return PSNR_CAP_DB
    return float(min(20.0 * np.log10(peak / err), PSNR_CAP_DB))


def realized_snr(noisy, clean):
    """Actual SNR in dB between a noisy tensor and its clean original."""
    noisy = np.asarray(noisy)
    clean = np.asarray(clean)
    if noisy.shape != clean.shape:
        raise ValueError("shapes differ")
    signal = np.linalg.norm(clean) ** 2
    noise = np.linalg.norm(noisy - clean) ** 2
    if noise == 0:
        return float("inf")
    if signal == 0:
        raise ValueError("clean reference is zero")
    return float(10.0 * np.log10(signal / noise))


def design_matrix(b_values, directions):
    """Rows -b * (gx^2, gy^2, gz^2, 2 gx gy, 2 gx gz, 2 gy gz)."""
    b_values = np.asarray(b_values, dtype=np.float64)
    dirs = np.asarray(directions, dtype=np.float64)
    if dirs.ndim != 2 or dirs.shape[1] != 3 or len(b_values) != len(dirs):
        raise ValueError("need one b value per 3-vector direction")
    gx, gy, gz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    cols = np.stack([gx * gx, gy * gy, gz * gz,
                     2 * gx * gy, 2 * gx * gz, 2 * gy * gz], axis=1)
    return -b_values[:, None] * cols


def fit_diffusion_tensor(magnitudes, b_values, directions, m0, support=None):
    """Voxelwise least-squares tensor fit from log-attenuations.

    ``magnitudes`` is [measurements, ny, nx] matching ``b_values`` and
    ``directions``; returns tensors [ny, nx, 3, 3], zero off support.
    The design must have full rank 6, so at least six non-degenerate
    directions are required.
    """
    mags = np.asarray(magnitudes, dtype=np.float64)
    m0 = np.asarray(m0, dtype=np.float64)
    if mags.ndim != 3 or mags.shape[1:] != m0.shape:
        raise ValueError("magnitudes must be [measurements, ny, nx]")
    design = design_matrix(b_values, directions)
    if design.shape[0] < 6 or np.linalg.matrix_rank(design) < 6:
        raise ValueError("tensor fit needs six independent directions")
    if support is None:
        support = m0 > 0
    support = np.asarray(support, dtype=bool) & (m0 > 0)
    support &= np.all(mags > 0, axis=0)
    ny, nx = m0.shape
    tensors = np.zeros((ny, nx, 3, 3))
    if not support.any():
        return tensors
    logs = np.log(mags[:, support] / m0[support])
    coeffs, *_ = np.linalg.lstsq(design, logs, rcond=None)
    dxx, dyy, dzz, dxy, dxz, dyz = coeffs
    full = np.empty((support.sum(), 3, 3))
    full[:, 0, 0] = dxx
    full[:, 1, 1] = dyy
    full[:, 2, 2] = dzz
    full[:, 0, 1] = full[:, 1, 0] = dxy
    full[:, 0, 2] = full[:, 2, 0] = dxz
    full[:, 1, 2] = full[:, 2, 1] = dyz
    tensors[support] = full
    return tensors


def aggregate(values):
    """Mean, std, median and 1.5 IQR outlier count for a metric list."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("nothing to aggregate")
    q1, q3 = np.percentile(arr, (25, 75))
    spread = q3 - q1
    lo, hi = q1 - 1.5 * spread, q3 + 1.5 * spread
    return {
        "mean": float(arr.mean()),
        "std": float(arr.std()),
        "median": float(np.median(arr)),
        "outliers": int(np.sum((arr < lo) | (arr > hi))),
    }
