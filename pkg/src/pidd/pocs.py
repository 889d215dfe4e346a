"""Classical projection solver alternating data consistency with
kernel interpolation across shots."""

from dataclasses import dataclass, field

import numpy as np

from .grids import CoilSet, SamplingMask
from .operators import apply_mask, coil_combine, coil_expand
from .transforms import fft2c, ifft2c


@dataclass
class ReconConfig:
    """Knobs shared by the classical and low-rank reconstructions."""

    lam: float = 1.0
    iters: int = 100
    tol: float = 0.0
    window: int = 5
    svt_rank: int = None
    pf_repeats: int = 10

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.iters < 0:
            raise ValueError("iters must be nonnegative")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and at least 3")
        if self.pf_repeats < 0:
            raise ValueError("pf_repeats must be nonnegative")


def _unpack(coils, mask):
    maps = coils.maps if isinstance(coils, CoilSet) else np.asarray(coils)
    shots = mask.shots if isinstance(mask, SamplingMask) else np.asarray(mask)
    return maps, shots


def data_consistency(kspace, measured, coils, mask, lam=1.0):
    """Blend the current per-shot k-space with the measured samples.

    Per shot and coil the image estimate is corrected by lam times the
    residual on sampled entries, then coil-combined and transformed
    back. ``kspace`` is combined [shots, ny, nx]; ``measured`` the
    zero-filled acquisition [shots, coils, ny, nx], or None for the pure
    linear part of the update.
    """
    maps, shots = _unpack(coils, mask)
    kspace = np.asarray(kspace, dtype=np.complex128)
    if kspace.ndim != 3:
        raise ValueError("kspace must be [shots, ny, nx]")
    images = ifft2c(kspace)
    per_coil = coil_expand(images, maps)
    proj = shots[:, None] * fft2c(per_coil)
    resid = -proj if measured is None else np.asarray(measured) - proj
    per_coil = per_coil + lam * ifft2c(shots[:, None] * resid)
    return fft2c(coil_combine(per_coil, maps))


def zero_filled(measured, coils, mask):
    """Adjoint reconstruction: combined k-space straight from the samples."""
    maps, shots = _unpack(coils, mask)
    images = ifft2c(apply_mask(measured, shots))
    return fft2c(coil_combine(images, maps))


def density_compensated(measured, coils, mask):
    """Zero-filled adjoint with each shot scaled by its inverse
    sampling fraction, so magnitudes are comparable to the label."""
    maps, shots = _unpack(coils, mask)
    frac = shots.mean(axis=(1, 2))
    scale = np.where(frac > 0, 1.0 / np.maximum(frac, 1e-12), 0.0)
    return zero_filled(measured, coils, mask) * scale[:, None, None]


@dataclass
class PocsResult:
    """Solver output: final combined k-space plus convergence record."""

    kspace: np.ndarray
    residuals: list = field(default_factory=list)
    iterations: int = 0
    flags: list = field(default_factory=list)


def pocs_reconstruct(measured, coils, mask, kernels, config=None, callback=None):
    """Alternate data consistency and kernel interpolation.

    Starts from the zero-filled adjoint; each iteration enforces the
    measured samples, then rebuilds every shot from the others through
    the kernel set. Stops on the iteration budget, on ``tol`` for the
    relative iterate change, or when that change grows five times in a
    row (flagged "diverged"). A final consistency step anchors the
    sampled entries.
    """
    config = config or ReconConfig()
    if kernels.nshots < 2:
        raise ValueError("kernel interpolation needs at least two shots")
    kspace = zero_filled(measured, coils, mask)
    result = PocsResult(kspace)
    grew = 0
    prev_change = None
    for it in range(config.iters):
        blended = data_consistency(kspace, measured, coils, mask, config.lam)
        new = kernels.interpolate(blended)
        denom = np.linalg.norm(kspace)
        change = np.linalg.norm(new - kspace) / max(denom, 1e-30)
        result.residuals.append(float(change))
        kspace = new
        result.iterations = it + 1
        if callback is not None:
            callback(it, kspace)
        if prev_change is not None and change > prev_change:
            grew += 1
            if grew >= 5:
                result.flags.append("diverged")
                break
        else:
            grew = 0
        prev_change = change
        if config.tol > 0 and change < config.tol:
            result.flags.append("converged")
            break
    result.kspace = data_consistency(kspace, measured, coils, mask, config.lam)
    return result
