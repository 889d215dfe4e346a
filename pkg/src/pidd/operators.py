"""Sampling and coil operators used by synthesis and reconstruction."""

import numpy as np

from .grids import CoilSet, SamplingMask


def _mask_array(mask, kspace):
    shots = mask.shots if isinstance(mask, SamplingMask) else np.asarray(mask)
    if kspace.shape[-2:] != shots.shape[-2:]:
        raise ValueError("mask plane %r does not match data plane %r"
                         % (shots.shape[-2:], kspace.shape[-2:]))
    if kspace.ndim == 4:
        # [shots, coils, ny, nx]: broadcast each shot mask over coils
        if kspace.shape[0] != shots.shape[0]:
            raise ValueError("mask holds %d shots, data %d"
                             % (shots.shape[0], kspace.shape[0]))
        return shots[:, None]
    if kspace.ndim == 3 and kspace.shape[0] != shots.shape[0]:
        raise ValueError("mask holds %d shots, data %d"
                         % (shots.shape[0], kspace.shape[0]))
    return shots


def apply_mask(kspace, mask):
    """Zero out unsampled k-space entries, keeping the full-grid shape."""
    kspace = np.asarray(kspace)
    return kspace * _mask_array(mask, kspace)


def adjoint_mask(kspace, mask):
    """Adjoint of apply_mask; identical because the mask is 0/1 valued."""
    return apply_mask(kspace, mask)


def _coil_maps(coils):
    return coils.maps if isinstance(coils, CoilSet) else np.asarray(coils)


def coil_expand(image, coils):
    """Multiply an image [..., ny, nx] onto every coil map.

    Returns [..., coils, ny, nx] with the coil axis inserted before the
    plane axes.
    """
    image = np.asarray(image)
    maps = _coil_maps(coils)
    if image.shape[-2:] != maps.shape[-2:]:
        raise ValueError("image plane %r does not match coil plane %r"
                         % (image.shape[-2:], maps.shape[-2:]))
    return image[..., None, :, :] * maps


def coil_combine(images, coils):
    """Adjoint of coil_expand: conjugate-weighted sum over the coil axis."""
    images = np.asarray(images)
    maps = _coil_maps(coils)
    if images.shape[-3:] != maps.shape:
        raise ValueError("expected coil axis %r before the plane, got %r"
                         % (maps.shape, images.shape[-3:]))
    return np.sum(np.conj(maps) * images, axis=-3)
