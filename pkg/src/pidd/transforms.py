"""Centered unitary 2-D Fourier transforms over the trailing axes."""

import numpy as np

from .grids import FREQ_ROLES, SPACE_ROLES, ComplexGrid

AXES = (-2, -1)


def fft2c(x):
    """Centered orthonormal 2-D DFT of the last two axes."""
    x = np.asarray(x)
    return np.fft.fftshift(
        np.fft.fft2(np.fft.ifftshift(x, axes=AXES), axes=AXES, norm="ortho"),
        axes=AXES,
    )


def ifft2c(x):
    """Inverse of fft2c."""
    x = np.asarray(x)
    return np.fft.fftshift(
        np.fft.ifft2(np.fft.ifftshift(x, axes=AXES), axes=AXES, norm="ortho"),
        axes=AXES,
    )


def dft2_centered(grid):
    """Image plane to k-space on a ComplexGrid or bare array.

    For a ComplexGrid the trailing axes must be spatial and come back
    relabeled as frequency axes; arrays pass straight to fft2c.
    """
    if isinstance(grid, ComplexGrid):
        if not grid.in_space:
            raise ValueError("dft2_centered expects spatial trailing axes")
        return ComplexGrid(fft2c(grid.data), grid.axis_roles[:-2] + FREQ_ROLES)
    arr = np.asarray(grid)
    if arr.ndim < 2:
        raise ValueError("dft2_centered needs a (y, x) plane")
    return fft2c(arr)


def idft2_centered(grid):
    """K-space to image plane; inverse of dft2_centered."""
    if isinstance(grid, ComplexGrid):
        if grid.in_space:
            raise ValueError("idft2_centered expects frequency trailing axes")
        return ComplexGrid(ifft2c(grid.data), grid.axis_roles[:-2] + SPACE_ROLES)
    arr = np.asarray(grid)
    if arr.ndim < 2:
        raise ValueError("idft2_centered needs a (ky, kx) plane")
    return ifft2c(arr)
