"""Relative shot phase modulations and their k-space convolution kernels.

The modulation between shots i and j is the unit-modulus image
exp(i(phi_i - phi_j)); multiplying shot j's image by it produces shot
i's image when both share one magnitude. Its centered DFT acts as a
circular convolution kernel on per-shot k-space, which is what the
classical solver and the learned network approximate.
"""

from dataclasses import dataclass

import numpy as np

from .transforms import fft2c, ifft2c


@dataclass
class PhaseModulationMatrix:
    """All pairwise modulations, [shots, shots, ny, nx], zero diagonal."""

    maps: np.ndarray

    def __post_init__(self):
        self.maps = np.asarray(self.maps, dtype=np.complex128)
        if self.maps.ndim != 4 or self.maps.shape[0] != self.maps.shape[1]:
            raise ValueError("modulations must be [shots, shots, ny, nx]")
        if self.maps.shape[0] < 2:
            raise ValueError("modulations need at least two shots")
        j = np.arange(self.maps.shape[0])
        if np.any(self.maps[j, j] != 0):
            raise ValueError("diagonal modulations must be zero")
        off = np.abs(self.maps[j[:, None] != j[None, :]])
        if off.size and np.max(np.abs(off - 1.0)) > 1e-9:
            raise ValueError("off-diagonal modulations must be unit modulus")

    @property
    def nshots(self):
        return self.maps.shape[0]


def phase_modulations(phases):
    """Pairwise modulations exp(i(phi_i - phi_j)) from per-shot phase maps."""
    phases = np.asarray(phases, dtype=np.float64)
    if phases.ndim != 3:
        raise ValueError("phases must be [shots, ny, nx]")
    if phases.shape[0] < 2:
        raise ValueError("need at least two shots")
    diff = phases[:, None] - phases[None, :]
    maps = np.exp(1j * diff)
    j = np.arange(phases.shape[0])
    maps[j, j] = 0.0
    return PhaseModulationMatrix(maps)


@dataclass
class MotionKernelSet:
    """Centered k-space kernels, one per ordered shot pair.

    ``kernels[i, j]`` is the centered DFT of the (i, j) modulation;
    convolving shot j's k-space with it (see convolve_kspace) equals
    multiplying shot j's image by the modulation.
    """

    kernels: np.ndarray

    def __post_init__(self):
        self.kernels = np.asarray(self.kernels, dtype=np.complex128)
        if self.kernels.ndim != 4 or self.kernels.shape[0] != self.kernels.shape[1]:
            raise ValueError("kernels must be [shots, shots, ny, nx]")
        self._mods = None

    @property
    def nshots(self):
        return self.kernels.shape[0]

    def modulations(self):
        """Image-domain equivalents with the unused diagonal zeroed, cached."""
        if self._mods is None:
            mods = ifft2c(self.kernels)
            j = np.arange(mods.shape[0])
            mods[j, j] = 0.0
            self._mods = mods
        return self._mods

    def interpolate(self, kspace):
        """One interpolation sweep: each shot rebuilt from all others.

        Applies (1/(J-1)) sum_{j != i} kernel_ij (*) X_j through the
        image-domain form of the convolution.
        """
        kspace = np.asarray(kspace, dtype=np.complex128)
        nshots = self.nshots
        if kspace.shape != self.kernels.shape[1:]:
            raise ValueError("kspace must be [shots, ny, nx] matching kernels")
        images = ifft2c(kspace)
        mixed = np.einsum("ijyx,jyx->iyx", self.modulations(), images)
        return fft2c(mixed) / (nshots - 1)


def kernels_from_modulations(mods):
    """Forward DFT of every modulation map."""
    maps = mods.maps if isinstance(mods, PhaseModulationMatrix) else np.asarray(mods)
    return MotionKernelSet(fft2c(maps))


def modulations_from_kernels(kernels):
    """Round-trip back to a PhaseModulationMatrix."""
    return PhaseModulationMatrix(kernels.modulations().copy())


def convolve_kspace(kernel, kspace):
    """Centered circular convolution of one kernel with one k-space plane.

    Direct sum over all kernel taps with wraparound about the center
    bin, scaled so it matches multiply-then-transform exactly. Cost is
    quadratic in the plane size; reconstruction always goes through
    MotionKernelSet.interpolate instead.
    """
    kernel = np.asarray(kernel, dtype=np.complex128)
    kspace = np.asarray(kspace, dtype=np.complex128)
    if kernel.shape != kspace.shape or kernel.ndim != 2:
        raise ValueError("kernel and kspace must share one (ky, kx) plane")
    ny, nx = kernel.shape
    cy, cx = ny // 2, nx // 2
    out = np.zeros_like(kspace)
    for u in range(ny):
        for v in range(nx):
            if kernel[u, v] == 0:
                continue
            shifted = np.roll(kspace, (u - cy, v - cx), axis=(0, 1))
            out += kernel[u, v] * shifted
    return out / np.sqrt(ny * nx)


def modulation_mosaic(mods):
    """Tile the scaled modulation matrix into one [J*ny, J*nx] image.

    Tile (i, j) holds the (i, j) modulation divided by (J - 1); the
    diagonal stays zero.
    """
    if not isinstance(mods, PhaseModulationMatrix):
        mods = PhaseModulationMatrix(mods)
    nshots, _, ny, nx = mods.maps.shape
    scaled = mods.maps / (nshots - 1)
    return scaled.transpose(0, 2, 1, 3).reshape(nshots * ny, nshots * nx)
