"""Pairwise shot modulations and the convolution duality in k-space."""

import numpy as np
import pytest

from conftest import build_scene
from pidd.modulations import (MotionKernelSet, PhaseModulationMatrix,
                              convolve_kspace, kernels_from_modulations,
                              modulation_mosaic, modulations_from_kernels,
                              phase_modulations)
from pidd.transforms import fft2c, ifft2c


def _random_phases(rng, nshots, ny, nx):
    return rng.uniform(-np.pi, np.pi, size=(nshots, ny, nx))


def test_modulation_values(rng):
    phases = _random_phases(rng, 3, 8, 8)
    mods = phase_modulations(phases)
    for i in range(3):
        for j in range(3):
            want = 0.0 if i == j else np.exp(1j * (phases[i] - phases[j]))
            assert np.allclose(mods.maps[i, j], want, atol=1e-12)


def test_modulation_structure(rng):
    mods = phase_modulations(_random_phases(rng, 4, 6, 6))
    j = np.arange(4)
    off = mods.maps[j[:, None] != j[None, :]]
    assert np.allclose(np.abs(off), 1.0, atol=1e-12)
    # conjugate symmetry of pairwise differences
    assert np.allclose(mods.maps[1, 2], np.conj(mods.maps[2, 1]), atol=1e-12)


def test_equal_phases_give_unit_modulations(rng):
    phase = rng.uniform(-np.pi, np.pi, size=(8, 8))
    mods = phase_modulations(np.stack([phase, phase, phase]))
    j = np.arange(3)
    assert np.allclose(mods.maps[j[:, None] != j[None, :]], 1.0, atol=1e-13)


def test_matrix_validation(rng):
    maps = np.ones((2, 2, 4, 4), dtype=np.complex128)
    with pytest.raises(ValueError):
        PhaseModulationMatrix(maps)  # nonzero diagonal
    maps[np.arange(2), np.arange(2)] = 0.0
    maps[0, 1] *= 2.0
    with pytest.raises(ValueError):
        PhaseModulationMatrix(maps)  # off-diagonal not unit modulus


def test_kernel_round_trip(rng):
    mods = phase_modulations(_random_phases(rng, 3, 10, 12))
    kernels = kernels_from_modulations(mods)
    back = modulations_from_kernels(kernels)
    assert np.abs(back.maps - mods.maps).max() < 1e-10


def test_unit_modulation_is_center_impulse(rng):
    phase = rng.uniform(-np.pi, np.pi, size=(12, 12))
    mods = phase_modulations(np.stack([phase, phase]))
    kernels = kernels_from_modulations(mods)
    k01 = kernels.kernels[0, 1]
    assert abs(k01[6, 6] - np.sqrt(144.0)) < 1e-10
    rest = k01.copy()
    rest[6, 6] = 0.0
    assert np.abs(rest).max() < 1e-10


@pytest.mark.parametrize("shape", [(8, 8), (9, 7), (8, 6)])
def test_convolution_matches_modulation(shape, rng):
    # direct tap summation against multiply-then-transform
    ny, nx = shape
    phases = _random_phases(rng, 2, ny, nx)
    mods = phase_modulations(phases)
    kernels = kernels_from_modulations(mods)
    x = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    via_conv = convolve_kspace(kernels.kernels[0, 1], fft2c(x))
    via_mult = fft2c(mods.maps[0, 1] * x)
    assert np.abs(via_conv - via_mult).max() < 1e-10


def test_interpolate_averages_other_shots(rng):
    # identical phases make every modulation 1, so interpolation is a
    # plain mean over the other shots
    phase = rng.uniform(-np.pi, np.pi, size=(6, 6))
    kernels = kernels_from_modulations(phase_modulations(np.stack([phase] * 3)))
    x = rng.normal(size=(3, 6, 6)) + 1j * rng.normal(size=(3, 6, 6))
    out = kernels.interpolate(x)
    for i in range(3):
        want = (x.sum(axis=0) - x[i]) / 2.0
        assert np.allclose(out[i], want, atol=1e-12)


def test_interpolate_fixed_point(scene16):
    # shots that truly share one magnitude reproduce each other
    sample, phantom, coils, _ = scene16
    kernels = kernels_from_modulations(phase_modulations(sample.phases))
    shots = fft2c(np.exp(1j * sample.phases) * phantom.m0)
    out = kernels.interpolate(shots)
    assert np.abs(out - shots).max() < 1e-10


def test_interpolate_excludes_self(rng):
    # zeroing shot i's input must not change shot i's output
    phases = _random_phases(rng, 3, 8, 8)
    kernels = kernels_from_modulations(phase_modulations(phases))
    x = rng.normal(size=(3, 8, 8)) + 1j * rng.normal(size=(3, 8, 8))
    out = kernels.interpolate(x)
    x2 = x.copy()
    x2[1] = 0.0
    out2 = kernels.interpolate(x2)
    assert np.allclose(out[1], out2[1], atol=1e-12)


def test_interpolate_shape_check(rng):
    kernels = kernels_from_modulations(
        phase_modulations(_random_phases(rng, 2, 8, 8)))
    with pytest.raises(ValueError):
        kernels.interpolate(np.zeros((3, 8, 8), dtype=np.complex128))


def test_kernel_set_needs_square_pairing():
    with pytest.raises(ValueError):
        MotionKernelSet(np.zeros((2, 3, 4, 4), dtype=np.complex128))


def test_convolve_kspace_validation(rng):
    with pytest.raises(ValueError):
        convolve_kspace(np.zeros((4, 4)), np.zeros((5, 5)))


def test_mosaic_layout(rng):
    phases = _random_phases(rng, 3, 4, 5)
    mods = phase_modulations(phases)
    mosaic = modulation_mosaic(mods)
    assert mosaic.shape == (12, 15)
    # diagonal tiles stay zero, off-diagonal tiles are scaled copies
    assert np.all(mosaic[0:4, 0:5] == 0)
    assert np.allclose(mosaic[0:4, 5:10], mods.maps[0, 1] / 2.0, atol=1e-13)
    assert np.allclose(mosaic[8:12, 0:5], mods.maps[2, 0] / 2.0, atol=1e-13)
