"""Centered unitary DFT pair against a direct summation oracle."""

import numpy as np
import pytest

from pidd.grids import ComplexGrid
from pidd.transforms import dft2_centered, fft2c, idft2_centered, ifft2c


def brute_dft2(x):
    """O(N^4) centered orthonormal DFT, written without any fft call."""
    x = np.asarray(x, dtype=np.complex128)
    ny, nx = x.shape
    cy, cx = ny // 2, nx // 2
    n = np.arange(ny) - cy
    m = np.arange(nx) - cx
    ey = np.exp(-2j * np.pi * np.outer(n, n) / ny)
    ex = np.exp(-2j * np.pi * np.outer(m, m) / nx)
    return ey @ x @ ex.T / np.sqrt(ny * nx)


@pytest.mark.parametrize("shape", [(8, 8), (8, 6), (7, 5), (9, 12)])
def test_matches_direct_sum(shape, rng):
    x = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    assert np.allclose(fft2c(x), brute_dft2(x), atol=1e-12)


@pytest.mark.parametrize("shape", [(16, 16), (15, 9)])
def test_unitary(shape, rng):
    x = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    assert abs(np.linalg.norm(fft2c(x)) - np.linalg.norm(x)) < 1e-12
    assert abs(np.linalg.norm(ifft2c(x)) - np.linalg.norm(x)) < 1e-12


def test_round_trip(rng):
    x = rng.normal(size=(3, 4, 10, 12)) + 1j * rng.normal(size=(3, 4, 10, 12))
    assert np.allclose(ifft2c(fft2c(x)), x, atol=1e-13)
    assert np.allclose(fft2c(ifft2c(x)), x, atol=1e-13)


@pytest.mark.parametrize("shape", [(8, 8), (9, 7)])
def test_constant_image_hits_center_bin(shape):
    ny, nx = shape
    x = np.full(shape, 2.5, dtype=np.complex128)
    k = fft2c(x)
    assert abs(k[ny // 2, nx // 2] - 2.5 * np.sqrt(ny * nx)) < 1e-12
    k[ny // 2, nx // 2] = 0.0
    assert np.abs(k).max() < 1e-12


def test_linearity(rng):
    x = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    y = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    a, b = 1.7 - 0.3j, -0.8 + 2.1j
    assert np.allclose(fft2c(a * x + b * y), a * fft2c(x) + b * fft2c(y),
                       atol=1e-12)


def test_unitary_adjoint(rng):
    x = rng.normal(size=(10, 8)) + 1j * rng.normal(size=(10, 8))
    y = rng.normal(size=(10, 8)) + 1j * rng.normal(size=(10, 8))
    assert abs(np.vdot(fft2c(x), y) - np.vdot(x, ifft2c(y))) < 1e-11


def test_integer_ramp_shifts_spectrum(rng):
    # multiplying by an integer-frequency phase ramp in centered
    # coordinates rolls the spectrum with no global phase left over
    ny, nx, sy, sx = 16, 12, 5, -3
    x = rng.normal(size=(ny, nx)) + 1j * rng.normal(size=(ny, nx))
    yy = np.arange(ny)[:, None] - ny // 2
    xx = np.arange(nx)[None, :] - nx // 2
    ramp = np.exp(2j * np.pi * (sy * yy / ny + sx * xx / nx))
    assert np.allclose(fft2c(ramp * x), np.roll(fft2c(x), (sy, sx), axis=(0, 1)),
                       atol=1e-12)


def test_grid_roles_flip(rng):
    data = rng.normal(size=(2, 6, 6)) + 0j
    grid = ComplexGrid(data, ("shot", "space_y", "space_x"))
    out = dft2_centered(grid)
    assert out.axis_roles == ("shot", "freq_y", "freq_x")
    assert np.allclose(out.data, fft2c(data))
    back = idft2_centered(out)
    assert back.axis_roles == ("shot", "space_y", "space_x")
    assert np.allclose(back.data, data, atol=1e-13)


def test_grid_rejects_wrong_domain(rng):
    data = rng.normal(size=(6, 6)) + 0j
    freq = ComplexGrid(data, ("freq_y", "freq_x"))
    with pytest.raises(ValueError):
        dft2_centered(freq)
    space = ComplexGrid(data, ("space_y", "space_x"))
    with pytest.raises(ValueError):
        idft2_centered(space)


def test_bare_array_needs_plane():
    with pytest.raises(ValueError):
        dft2_centered(np.ones(5) + 0j)
