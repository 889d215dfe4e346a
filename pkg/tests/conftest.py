"""Shared builders for small synthetic scenes used across the suite."""

import numpy as np
import pytest

from pidd.grids import interleaved_mask
from pidd.phantom import make_phantom
from pidd.synth import SynthesisSpec, make_coils, make_sample, sample_rng


def build_scene(ny=16, nx=16, shots=2, coils=4, order=2, snr=None, pf=1.0,
                seed=0, index=0):
    """One sample plus the fixed pieces it was drawn against.

    ``snr`` may be None for noiseless data, a float, or a (lo, hi) pair.
    Returns (sample, phantom, coil_set, mask).
    """
    if isinstance(snr, (int, float)):
        snr = (float(snr), float(snr))
    spec = SynthesisSpec(ny=ny, nx=nx, shots=shots, coils=coils,
                         phase_order=order, snr_db=snr, pf_rate=pf)
    phantom = make_phantom(ny, nx, spec.phantom)
    coil_set = make_coils(coils, ny, nx)
    mask = interleaved_mask(shots, ny, nx, pf)
    sample = make_sample(spec, phantom, coil_set, mask,
                         sample_rng(seed, index), base_seed=seed, index=index)
    return sample, phantom, coil_set, mask


def plane_wave_kspace(nshots, ny, nx, rank, rng):
    """Multi-shot k-space whose structured matrix has rank <= ``rank``.

    Each component is one complex exponential shared by every shot up to
    a per-shot weight, so each contributes a single direction to every
    sliding-window stack.
    """
    ky = np.arange(ny)[:, None]
    kx = np.arange(nx)[None, :]
    out = np.zeros((nshots, ny, nx), dtype=np.complex128)
    for _ in range(rank):
        fy, fx = rng.uniform(0.0, 2.0 * np.pi, size=2)
        weights = rng.normal(size=nshots) + 1j * rng.normal(size=nshots)
        out += weights[:, None, None] * np.exp(1j * (fy * ky + fx * kx))
    return out


@pytest.fixture
def scene16():
    return build_scene()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
