"""Tensor phantom rendering, validation and anisotropy measures."""

import numpy as np
import pytest

from pidd.errors import DataError
from pidd.parrio import write_parr
from pidd.phantom import (PhantomSpec, TensorPhantom, fractional_anisotropy,
                          load_phantom, make_phantom, unit_grid)


def test_unit_grid_spans_endpoints():
    yy, xx = unit_grid(5, 9)
    assert yy[0, 0] == -1.0 and yy[-1, 0] == 1.0
    assert xx[0, 0] == -1.0 and xx[0, -1] == 1.0
    assert yy.shape == xx.shape == (5, 9)
    # y varies along the first axis only
    assert np.all(np.diff(yy, axis=1) == 0)
    assert np.all(np.diff(xx, axis=0) == 0)


def test_default_phantom_structure():
    phantom = make_phantom(64, 64)
    assert phantom.shape == (64, 64)
    on = phantom.support
    assert 0.2 < on.mean() < 0.8
    assert np.all(phantom.m0[~on] == 0)
    assert phantom.m0[on].min() >= 0.30
    assert phantom.m0[on].max() <= 0.95
    # several distinct tissue classes survive rendering
    assert len(np.unique(phantom.m0[on])) >= 4


def test_default_phantom_tensors_are_valid():
    phantom = make_phantom(48, 48)
    tensors = phantom.tensors[phantom.support]
    assert np.allclose(tensors, np.swapaxes(tensors, -1, -2))
    eigs = np.linalg.eigvalsh(tensors)
    assert eigs.min() >= -1e-15
    assert eigs.max() < 2e-3


def test_default_phantom_has_strong_anisotropy():
    phantom = make_phantom(64, 64)
    eigs = np.linalg.eigvalsh(phantom.tensors[phantom.support])
    fa = fractional_anisotropy(eigs)
    # the sharpest region pairs 1.7e-3 against 0.2e-3
    expected = fractional_anisotropy(np.array([1.7e-3, 0.2e-3, 0.2e-3]))
    assert abs(expected - 0.8703882797784892) < 1e-12
    assert abs(fa.max() - expected) < 1e-12


def test_fa_limits():
    assert fractional_anisotropy(np.array([1.0, 1.0, 1.0])) == 0.0
    assert fractional_anisotropy(np.array([0.0, 0.0, 0.0])) == 0.0
    # one dominant eigenvalue approaches 1
    assert abs(fractional_anisotropy(np.array([1.0, 0.0, 0.0])) - np.sqrt(1.5 * 2 / 3)) < 1e-12


def test_phantom_validation():
    good = make_phantom(16, 16)
    with pytest.raises(ValueError):
        TensorPhantom(-good.m0, good.tensors, good.support)
    m0 = good.m0.copy()
    m0[0, 0] = 0.5  # off support
    with pytest.raises(ValueError):
        TensorPhantom(m0, good.tensors, good.support)
    tensors = good.tensors.copy()
    tensors[8, 8, 0, 1] += 1e-6
    with pytest.raises(ValueError):
        TensorPhantom(good.m0, tensors, good.support)


def test_phantom_rejects_indefinite_tensor():
    good = make_phantom(16, 16)
    tensors = good.tensors.copy()
    ys, xs = np.nonzero(good.support)
    tensors[ys[0], xs[0]] = np.diag([1e-3, -1e-3, 1e-3])
    with pytest.raises(ValueError):
        TensorPhantom(good.m0, tensors, good.support)


def test_spec_json_round_trip():
    spec = PhantomSpec()
    again = PhantomSpec.from_json(spec.to_json())
    a = make_phantom(24, 24, spec)
    b = make_phantom(24, 24, again)
    assert np.array_equal(a.m0, b.m0)
    assert np.array_equal(a.tensors, b.tensors)


def test_load_phantom_round_trip(tmp_path):
    phantom = make_phantom(20, 20)
    write_parr(tmp_path / "m0.parr", phantom.m0)
    write_parr(tmp_path / "tensors.parr", phantom.tensors)
    loaded = load_phantom(tmp_path)
    assert np.allclose(loaded.m0, phantom.m0, atol=1e-6)
    assert np.allclose(loaded.tensors, phantom.tensors, atol=1e-9)
    assert np.array_equal(loaded.support, phantom.support)


def test_load_phantom_missing_file(tmp_path):
    write_parr(tmp_path / "m0.parr", np.ones((4, 4)))
    with pytest.raises(DataError):
        load_phantom(tmp_path)


def test_load_phantom_shape_mismatch(tmp_path):
    write_parr(tmp_path / "m0.parr", np.ones((4, 4)))
    write_parr(tmp_path / "tensors.parr", np.zeros((5, 5, 3, 3)))
    with pytest.raises(DataError):
        load_phantom(tmp_path)
