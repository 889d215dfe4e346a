"""Optimizer behavior, training determinism, checkpoints, weight files."""

import numpy as np
import pytest

from conftest import build_scene
from pidd.errors import DataError, NumericalError
from pidd.network import NetworkConfig, init_weights
from pidd.operators import coil_combine
from pidd.parrio import write_parr
from pidd.synth import generate_dataset, SynthesisSpec
from pidd.training import (TrainConfig, TrainingSet, adam_init, adam_step,
                           combined_target, load_weights, save_weights,
                           train_network, train_step)
from pidd.transforms import fft2c, ifft2c


def _entries(count, **kw):
    out = []
    for i in range(count):
        sample, _, coils, mask = build_scene(index=i, **kw)
        out.append({
            "measured": sample.input_k,
            "coils": coils,
            "mask": mask,
            "target": combined_target(sample.label, coils),
        })
    return out


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(lr=0.0)
    with pytest.raises(ValueError):
        TrainConfig(decay=0.0)
    with pytest.raises(ValueError):
        TrainConfig(batch=0)


def test_combined_target_formula(scene16):
    sample, _, coils, _ = scene16
    want = fft2c(coil_combine(ifft2c(sample.label), coils))
    assert np.abs(combined_target(sample.label, coils) - want).max() < 1e-13


def test_adam_matches_hand_computation():
    # single scalar parameter, two steps against the textbook recursion
    # done in plain Python floats
    cfg = NetworkConfig(blocks=1, layers=1, ksize=1, seed=0)
    weights = init_weights(cfg, 1)
    w0 = float(weights.blocks[0][0][0].flat[0])
    weights.opt_state = adam_init(weights)
    tc = TrainConfig(lr=0.1)
    g1, g2 = 0.3, -0.2
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8

    def grad(val):
        g = np.zeros((2, 2, 1, 1))
        g.flat[0] = val
        return [[(g, np.zeros(2))]]

    adam_step(weights, grad(g1), tc, lr)
    m = (1 - b1) * g1
    v = (1 - b2) * g1 * g1
    w1 = w0 - lr * (m / (1 - b1)) / ((v / (1 - b2)) ** 0.5 + eps)
    assert abs(weights.blocks[0][0][0].flat[0] - w1) < 1e-12
    adam_step(weights, grad(g2), tc, lr)
    m = b1 * m + (1 - b1) * g2
    v = b2 * v + (1 - b2) * g2 * g2
    w2 = w1 - lr * (m / (1 - b1 ** 2)) / ((v / (1 - b2 ** 2)) ** 0.5 + eps)
    assert abs(weights.blocks[0][0][0].flat[0] - w2) < 1e-12


def test_adam_freeze_leaves_tensor_untouched():
    cfg = NetworkConfig(blocks=1, layers=2, features=8, seed=1)
    weights = init_weights(cfg, 2)
    weights.opt_state = adam_init(weights)
    before_w = weights.blocks[0][0][0].copy()
    before_b1 = weights.blocks[0][1][1].copy()
    grads = [[(np.ones_like(w), np.ones_like(b)) for w, b in weights.blocks[0]]]
    adam_step(weights, grads, TrainConfig(), 1e-2,
              freeze=("block0_layer0_w",))
    assert np.array_equal(weights.blocks[0][0][0], before_w)
    assert not np.array_equal(weights.blocks[0][1][1], before_b1)


def test_train_step_returns_mean_loss():
    entries = _entries(2, ny=12, nx=12, shots=2, coils=2, order=1, seed=21)
    cfg = NetworkConfig(blocks=1, layers=1, seed=2)
    weights = init_weights(cfg, 2)
    weights.opt_state = adam_init(weights)
    loss = train_step(weights, entries, TrainConfig(), 1e-3)
    assert np.isfinite(loss) and loss > 0


def test_train_step_raises_on_nan():
    entries = _entries(1, ny=12, nx=12, shots=2, coils=2, order=1, seed=22)
    entries[0]["target"] = entries[0]["target"] * np.nan
    cfg = NetworkConfig(blocks=1, layers=1, seed=2)
    weights = init_weights(cfg, 2)
    weights.opt_state = adam_init(weights)
    with pytest.raises(NumericalError):
        train_step(weights, entries, TrainConfig(), 1e-3)


def test_training_is_deterministic():
    entries = _entries(4, ny=12, nx=12, shots=2, coils=2, order=1,
                       snr=(15, 40), seed=23)
    net_cfg = NetworkConfig(blocks=2, layers=2, features=8, seed=7)
    train_cfg = TrainConfig(epochs=3, seed=7)
    wa, ha = train_network(TrainingSet(list(entries)), net_cfg, train_cfg)
    wb, hb = train_network(TrainingSet(list(entries)), net_cfg, train_cfg)
    assert ha == hb
    for (w1, b1), (w2, b2) in zip(
        [t for blk in wa.blocks for t in blk],
        [t for blk in wb.blocks for t in blk],
    ):
        assert np.array_equal(w1, w2)
        assert np.array_equal(b1, b2)


def test_training_reduces_loss():
    entries = _entries(6, ny=12, nx=12, shots=2, coils=2, order=1,
                       snr=(20, 40), seed=24)
    net_cfg = NetworkConfig(blocks=2, layers=2, features=8, seed=1)
    train_cfg = TrainConfig(epochs=6, lr=2e-3, seed=1)
    _, history = train_network(TrainingSet(entries), net_cfg, train_cfg)
    assert len(history) == 6
    assert history[-1]["loss"] < history[0]["loss"]
    # the schedule decays once per epoch
    lrs = [h["lr"] for h in history]
    assert np.allclose(lrs, 2e-3 * 0.99 ** np.arange(6))


def test_training_loss_floor_stops_early():
    entries = _entries(2, ny=12, nx=12, shots=2, coils=2, order=1, seed=25)
    net_cfg = NetworkConfig(blocks=1, layers=1, seed=1)
    train_cfg = TrainConfig(epochs=50, loss_floor=1e9, seed=1)
    _, history = train_network(TrainingSet(entries), net_cfg, train_cfg)
    assert len(history) == 1


def test_training_abort_without_progress_has_no_checkpoint():
    entries = _entries(2, ny=12, nx=12, shots=2, coils=2, order=1, seed=26)
    entries[1]["target"] = entries[1]["target"] * np.nan
    with pytest.raises(NumericalError) as info:
        train_network(TrainingSet(entries), NetworkConfig(blocks=1, layers=1, seed=1),
                      TrainConfig(epochs=4, seed=1))
    assert info.value.checkpoint is None
    assert info.value.history == []


def test_training_abort_carries_last_good_checkpoint():
    # poison the data once the first epoch completes; the error must
    # hand back the epoch-0 weights and history
    entries = _entries(2, ny=12, nx=12, shots=2, coils=2, order=1, seed=26)

    def poison(record):
        entries[0]["target"][:] = np.nan

    with pytest.raises(NumericalError) as info:
        train_network(TrainingSet(entries),
                      NetworkConfig(blocks=1, layers=1, seed=1),
                      TrainConfig(epochs=4, seed=1), log=poison)
    assert info.value.checkpoint is not None
    assert [r["epoch"] for r in info.value.history] == [0]
    for arr in info.value.checkpoint.tensors().values():
        assert np.all(np.isfinite(arr))


def test_training_log_callback():
    entries = _entries(2, ny=12, nx=12, shots=2, coils=2, order=1, seed=27)
    records = []
    train_network(TrainingSet(entries), NetworkConfig(blocks=1, layers=1, seed=1),
                  TrainConfig(epochs=2, seed=1), log=records.append)
    assert [r["epoch"] for r in records] == [0, 1]


def test_training_set_from_directory(tmp_path):
    spec = SynthesisSpec(ny=12, nx=12, shots=2, coils=2, phase_order=1,
                         snr_db=(20.0, 20.0))
    generate_dataset(spec, 3, 5, str(tmp_path))
    ds = TrainingSet.from_directory(str(tmp_path))
    assert len(ds) == 3
    entry = ds.samples[0]
    assert entry["measured"].shape == (2, 2, 12, 12)
    assert entry["target"].shape == (2, 12, 12)


def test_training_set_rejects_empty():
    with pytest.raises(DataError):
        TrainingSet([])


def test_weights_round_trip(tmp_path):
    cfg = NetworkConfig(blocks=2, layers=2, features=8, seed=3)
    weights = init_weights(cfg, 2)
    save_weights(str(tmp_path / "w"), weights, extra={"note": "test"})
    loaded = load_weights(str(tmp_path / "w"))
    assert loaded.config == cfg
    assert loaded.nshots == 2
    for name, arr in weights.tensors().items():
        got = loaded.tensors()[name]
        assert got.dtype == np.float64
        assert np.allclose(got, arr, atol=1e-6)


def test_load_weights_errors(tmp_path):
    with pytest.raises(DataError):
        load_weights(str(tmp_path))
    cfg = NetworkConfig(blocks=1, layers=1, seed=3)
    weights = init_weights(cfg, 2)
    save_weights(str(tmp_path / "w"), weights)
    # tamper a tensor shape
    write_parr(tmp_path / "w" / "block0_layer0_w.parr", np.zeros((1, 2, 3, 3)))
    with pytest.raises(DataError):
        load_weights(str(tmp_path / "w"))
