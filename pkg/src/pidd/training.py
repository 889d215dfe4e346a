"""Training loop for the unrolled network: Adam on per-sample losses."""

import copy
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .network import (NetworkConfig, WeightSet, init_weights, loss_gradients,
                      multiblock_loss, unrolled_backward, unrolled_forward)
from .operators import coil_combine
from .parrio import read_parr, write_parr
from .synth import list_sample_dirs, load_manifest, load_sample
from .transforms import fft2c, ifft2c


@dataclass
class TrainConfig:
    """Optimizer schedule: Adam with per-epoch exponential lr decay."""

    epochs: int = 30
    lr: float = 1e-3
    decay: float = 0.99
    batch: int = 1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    loss_floor: float = 0.0

    def __post_init__(self):
        if self.epochs < 1 or self.batch < 1:
            raise ValueError("epochs and batch must be positive")
        if self.lr <= 0 or not 0 < self.decay <= 1:
            raise ValueError("bad learning rate schedule")

    def to_json(self):
        return {
            "epochs": self.epochs, "lr": self.lr, "decay": self.decay,
            "batch": self.batch, "beta1": self.beta1, "beta2": self.beta2,
            "eps": self.eps, "seed": self.seed, "loss_floor": self.loss_floor,
        }


def combined_target(label, coils):
    """Coil-combined per-shot k-space target from a fully sampled label."""
    return fft2c(coil_combine(ifft2c(np.asarray(label)), coils))


class TrainingSet:
    """Dataset pulled into memory as (measured, coils, mask, target)."""

    def __init__(self, samples):
        if not samples:
            raise DataError("empty training set")
        self.samples = samples

    def __len__(self):
        return len(self.samples)

    @classmethod
    def from_directory(cls, root):
        samples = []
        for dirpath in list_sample_dirs(root):
            sample = load_sample(dirpath)
            samples.append({
                "measured": sample.input_k,
                "coils": sample.coils,
                "mask": sample.mask,
                "target": combined_target(sample.label, sample.coils),
            })
        return cls(samples)


def _zero_like_weights(weights):
    return [[(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]
            for layers in weights.blocks]


def adam_init(weights):
    return {
        "step": 0,
        "m": _zero_like_weights(weights),
        "v": _zero_like_weights(weights),
    }


def adam_step(weights, grads, train_cfg, lr, freeze=()):
    """One Adam update in place; frozen tensor names are left untouched."""
    state = weights.opt_state
    state["step"] += 1
    t = state["step"]
    b1, b2, eps = train_cfg.beta1, train_cfg.beta2, train_cfg.eps
    for bi, layers in enumerate(weights.blocks):
        for li, (w, bias) in enumerate(layers):
            for kind, param, grad in (
                ("w", w, grads[bi][li][0]),
                ("b", bias, grads[bi][li][1]),
            ):
                name = "block%d_layer%d_%s" % (bi, li, kind)
                if name in freeze:
                    continue
                m = state["m"][bi][li][0 if kind == "w" else 1]
                v = state["v"][bi][li][0 if kind == "w" else 1]
                m *= b1
                m += (1 - b1) * grad
                v *= b2
                v += (1 - b2) * grad * grad
                mhat = m / (1 - b1 ** t)
                vhat = v / (1 - b2 ** t)
                param -= lr * mhat / (np.sqrt(vhat) + eps)


def train_step(weights, batch, train_cfg, lr, freeze=()):
    """Forward, backward and Adam update over one batch; returns the
    mean per-sample loss."""
    total = 0.0
    grads = None
    for entry in batch:
        outputs, cache = unrolled_forward(entry["measured"], entry["coils"],
                                          entry["mask"], weights,
                                          want_cache=True)
        total += multiblock_loss(outputs, entry["target"])
        gouts = loss_gradients(outputs, entry["target"])
        sample_grads = unrolled_backward(gouts, cache, weights)
        if grads is None:
            grads = sample_grads
        else:
            grads = [
                [(gw + sw, gb + sb) for (gw, gb), (sw, sb) in zip(gl, sl)]
                for gl, sl in zip(grads, sample_grads)
            ]
    n = len(batch)
    if n > 1:
        grads = [[(gw / n, gb / n) for gw, gb in layers] for layers in grads]
    loss = total / n
    if not np.isfinite(loss):
        raise NumericalError("loss went non-finite")
    adam_step(weights, grads, train_cfg, lr, freeze)
    return loss


def train_network(dataset, net_cfg, train_cfg, freeze=(), log=None):
    """Train from scratch on an in-memory TrainingSet.

    Returns (weights, history); history holds one record per epoch. On
    a non-finite loss the run aborts with a NumericalError whose
    ``checkpoint`` attribute carries the last completed epoch's weights.
    """
    nshots = dataset.samples[0]["measured"].shape[0]
    weights = init_weights(net_cfg, nshots)
    weights.opt_state = adam_init(weights)
    history = []
    checkpoint = None
    rng = np.random.default_rng(np.random.SeedSequence(train_cfg.seed,
                                                       spawn_key=(0,)))
    for epoch in range(train_cfg.epochs):
        lr = train_cfg.lr * train_cfg.decay ** epoch
        order = rng.permutation(len(dataset))
        losses = []
        try:
            for start in range(0, len(order), train_cfg.batch):
                batch = [dataset.samples[i]
                         for i in order[start:start + train_cfg.batch]]
                losses.append(train_step(weights, batch, train_cfg, lr, freeze))
        except NumericalError as exc:
            exc.checkpoint = checkpoint
            exc.history = history
            raise
        record = {"epoch": epoch, "lr": lr, "loss": float(np.mean(losses))}
        history.append(record)
        if log is not None:
            log(record)
        checkpoint = copy.deepcopy(weights)
        if record["loss"] <= train_cfg.loss_floor:
            break
    return weights, history


def save_weights(dirpath, weights, extra=None):
    """Write one PARR per tensor plus a manifest tying them together."""
    os.makedirs(dirpath, exist_ok=True)
    tensors = []
    for name, arr in weights.tensors().items():
        write_parr(os.path.join(dirpath, name + ".parr"), arr)
        tensors.append({"name": name, "file": name + ".parr",
                        "shape": list(arr.shape)})
    manifest = {
        "schema_version": 1,
        "kind": "weights",
        "network": weights.config.to_json(),
        "nshots": weights.nshots,
        "tensors": tensors,
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(dirpath, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_weights(dirpath):
    """Read weights saved by save_weights back into float64."""
    path = os.path.join(dirpath, "manifest.json")
    if not os.path.exists(path):
        raise DataError("%s: no weights manifest" % dirpath)
    with open(path) as fh:
        manifest = json.load(fh)
    if manifest.get("kind") != "weights":
        raise DataError("%s: not a weights manifest" % path)
    config = NetworkConfig.from_json(manifest["network"])
    nshots = manifest["nshots"]
    by_name = {}
    for entry in manifest["tensors"]:
        arr = read_parr(os.path.join(dirpath, entry["file"]))
        if list(arr.shape) != entry["shape"]:
            raise DataError("%s: tensor %s has shape %r, manifest says %r"
                            % (dirpath, entry["name"], arr.shape, entry["shape"]))
        by_name[entry["name"]] = arr.astype(np.float64)
    nblocks = 1 if config.share_weights else config.blocks
    blocks = []
    for b in range(nblocks):
        layers = []
        for l in range(config.layers):
            try:
                layers.append((by_name["block%d_layer%d_w" % (b, l)],
                               by_name["block%d_layer%d_b" % (b, l)]))
            except KeyError as exc:
                raise DataError("%s: missing tensor %s" % (dirpath, exc))
        blocks.append(layers)
    return WeightSet(blocks, nshots, config)
