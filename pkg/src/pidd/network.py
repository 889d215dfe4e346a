"""Unrolled reconstruction network with explicit backpropagation.

Each block applies the data-consistency update and then a small CNN
that mixes the shots in k-space; the CNN sees the complex per-shot
planes as interleaved real and imaginary channels. Gradients are
computed by hand: complex gradients are packed as d/dRe + i d/dIm, so
the backward pass of any complex-linear operator is its adjoint, and
the data-consistency update is self-adjoint in its linear part.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .pocs import data_consistency, zero_filled
from .transforms import ifft2c


@dataclass
class NetworkConfig:
    """Architecture and initialization of the unrolled network."""

    blocks: int = 10
    layers: int = 6
    features: int = 48
    ksize: int = 3
    share_weights: bool = False
    normalize: bool = True
    lam: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.blocks < 1 or self.layers < 1:
            raise ValueError("need at least one block and one layer")
        if self.features < 1:
            raise ValueError("features must be positive")
        if self.ksize < 1 or self.ksize % 2 == 0:
            raise ValueError("ksize must be odd")

    def to_json(self):
        return {
            "blocks": self.blocks,
            "layers": self.layers,
            "features": self.features,
            "ksize": self.ksize,
            "share_weights": self.share_weights,
            "normalize": self.normalize,
            "lam": self.lam,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data):
        return cls(**data)


def layer_channels(config, nshots):
    """(in, out) channel counts per layer for a given shot count."""
    data_ch = 2 * nshots
    if config.layers == 1:
        return [(data_ch, data_ch)]
    plan = [(data_ch, config.features)]
    plan += [(config.features, config.features)] * (config.layers - 2)
    plan.append((config.features, data_ch))
    return plan


@dataclass
class WeightSet:
    """Per-block convolution weights plus optimizer moments.

    ``blocks`` is a list of layers, each layer a (kernel, bias) pair;
    with shared weights the list has a single entry reused everywhere.
    """

    blocks: list
    nshots: int
    config: NetworkConfig
    opt_state: dict = field(default=None)

    def block(self, index):
        return self.blocks[0] if self.config.share_weights else self.blocks[index]

    def tensor_names(self):
        names = []
        for b, layers in enumerate(self.blocks):
            for l in range(len(layers)):
                names.append("block%d_layer%d_w" % (b, l))
                names.append("block%d_layer%d_b" % (b, l))
        return names

    def tensors(self):
        out = {}
        for b, layers in enumerate(self.blocks):
            for l, (w, bias) in enumerate(layers):
                out["block%d_layer%d_w" % (b, l)] = w
                out["block%d_layer%d_b" % (b, l)] = bias
        return out


def init_weights(config, nshots):
    """Xavier-uniform kernels, zero biases, seeded from the config."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    nblocks = 1 if config.share_weights else config.blocks
    plan = layer_channels(config, nshots)
    blocks = []
    for _ in range(nblocks):
        layers = []
        for in_ch, out_ch in plan:
            k = config.ksize
            limit = np.sqrt(6.0 / ((in_ch + out_ch) * k * k))
            w = rng.uniform(-limit, limit, size=(out_ch, in_ch, k, k))
            layers.append((w, np.zeros(out_ch)))
        blocks.append(layers)
    return WeightSet(blocks, nshots, config)


def identity_weights(config, nshots, signed=True):
    """Weights that pass the input through the CNN unchanged.

    With one layer the single linear kernel is an exact identity. With
    more layers the signed variant routes x as relu(x) - relu(-x),
    exact for every input but needing features >= 4 * nshots; the
    unsigned variant is a plain center-tap copy whose output is the
    ReLU of the input, exact only for nonnegative channels.
    """
    data_ch = 2 * nshots
    plan = layer_channels(config, nshots)
    if config.layers > 1:
        need = 2 * data_ch if signed else data_ch
        if config.features < need:
            raise ValueError("identity needs at least %d features" % need)
    mid = config.ksize // 2
    layers = []
    for idx, (in_ch, out_ch) in enumerate(plan):
        w = np.zeros((out_ch, in_ch, config.ksize, config.ksize))
        bias = np.zeros(out_ch)
        if config.layers == 1:
            for c in range(data_ch):
                w[c, c, mid, mid] = 1.0
        elif idx == 0:
            for c in range(data_ch):
                w[c, c, mid, mid] = 1.0
                if signed:
                    w[c + data_ch, c, mid, mid] = -1.0
        elif idx < config.layers - 1:
            span = 2 * data_ch if signed else data_ch
            for f in range(span):
                w[f, f, mid, mid] = 1.0
        else:
            for c in range(data_ch):
                w[c, c, mid, mid] = 1.0
                if signed:
                    w[c, c + data_ch, mid, mid] = -1.0
        layers.append((w, bias))
    nblocks = 1 if config.share_weights else config.blocks
    blocks = [[(w.copy(), b.copy()) for w, b in layers] for _ in range(nblocks)]
    return WeightSet(blocks, nshots, config)


def complex_to_channels(kspace):
    """[shots, ny, nx] complex to [2*shots, ny, nx] interleaved re, im."""
    nshots, ny, nx = kspace.shape
    out = np.empty((2 * nshots, ny, nx))
    out[0::2] = kspace.real
    out[1::2] = kspace.imag
    return out


def channels_to_complex(channels):
    """Inverse packing of complex_to_channels."""
    return channels[0::2] + 1j * channels[1::2]


def _flip_transpose(w):
    return w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)


def mkl_forward(kspace, block_weights, want_cache=False):
    """Run one block's CNN on complex per-shot k-space."""
    acts = [complex_to_channels(np.asarray(kspace, dtype=np.complex128))]
    pres = []
    last = len(block_weights) - 1
    for idx, (w, bias) in enumerate(block_weights):
        pre = _kernels.conv2d_same(acts[-1], w, bias)
        pres.append(pre)
        acts.append(np.maximum(pre, 0.0) if idx < last else pre)
    out = channels_to_complex(acts[-1])
    if want_cache:
        return out, {"acts": acts, "pres": pres}
    return out


def mkl_backward(grad_out, cache, block_weights):
    """Gradients of one block: returns (input gradient, weight grads)."""
    grad = complex_to_channels(np.asarray(grad_out, dtype=np.complex128))
    acts, pres = cache["acts"], cache["pres"]
    last = len(block_weights) - 1
    wgrads = [None] * len(block_weights)
    for idx in range(last, -1, -1):
        w, _ = block_weights[idx]
        if idx < last:
            grad = grad * (pres[idx] > 0.0)
        gw = _kernels.conv2d_grad_weights(acts[idx], grad, w.shape[-1])
        gb = grad.sum(axis=(1, 2))
        wgrads[idx] = (gw, gb)
        grad = _kernels.conv2d_same(grad, _flip_transpose(w),
                                    np.zeros(w.shape[1]))
    return channels_to_complex(grad), wgrads


def _norm_scale(measured):
    scale = np.linalg.norm(measured) / np.sqrt(measured.size)
    return scale if scale > 0 else 1.0


def unrolled_forward(measured, coils, mask, weights, want_cache=False):
    """Full unrolled pass; returns the per-block output list.

    ``weights`` may be None for the identity CNN, which makes the whole
    map linear in the measurements. With normalization enabled the pass
    runs on rescaled measurements and outputs are scaled back, so the
    map stays scale-equivariant across the wide dynamic range of
    diffusion-weighted data.
    """
    config = weights.config if weights is not None else NetworkConfig(
        blocks=1, normalize=False)
    scale = _norm_scale(np.asarray(measured)) if config.normalize else 1.0
    scaled = np.asarray(measured, dtype=np.complex128) / scale
    kspace = zero_filled(scaled, coils, mask)
    outputs = []
    caches = []
    for k in range(config.blocks):
        blended = data_consistency(kspace, scaled, coils, mask, config.lam)
        if weights is None:
            kspace, cache = blended, None
        else:
            kspace, cache = mkl_forward(blended, weights.block(k),
                                        want_cache=True)
        outputs.append(kspace * scale)
        caches.append(cache)
    if want_cache:
        return outputs, {"caches": caches, "scale": scale,
                         "coils": coils, "mask": mask, "config": config}
    return outputs


def extract_learned_modulations(weights, ny, nx, block=-1, amplitude=1.0):
    """Probe one block's CNN for its effective shot-to-shot modulations.

    Feeds an impulse of the given amplitude at the k-space center of
    each shot in turn and reads every output shot back in the image
    domain, normalized so a CNN that implemented the exact kernel
    interpolation would return the pairwise modulations over (J - 1).
    Returns [to_shot, from_shot, ny, nx]; self tiles show the block's
    own response, 1 for an identity CNN.
    """
    nshots = weights.nshots
    block_weights = weights.block(block)
    tiles = np.zeros((nshots, nshots, ny, nx), dtype=np.complex128)
    for j in range(nshots):
        probe = np.zeros((nshots, ny, nx), dtype=np.complex128)
        probe[j, ny // 2, nx // 2] = amplitude
        out = mkl_forward(probe, block_weights)
        tiles[:, j] = ifft2c(out) * (np.sqrt(ny * nx) / amplitude)
    return tiles


def multiblock_loss(outputs, target):
    """Mean squared error against the target, averaged over blocks."""
    target = np.asarray(target)
    total = 0.0
    for out in outputs:
        diff = out - target
        total += np.vdot(diff, diff).real
    return total / len(outputs)


def loss_gradients(outputs, target):
    """Packed complex gradients of multiblock_loss per block output."""
    target = np.asarray(target)
    k = len(outputs)
    return [2.0 * (out - target) / k for out in outputs]


def unrolled_backward(grad_outputs, cache, weights):
    """Backpropagate through every block down to the weights.

    ``grad_outputs`` holds one packed complex gradient per block output;
    returns gradients in the same nesting as ``weights.blocks``. The
    data-consistency linear part is self-adjoint, so its backward step
    reuses the forward update with no measurements.
    """
    coils, mask, config = cache["coils"], cache["mask"], cache["config"]
    scale = cache["scale"]
    nblocks = config.blocks
    shared = config.share_weights
    accum = None if shared else [None] * nblocks
    carried = 0.0
    for k in reversed(range(nblocks)):
        grad = grad_outputs[k] * scale + carried
        grad_z, wgrads = mkl_backward(grad, cache["caches"][k],
                                      weights.block(k))
        if shared:
            accum = wgrads if accum is None else [
                (aw + bw, ab + bb)
                for (aw, ab), (bw, bb) in zip(accum, wgrads)
            ]
        else:
            accum[k] = wgrads
        carried = data_consistency(grad_z, None, coils, mask, config.lam)
    return [accum] if shared else accum
