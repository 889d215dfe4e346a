"""Pure numpy convolution backend built on an im2col matmul."""

import numpy as np

BACKEND = "numpy"


def _col_view(padded, ksize, ny, nx):
    c, s0, s1, s2 = padded.shape[0], *padded.strides
    return np.lib.stride_tricks.as_strided(
        padded, (c, ksize, ksize, ny, nx), (s0, s1, s2, s1, s2)
    )


def conv2d_same(x, weights, bias):
    """Zero-padded same-size 2-D correlation.

    x is [in_ch, ny, nx], weights [out_ch, in_ch, k, k], bias [out_ch];
    returns [out_ch, ny, nx].
    """
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    out_ch, in_ch, ksize, _ = weights.shape
    _, ny, nx = x.shape
    pad = ksize // 2
    padded = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    cols = _col_view(padded, ksize, ny, nx).reshape(in_ch * ksize * ksize, ny * nx)
    out = weights.reshape(out_ch, -1) @ cols
    return out.reshape(out_ch, ny, nx) + bias[:, None, None]


def conv2d_grad_weights(x, grad_out, ksize):
    """Weight gradient of conv2d_same given the output gradient."""
    x = np.asarray(x, dtype=np.float64)
    grad_out = np.asarray(grad_out, dtype=np.float64)
    out_ch = grad_out.shape[0]
    in_ch, ny, nx = x.shape
    pad = ksize // 2
    padded = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    cols = _col_view(padded, ksize, ny, nx).reshape(in_ch * ksize * ksize, ny * nx)
    grads = grad_out.reshape(out_ch, -1) @ cols.T
    return grads.reshape(out_ch, in_ch, ksize, ksize)
