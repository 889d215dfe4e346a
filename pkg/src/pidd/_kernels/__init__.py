"""Convolution kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imported cleanly; setting
PIDD_PURE=1 forces the numpy implementation. Both expose the same
conv2d_same / conv2d_grad_weights pair on float64 arrays.
"""

import os

from . import convnp

if os.environ.get("PIDD_PURE"):
    _impl = convnp
else:
    try:
        from . import _convc as _impl
    except ImportError:
        _impl = convnp

BACKEND = _impl.BACKEND
conv2d_same = _impl.conv2d_same
conv2d_grad_weights = _impl.conv2d_grad_weights
