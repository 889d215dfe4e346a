"""Reader and writer for the PARR binary tensor format.

Layout: magic ``PARR``, then little-endian u32 version (1), u32 dtype code
(1 = float32, 2 = complex64 stored as interleaved re,im float32 pairs),
u32 ndim, ndim u64 dims, then the payload in row-major order.
"""

import struct

import numpy as np

from .errors import DataError

MAGIC = b"PARR"
VERSION = 1
DTYPE_F32 = 1
DTYPE_C64 = 2

_CODES = {DTYPE_F32: np.float32, DTYPE_C64: np.complex64}


def write_parr(path, arr):
    """Write a real or complex array to ``path``.

    Real input is stored as float32, complex as complex64; wider inputs
    are cast down. Returns the stored array so callers can keep the
    round-tripped values.
    """
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        code, stored = DTYPE_C64, np.ascontiguousarray(arr, dtype=np.complex64)
    else:
        code, stored = DTYPE_F32, np.ascontiguousarray(arr, dtype=np.float32)
    header = MAGIC + struct.pack("<III", VERSION, code, stored.ndim)
    header += struct.pack("<%dQ" % stored.ndim, *stored.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(stored.tobytes())
    return stored


def read_parr(path):
    """Read a PARR file, returning a float32 or complex64 array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise DataError("%s: not a PARR file" % path)
    version, code, ndim = struct.unpack_from("<III", raw, 4)
    if version != VERSION:
        raise DataError("%s: unsupported PARR version %d" % (path, version))
    if code not in _CODES:
        raise DataError("%s: unknown dtype code %d" % (path, code))
    if len(raw) < 16 + 8 * ndim:
        raise DataError("%s: truncated header" % path)
    dims = struct.unpack_from("<%dQ" % ndim, raw, 16)
    dtype = np.dtype(_CODES[code]).newbyteorder("<")
    count = int(np.prod(dims)) if ndim else 1
    payload = raw[16 + 8 * ndim:]
    if len(payload) != count * dtype.itemsize:
        raise DataError(
            "%s: payload holds %d bytes, dims %r need %d"
            % (path, len(payload), dims, count * dtype.itemsize)
        )
    arr = np.frombuffer(payload, dtype=dtype).reshape(dims)
    return arr.astype(_CODES[code])
