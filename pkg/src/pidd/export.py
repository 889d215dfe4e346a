"""Render PARR tensors to 16-bit PGM images with linear scaling."""

import json
import math
import os

import numpy as np

from .errors import DataError

PGM_MAX = 65535


def write_pgm(path, values, lo=None, hi=None):
    """Write a 2-D float array as a binary 16-bit PGM.

    Values are scaled linearly from [lo, hi] onto [0, 65535]; the used
    bounds are written next to the image as <path>.json so the scaling
    can be undone.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    lo = float(values.min()) if lo is None else float(lo)
    hi = float(values.max()) if hi is None else float(hi)
    span = hi - lo
    if span <= 0:
        scaled = np.zeros(values.shape, dtype=np.uint16)
    else:
        frac = np.clip((values - lo) / span, 0.0, 1.0)
        scaled = np.round(frac * PGM_MAX).astype(np.uint16)
    ny, nx = values.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (nx, ny, PGM_MAX))
        fh.write(scaled.astype(">u2").tobytes())
    with open(path + ".json", "w") as fh:
        json.dump({"min": lo, "max": hi}, fh, sort_keys=True)
        fh.write("\n")


def read_pgm(path):
    """Read back a binary 16-bit PGM written by write_pgm."""
    with open(path, "rb") as fh:
        raw = fh.read()
    parts = raw.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise DataError("%s: not a binary PGM" % path)
    nx, ny = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    data = np.frombuffer(parts[3], dtype=">u2", count=ny * nx)
    return data.reshape(ny, nx).astype(np.uint16), maxval


def tile_planes(values):
    """Lay a stack of planes out side by side, or grid a 4-D stack."""
    values = np.asarray(values)
    if values.ndim == 2:
        return values
    if values.ndim == 3:
        n, ny, nx = values.shape
        return values.transpose(1, 0, 2).reshape(ny, n * nx)
    if values.ndim == 4:
        a, b, ny, nx = values.shape
        return values.transpose(0, 2, 1, 3).reshape(a * ny, b * nx)
    raise DataError("cannot tile a %d-D tensor" % values.ndim)


def export_magnitude(arr, path):
    write_pgm(path, tile_planes(np.abs(arr)))


def export_phase(arr, path):
    """Phase map scaled from [-pi, pi] to the full PGM range."""
    write_pgm(path, tile_planes(np.angle(arr)), lo=-math.pi, hi=math.pi)


def export_modulation_mosaic(mosaic, path_base):
    """Write the tiled modulation matrix as phase plus magnitude PGMs."""
    write_pgm(path_base + "_phase.pgm", np.angle(mosaic),
              lo=-math.pi, hi=math.pi)
    write_pgm(path_base + "_mag.pgm", np.abs(mosaic))


def pgm_paths(outdir, stem, kinds):
    return {kind: os.path.join(outdir, "%s_%s.pgm" % (stem, kind))
            for kind in kinds}
