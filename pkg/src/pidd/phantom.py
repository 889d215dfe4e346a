"""Numerical diffusion phantom: piecewise-constant tensors on ellipses."""

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .parrio import read_parr


@dataclass
class TensorPhantom:
    """Proton density, 3x3 diffusion tensor field and object support."""

    m0: np.ndarray
    tensors: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        self.m0 = np.asarray(self.m0, dtype=np.float64)
        self.tensors = np.asarray(self.tensors, dtype=np.float64)
        self.support = np.asarray(self.support, dtype=bool)
        if self.m0.ndim != 2:
            raise ValueError("m0 must be [ny, nx]")
        if self.tensors.shape != self.m0.shape + (3, 3):
            raise ValueError("tensors must be [ny, nx, 3, 3]")
        if self.support.shape != self.m0.shape:
            raise ValueError("support must match m0")
        if np.any(self.m0 < 0):
            raise ValueError("m0 must be nonnegative")
        if np.any(self.m0[~self.support] != 0):
            raise ValueError("m0 must vanish off support")
        sym = np.abs(self.tensors - np.swapaxes(self.tensors, -1, -2))
        if sym.max() > 1e-12:
            raise ValueError("tensors must be symmetric")
        eigs = np.linalg.eigvalsh(self.tensors[self.support])
        if eigs.size and eigs.min() < -1e-16:
            raise ValueError("tensors must be positive semidefinite")

    @property
    def shape(self):
        return self.m0.shape


@dataclass
class EllipseRegion:
    """One elliptical patch: geometry in [-1, 1]^2 plus its tissue values.

    ``evals`` are the tensor eigenvalues in mm^2/s, ``axis_deg`` orients
    the principal eigenvector in the plane, ``tilt_deg`` pitches it out
    of plane.
    """

    center: tuple
    semiaxes: tuple
    angle_deg: float
    m0: float
    evals: tuple
    axis_deg: float = 0.0
    tilt_deg: float = 0.0


def _default_regions():
    iso = 0.8e-3
    return [
        EllipseRegion((0.0, 0.0), (0.82, 0.70), 8.0, 0.70,
                      (iso, iso, iso)),
        EllipseRegion((-0.28, 0.18), (0.30, 0.14), 25.0, 0.95,
                      (1.7e-3, 0.2e-3, 0.2e-3), axis_deg=25.0),
        EllipseRegion((0.30, 0.25), (0.18, 0.26), -15.0, 0.55,
                      (1.4e-3, 0.3e-3, 0.3e-3), axis_deg=105.0, tilt_deg=20.0),
        EllipseRegion((0.05, -0.33), (0.40, 0.16), 80.0, 0.80,
                      (1.2e-3, 0.45e-3, 0.25e-3), axis_deg=60.0, tilt_deg=-30.0),
        EllipseRegion((-0.05, -0.02), (0.10, 0.08), 0.0, 0.30,
                      (0.3e-3, 0.3e-3, 0.3e-3)),
    ]


@dataclass
class PhantomSpec:
    """Region list rendered back to front; first region is background."""

    regions: list = field(default_factory=_default_regions)

    def to_json(self):
        return [
            {
                "center": list(r.center),
                "semiaxes": list(r.semiaxes),
                "angle_deg": r.angle_deg,
                "m0": r.m0,
                "evals": list(r.evals),
                "axis_deg": r.axis_deg,
                "tilt_deg": r.tilt_deg,
            }
            for r in self.regions
        ]

    @classmethod
    def from_json(cls, data):
        return cls(
            [
                EllipseRegion(
                    tuple(r["center"]),
                    tuple(r["semiaxes"]),
                    r["angle_deg"],
                    r["m0"],
                    tuple(r["evals"]),
                    r.get("axis_deg", 0.0),
                    r.get("tilt_deg", 0.0),
                )
                for r in data
            ]
        )


def unit_grid(ny, nx):
    """Grid coordinates y, x, each spanning [-1, 1] endpoint to endpoint."""
    y = np.linspace(-1.0, 1.0, ny)
    x = np.linspace(-1.0, 1.0, nx)
    return np.meshgrid(y, x, indexing="ij")


def _region_tensor(region):
    a = np.deg2rad(region.axis_deg)
    t = np.deg2rad(region.tilt_deg)
    rz = np.array([[np.cos(a), -np.sin(a), 0.0],
                   [np.sin(a), np.cos(a), 0.0],
                   [0.0, 0.0, 1.0]])
    ry = np.array([[np.cos(t), 0.0, np.sin(t)],
                   [0.0, 1.0, 0.0],
                   [-np.sin(t), 0.0, np.cos(t)]])
    rot = rz @ ry
    return rot @ np.diag(region.evals) @ rot.T


def make_phantom(ny, nx, spec=None):
    """Render a PhantomSpec onto an ny-by-nx grid."""
    spec = spec or PhantomSpec()
    if not spec.regions:
        raise ValueError("phantom needs at least one region")
    yy, xx = unit_grid(ny, nx)
    m0 = np.zeros((ny, nx))
    tensors = np.zeros((ny, nx, 3, 3))
    support = np.zeros((ny, nx), dtype=bool)
    for region in spec.regions:
        ang = np.deg2rad(region.angle_deg)
        dy = yy - region.center[0]
        dx = xx - region.center[1]
        u = np.cos(ang) * dx + np.sin(ang) * dy
        v = -np.sin(ang) * dx + np.cos(ang) * dy
        inside = (u / region.semiaxes[1]) ** 2 + (v / region.semiaxes[0]) ** 2 <= 1.0
        m0[inside] = region.m0
        tensors[inside] = _region_tensor(region)
        support |= inside
    m0[~support] = 0.0
    return TensorPhantom(m0, tensors, support)


def load_phantom(dirpath):
    """Load an external phantom from ``m0.parr`` and ``tensors.parr``."""
    m0_path = os.path.join(dirpath, "m0.parr")
    t_path = os.path.join(dirpath, "tensors.parr")
    if not (os.path.exists(m0_path) and os.path.exists(t_path)):
        raise DataError("phantom directory needs m0.parr and tensors.parr")
    m0 = read_parr(m0_path).astype(np.float64)
    tensors = read_parr(t_path).astype(np.float64)
    if m0.ndim != 2 or tensors.shape != m0.shape + (3, 3):
        raise DataError("phantom tensors must be [ny, nx, 3, 3] matching m0")
    # symmetrize away the float32 storage wobble before validation
    tensors = 0.5 * (tensors + np.swapaxes(tensors, -1, -2))
    return TensorPhantom(m0, tensors, m0 > 0)


def fractional_anisotropy(evals):
    """FA of eigenvalue triples, an array of shape [..., 3]."""
    evals = np.asarray(evals, dtype=np.float64)
    mean = evals.mean(axis=-1, keepdims=True)
    num = np.sum((evals - mean) ** 2, axis=-1)
    den = np.sum(evals ** 2, axis=-1)
    out = np.zeros(np.broadcast_shapes(num.shape, den.shape))
    nz = den > 0
    out[nz] = np.sqrt(1.5 * num[nz] / den[nz])
    return out
