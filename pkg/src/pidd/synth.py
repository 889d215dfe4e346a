"""Synthesis of paired multi-shot diffusion data.

A sample couples a clean multi-shot, multi-coil k-space label with its
undersampled noisy input. Shot-to-shot motion enters as a random
polynomial phase on the image before the coil projection, so the label
already carries the inconsistency a reconstruction has to resolve.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .grids import CoilSet, SamplingMask, interleaved_mask
from .operators import apply_mask, coil_expand
from .parrio import read_parr, write_parr
from .phantom import PhantomSpec, TensorPhantom, make_phantom, unit_grid
from .transforms import fft2c

DEFAULT_B_VALUES = (1000.0, 2000.0, 3000.0, 4000.0)
DEFAULT_DIRECTIONS = ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0))

# uniform coefficient ranges per polynomial order: wide for the low
# orders that dominate rigid motion, half as wide above order 2
LOW_ORDER_RANGE = (-math.pi, math.pi)
HIGH_ORDER_RANGE = (-math.pi / 2, math.pi / 2)
MAX_DEFAULT_ORDER = 5


@dataclass
class DiffusionProtocol:
    """One diffusion weighting: b value in s/mm^2 and unit direction."""

    b_value: float
    direction: tuple

    def __post_init__(self):
        if self.b_value < 0:
            raise ValueError("b value must be nonnegative")
        g = np.asarray(self.direction, dtype=np.float64)
        if g.shape != (3,):
            raise ValueError("direction must be a 3-vector")
        norm = np.linalg.norm(g)
        if norm == 0:
            if self.b_value != 0:
                raise ValueError("zero direction needs b = 0")
        else:
            g = g / norm
        self.direction = tuple(g)


def ncoeffs(order):
    return (order + 1) * (order + 2) // 2


@dataclass
class PolynomialPhaseCoeffs:
    """Coefficients A_lm of a 2-D polynomial phase.

    ``values`` runs over (l, m) with l = 0..order outer and m = 0..l
    inner; term (l, m) multiplies x^m y^(l-m) on the [-1, 1]^2 grid.
    """

    order: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.order < 0:
            raise ValueError("order must be nonnegative")
        if self.values.shape != (ncoeffs(self.order),):
            raise ValueError(
                "order %d needs %d coefficients, got %r"
                % (self.order, ncoeffs(self.order), self.values.shape)
            )


def sample_phase_coeffs(rng, order, ranges=None):
    """Draw polynomial phase coefficients uniformly.

    Orders up to 2 use [-pi, pi), orders 3..5 half that; above order 5
    a ``ranges`` mapping {order: (lo, hi)} must cover every order.
    """
    values = np.empty(ncoeffs(order))
    idx = 0
    for l in range(order + 1):
        if ranges is not None and l in ranges:
            lo, hi = ranges[l]
        elif l <= 2:
            lo, hi = LOW_ORDER_RANGE
        elif l <= MAX_DEFAULT_ORDER:
            lo, hi = HIGH_ORDER_RANGE
        else:
            raise ValueError(
                "no default coefficient range above order %d; pass ranges"
                % MAX_DEFAULT_ORDER
            )
        for _ in range(l + 1):
            values[idx] = rng.uniform(lo, hi)
            idx += 1
    return PolynomialPhaseCoeffs(order, values)


def synth_motion_phase(coeffs, ny, nx):
    """Evaluate a phase polynomial on the normalized image grid."""
    yy, xx = unit_grid(ny, nx)
    phase = np.zeros((ny, nx))
    idx = 0
    for l in range(coeffs.order + 1):
        for m in range(l + 1):
            phase += coeffs.values[idx] * xx ** m * yy ** (l - m)
            idx += 1
    return phase


def synth_magnitude(phantom, protocol):
    """Diffusion-weighted magnitude m0 * exp(-b g^T D g)."""
    g = np.asarray(protocol.direction)
    att = np.einsum("yxab,a,b->yx", phantom.tensors, g, g)
    return phantom.m0 * np.exp(-protocol.b_value * att)


def make_coils(ncoils, ny, nx, support=None):
    """Smooth synthetic receive maps, unit total power on the support.

    Each coil is a Gaussian sensitivity lobe centered on a ring around
    the object with a mild linear phase ramp; the stack is normalized
    voxelwise so coil_combine(coil_expand(x)) = x on the support.
    """
    if ncoils < 1:
        raise ValueError("need at least one coil")
    yy, xx = unit_grid(ny, nx)
    maps = np.zeros((ncoils, ny, nx), dtype=np.complex128)
    radius, width, ramp = 0.55, 0.9, 0.5
    for h in range(ncoils):
        theta = 2.0 * math.pi * h / ncoils
        cy, cx = radius * math.sin(theta), radius * math.cos(theta)
        lobe = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * width ** 2))
        if ncoils > 1:
            phase = math.pi * ramp * (math.cos(theta) * xx + math.sin(theta) * yy)
            maps[h] = lobe * np.exp(1j * (phase + theta))
        else:
            maps[h] = lobe
    power = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    if support is None:
        support = np.ones((ny, nx), dtype=bool)
    support = np.asarray(support, dtype=bool)
    maps = np.where(support, maps / power, 0.0)
    return CoilSet(maps, support)


def assemble_ground_truth(magnitude, phases, coils):
    """Fully sampled label: DFT of each phase-modulated, coil-weighted shot.

    Returns [shots, coils, ny, nx] k-space.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    phases = np.asarray(phases, dtype=np.float64)
    if phases.ndim != 3 or phases.shape[1:] != magnitude.shape:
        raise ValueError("phases must be [shots, ny, nx] over the image grid")
    shots = magnitude * np.exp(1j * phases)
    return fft2c(coil_expand(shots, coils))


def add_noise(kspace, snr_db, rng):
    """Add white complex Gaussian noise at a target SNR in dB.

    The per-entry noise power is set against the mean signal power of
    ``kspace``; an infinite target returns the input unchanged.
    """
    kspace = np.asarray(kspace, dtype=np.complex128)
    if snr_db is None or math.isinf(snr_db):
        return kspace.copy()
    power = np.mean(np.abs(kspace) ** 2)
    sigma = math.sqrt(power * 10.0 ** (-snr_db / 10.0))
    noise = rng.normal(size=kspace.shape) + 1j * rng.normal(size=kspace.shape)
    return kspace + (sigma / math.sqrt(2.0)) * noise


@dataclass
class MultiShotSample:
    """One paired training example plus its generation record."""

    label: np.ndarray
    input_k: np.ndarray
    mask: SamplingMask
    coils: CoilSet
    phases: np.ndarray
    meta: dict

    def __post_init__(self):
        self.label = np.asarray(self.label, dtype=np.complex128)
        self.input_k = np.asarray(self.input_k, dtype=np.complex128)
        self.phases = np.asarray(self.phases, dtype=np.float64)
        if self.label.ndim != 4:
            raise ValueError("label must be [shots, coils, ny, nx]")
        if self.input_k.shape != self.label.shape:
            raise ValueError("input must match label shape")
        nshots, ncoils, ny, nx = self.label.shape
        if self.mask.shots.shape != (nshots, ny, nx):
            raise ValueError("mask does not match label geometry")
        if self.coils.maps.shape != (ncoils, ny, nx):
            raise ValueError("coils do not match label geometry")
        if self.phases.shape != (nshots, ny, nx):
            raise ValueError("phases must be [shots, ny, nx]")
        off = self.input_k * (1.0 - self.mask.shots[:, None])
        if np.any(off != 0):
            raise ValueError("input must vanish on unsampled entries")

    @property
    def shape(self):
        return self.label.shape


@dataclass
class SynthesisSpec:
    """Everything that defines a dataset apart from count and seed."""

    ny: int = 64
    nx: int = 64
    shots: int = 4
    coils: int = 8
    phase_order: int = 5
    b_values: tuple = DEFAULT_B_VALUES
    directions: tuple = DEFAULT_DIRECTIONS
    snr_db: tuple = (10.0, 50.0)
    pf_rate: float = 1.0
    phantom: PhantomSpec = field(default_factory=PhantomSpec)

    def __post_init__(self):
        if self.ny < 2 or self.nx < 2:
            raise ValueError("grid must be at least 2x2")
        if self.shots < 1 or self.coils < 1:
            raise ValueError("need at least one shot and one coil")
        if not self.b_values or any(b < 0 for b in self.b_values):
            raise ValueError("b values must be nonnegative and nonempty")
        if not self.directions:
            raise ValueError("need at least one direction")
        if self.snr_db is not None:
            lo, hi = self.snr_db
            if lo > hi:
                raise ValueError("snr range inverted")

    def to_json(self):
        return {
            "ny": self.ny,
            "nx": self.nx,
            "shots": self.shots,
            "coils": self.coils,
            "phase_order": self.phase_order,
            "b_values": list(self.b_values),
            "directions": [list(g) for g in self.directions],
            "snr_db": list(self.snr_db) if self.snr_db is not None else None,
            "pf_rate": self.pf_rate,
            "phantom": self.phantom.to_json(),
        }

    @classmethod
    def from_json(cls, data):
        return cls(
            ny=data["ny"],
            nx=data["nx"],
            shots=data["shots"],
            coils=data["coils"],
            phase_order=data["phase_order"],
            b_values=tuple(data["b_values"]),
            directions=tuple(tuple(g) for g in data["directions"]),
            snr_db=tuple(data["snr_db"]) if data["snr_db"] is not None else None,
            pf_rate=data["pf_rate"],
            phantom=PhantomSpec.from_json(data["phantom"]),
        )


def sample_rng(base_seed, index):
    """Independent per-sample generator; index order never matters."""
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(index,)))


def make_sample(spec, phantom, coils, mask, rng, base_seed=None, index=None):
    """Draw one sample. The rng is consumed in a fixed documented order:
    b value, direction, per-shot phase coefficients, SNR, then noise."""
    b = float(spec.b_values[rng.integers(len(spec.b_values))])
    g = spec.directions[rng.integers(len(spec.directions))]
    protocol = DiffusionProtocol(b, g)
    coeffs = [sample_phase_coeffs(rng, spec.phase_order) for _ in range(spec.shots)]
    snr = None if spec.snr_db is None else float(rng.uniform(*spec.snr_db))
    magnitude = synth_magnitude(phantom, protocol)
    phases = np.stack(
        [synth_motion_phase(c, spec.ny, spec.nx) for c in coeffs]
    )
    label = assemble_ground_truth(magnitude, phases, coils)
    noisy = add_noise(label, snr, rng)
    input_k = apply_mask(noisy, mask)
    meta = {
        "b": b,
        "g": list(protocol.direction),
        "L": spec.phase_order,
        "coeffs": [c.values.tolist() for c in coeffs],
        "snr_db": snr,
        "seed": base_seed,
        "index": index,
        "dims": {"shots": spec.shots, "coils": spec.coils,
                 "ny": spec.ny, "nx": spec.nx},
    }
    return MultiShotSample(label, input_k, mask, coils, phases, meta)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_sample(dirpath, sample):
    os.makedirs(dirpath, exist_ok=True)
    write_parr(os.path.join(dirpath, "label.parr"), sample.label)
    write_parr(os.path.join(dirpath, "input.parr"), sample.input_k)
    write_parr(os.path.join(dirpath, "mask.parr"), sample.mask.shots)
    write_parr(os.path.join(dirpath, "coils.parr"), sample.coils.maps)
    write_parr(os.path.join(dirpath, "phases.parr"), sample.phases)
    _write_json(os.path.join(dirpath, "meta.json"), sample.meta)


def sample_dir(root, index):
    return os.path.join(root, "samples", "%06d" % index)


_WORKER = {}


def _init_worker(spec_json, base_seed, root):
    spec = SynthesisSpec.from_json(spec_json)
    _WORKER.update(spec=spec, base_seed=base_seed, root=root,
                   **_fixed_parts(spec))


def _fixed_parts(spec):
    phantom = make_phantom(spec.ny, spec.nx, spec.phantom)
    coils = make_coils(spec.coils, spec.ny, spec.nx)
    mask = interleaved_mask(spec.shots, spec.ny, spec.nx, spec.pf_rate)
    return {"phantom": phantom, "coils": coils, "mask": mask}


def _make_one(index):
    w = _WORKER
    rng = sample_rng(w["base_seed"], index)
    sample = make_sample(w["spec"], w["phantom"], w["coils"], w["mask"],
                         rng, w["base_seed"], index)
    write_sample(sample_dir(w["root"], index), sample)
    return index


def generate_dataset(spec, count, base_seed, root, jobs=1):
    """Write a dataset tree: manifest, object support, one dir per sample."""
    if count < 1:
        raise ValueError("count must be positive")
    os.makedirs(root, exist_ok=True)
    fixed = _fixed_parts(spec)
    manifest = {
        "schema_version": 1,
        "kind": "dataset",
        "spec": spec.to_json(),
        "count": count,
        "base_seed": base_seed,
    }
    _write_json(os.path.join(root, "manifest.json"), manifest)
    write_parr(os.path.join(root, "support.parr"),
               fixed["phantom"].support.astype(np.float64))
    if jobs > 1:
        with ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_init_worker,
            initargs=(spec.to_json(), base_seed, root),
        ) as pool:
            list(pool.map(_make_one, range(count), chunksize=8))
    else:
        _init_worker(spec.to_json(), base_seed, root)
        for index in range(count):
            _make_one(index)
    return manifest


def load_manifest(root):
    path = os.path.join(root, "manifest.json")
    if not os.path.exists(path):
        raise DataError("%s: no manifest.json" % root)
    with open(path) as fh:
        manifest = json.load(fh)
    if manifest.get("kind") != "dataset" or "spec" not in manifest:
        raise DataError("%s: not a dataset manifest" % path)
    return manifest


def load_support(root):
    """Object support mask; rebuilt from the manifest if the file is gone."""
    path = os.path.join(root, "support.parr")
    if os.path.exists(path):
        return read_parr(path).astype(bool)
    manifest = load_manifest(root)
    spec = SynthesisSpec.from_json(manifest["spec"])
    return make_phantom(spec.ny, spec.nx, spec.phantom).support


def load_sample(dirpath):
    """Read one sample directory back into float64/complex128 arrays."""
    try:
        label = read_parr(os.path.join(dirpath, "label.parr")).astype(np.complex128)
        input_k = read_parr(os.path.join(dirpath, "input.parr")).astype(np.complex128)
        mask_arr = read_parr(os.path.join(dirpath, "mask.parr")).astype(np.float64)
        coil_maps = read_parr(os.path.join(dirpath, "coils.parr")).astype(np.complex128)
        phases = read_parr(os.path.join(dirpath, "phases.parr")).astype(np.float64)
        with open(os.path.join(dirpath, "meta.json")) as fh:
            meta = json.load(fh)
    except OSError as exc:
        raise DataError("%s: unreadable sample (%s)" % (dirpath, exc))
    # renormalize away float32 storage wobble so CoilSet invariants hold
    power = np.sum(np.abs(coil_maps) ** 2, axis=0)
    on = power > 0.5
    coil_maps = np.where(on, coil_maps / np.sqrt(np.where(on, power, 1.0)), 0.0)
    coils = CoilSet(coil_maps, on)
    covered = np.flatnonzero(mask_arr.any(axis=(0, 2)))
    pf_rate = (covered.max() + 1) / mask_arr.shape[1] if covered.size else 1.0
    mask = SamplingMask(mask_arr, mask_arr.shape[0], float(pf_rate))
    try:
        return MultiShotSample(label, input_k, mask, coils, phases, meta)
    except ValueError as exc:
        raise DataError("%s: inconsistent sample (%s)" % (dirpath, exc))


def list_sample_dirs(root):
    base = os.path.join(root, "samples")
    if not os.path.isdir(base):
        raise DataError("%s: no samples directory" % root)
    return [os.path.join(base, name) for name in sorted(os.listdir(base))]
