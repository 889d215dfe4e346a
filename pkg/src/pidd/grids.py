"""Array carriers with explicit axis semantics.

Complex tensors move through the pipeline as plain ndarrays with the two
trailing axes holding the (y, x) plane; ComplexGrid wraps one together
with a role label per axis so transforms can check what they are given.
"""

from dataclasses import dataclass, field

import numpy as np

SPACE_ROLES = ("space_y", "space_x")
FREQ_ROLES = ("freq_y", "freq_x")
KNOWN_ROLES = frozenset(
    ("shot", "coil", "batch", "component") + SPACE_ROLES + FREQ_ROLES
)


@dataclass
class ComplexGrid:
    """Complex tensor plus one role name per axis.

    The two trailing axes must be a (y, x) pair, either both spatial or
    both frequency; leading axes carry roles like shot or coil.
    """

    data: np.ndarray
    axis_roles: tuple

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        self.axis_roles = tuple(self.axis_roles)
        if len(self.axis_roles) != self.data.ndim:
            raise ValueError(
                "grid has %d axes but %d roles"
                % (self.data.ndim, len(self.axis_roles))
            )
        unknown = set(self.axis_roles) - KNOWN_ROLES
        if unknown:
            raise ValueError("unknown axis roles %r" % sorted(unknown))
        if self.data.ndim < 2 or self.axis_roles[-2:] not in (
            SPACE_ROLES,
            FREQ_ROLES,
        ):
            raise ValueError(
                "trailing axes must be (space_y, space_x) or (freq_y, freq_x),"
                " got %r" % (self.axis_roles[-2:],)
            )

    @property
    def in_space(self):
        return self.axis_roles[-2:] == SPACE_ROLES

    @property
    def plane_shape(self):
        return self.data.shape[-2:]


@dataclass
class SamplingMask:
    """Per-shot binary k-space masks, shape [shots, ny, nx].

    ``interleave`` records the shot count the pattern was built for and
    ``pf_rate`` the partial-Fourier fraction of retained ky lines.
    """

    shots: np.ndarray
    interleave: int
    pf_rate: float = 1.0

    def __post_init__(self):
        self.shots = np.asarray(self.shots, dtype=np.float64)
        if self.shots.ndim != 3:
            raise ValueError("mask must be [shots, ny, nx]")
        vals = np.unique(self.shots)
        if not np.all(np.isin(vals, (0.0, 1.0))):
            raise ValueError("mask entries must be 0 or 1")
        if self.shots.shape[0] != self.interleave:
            raise ValueError("mask holds %d shots, interleave says %d"
                             % (self.shots.shape[0], self.interleave))
        if not 0.0 < self.pf_rate <= 1.0:
            raise ValueError("pf_rate must be in (0, 1]")

    @property
    def nshots(self):
        return self.shots.shape[0]


def interleaved_mask(nshots, ny, nx, pf_rate=1.0):
    """Build the interleaved multi-shot mask.

    Shot j (1-based) keeps ky lines {j-1, j-1+J, j-1+2J, ...}; with
    pf_rate < 1 only lines below ceil(pf_rate * ny) are kept.
    """
    if nshots < 1:
        raise ValueError("need at least one shot")
    shots = np.zeros((nshots, ny, nx))
    limit = int(np.ceil(pf_rate * ny))
    for j in range(nshots):
        lines = np.arange(j, ny, nshots)
        shots[j, lines[lines < limit], :] = 1.0
    return SamplingMask(shots, nshots, pf_rate)


@dataclass
class CoilSet:
    """Receive sensitivity maps [coils, ny, nx] with a shared support.

    Inside the support the maps satisfy sum_h |C_h|^2 = 1; outside they
    are exactly zero.
    """

    maps: np.ndarray
    support: np.ndarray = field(default=None)

    def __post_init__(self):
        self.maps = np.asarray(self.maps, dtype=np.complex128)
        if self.maps.ndim != 3:
            raise ValueError("coil maps must be [coils, ny, nx]")
        if self.support is None:
            self.support = np.ones(self.maps.shape[1:], dtype=bool)
        self.support = np.asarray(self.support, dtype=bool)
        if self.support.shape != self.maps.shape[1:]:
            raise ValueError("support shape %r does not match maps %r"
                             % (self.support.shape, self.maps.shape))
        power = np.sum(np.abs(self.maps) ** 2, axis=0)
        if not np.allclose(power[self.support], 1.0, atol=1e-9):
            raise ValueError("coil power must be 1 on support")
        if np.any(power[~self.support] != 0.0):
            raise ValueError("coil maps must vanish off support")

    @property
    def ncoils(self):
        return self.maps.shape[0]
