"""Structured low-rank view of multi-shot k-space.

Sliding windows over every shot, stacked as matrix rows, have low rank
when the shots differ only by smooth phase modulations; truncating the
spectrum and scattering back suppresses whatever breaks that structure,
including unsampled regions under partial Fourier.
"""

import numpy as np

from .errors import NumericalError
from .pocs import data_consistency


def window_positions(ny, nx, window):
    return ny - window + 1, nx - window + 1


def structured_matrix(kspace, window):
    """Stack all fully interior window patches of every shot.

    Returns [rows, window^2 * shots] with one row per window position;
    columns run shot-major, then window offsets row-major.
    """
    kspace = np.asarray(kspace, dtype=np.complex128)
    if kspace.ndim != 3:
        raise ValueError("kspace must be [shots, ny, nx]")
    nshots, ny, nx = kspace.shape
    if window > min(ny, nx):
        raise ValueError("window exceeds the plane")
    view = np.lib.stride_tricks.sliding_window_view(kspace, (window, window),
                                                    axis=(1, 2))
    py, px = window_positions(ny, nx, window)
    return view.transpose(1, 2, 0, 3, 4).reshape(py * px,
                                                 nshots * window * window)


def structured_adjoint(matrix, nshots, ny, nx, window):
    """Scatter matrix rows back onto the k-space grid, summing overlaps."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    py, px = window_positions(ny, nx, window)
    expected = (py * px, nshots * window * window)
    if matrix.shape != expected:
        raise ValueError("matrix shape %r does not fit grid %r"
                         % (matrix.shape, expected))
    patches = matrix.reshape(py, px, nshots, window, window)
    out = np.zeros((nshots, ny, nx), dtype=np.complex128)
    for u in range(window):
        for v in range(window):
            out[:, u:u + py, v:v + px] += patches[:, :, :, u, v].transpose(2, 0, 1)
    return out


def coverage_counts(ny, nx, window):
    """How many windows cover each grid point."""
    def axis_counts(n):
        idx = np.arange(n)
        return np.minimum(idx, n - window) - np.maximum(0, idx - window + 1) + 1

    return np.outer(axis_counts(ny), axis_counts(nx)).astype(np.float64)


def svt_project(kspace, window, rank):
    """Truncate the structured matrix to ``rank`` and average back.

    Overlapping window contributions are divided by their coverage so an
    input whose structured matrix already has rank at most ``rank``
    passes through unchanged.
    """
    kspace = np.asarray(kspace, dtype=np.complex128)
    nshots, ny, nx = kspace.shape
    if rank < 0:
        raise ValueError("rank must be nonnegative")
    if rank == 0:
        return np.zeros_like(kspace)
    matrix = structured_matrix(kspace, window)
    if rank >= min(matrix.shape):
        return kspace.copy()
    try:
        u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("SVD failed in low-rank projection: %s" % exc)
    truncated = (u[:, :rank] * s[:rank]) @ vh[:rank]
    back = structured_adjoint(truncated, nshots, ny, nx, window)
    return back / coverage_counts(ny, nx, window)


def low_rank_complete(kspace, known, window, rank, passes=10):
    """Fill unknown entries by alternating truncation with data reset.

    ``known`` is a boolean (or 0/1) array marking trusted entries that
    are restored after every projection.
    """
    kspace = np.asarray(kspace, dtype=np.complex128)
    known = np.asarray(known, dtype=bool)
    if known.shape != kspace.shape:
        raise ValueError("known mask must match kspace")
    current = np.where(known, kspace, 0.0)
    measured = current.copy()
    for _ in range(passes):
        current = svt_project(current, window, rank)
        current[known] = measured[known]
    return current


def pf_postprocess(kspace, measured, coils, mask, config):
    """Partial-Fourier cleanup: alternate the low-rank projection with
    data consistency, ``config.pf_repeats`` times.

    When no rank is configured, half the structured matrix's column
    count is kept. Smooth shot phases concentrate the signal well below
    that cut, while hard truncation near the shot count discards real
    structure and visibly degrades the result.
    """
    if config.svt_rank is not None:
        rank = config.svt_rank
    else:
        rank = (kspace.shape[0] * config.window * config.window) // 2
    current = np.asarray(kspace, dtype=np.complex128)
    for _ in range(config.pf_repeats):
        current = svt_project(current, config.window, rank)
        current = data_consistency(current, measured, coils, mask, config.lam)
    return current
