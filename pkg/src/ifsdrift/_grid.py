"""Integer cell keys for spatial hashing on a uniform grid.

Cell index floor(x/h) per coordinate, packed into one int64 for d <= 3.
The packing budgets bits per dimension so no intermediate overflows:
d=1 uses the raw index, d=2 gets 31 bits per axis, d=3 gets 20.
"""

import numpy as np

from .errors import InvalidInputError

_BIAS = {2: np.int64(1) << 30, 3: np.int64(1) << 19}
_BASE = {2: np.int64(1) << 31, 3: np.int64(1) << 20}

MAX_GRID_DIM = 3


def cell_indices(points, resolution):
    return np.floor(points / resolution).astype(np.int64)


def pack_keys(idx):
    """Pack (n, d) integer cell indices into (n,) int64 keys."""
    d = idx.shape[1]
    if d == 1:
        return idx[:, 0].copy()
    if d not in _BIAS:
        raise InvalidInputError(f"grid keys support d <= {MAX_GRID_DIM}, got d={d}")
    bias, base = _BIAS[d], _BASE[d]
    if np.any(np.abs(idx) >= bias):
        raise InvalidInputError(
            "grid resolution too fine for the coordinate range"
        )
    key = idx[:, 0] + bias
    for axis in range(1, d):
        key = key * base + (idx[:, axis] + bias)
    return key


def unpack_keys(keys, d):
    """Inverse of pack_keys: (n,) int64 keys to (n, d) cell indices."""
    if d == 1:
        return keys.reshape(-1, 1).copy()
    bias, base = _BIAS[d], _BASE[d]
    out = np.empty((keys.shape[0], d), dtype=np.int64)
    rest = keys
    for axis in range(d - 1, 0, -1):
        out[:, axis] = rest % base - bias
        rest = rest // base
    out[:, 0] = rest - bias
    return out


def grid_keys(points, resolution):
    """int64 cell key for each row of ``points``."""
    return pack_keys(cell_indices(points, resolution))


def cell_centers(keys, resolution, d):
    """Center coordinates of the cells behind ``keys``."""
    return (unpack_keys(keys, d) + 0.5) * resolution
