"""Finite families of Lipschitz self-maps of R^d and their derived constants.

Affine maps get their Lipschitz constant (operator 2-norm of the matrix)
computed automatically; general maps carry a user-supplied constant.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "AffineMap",
    "GeneralMap",
    "MapFamily",
    "lipschitz_constant",
    "apply",
    "absorbing_radius",
]


def operator_norm(matrix):
    """Largest singular value of ``matrix`` (the operator 2-norm)."""
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputError("matrix entries must be finite")
    return float(np.linalg.svd(matrix, compute_uv=False)[0])


class AffineMap:
    """The map x -> A x + b with its cached Lipschitz constant.

    Immutable after construction; the cached constant is read in hot loops.
    """

    __slots__ = ("matrix", "offset", "lipschitz")

    def __init__(self, matrix, offset):
        matrix = np.array(matrix, dtype=float)
        offset = np.array(offset, dtype=float).reshape(-1)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidInputError("matrix must be square")
        if offset.shape[0] != matrix.shape[0]:
            raise InvalidInputError(
                "matrix and offset dimensions disagree: "
                f"{matrix.shape} vs {offset.shape}"
            )
        if not np.all(np.isfinite(offset)):
            raise InvalidInputError("offset entries must be finite")
        matrix.setflags(write=False)
        offset.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "lipschitz", operator_norm(matrix))

    def __setattr__(self, name, value):
        raise AttributeError("AffineMap is immutable")

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def apply(self, x):
        """Image A x + b of a single point."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dimension:
            raise InvalidInputError(
                f"point has dimension {x.shape[0]}, map expects {self.dimension}"
            )
        return self.matrix @ x + self.offset

    def apply_many(self, points):
        """Image of an (n, d) array of points."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dimension:
            raise InvalidInputError("points must have shape (n, d)")
        return points @ self.matrix.T + self.offset

    def __repr__(self):
        return f"AffineMap(d={self.dimension}, lipschitz={self.lipschitz:.6g})"


class GeneralMap:
    """Arbitrary Lipschitz self-map with a user-supplied constant.

    ``fn`` must accept an (n, d) array and return an (n, d) array.
    No automatic norm computation is attempted.
    """

    __slots__ = ("fn", "lipschitz", "_dimension")

    def __init__(self, fn, lipschitz, dimension):
        if lipschitz < 0:
            raise InvalidInputError("lipschitz constant must be >= 0")
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "lipschitz", float(lipschitz))
        object.__setattr__(self, "_dimension", int(dimension))

    def __setattr__(self, name, value):
        raise AttributeError("GeneralMap is immutable")

    @property
    def dimension(self):
        return self._dimension

    def apply(self, x):
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return np.asarray(self.fn(x), dtype=float).reshape(-1)

    def apply_many(self, points):
        return np.asarray(self.fn(np.asarray(points, dtype=float)), dtype=float)


class MapFamily:
    """Ordered finite family of Lipschitz self-maps sharing one dimension.

    Map indices are 1-based in the public API.
    """

    def __init__(self, maps):
        maps = tuple(maps)
        if len(maps) < 1:
            raise InvalidInputError("family must contain at least one map")
        d = maps[0].dimension
        for f in maps[1:]:
            if f.dimension != d:
                raise InvalidInputError("all maps must share the same dimension")
        self._maps = maps
        self._dimension = d
        self._lipschitz = np.array([f.lipschitz for f in maps])
        self._affine = all(isinstance(f, AffineMap) for f in maps)
        if self._affine:
            self._matrices = np.ascontiguousarray(
                np.stack([f.matrix for f in maps])
            )
            self._offsets = np.ascontiguousarray(
                np.stack([f.offset for f in maps])
            )
        else:
            self._matrices = None
            self._offsets = None

    def __len__(self):
        return len(self._maps)

    def __iter__(self):
        return iter(self._maps)

    @property
    def size(self):
        return len(self._maps)

    @property
    def dimension(self):
        return self._dimension

    @property
    def is_affine(self):
        return self._affine

    @property
    def lipschitz_constants(self):
        """Array of the m cached Lipschitz constants (index j-1 holds L_j)."""
        return self._lipschitz.copy()

    def map(self, j):
        """The j-th map, 1-based."""
        if not 1 <= j <= len(self._maps):
            raise InvalidInputError(f"map index {j} outside [1, {len(self._maps)}]")
        return self._maps[j - 1]

    def arrays(self):
        """Stacked (matrices, offsets) for the affine fast path."""
        if not self._affine:
            raise InvalidInputError("family contains non-affine maps")
        return self._matrices, self._offsets

    def apply_many(self, j, points):
        """Image of an (n, d) point array under the j-th map, 1-based."""
        return self.map(j).apply_many(points)


def lipschitz_constant(affine_map):
    """Operator 2-norm of the map's matrix (cached at construction)."""
    return affine_map.lipschitz


def apply(affine_map, x):
    """A x + b for one point; dimension-checked."""
    return affine_map.apply(x)


def absorbing_radius(family):
    """Radius of a ball at the origin mapped into itself by every family member.

    Returns max_j ||b_j|| / (1 - L_max) when L_max < 1, else None: with
    ||x|| <= R every image satisfies ||A x + b|| <= L_max R + ||b|| <= R.
    Only meaningful for affine families; general maps have no offset, so the
    same bound is computed from ||f(0)|| instead.
    """
    lmax = float(np.max(family.lipschitz_constants))
    if lmax >= 1.0:
        return None
    norms = []
    for f in family:
        if isinstance(f, AffineMap):
            norms.append(float(np.linalg.norm(f.offset)))
        else:
            norms.append(float(np.linalg.norm(f.apply(np.zeros(family.dimension)))))
    return max(norms) / (1.0 - lmax)
