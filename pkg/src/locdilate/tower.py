"""Finite towers H_0 c H_1 c ... c H_{L-1} of coordinate Hilbert spaces.

Level ``lam`` is the span of the first ``dims[lam]`` coordinates of
C^{dims[-1]}, so every inclusion is the zero-padding isometry and every
orthogonal projection onto a lower level is truncation.  Levels are
0-based throughout the package.

Inner products are linear in the first argument and conjugate-linear in
the second: ``<h, k> = sum(h * conj(k))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidLevelError, StructuralError


@dataclass(frozen=True)
class Tower:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise StructuralError("a tower needs at least one level")
        # a zero bottom level is allowed: rank-zero Gram blocks produce one
        if dims[0] < 0 or any(b < a for a, b in zip(dims, dims[1:])):
            raise StructuralError(f"tower dimensions must be non-negative and non-decreasing, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_levels(self) -> int:
        return len(self.dims)

    @property
    def top(self) -> int:
        return len(self.dims) - 1

    @property
    def dim(self) -> int:
        """Dimension of the top level."""
        return self.dims[-1]

    @property
    def increments(self) -> tuple[int, ...]:
        """Dimensions of H_k minus H_{k-1} (H_{-1} = 0)."""
        prev = (0,) + self.dims[:-1]
        return tuple(b - a for a, b in zip(prev, self.dims))

    @property
    def offsets(self) -> tuple[int, ...]:
        return (0,) + self.dims[:-1]

    def increment_slice(self, k: int) -> slice:
        return slice(self.offsets[k], self.dims[k])

    def check_level(self, lam: int) -> int:
        if not 0 <= lam < self.n_levels:
            raise InvalidLevelError(f"level {lam} outside 0..{self.top}")
        return lam

    def truncated(self, lam0: int) -> Tower:
        """H_{lam0} viewed as a locally Hilbert space: dims min(d_lam0, d_lam)."""
        self.check_level(lam0)
        d0 = self.dims[lam0]
        return Tower(tuple(min(d0, d) for d in self.dims))

    def vector(self, level: int, coords) -> LocalVector:
        return LocalVector(self, level, coords)

    def basis_vector(self, level: int, i: int) -> LocalVector:
        coords = np.zeros(self.dims[level], dtype=complex)
        coords[i] = 1.0
        return LocalVector(self, level, coords)

    def to_json(self) -> dict:
        return {"dims": list(self.dims)}

    @classmethod
    def from_json(cls, obj) -> Tower:
        if not isinstance(obj, dict) or "dims" not in obj:
            raise StructuralError("tower must be an object with a 'dims' list")
        return cls(tuple(obj["dims"]))


class LocalVector:
    """An element of the tower living at a given level."""

    __slots__ = ("tower", "level", "coords")

    def __init__(self, tower: Tower, level: int, coords):
        tower.check_level(level)
        coords = np.array(coords, dtype=complex).reshape(-1)
        if coords.shape[0] != tower.dims[level]:
            raise StructuralError(
                f"level {level} has dimension {tower.dims[level]}, got {coords.shape[0]} coordinates"
            )
        coords.setflags(write=False)
        self.tower = tower
        self.level = level
        self.coords = coords

    def __repr__(self):
        return f"LocalVector(level={self.level}, coords={self.coords!r})"

    def __eq__(self, other):
        return (
            isinstance(other, LocalVector)
            and self.tower == other.tower
            and self.level == other.level
            and np.array_equal(self.coords, other.coords)
        )

    __hash__ = None

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def to_json(self) -> dict:
        return {"level": self.level, "re": self.coords.real.tolist(), "im": self.coords.imag.tolist()}

    @classmethod
    def from_json(cls, tower: Tower, obj) -> LocalVector:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        return cls(tower, int(obj["level"]), re + 1j * im)


def promote(h: LocalVector, mu: int) -> LocalVector:
    """Embed ``h`` into level ``mu`` by zero padding."""
    tower = h.tower
    tower.check_level(mu)
    if mu < h.level:
        raise InvalidLevelError(f"cannot promote from level {h.level} down to {mu}")
    out = np.zeros(tower.dims[mu], dtype=complex)
    out[: h.coords.shape[0]] = h.coords
    return LocalVector(tower, mu, out)


def project(h: LocalVector, lam: int) -> LocalVector:
    """Orthogonal projection of ``h`` onto the lower level ``lam``."""
    tower = h.tower
    tower.check_level(lam)
    if lam > h.level:
        raise InvalidLevelError(f"cannot project from level {h.level} up to {lam}")
    return LocalVector(tower, lam, h.coords[: tower.dims[lam]])


def inner_product(h: LocalVector, k: LocalVector) -> complex:
    if h.tower != k.tower:
        raise StructuralError("vectors belong to different towers")
    mu = max(h.level, k.level)
    a = promote(h, mu).coords
    b = promote(k, mu).coords
    return complex(np.vdot(b, a))
