"""Projectable set and cone variants, plus the fused prox combination rules.

All projections are exact componentwise formulas, so Moreau identities
(``z = proj_K(z) + proj_polar(z)`` with orthogonal parts) hold to rounding.
"""

from __future__ import annotations

import numpy as np

from .core import (
    DimensionError,
    IncompleteOracle,
    ProjectableCone,
    ProjectableSet,
    ProxRegularizer,
    Vector,
    as_vector,
    zero_regularizer,
)


class BoxSet(ProjectableSet):
    """Axis-aligned box ``{z : lo <= z <= hi}``; bounds may be +-inf."""

    def __init__(self, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError(f"box bounds disagree: {lo.shape} vs {hi.shape}")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds must not be nan")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi componentwise")
        self.lo = lo
        self.hi = hi
        self.dim = lo.shape[0]

    def project(self, z: Vector) -> Vector:
        z = as_vector(z, self.dim, "point")
        return np.clip(z, self.lo, self.hi)

    def near_boundary(self, z: Vector, tol: float) -> bool:
        z = as_vector(z, self.dim, "point")
        near_lo = np.isfinite(self.lo) & (np.abs(z - self.lo) <= tol)
        near_hi = np.isfinite(self.hi) & (np.abs(z - self.hi) <= tol)
        return bool(np.any(near_lo) or np.any(near_hi))

    def __repr__(self):
        return f"BoxSet(lo={self.lo!r}, hi={self.hi!r})"


class WholeSpace(ProjectableCone):
    """All of R^d; projection is the identity. Polar cone is the origin."""

    def __init__(self, dim: int):
        if dim < 0:
            raise ValueError("dimension must be nonnegative")
        self.dim = int(dim)

    def project(self, z: Vector) -> Vector:
        return as_vector(z, self.dim, "point")

    def polar(self) -> "ZeroCone":
        return ZeroCone(self.dim)

    def __repr__(self):
        return f"WholeSpace({self.dim})"


class ZeroCone(ProjectableCone):
    """The origin ``{0}``; polar cone is the whole space."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def project(self, z: Vector) -> Vector:
        as_vector(z, self.dim, "point")
        return np.zeros(self.dim)

    def polar(self) -> WholeSpace:
        return WholeSpace(self.dim)

    def near_boundary(self, z: Vector, tol: float) -> bool:
        z = as_vector(z, self.dim, "point")
        return bool(np.linalg.norm(z) <= tol)

    def __repr__(self):
        return f"ZeroCone({self.dim})"


class OrthantCone(ProjectableCone):
    """Nonnegative (``sign=+1``) or nonpositive (``sign=-1``) orthant."""

    def __init__(self, dim: int, sign: int = 1):
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        self.dim = int(dim)
        self.sign = int(sign)

    def project(self, z: Vector) -> Vector:
        z = as_vector(z, self.dim, "point")
        if self.sign > 0:
            return np.maximum(z, 0.0)
        return np.minimum(z, 0.0)

    def polar(self) -> "OrthantCone":
        return OrthantCone(self.dim, -self.sign)

    def near_boundary(self, z: Vector, tol: float) -> bool:
        z = as_vector(z, self.dim, "point")
        return bool(np.any(np.abs(z) <= tol))

    def __repr__(self):
        kind = "nonneg" if self.sign > 0 else "nonpos"
        return f"OrthantCone({self.dim}, {kind})"


class BallSet(ProjectableSet):
    """Euclidean ball ``{z : ||z - center|| <= radius}``."""

    def __init__(self, center, radius: float):
        self.center = as_vector(center, what="center")
        if not (radius > 0 and np.isfinite(radius)):
            raise ValueError("radius must be positive and finite")
        self.radius = float(radius)
        self.dim = self.center.shape[0]

    def project(self, z: Vector) -> Vector:
        z = as_vector(z, self.dim, "point")
        d = z - self.center
        nd = float(np.linalg.norm(d))
        if nd <= self.radius:
            return z.copy()
        return self.center + (self.radius / nd) * d

    def near_boundary(self, z: Vector, tol: float) -> bool:
        z = as_vector(z, self.dim, "point")
        return bool(abs(float(np.linalg.norm(z - self.center)) - self.radius) <= tol)

    def __repr__(self):
        return f"BallSet(dim={self.dim}, radius={self.radius})"


class ProductSet(ProjectableSet):
    """Cartesian product of sets, stored as one concatenated vector."""

    def __init__(self, parts):
        self.parts = tuple(parts)
        if not self.parts:
            raise ValueError("product of zero sets")
        self.dims = tuple(s.dim for s in self.parts)
        self.dim = int(sum(self.dims))
        self.convex = all(s.convex for s in self.parts)
        self._offsets = np.cumsum((0,) + self.dims)

    def split(self, z: Vector) -> list[Vector]:
        z = as_vector(z, self.dim, "point")
        return [z[self._offsets[i]:self._offsets[i + 1]] for i in range(len(self.parts))]

    def project(self, z: Vector) -> Vector:
        blocks = self.split(z)
        return np.concatenate([s.project(b) for s, b in zip(self.parts, blocks)])

    def near_boundary(self, z: Vector, tol: float) -> bool:
        blocks = self.split(z)
        return any(s.near_boundary(b, tol) for s, b in zip(self.parts, blocks))

    def __repr__(self):
        return f"ProductSet({list(self.parts)!r})"


def prox_zero_over_set(set_: ProjectableSet, z, step: float) -> Vector:
    """Prox of the zero function restricted to a set: the projection."""
    return set_.project(as_vector(z, set_.dim, "point"))


def composite_prox(reg: ProxRegularizer | None, set_: ProjectableSet, z, step: float) -> Vector:
    """Prox of ``step * reg + indicator(set_)`` at ``z``.

    Supported exactly when the regularizer is zero, the set is the whole
    space, or the regularizer carries a fused prox for this set
    (``reg.attached_set is set_``). Other combinations raise
    :class:`IncompleteOracle` rather than silently composing projections.
    A zero ``step`` drops the regularizer and projects.
    """
    z = as_vector(z, set_.dim, "point")
    if step < 0:
        raise ValueError("prox step must be nonnegative")
    if reg is None or reg.is_zero or step == 0.0:
        return set_.project(z)
    if reg.attached_set is set_:
        return np.asarray(reg.prox(z, step), dtype=np.float64)
    if isinstance(set_, WholeSpace):
        return np.asarray(reg.prox(z, step), dtype=np.float64)
    raise IncompleteOracle(
        "no fused prox available for this regularizer/set pair; supply a "
        "ProxRegularizer with attached_set or use a whole-space set"
    )


__all__ = [
    "BoxSet",
    "WholeSpace",
    "ZeroCone",
    "OrthantCone",
    "BallSet",
    "ProductSet",
    "prox_zero_over_set",
    "composite_prox",
    "zero_regularizer",
]
