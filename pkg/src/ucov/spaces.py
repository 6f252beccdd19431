"""Finite-dimensional normed coordinate spaces and their elements.

A space is a dimension together with one of the classical coordinate
norms (l1, l2, linf).  Elements are immutable coordinate vectors tagged
with their space.  The l2 case is the Hilbert one and is the only case
where an inner product is defined; the other two exist so that norm
comparisons downstream can be run in genuinely non-Hilbert geometry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    InvalidConfigError,
    UnsupportedOperationError,
)

NORM_KINDS = ("l1", "l2", "linf")

# norm_kind of the dual space under the standard pairing
DUAL_KIND = {"l1": "linf", "l2": "l2", "linf": "l1"}


@dataclass(frozen=True)
class SpaceDescriptor:
    dim: int
    norm_kind: str = "l2"

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 1:
            raise InvalidConfigError(f"space dim must be a positive integer, got {self.dim!r}")
        if self.norm_kind not in NORM_KINDS:
            raise InvalidConfigError(
                f"norm_kind must be one of {NORM_KINDS}, got {self.norm_kind!r}"
            )


def dual_space(space: SpaceDescriptor) -> SpaceDescriptor:
    return SpaceDescriptor(space.dim, DUAL_KIND[space.norm_kind])


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Element:
    """An immutable point of a space, held as a coordinate vector."""

    space: SpaceDescriptor
    coords: np.ndarray

    def __post_init__(self):
        coords = _freeze(np.atleast_1d(np.asarray(self.coords, dtype=float)))
        if coords.ndim != 1 or coords.shape[0] != self.space.dim:
            raise DimensionMismatchError(
                f"coords of length {coords.shape} do not fit space dim {self.space.dim}"
            )
        if not np.all(np.isfinite(coords)):
            raise InvalidConfigError("element coordinates must be finite")
        object.__setattr__(self, "coords", coords)

    def __add__(self, other: "Element") -> "Element":
        _check_same_space(self, other)
        return Element(self.space, self.coords + other.coords)

    def __sub__(self, other: "Element") -> "Element":
        _check_same_space(self, other)
        return Element(self.space, self.coords - other.coords)

    def __mul__(self, a: float) -> "Element":
        return Element(self.space, float(a) * self.coords)

    __rmul__ = __mul__


def zero(space: SpaceDescriptor) -> Element:
    return Element(space, np.zeros(space.dim))


def _check_same_space(x: Element, y: Element):
    if x.space != y.space:
        raise DimensionMismatchError(f"elements live in different spaces: {x.space} vs {y.space}")


def array_norm(arr: np.ndarray, kind: str, axis: int = -1) -> np.ndarray:
    """Coordinate norm of kind over one axis of a raw array."""
    if kind == "l1":
        return np.abs(arr).sum(axis=axis)
    if kind == "l2":
        return np.sqrt((arr * arr).sum(axis=axis))
    if kind == "linf":
        return np.abs(arr).max(axis=axis)
    raise InvalidConfigError(f"unknown norm kind {kind!r}")


def norm(x: Element) -> float:
    """Norm of x in its own space."""
    return float(array_norm(x.coords, x.space.norm_kind))


def inner(x: Element, y: Element) -> float:
    """Inner product; defined only on l2 spaces."""
    _check_same_space(x, y)
    if x.space.norm_kind != "l2":
        raise UnsupportedOperationError("inner product requires an l2 space")
    return float(x.coords @ y.coords)


def mean(xs) -> Element:
    """Coordinatewise mean of a non-empty collection of same-space elements."""
    xs = list(xs)
    if not xs:
        raise EmptyInputError("mean of an empty collection")
    space = xs[0].space
    for x in xs[1:]:
        _check_same_space(xs[0], x)
    return Element(space, np.mean([x.coords for x in xs], axis=0))


def sign_map(x: Element) -> Element:
    """Radial retraction x / ||x||; the origin maps to itself."""
    r = norm(x)
    if r == 0.0:
        return zero(x.space)
    return Element(x.space, x.coords / r)
