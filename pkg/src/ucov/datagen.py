"""Seeded sample generators with known moments.

Four i.i.d. families cover the regimes the experiments need: heavy tails
with finite variance (student_t), a two-point lattice law (rademacher), a
diagonal Gaussian with a decaying eigenvalue profile (gaussian_kl), and
arbitrary finite-support laws for exact enumeration work.  A moving-average
wrapper turns any of them into a q-dependent stationary sequence.

Determinism contract: draws are a pure function of (descriptor, n, seed).
Streams are PCG64 keyed by SeedSequence; student_t consumes two named
substreams (normal numerator, chi-square denominator).  The same base
routine feeds the dependent wrapper, so ma_coeffs=(1,) reproduces the
i.i.d. draw bit for bit.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidConfigError
from .seeding import rng_for
from .spaces import Element, SpaceDescriptor

KINDS = ("student_t", "rademacher", "gaussian_kl", "finite_support")


@dataclass(frozen=True)
class Sample:
    """n same-space elements, stored as an (n, dim) coordinate matrix."""

    space: SpaceDescriptor
    coords: np.ndarray

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float, copy=True)
        coords = np.atleast_2d(coords)
        if coords.ndim != 2 or coords.shape[1] != self.space.dim:
            raise InvalidConfigError(
                f"sample coords of shape {coords.shape} do not fit dim {self.space.dim}"
            )
        if not np.all(np.isfinite(coords)):
            raise InvalidConfigError("sample coordinates must be finite")
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def elements(self):
        return [Element(self.space, row) for row in self.coords]

    @classmethod
    def from_elements(cls, xs) -> "Sample":
        xs = list(xs)
        if not xs:
            raise InvalidConfigError("a sample needs at least one element")
        space = xs[0].space
        return cls(space, np.array([x.coords for x in xs]))


@dataclass(frozen=True)
class GeneratorDescriptor:
    kind: str
    space: SpaceDescriptor
    df: Optional[float] = None
    eigenvalues: Optional[Tuple[float, ...]] = None
    atoms: Optional[Tuple[Tuple[float, ...], ...]] = None
    probs: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConfigError(f"unknown generator kind {self.kind!r}")


@dataclass(frozen=True)
class DependentGeneratorDescriptor:
    """Moving average X_t = sum_j a_j Z_{t-j} over i.i.d. innovations Z."""

    base: GeneratorDescriptor
    ma_coeffs: Tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.ma_coeffs)
        if not coeffs or coeffs[0] == 0.0:
            raise InvalidConfigError("ma_coeffs needs a nonzero leading coefficient")
        object.__setattr__(self, "ma_coeffs", coeffs)

    @property
    def q(self) -> int:
        return len(self.ma_coeffs) - 1

    @property
    def space(self) -> SpaceDescriptor:
        return self.base.space


def student_t(df: float, norm_kind: str = "l2") -> GeneratorDescriptor:
    """Scalar Student t; df >= 3 keeps the variance df/(df-2) finite."""
    if not df >= 3:
        raise InvalidConfigError(f"student_t requires df >= 3, got {df}")
    return GeneratorDescriptor("student_t", SpaceDescriptor(1, norm_kind), df=float(df))


def rademacher(norm_kind: str = "l2") -> GeneratorDescriptor:
    return GeneratorDescriptor("rademacher", SpaceDescriptor(1, norm_kind))


def gaussian_kl(dim: int, eigenvalues=None, norm_kind: str = "l2") -> GeneratorDescriptor:
    """Independent centered normals with a nonincreasing variance profile.

    Defaults to the dyadic profile (1, 1/2, 1/4, ...).
    """
    if eigenvalues is None:
        eigenvalues = tuple(0.5 ** j for j in range(dim))
    eigenvalues = tuple(float(v) for v in eigenvalues)
    if len(eigenvalues) != dim:
        raise InvalidConfigError("need one eigenvalue per coordinate")
    if any(v <= 0 for v in eigenvalues):
        raise InvalidConfigError("eigenvalues must be strictly positive")
    if any(a < b for a, b in zip(eigenvalues, eigenvalues[1:])):
        raise InvalidConfigError("eigenvalues must be nonincreasing")
    return GeneratorDescriptor("gaussian_kl", SpaceDescriptor(dim, norm_kind),
                               eigenvalues=eigenvalues)


def finite_support(atoms, probs, norm_kind: str = "l2") -> GeneratorDescriptor:
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    probs = np.asarray(probs, dtype=float)
    if atoms.shape[0] != probs.shape[0]:
        raise InvalidConfigError("need one probability per atom")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise InvalidConfigError("probabilities must be nonnegative and sum to one")
    return GeneratorDescriptor(
        "finite_support", SpaceDescriptor(atoms.shape[1], norm_kind),
        atoms=tuple(tuple(row) for row in atoms), probs=tuple(probs),
    )


def ma_wrap(base: GeneratorDescriptor, ma_coeffs) -> DependentGeneratorDescriptor:
    return DependentGeneratorDescriptor(base, tuple(float(a) for a in ma_coeffs))


def _base_draws(gen: GeneratorDescriptor, count: int, seed: int) -> np.ndarray:
    """(count, dim) i.i.d. draws; the single source of randomness for samples."""
    d = gen.space.dim
    if gen.kind == "student_t":
        z = rng_for(seed, 0).standard_normal(count)
        v = rng_for(seed, 1).chisquare(gen.df, size=count)
        return (z / np.sqrt(v / gen.df)).reshape(count, 1)
    if gen.kind == "rademacher":
        return (2.0 * rng_for(seed, 0).integers(0, 2, size=count) - 1.0).reshape(count, 1)
    if gen.kind == "gaussian_kl":
        scale = np.sqrt(np.asarray(gen.eigenvalues))
        return rng_for(seed, 0).standard_normal((count, d)) * scale
    if gen.kind == "finite_support":
        idx = rng_for(seed, 0).choice(len(gen.probs), size=count, p=np.asarray(gen.probs))
        return np.asarray(gen.atoms, dtype=float)[idx]
    raise InvalidConfigError(f"unknown generator kind {gen.kind!r}")


def draw_iid(gen: GeneratorDescriptor, n: int, seed: int) -> Sample:
    if n < 1:
        raise InvalidConfigError("sample size must be positive")
    return Sample(gen.space, _base_draws(gen, n, seed))


def draw_dependent(dep: DependentGeneratorDescriptor, n: int, seed: int) -> Sample:
    """Length-n window of the moving average after a q-step burn-in."""
    if n < 1:
        raise InvalidConfigError("sample size must be positive")
    q = dep.q
    z = _base_draws(dep.base, n + q, seed)
    x = np.zeros((n, dep.space.dim))
    for j, a in enumerate(dep.ma_coeffs):
        x += a * z[q - j:q - j + n]
    return Sample(dep.space, x)


def draw_dependent_batch(dep: DependentGeneratorDescriptor, rows: int, length: int,
                         seed: int) -> np.ndarray:
    """(rows, length, dim) array of independent MA trajectories, one stream."""
    if rows < 1 or length < 1:
        raise InvalidConfigError("batch shape must be positive")
    q = dep.q
    d = dep.space.dim
    z = _base_draws(dep.base, rows * (length + q), seed).reshape(rows, length + q, d)
    x = np.zeros((rows, length, d))
    for j, a in enumerate(dep.ma_coeffs):
        x += a * z[:, q - j:q - j + length]
    return x


def draw_marginal(dep: DependentGeneratorDescriptor, n: int, seed: int) -> Sample:
    """n independent draws from the stationary one-point law of the MA."""
    if n < 1:
        raise InvalidConfigError("sample size must be positive")
    q = dep.q
    z = _base_draws(dep.base, n * (q + 1), seed).reshape(n, q + 1, dep.space.dim)
    x = np.tensordot(np.asarray(dep.ma_coeffs), np.swapaxes(z, 0, 1), axes=(0, 0))
    return Sample(dep.space, x)


def generator_mean(gen) -> np.ndarray:
    if isinstance(gen, DependentGeneratorDescriptor):
        return sum(gen.ma_coeffs) * generator_mean(gen.base)
    if gen.kind == "finite_support":
        return np.asarray(gen.probs) @ np.asarray(gen.atoms, dtype=float)
    return np.zeros(gen.space.dim)


def generator_cov(gen) -> np.ndarray:
    """Exact covariance matrix of one draw (marginal law for MA wrappers)."""
    if isinstance(gen, DependentGeneratorDescriptor):
        return sum(a * a for a in gen.ma_coeffs) * generator_cov(gen.base)
    if gen.kind == "student_t":
        return np.array([[gen.df / (gen.df - 2.0)]])
    if gen.kind == "rademacher":
        return np.array([[1.0]])
    if gen.kind == "gaussian_kl":
        return np.diag(np.asarray(gen.eigenvalues))
    a = np.asarray(gen.atoms, dtype=float)
    p = np.asarray(gen.probs)
    mu = p @ a
    return (a - mu).T @ ((a - mu) * p[:, None])


def as_finite_support(gen: GeneratorDescriptor) -> Optional[GeneratorDescriptor]:
    """Finite-support view of gen when its law has finitely many atoms."""
    if isinstance(gen, GeneratorDescriptor) and gen.kind == "finite_support":
        return gen
    if isinstance(gen, GeneratorDescriptor) and gen.kind == "rademacher":
        return finite_support([[-1.0], [1.0]], [0.5, 0.5], gen.space.norm_kind)
    return None


def descriptor_hash(gen) -> str:
    """Short stable digest of a generator descriptor, for report provenance."""
    if isinstance(gen, DependentGeneratorDescriptor):
        text = f"ma{gen.ma_coeffs}|{descriptor_hash(gen.base)}"
    else:
        text = (f"{gen.kind}|{gen.space.dim}|{gen.space.norm_kind}|df={gen.df}"
                f"|eig={gen.eigenvalues}|atoms={gen.atoms}|probs={gen.probs}")
    return hashlib.sha256(text.encode()).hexdigest()[:12]
