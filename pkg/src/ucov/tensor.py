"""Order-two tensors over a coordinate space and their crossnorms.

A tensor is stored as a dense d x d grid of coefficients against the
standard basis, optionally with a list of rank-one terms that reconstruct
the grid.  Three norms are provided:

* hilbert_norm   -- Frobenius norm, the Hilbert-space tensor norm (l2 only);
* injective_norm -- sup of |(u (x) v)(t)| over the dual unit balls;
* projective_norm-- inf of sum ||x_j||*||y_j|| over decompositions.

Exactness depends on the factor norm.  For l2 the injective and projective
norms are the largest singular value and the nuclear norm.  For l1 both are
exact too (vertex enumeration and entrywise sum).  For linf only seeded
heuristics are offered, and every result is tagged 'exact' or 'heuristic'
so callers never mistake a bound for a value.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidConfigError,
    SizeLimitError,
    UnsupportedOperationError,
)
from .seeding import rng_for
from .spaces import Element, SpaceDescriptor, array_norm

# Singular values below SVD_TAIL * sigma_max are treated as zero.
SVD_TAIL = 1e-12

# Exact l1 injective norm enumerates 2^(d-1) sign vectors; hard cap.
L1_VERTEX_DIM_LIMIT = 20

RECONSTRUCTION_TOL = 1e-10


class NormResult(NamedTuple):
    value: float
    method: str  # "exact" or "heuristic"


@dataclass(frozen=True)
class TensorRep:
    """Dense order-two tensor over `space`, plus optional rank-one terms."""

    space: SpaceDescriptor
    grid: np.ndarray
    rank_terms: Optional[Tuple[Tuple[Element, Element], ...]] = None

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float, copy=True)
        d = self.space.dim
        if grid.shape != (d, d):
            raise DimensionMismatchError(f"grid shape {grid.shape} does not match dim {d}")
        if not np.all(np.isfinite(grid)):
            raise InvalidConfigError("tensor grid must be finite")
        grid.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        if self.rank_terms is not None:
            terms = tuple(self.rank_terms)
            recon = np.zeros((d, d))
            for x, y in terms:
                if x.space != self.space or y.space != self.space:
                    raise DimensionMismatchError("rank-one factors live in the wrong space")
                recon += np.outer(x.coords, y.coords)
            scale = max(1.0, float(np.abs(grid).max()))
            if np.abs(recon - grid).max() > RECONSTRUCTION_TOL * scale:
                raise InvalidConfigError("rank_terms do not reconstruct the grid")
            object.__setattr__(self, "rank_terms", terms)


def from_grid(space: SpaceDescriptor, grid) -> TensorRep:
    return TensorRep(space, np.asarray(grid, dtype=float))


def zero_tensor(space: SpaceDescriptor) -> TensorRep:
    return TensorRep(space, np.zeros((space.dim, space.dim)), rank_terms=())


def outer(x: Element, y: Element) -> TensorRep:
    if x.space != y.space:
        raise DimensionMismatchError("outer product factors must share a space")
    return TensorRep(x.space, np.outer(x.coords, y.coords), rank_terms=((x, y),))


def tensor_axpy(a: float, t: TensorRep, acc: TensorRep) -> TensorRep:
    """Return a*t + acc, keeping rank terms when both operands carry them."""
    if t.space != acc.space:
        raise DimensionMismatchError("tensors must share a space")
    grid = float(a) * t.grid + acc.grid
    terms = None
    if t.rank_terms is not None and acc.rank_terms is not None:
        scaled = tuple((float(a) * x, y) for x, y in t.rank_terms)
        terms = scaled + acc.rank_terms
    return TensorRep(t.space, grid, rank_terms=terms)


def _dual_coords(u, dim: int) -> np.ndarray:
    coords = u.coords if isinstance(u, Element) else np.asarray(u, dtype=float)
    coords = np.atleast_1d(coords)
    if coords.shape != (dim,):
        raise DimensionMismatchError(f"dual vector of shape {coords.shape} against dim {dim}")
    return coords


def pair_bilinear(t: TensorRep, u, v) -> float:
    """Apply the elementary dual functional u (x) v to t."""
    uc = _dual_coords(u, t.space.dim)
    vc = _dual_coords(v, t.space.dim)
    return float(uc @ t.grid @ vc)


def frobenius_inner(s: TensorRep, t: TensorRep) -> float:
    if s.space != t.space:
        raise DimensionMismatchError("tensors must share a space")
    return float(np.sum(s.grid * t.grid))


def hilbert_norm(t: TensorRep) -> float:
    """Frobenius norm; defined only over an l2 factor space."""
    if t.space.norm_kind != "l2":
        raise UnsupportedOperationError("hilbert_norm requires an l2 factor space")
    return float(np.sqrt(np.sum(t.grid * t.grid)))


def _svdvals(grid: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(grid, compute_uv=False)
    if s.size and s[0] > 0:
        s = s[s > SVD_TAIL * s[0]]
    return s


def _l1_injective_exact(grid: np.ndarray) -> float:
    """max over sign vectors s of ||grid^T s||_1, enumerating 2^(d-1) vertices.

    For a fixed left vertex the best right vertex is the signs of grid^T s,
    so only the left side needs enumerating; s and -s tie, halving the count.
    """
    d = grid.shape[0]
    best = 0.0
    block = 1 << 13
    total = 1 << (d - 1)
    for start in range(0, total, block):
        idx = np.arange(start, min(start + block, total), dtype=np.uint32)
        bits = (idx[:, None] >> np.arange(d - 1, dtype=np.uint32)[None, :]) & 1
        signs = np.hstack([np.ones((idx.size, 1)), 1.0 - 2.0 * bits])
        vals = np.abs(signs @ grid).sum(axis=1)
        best = max(best, float(vals.max()))
    return best


def _l1_injective_heuristic(grid: np.ndarray, restarts: int, seed: int) -> float:
    """Alternating sign ascent on s^T grid t from seeded random vertices."""
    d = grid.shape[0]
    rng = rng_for(seed, 0x1A)
    best = 0.0
    for _ in range(max(1, restarts)):
        s = rng.choice([-1.0, 1.0], size=d)
        val = -np.inf
        for _ in range(64):
            t = np.sign(grid.T @ s)
            t[t == 0] = 1.0
            s = np.sign(grid @ t)
            s[s == 0] = 1.0
            new = abs(float(s @ grid @ t))
            if new <= val:
                break
            val = new
        best = max(best, val)
    return best


def _linf_injective_heuristic(grid: np.ndarray, restarts: int, seed: int) -> float:
    """Alternating ascent of |u^T grid v| over the l1 dual balls.

    The iterates are signed basis vectors, so each sweep is a row/column
    argmax; restarts begin from seeded random columns plus the grid's
    largest entry.
    """
    d = grid.shape[0]
    rng = rng_for(seed, 0x11F)
    i0, j0 = np.unravel_index(np.argmax(np.abs(grid)), grid.shape)
    starts = [int(j0)] + [int(j) for j in rng.integers(0, d, size=max(0, restarts - 1))]
    best = 0.0
    for j in starts:
        val = -np.inf
        for _ in range(64):
            col = np.abs(grid[:, j])
            i = int(np.argmax(col))
            row = np.abs(grid[i, :])
            j = int(np.argmax(row))
            new = float(row[j])
            if new <= val:
                break
            val = new
        best = max(best, val)
    return best


def injective_norm(t: TensorRep, restarts: int = 16, seed: int = 0,
                   method: str = "auto") -> NormResult:
    """Injective crossnorm sup |u^T grid v| over the dual unit balls.

    Exact for l2 (largest singular value) and for l1 up to dim 20 (vertex
    enumeration).  For linf, and for l1 when method="heuristic", a seeded
    alternating ascent gives a certified lower bound tagged 'heuristic'.
    """
    kind = t.space.norm_kind
    if method not in ("auto", "exact", "heuristic"):
        raise InvalidConfigError(f"unknown method {method!r}")
    if kind == "l2":
        if method == "heuristic":
            raise InvalidConfigError("l2 injective norm is always exact")
        s = _svdvals(t.grid)
        return NormResult(float(s[0]) if s.size else 0.0, "exact")
    if kind == "l1":
        d = t.space.dim
        if method == "heuristic":
            return NormResult(_l1_injective_heuristic(t.grid, restarts, seed), "heuristic")
        if d > L1_VERTEX_DIM_LIMIT:
            raise SizeLimitError(
                f"exact l1 injective norm enumerates 2^(d-1) vertices and is capped at "
                f"dim {L1_VERTEX_DIM_LIMIT}; pass method='heuristic' for a seeded lower bound"
            )
        return NormResult(_l1_injective_exact(t.grid), "exact")
    if method == "exact":
        raise UnsupportedOperationError("no exact linf injective norm is implemented")
    return NormResult(_linf_injective_heuristic(t.grid, restarts, seed), "heuristic")


def _linf_projective_heuristic(grid: np.ndarray, restarts: int, seed: int) -> float:
    """Cheapest decomposition cost found among canonical and random bases.

    Every candidate is a genuine decomposition grid = sum x_j (x) y_j, so
    the reported value is an upper bound on the projective norm:

    * entrywise:     sum |g_ij|
    * columns/rows:  sum_j ||g_.j||_inf   /  sum_i ||g_i.||_inf
    * SVD:           sum_k s_k ||u_k||_inf ||v_k||_inf
    * random bases:  grid = sum_j (grid A)_.j (x) (A^-1)_j.  for random A
    """
    d = grid.shape[0]
    cands = [float(np.abs(grid).sum()),
             float(np.abs(grid).max(axis=0).sum()),
             float(np.abs(grid).max(axis=1).sum())]
    u, s, vt = np.linalg.svd(grid)
    keep = s > (SVD_TAIL * s[0] if s.size and s[0] > 0 else 0.0)
    cands.append(float(np.sum(s[keep] * np.abs(u[:, keep]).max(axis=0)
                              * np.abs(vt[keep, :]).max(axis=1))))
    rng = rng_for(seed, 0x11E)
    for _ in range(max(0, restarts)):
        a = rng.standard_normal((d, d))
        try:
            ainv = np.linalg.inv(a)
        except np.linalg.LinAlgError:
            continue
        cost = float(np.sum(np.abs(grid @ a).max(axis=0) * np.abs(ainv).max(axis=1)))
        cands.append(cost)
    return min(cands)


def projective_norm(t: TensorRep, restarts: int = 16, seed: int = 0) -> NormResult:
    """Projective crossnorm inf sum ||x_j|| * ||y_j|| over decompositions.

    Exact for l2 (nuclear norm) and l1 (entrywise sum); for linf a seeded
    search over candidate decompositions returns an upper bound tagged
    'heuristic'.
    """
    kind = t.space.norm_kind
    if kind == "l2":
        return NormResult(float(_svdvals(t.grid).sum()), "exact")
    if kind == "l1":
        return NormResult(float(np.abs(t.grid).sum()), "exact")
    return NormResult(_linf_projective_heuristic(t.grid, restarts, seed), "heuristic")


def rank_one_norm_product(x: Element, y: Element) -> float:
    """||x|| * ||y||, the common value of all crossnorms on x (x) y."""
    return float(array_norm(x.coords, x.space.norm_kind)
                 * array_norm(y.coords, y.space.norm_kind))
