"""Grid construction and data binning.

Continuous samples are replaced by points of a regular grid with weights.
The simple rule gives each sample's unit mass to the nearest grid point;
the linear rule splits it over the two surrounding points in proportion to
proximity, which in n dimensions becomes a product over axes (each sample
touches the 2**n vertices of its enclosing cell).  Either way the weights
of one sample sum to 1, so the stored weights over the whole grid sum to N.

Grid indices are 0-based throughout the Python API.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BinningRule",
    "Grid",
    "SparseWeightTensor",
    "bin_dataset",
    "bin_univariate",
    "build_grid",
    "nearest_indices",
]

# Aggregation ravels multi-indices into int64; desk-scale grids never get close.
_MAX_FLAT = 2**62


class BinningRule(enum.Enum):
    SIMPLE = "simple"
    LINEAR = "linear"


@dataclass(frozen=True)
class Grid:
    """``size`` equally spaced points on [lo, hi]; point m is lo + m*binwidth."""

    lo: float
    hi: float
    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.size}")
        if not (self.hi > self.lo):
            raise ValueError(f"grid bounds must satisfy hi > lo, got [{self.lo}, {self.hi}]")

    @property
    def binwidth(self) -> float:
        return (self.hi - self.lo) / (self.size - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.size)


def build_grid(column: np.ndarray, size: int) -> Grid:
    """Grid spanning the data range; a constant column expands to +/- 0.5.

    Test-time values outside [lo, hi] are clamped to the boundary points by
    the binning routines, so every query stays addressable.
    """
    if size < 2:
        raise ValueError(f"grid needs at least 2 points, got {size}")
    column = np.asarray(column, dtype=np.float64)
    if column.size == 0:
        raise ValueError("cannot build a grid from an empty column")
    if not np.all(np.isfinite(column)):
        raise ValueError("grid source column contains non-finite values")
    lo = float(column.min())
    hi = float(column.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return Grid(lo, hi, size)


def _positions(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Fractional grid coordinates, clamped to [0, size-1]."""
    pos = (np.asarray(values, dtype=np.float64) - grid.lo) / grid.binwidth
    return np.clip(pos, 0.0, grid.size - 1)


def nearest_indices(values: np.ndarray, grid: Grid) -> np.ndarray:
    # Nearest grid point with out-of-range values clamped to the boundary; an
    # exact midpoint goes to the lower index, matching the strict inequality
    # of the simple rule.
    pos = _positions(values, grid)
    base = np.floor(pos).astype(np.int64)
    frac = pos - base
    return base + (frac > 0.5)


def _linear_parts(values: np.ndarray, grid: Grid):
    """Per-value (lower index, lower weight, upper weight); upper index is lower+1."""
    pos = _positions(values, grid)
    base = np.minimum(np.floor(pos).astype(np.int64), grid.size - 2)
    frac = pos - base
    return base, 1.0 - frac, frac


def bin_univariate(x: float, grid: Grid, rule: BinningRule) -> list[tuple[int, float]]:
    """Grid assignment of a single sample as (index, weight) pairs.

    Simple: one pair with weight 1.  Linear: up to two pairs with weights
    (g_upper - x)/binwidth and (x - g_lower)/binwidth; exact-zero weights
    are dropped, so a sample sitting on a grid point yields one pair.
    """
    if not np.isfinite(x):
        raise ValueError("cannot bin a non-finite value")
    arr = np.asarray([x])
    if rule is BinningRule.SIMPLE:
        return [(int(nearest_indices(arr, grid)[0]), 1.0)]
    base, w_lo, w_hi = _linear_parts(arr, grid)
    out = []
    if w_lo[0] > 0.0:
        out.append((int(base[0]), float(w_lo[0])))
    if w_hi[0] > 0.0:
        out.append((int(base[0]) + 1, float(w_hi[0])))
    return out


@dataclass(frozen=True)
class SparseWeightTensor:
    """Nonzero binned weights over an n-dimensional grid.

    ``indices`` is (S, n) int64, one row per occupied grid vector, sorted by
    flat (row-major) position; ``weights`` is the matching (S,) positive
    vector and sums to the instance count ``total``.
    """

    dims: tuple[int, ...]
    indices: np.ndarray
    weights: np.ndarray
    total: float

    def __post_init__(self):
        self.indices.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n_entries(self) -> int:
        return self.indices.shape[0]

    def dense(self) -> np.ndarray:
        """Materialize the full weight tensor (use only for small grids)."""
        out = np.zeros(self.dims)
        out[tuple(self.indices.T)] = self.weights
        return out

    def project(self, axes: tuple[int, ...]) -> "SparseWeightTensor":
        """Marginalize onto ``axes`` by summing weights over the dropped axes."""
        dims = tuple(self.dims[a] for a in axes)
        return _aggregate(self.indices[:, axes], self.weights, dims, self.total)


def _aggregate(
    indices: np.ndarray, weights: np.ndarray, dims: tuple[int, ...], total: float
) -> SparseWeightTensor:
    n_cells = 1
    for d in dims:
        n_cells *= int(d)
    if n_cells >= _MAX_FLAT:
        raise ValueError(f"grid of shape {dims} is too large to index")
    flat = np.ravel_multi_index(tuple(indices.T), dims)
    uniq, inverse = np.unique(flat, return_inverse=True)
    summed = np.bincount(inverse, weights=weights, minlength=len(uniq))
    keep = summed > 0.0
    uniq, summed = uniq[keep], summed[keep]
    stacked = np.stack(np.unravel_index(uniq, dims), axis=1).astype(np.int64)
    return SparseWeightTensor(dims, stacked, summed, total)


def bin_dataset(
    matrix: np.ndarray, grids: tuple[Grid, ...], rule: BinningRule
) -> SparseWeightTensor:
    """Bin an (N, n) matrix onto per-dimension grids.

    Each instance contributes the product of its univariate weights to each
    touched grid vector; contributions to the same vector accumulate.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    n_rows, n_dims = matrix.shape
    if len(grids) != n_dims:
        raise ValueError(f"{len(grids)} grids for {n_dims} data columns")
    dims = tuple(g.size for g in grids)

    if rule is BinningRule.SIMPLE:
        idx = np.stack(
            [nearest_indices(matrix[:, j], grids[j]) for j in range(n_dims)], axis=1
        )
        return _aggregate(idx, np.ones(n_rows), dims, float(n_rows))

    bases, weights_lo, weights_hi = [], [], []
    for j in range(n_dims):
        b, wl, wh = _linear_parts(matrix[:, j], grids[j])
        bases.append(b)
        weights_lo.append(wl)
        weights_hi.append(wh)

    # One block of N contributions per corner of the enclosing cell.
    idx_blocks, weight_blocks = [], []
    for corner in itertools.product((0, 1), repeat=n_dims):
        idx = np.stack([bases[j] + corner[j] for j in range(n_dims)], axis=1)
        w = np.ones(n_rows)
        for j in range(n_dims):
            w *= weights_hi[j] if corner[j] else weights_lo[j]
        keep = w > 0.0
        if keep.any():
            idx_blocks.append(idx[keep])
            weight_blocks.append(w[keep])
    all_idx = np.concatenate(idx_blocks, axis=0)
    all_w = np.concatenate(weight_blocks)
    return _aggregate(all_idx, all_w, dims, float(n_rows))
