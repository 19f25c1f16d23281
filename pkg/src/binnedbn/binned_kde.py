"""Accelerated kernel density CPDs over binned data.

Two approximations of the conditional KDE are implemented.

Sparse binned KDE (SBKDE): the kernel sum runs over the occupied grid
vectors only, weighting each kernel term by its accumulated bin weight.
Evaluation cost is O(S) per query for S nonzero weights instead of O(N).

Fourier binned KDE (FKDE): on the grid, the binned kernel sum is a discrete
convolution of the weight tensor with a truncated kernel tensor, solved by
zero-padded FFTs.  The model stores the resulting density at every grid
vector; evaluation is a nearest-cell lookup, so queries are binned too.

Both come with the conditional form joint / parent-marginal, mirroring the
exact conditional KDE: the marginal projects the joint weights onto the
parent axes and uses the parent block of the joint bandwidth.

The FKDE requires dense tensors of the padded size per dimension, so a
dimensionality guard caps the number of parents and the padded element
count before any allocation happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .binning import BinningRule, Grid, SparseWeightTensor, bin_dataset, build_grid, nearest_indices
from .core import NodeType
from .kde import LOG_2PI, BandwidthMatrix, mixture_logpdf, normal_reference_bandwidth

__all__ = [
    "DENSITY_FLOOR",
    "FkdeCpd",
    "FkdeDimensionError",
    "FkdeGuardConfig",
    "FkdeModel",
    "SbkdeCpd",
    "SbkdeModel",
    "fkde_truncation_radius",
    "padded_size",
]

# Keeps log densities finite when convolution round-off yields <= 0 cells.
DENSITY_FLOOR = 1e-300


class FkdeDimensionError(ValueError):
    """The FKDE dimensionality guard rejected a fit."""


@dataclass(frozen=True)
class FkdeGuardConfig:
    """Caps on FKDE fits: parent count and total padded tensor elements.

    The defaults allow joints up to 4 dimensions and about 0.5 GB for the
    pair of padded double tensors.
    """

    max_parents: int = 3
    max_padded_elements: int = 2**26

    def __post_init__(self):
        if self.max_parents < 0:
            raise ValueError("max_parents must be >= 0")
        if self.max_padded_elements < 1:
            raise ValueError("max_padded_elements must be positive")


def padded_size(grid_size: int) -> int:
    """Smallest power of two >= 3M - 1, the wrap-safe FFT length for size M."""
    if grid_size < 2:
        raise ValueError("grid size must be at least 2")
    return 1 << (3 * grid_size - 2).bit_length()


def fkde_truncation_radius(grid: Grid, bandwidth: BandwidthMatrix) -> int:
    """Kernel truncation radius in grid steps for one dimension.

    Univariate: min(M-1, ceil(4h / binwidth)) with h the bandwidth standard
    deviation.  Multivariate: the same with h replaced by the square root of
    the largest-magnitude eigenvalue of the full bandwidth matrix.
    """
    if bandwidth.dim == 1:
        scale = math.sqrt(float(bandwidth.matrix[0, 0]))
    else:
        scale = math.sqrt(float(np.max(np.abs(np.linalg.eigvalsh(bandwidth.matrix)))))
    return min(grid.size - 1, math.ceil(4.0 * scale / grid.binwidth))


# ---------------------------------------------------------------------------
# Sparse binned KDE
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SbkdeModel:
    """Weighted Gaussian mixture centered on the occupied grid vectors."""

    grids: tuple[Grid, ...]
    weights: SparseWeightTensor
    bandwidth: BandwidthMatrix

    def __post_init__(self):
        if len(self.grids) != self.bandwidth.dim:
            raise ValueError("one grid per bandwidth dimension required")
        if self.weights.dims != tuple(g.size for g in self.grids):
            raise ValueError("weight tensor dims do not match the grids")

    @classmethod
    def from_data(
        cls,
        matrix: np.ndarray,
        grids: Sequence[Grid],
        rule: BinningRule,
        bandwidth: BandwidthMatrix,
    ) -> "SbkdeModel":
        tensor = bin_dataset(matrix, tuple(grids), rule)
        return cls(tuple(grids), tensor, bandwidth)

    @property
    def total(self) -> float:
        return self.weights.total

    @property
    def dim(self) -> int:
        return len(self.grids)

    @cached_property
    def _centers(self) -> np.ndarray:
        lo = np.array([g.lo for g in self.grids])
        step = np.array([g.binwidth for g in self.grids])
        return lo + self.weights.indices * step

    @cached_property
    def _log_weights(self) -> np.ndarray:
        return np.log(self.weights.weights) - math.log(self.total)

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        """Log of the weighted kernel sum over stored entries only."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if self.dim == 1 else x.reshape(1, -1)
        return mixture_logpdf(x, self._centers, self.bandwidth, self._log_weights)


@dataclass(frozen=True)
class SbkdeCpd:
    """Conditional SBKDE: joint over (child, parents) divided by the parent marginal.

    The marginal sums the joint weights over the child axis, which is
    identical to binning the parent columns directly, and pairs them with
    the parent block of the joint bandwidth.
    """

    child: str
    parents: tuple[str, ...]
    joint: SbkdeModel
    marginal: SbkdeModel | None

    family = NodeType.SBKDE

    @classmethod
    def fit(
        cls,
        child: str,
        parents: Sequence[str],
        matrix: np.ndarray,
        grid_size: int,
        rule: BinningRule,
        bandwidth: BandwidthMatrix | None = None,
    ) -> "SbkdeCpd":
        """``matrix`` columns are (child, *parents); grids span the training range."""
        parents = tuple(parents)
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        names = (child, *parents)
        if matrix.shape[1] != len(names):
            raise ValueError("matrix must have one column per (child, *parents)")
        if bandwidth is None:
            bandwidth = normal_reference_bandwidth(matrix, names)
        grids = tuple(build_grid(matrix[:, j], grid_size) for j in range(len(names)))
        joint = SbkdeModel.from_data(matrix, grids, rule, bandwidth)
        marginal = None
        if parents:
            axes = tuple(range(1, len(names)))
            marginal = SbkdeModel(
                grids[1:], joint.weights.project(axes), bandwidth.submatrix(axes)
            )
        return cls(child, parents, joint, marginal)

    def conditional_logpdf(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        out = self.joint.logpdf(values)
        if self.marginal is not None:
            out = out - self.marginal.logpdf(values[:, 1:])
        return out


# ---------------------------------------------------------------------------
# Fourier binned KDE
# ---------------------------------------------------------------------------


def _kernel_tensor(
    grids: tuple[Grid, ...], radii: tuple[int, ...], bandwidth: BandwidthMatrix, total: float
) -> np.ndarray:
    """Truncated kernel values K_H(offsets)/N on the lattice prod_i [-L_i, L_i]."""
    offsets = [g.binwidth * np.arange(-r, r + 1) for g, r in zip(grids, radii)]
    mesh = np.meshgrid(*offsets, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    white = pts @ bandwidth.chol_inv.T
    log_k = (
        -0.5 * bandwidth.dim * LOG_2PI
        - 0.5 * bandwidth.log_det
        - 0.5 * np.einsum("ij,ij->i", white, white)
    )
    shape = tuple(2 * r + 1 for r in radii)
    return (np.exp(log_k) / total).reshape(shape)


def _convolved_density(
    dense_weights: np.ndarray,
    grids: tuple[Grid, ...],
    bandwidth: BandwidthMatrix,
    total: float,
) -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
    """Density values at every grid vector via zero-padded FFT convolution.

    Both the weight tensor and the kernel tensor are embedded in arrays of
    the padded power-of-two size per axis; the kernel is centered at offset
    2M-1 so the circular convolution carries the linear-convolution result
    for grid index t at position 2M-1+t (0-based per axis).
    """
    dims = dense_weights.shape
    padded = tuple(padded_size(m) for m in dims)
    radii = tuple(fkde_truncation_radius(g, bandwidth) for g in grids)
    kernel = _kernel_tensor(grids, radii, bandwidth, total)

    weights_zp = np.zeros(padded)
    weights_zp[tuple(slice(0, m) for m in dims)] = dense_weights
    kernel_zp = np.zeros(padded)
    kernel_zp[
        tuple(slice(2 * m - 1 - r, 2 * m + r) for m, r in zip(dims, radii))
    ] = kernel

    axes = tuple(range(len(dims)))
    spectrum = np.fft.rfftn(weights_zp, axes=axes) * np.fft.rfftn(kernel_zp, axes=axes)
    conv = np.fft.irfftn(spectrum, s=padded, axes=axes)
    block = conv[tuple(slice(2 * m - 1, 3 * m - 1) for m in dims)]
    return np.maximum(block, DENSITY_FLOOR), padded, radii


@dataclass(frozen=True)
class FkdeModel:
    """Grid of precomputed density values; lookups bin the query per axis."""

    grids: tuple[Grid, ...]
    density: np.ndarray
    padded_sizes: tuple[int, ...]
    radii: tuple[int, ...]
    total: float
    floor: float = DENSITY_FLOOR

    def __post_init__(self):
        self.density.setflags(write=False)

    @classmethod
    def from_dense_weights(
        cls,
        dense_weights: np.ndarray,
        grids: Sequence[Grid],
        bandwidth: BandwidthMatrix,
        total: float,
    ) -> "FkdeModel":
        grids = tuple(grids)
        density, padded, radii = _convolved_density(dense_weights, grids, bandwidth, total)
        return cls(grids, density, padded, radii, total)

    @classmethod
    def from_data(
        cls,
        matrix: np.ndarray,
        grids: Sequence[Grid],
        rule: BinningRule,
        bandwidth: BandwidthMatrix,
    ) -> "FkdeModel":
        grids = tuple(grids)
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        tensor = bin_dataset(matrix, grids, rule)
        return cls.from_dense_weights(tensor.dense(), grids, bandwidth, tensor.total)

    @property
    def dim(self) -> int:
        return len(self.grids)

    def cell_indices(self, x: np.ndarray) -> np.ndarray:
        """Nearest grid index per axis, clamped to the grid bounds."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.stack(
            [nearest_indices(x[:, j], g) for j, g in enumerate(self.grids)], axis=1
        )

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        """Log stored density of the cell each query falls in, floored."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if self.dim == 1 else x.reshape(1, -1)
        idx = self.cell_indices(x)
        vals = self.density[tuple(idx.T)]
        return np.log(np.maximum(vals, self.floor))


def _check_guard(
    n_parents: int, grid_size: int, guard: FkdeGuardConfig, child: str
) -> None:
    dim = 1 + n_parents
    per_axis = padded_size(grid_size)
    elements = per_axis**dim
    if n_parents > guard.max_parents or elements > guard.max_padded_elements:
        raise FkdeDimensionError(
            f"fkde dimensionality guard for {child!r}: joint has {dim} dims "
            f"({n_parents} parents), padded size {per_axis} per axis, i.e. two "
            f"tensors of {elements} elements; limits are max_parents="
            f"{guard.max_parents}, max_padded_elements={guard.max_padded_elements}"
        )


@dataclass(frozen=True)
class FkdeCpd:
    """Conditional FKDE: grid lookup of joint density over parent-marginal density.

    Joint and marginal halves are fitted independently on the same grids;
    the marginal convolves the parent-projected weights with the kernel of
    the parent-block bandwidth.  Queries are binned with the nearest-point
    rule regardless of the training rule.
    """

    child: str
    parents: tuple[str, ...]
    joint: FkdeModel
    marginal: FkdeModel | None

    family = NodeType.FKDE

    @classmethod
    def fit(
        cls,
        child: str,
        parents: Sequence[str],
        matrix: np.ndarray,
        grid_size: int,
        rule: BinningRule,
        guard: FkdeGuardConfig | None = None,
        bandwidth: BandwidthMatrix | None = None,
    ) -> "FkdeCpd":
        parents = tuple(parents)
        guard = guard if guard is not None else FkdeGuardConfig()
        _check_guard(len(parents), grid_size, guard, child)
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        names = (child, *parents)
        if matrix.shape[1] != len(names):
            raise ValueError("matrix must have one column per (child, *parents)")
        if bandwidth is None:
            bandwidth = normal_reference_bandwidth(matrix, names)
        grids = tuple(build_grid(matrix[:, j], grid_size) for j in range(len(names)))
        tensor = bin_dataset(matrix, grids, rule)
        dense = tensor.dense()
        joint = FkdeModel.from_dense_weights(dense, grids, bandwidth, tensor.total)
        marginal = None
        if parents:
            axes = tuple(range(1, len(names)))
            marginal = FkdeModel.from_dense_weights(
                dense.sum(axis=0), grids[1:], bandwidth.submatrix(axes), tensor.total
            )
        return cls(child, parents, joint, marginal)

    def conditional_logpdf(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        out = self.joint.logpdf(values)
        if self.marginal is not None:
            out = out - self.marginal.logpdf(values[:, 1:])
        return out
