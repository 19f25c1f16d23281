"""Exact Gaussian kernel density estimation and its conditional form.

The scaled kernel is the Gaussian density with covariance H, so a KDE is a
uniform mixture of N Gaussians centered on the training points.  The
conditional density of a child given its parents is the ratio of the joint
KDE over (child, parents) to the marginal KDE over the parents, where the
marginal reuses the same training points with the parent block of the joint
bandwidth.  All evaluation happens in log space.

``mixture_logpdf`` is the single evaluation routine shared with the binned
estimators: a weighted Gaussian-mixture log density with a common bandwidth,
computed by log-sum-exp over whitened pairwise distances.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

# The TBB probe warns on this platform; openmp behaves identically for the
# per-row parallelism used here.  Respect an explicit override.
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

import numba
import numpy as np
from scipy.linalg import solve_triangular

from .core import NodeType

__all__ = [
    "BandwidthMatrix",
    "CkdeCpd",
    "FitError",
    "KdeModel",
    "gaussian_log_kernel",
    "mixture_logpdf",
    "normal_reference_bandwidth",
]

LOG_2PI = math.log(2.0 * math.pi)

# exp(x - max) below this threshold is < 3e-20: invisible next to the leading
# term at double precision, so the term can be skipped.
_EXP_CUTOFF = -45.0


class FitError(ValueError):
    """A CPD could not be fitted (degenerate or collinear training data)."""


# Below this many query-center pairs the parallel launch overhead dominates,
# so the serial kernel is used instead.
_PARALLEL_PAIR_THRESHOLD = 2_000_000


@numba.njit(parallel=True, fastmath=True, cache=True)
def _pairwise_logsumexp(queries, centers, log_weights):  # pragma: no cover - jitted
    """log sum_j exp(log_weights[j] - 0.5*|q_i - c_j|^2) per query row.

    Inputs must already be whitened (identity covariance).
    """
    m, d = queries.shape
    n_centers = centers.shape[0]
    out = np.empty(m)
    for i in numba.prange(m):
        buf = np.empty(n_centers)
        top = -np.inf
        for j in range(n_centers):
            s = 0.0
            for k in range(d):
                diff = queries[i, k] - centers[j, k]
                s += diff * diff
            v = log_weights[j] - 0.5 * s
            buf[j] = v
            if v > top:
                top = v
        acc = 0.0
        cut = top + _EXP_CUTOFF
        for j in range(n_centers):
            if buf[j] > cut:
                acc += np.exp(buf[j] - top)
        out[i] = np.log(acc) + top
    return out


@numba.njit(fastmath=True, cache=True)
def _pairwise_logsumexp_serial(queries, centers, log_weights):  # pragma: no cover
    m, d = queries.shape
    n_centers = centers.shape[0]
    out = np.empty(m)
    buf = np.empty(n_centers)
    for i in range(m):
        top = -np.inf
        for j in range(n_centers):
            s = 0.0
            for k in range(d):
                diff = queries[i, k] - centers[j, k]
                s += diff * diff
            v = log_weights[j] - 0.5 * s
            buf[j] = v
            if v > top:
                top = v
        acc = 0.0
        cut = top + _EXP_CUTOFF
        for j in range(n_centers):
            if buf[j] > cut:
                acc += np.exp(buf[j] - top)
        out[i] = np.log(acc) + top
    return out


@dataclass(frozen=True)
class BandwidthMatrix:
    """Symmetric positive definite bandwidth with its Cholesky factor cached.

    ``chol_inv`` (the inverse of the lower factor) is precomputed so that
    whitening a batch is a single small matrix product.
    """

    matrix: np.ndarray
    chol: np.ndarray
    chol_inv: np.ndarray
    log_det: float

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "BandwidthMatrix":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError("bandwidth matrix must be square")
        if not np.allclose(matrix, matrix.T, rtol=1e-10, atol=1e-12):
            raise ValueError("bandwidth matrix must be symmetric")
        try:
            chol = np.linalg.cholesky(matrix)
        except np.linalg.LinAlgError as exc:
            raise FitError(f"bandwidth matrix is not positive definite: {exc}") from exc
        chol_inv = solve_triangular(
            chol, np.eye(matrix.shape[0]), lower=True, check_finite=False
        )
        log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
        matrix = matrix.copy()
        matrix.setflags(write=False)
        chol.setflags(write=False)
        chol_inv.setflags(write=False)
        return cls(matrix, chol, chol_inv, log_det)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def submatrix(self, keep: Sequence[int]) -> "BandwidthMatrix":
        """Principal submatrix on the ``keep`` coordinates."""
        keep = np.asarray(keep, dtype=np.intp)
        return BandwidthMatrix.from_matrix(self.matrix[np.ix_(keep, keep)])


def gaussian_log_kernel(u) -> float:
    """Standard Gaussian log density at a whitened point u."""
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    return float(-0.5 * u.size * LOG_2PI - 0.5 * np.dot(u, u))


def normal_reference_factor(d: int, n_rows: int) -> float:
    """Scale applied to the sample covariance: (4/(d+2))^(2/(d+4)) * N^(-2/(d+4))."""
    return (4.0 / (d + 2)) ** (2.0 / (d + 4)) * n_rows ** (-2.0 / (d + 4))


def normal_reference_bandwidth(data: np.ndarray, names: Sequence[str] | None = None) -> BandwidthMatrix:
    """Closed-form bandwidth (4/(d+2))^(2/(d+4)) * cov * N^(-2/(d+4)).

    ``cov`` is the sample covariance with the N-1 denominator.  Raises
    FitError when the covariance is singular, naming constant columns if any
    (``names`` labels the columns in the message).
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    n_rows, d = data.shape
    if n_rows < 2:
        raise FitError("normal reference bandwidth needs at least 2 rows")
    cov = np.atleast_2d(np.cov(data, rowvar=False, ddof=1))
    labels = list(names) if names is not None else [f"column {j}" for j in range(d)]
    try:
        return BandwidthMatrix.from_matrix(normal_reference_factor(d, n_rows) * cov)
    except FitError:
        variances = np.diag(cov)
        constant = [labels[j] for j in range(d) if variances[j] <= 0.0]
        if constant:
            raise FitError(f"constant training column(s): {constant}") from None
        raise FitError(f"collinear training columns among {labels}") from None


def _whiten(bandwidth: BandwidthMatrix, x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x @ bandwidth.chol_inv.T)


def mixture_logpdf(
    queries: np.ndarray,
    centers: np.ndarray,
    bandwidth: BandwidthMatrix,
    log_weights: np.ndarray,
) -> np.ndarray:
    """log sum_j exp(log_weights[j]) * N(q; centers[j], H) for each query row.

    Callers fold any 1/N normalization into ``log_weights``.  Never returns
    NaN for finite inputs; the log-sum-exp is floored at the largest term.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    log_weights = np.ascontiguousarray(log_weights, dtype=np.float64)
    kernel = (
        _pairwise_logsumexp
        if queries.shape[0] * centers.shape[0] >= _PARALLEL_PAIR_THRESHOLD
        else _pairwise_logsumexp_serial
    )
    raw = kernel(_whiten(bandwidth, queries), _whiten(bandwidth, centers), log_weights)
    return raw - 0.5 * bandwidth.dim * LOG_2PI - 0.5 * bandwidth.log_det


@dataclass(frozen=True)
class KdeModel:
    """Joint KDE over the rows of ``points`` with a fixed bandwidth."""

    points: np.ndarray
    bandwidth: BandwidthMatrix

    def __post_init__(self):
        if self.points.ndim != 2:
            raise ValueError("training points must be (N, d)")
        if self.points.shape[1] != self.bandwidth.dim:
            raise ValueError("bandwidth dimension does not match the points")
        if self.points.shape[0] < 1:
            raise ValueError("KDE needs at least one training point")
        self.points.setflags(write=False)

    @classmethod
    def fit(cls, data: np.ndarray, names: Sequence[str] | None = None) -> "KdeModel":
        data = np.asarray(data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        return cls(np.ascontiguousarray(data), normal_reference_bandwidth(data, names))

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        """Log density at each query row; 1-D input is a batch when d == 1, else one point."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if self.dim == 1 else x.reshape(1, -1)
        log_w = np.full(self.n_points, -math.log(self.n_points))
        return mixture_logpdf(x, self.points, self.bandwidth, log_w)


@dataclass(frozen=True)
class CkdeCpd:
    """Conditional KDE: joint over (child, parents) divided by the parent marginal.

    The marginal shares the joint's training points restricted to the parent
    coordinates and uses the parent block of the joint bandwidth, making the
    ratio a proper conditional of one joint smoother.
    """

    child: str
    parents: tuple[str, ...]
    joint: KdeModel
    marginal: KdeModel | None

    family = NodeType.CKDE

    @classmethod
    def fit(cls, child: str, parents: Sequence[str], matrix: np.ndarray) -> "CkdeCpd":
        """``matrix`` columns are (child, *parents)."""
        parents = tuple(parents)
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        if matrix.shape[1] != 1 + len(parents):
            raise ValueError("matrix must have one column per (child, *parents)")
        joint = KdeModel.fit(matrix, names=(child, *parents))
        marginal = None
        if parents:
            keep = np.arange(1, matrix.shape[1])
            marginal = KdeModel(
                np.ascontiguousarray(matrix[:, 1:]), joint.bandwidth.submatrix(keep)
            )
        return cls(child, parents, joint, marginal)

    def conditional_logpdf(self, values: np.ndarray) -> np.ndarray:
        """Per-row log f(child | parents); ``values`` columns are (child, *parents)."""
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        out = self.joint.logpdf(values)
        if self.marginal is not None:
            out = out - self.marginal.logpdf(values[:, 1:])
        return out
