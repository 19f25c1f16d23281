"""Independent reference implementations used by the test suite.

These deliberately avoid the library's evaluation paths: densities come
from direct per-pair sums with explicit matrix inverses, and convolutions
from shift-and-add loops, so agreement with the fast implementations is
meaningful.
"""

import math

import numpy as np
from scipy.stats import multivariate_normal


def brute_kde_logpdf(points, bandwidth_matrix, query):
    """Direct per-point kernel sum, max-shifted against underflow."""
    points = np.atleast_2d(points)
    h_inv = np.linalg.inv(bandwidth_matrix)
    _, log_det = np.linalg.slogdet(bandwidth_matrix)
    d = points.shape[1]
    exponents = []
    for row in points:
        diff = query - row
        exponents.append(
            -0.5 * d * math.log(2 * math.pi) - 0.5 * log_det - 0.5 * diff @ h_inv @ diff
        )
    top = max(exponents)
    return top + math.log(sum(math.exp(e - top) for e in exponents) / points.shape[0])


def dense_bkde_logpdf(dense_weights, grids, bandwidth_matrix, query, total):
    """Weighted kernel sum iterated over the full grid, zero cells included."""
    mesh = np.meshgrid(*[g.points for g in grids], indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=1)
    diffs = query - centers
    h_inv = np.linalg.inv(bandwidth_matrix)
    _, log_det = np.linalg.slogdet(bandwidth_matrix)
    d = centers.shape[1]
    exponents = (
        -0.5 * d * math.log(2 * math.pi)
        - 0.5 * log_det
        - 0.5 * np.einsum("ij,jk,ik->i", diffs, h_inv, diffs)
    )
    top = exponents.max()
    mass = np.sum(dense_weights.ravel() * np.exp(exponents - top))
    return float(top + np.log(mass / total))


def independent_kernel_tensor(grids, radii, bandwidth_matrix, total):
    """Kernel values on the truncation lattice via scipy, not the library."""
    offsets = [g.binwidth * np.arange(-r, r + 1) for g, r in zip(grids, radii)]
    mesh = np.meshgrid(*offsets, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = multivariate_normal(mean=np.zeros(len(grids)), cov=bandwidth_matrix).pdf(pts)
    return np.asarray(vals).reshape([2 * r + 1 for r in radii]) / total


def direct_truncated_convolution(dense_weights, kernel, radii):
    """Shift-and-add evaluation of sum_l c[t-l] k[l], no FFT anywhere."""
    out = np.zeros_like(dense_weights)
    dims = dense_weights.shape
    for offset in np.ndindex(*kernel.shape):
        lag = tuple(o - r for o, r in zip(offset, radii))
        src, dst = [], []
        for li, m in zip(lag, dims):
            lo, hi = max(0, li), min(m, m + li)
            if lo >= hi:
                break
            dst.append(slice(lo, hi))
            src.append(slice(lo - li, hi - li))
        else:
            out[tuple(dst)] += dense_weights[tuple(src)] * kernel[offset]
    return out
