"""Structural distances, log-likelihood error measures, and timing ratios."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import Dag, NodeType

__all__ = [
    "LoglikErrors",
    "RunTiming",
    "hmd",
    "loglik_errors",
    "shd",
    "speed_ratio",
    "thmd",
]

# References smaller than this in magnitude are excluded from the relative
# mean absolute error instead of poisoning the mean.
RMAE_EXCLUSION_THRESHOLD = 1e-12


@dataclass(frozen=True)
class RunTiming:
    """Wall-clock seconds for structure learning and test log-likelihood."""

    hc_seconds: float
    test_seconds: float

    def __post_init__(self):
        if self.hc_seconds < 0 or self.test_seconds < 0:
            raise ValueError("timings must be nonnegative")


def _check_same_nodes(d1: Dag, d2: Dag) -> None:
    if set(d1.nodes) != set(d2.nodes):
        raise ValueError("structures are over different node sets")


def _skeleton(dag: Dag) -> set[frozenset[str]]:
    return {frozenset(arc) for arc in dag.arcs}


def hmd(d1: Dag, d2: Dag) -> int:
    """Arc additions/deletions between the undirected skeletons."""
    _check_same_nodes(d1, d2)
    return len(_skeleton(d1) ^ _skeleton(d2))


def shd(d1: Dag, d2: Dag) -> int:
    """Structural Hamming distance: skeleton edits plus one per flipped arc.

    An edge present in only one skeleton counts once (never doubled as a
    flip); a shared edge with opposite orientation counts once.
    """
    _check_same_nodes(d1, d2)
    s1, s2 = _skeleton(d1), _skeleton(d2)
    flips = sum(
        1
        for edge in s1 & s2
        for (u, v) in (tuple(sorted(edge)),)
        if ((u, v) in d1.arcs) != ((u, v) in d2.arcs)
    )
    return len(s1 ^ s2) + flips


def thmd(t1: Mapping[str, NodeType], t2: Mapping[str, NodeType]) -> int:
    """Nodes whose parametric-vs-nonparametric class differs.

    The three kernel families all count as nonparametric, so a CKDE network
    and a binned one are comparable.
    """
    if set(t1) != set(t2):
        raise ValueError("type maps are over different node sets")
    return sum(
        1 for node in t1 if t1[node].is_nonparametric != t2[node].is_nonparametric
    )


@dataclass(frozen=True)
class LoglikErrors:
    """RMSE and relative MAE (percent) between per-row log-likelihood vectors.

    ``rmae_pct`` is None when every reference entry was excluded as too
    close to zero; ``n_excluded`` counts the exclusions.
    """

    rmse: float
    rmae_pct: float | None
    n_excluded: int


def loglik_errors(reference: np.ndarray, estimate: np.ndarray) -> LoglikErrors:
    reference = np.asarray(reference, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if reference.shape != estimate.shape or reference.ndim != 1 or reference.size < 1:
        raise ValueError("inputs must be equal-length nonempty vectors")
    diff = estimate - reference
    rmse = float(np.sqrt(np.mean(diff**2)))
    include = np.abs(reference) >= RMAE_EXCLUSION_THRESHOLD
    n_excluded = int((~include).sum())
    if include.any():
        rmae = float(np.mean(np.abs(diff[include] / reference[include])) * 100.0)
    else:
        rmae = None
    return LoglikErrors(rmse, rmae, n_excluded)


def speed_ratio(baseline_seconds: float, candidate_seconds: float) -> float:
    """baseline / candidate; above 1 means the candidate is faster."""
    if candidate_seconds <= 0:
        raise ValueError("candidate time must be positive")
    return baseline_seconds / candidate_seconds
