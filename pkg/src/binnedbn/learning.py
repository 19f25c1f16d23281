"""Parameter fitting, cross-validated scoring, and hill-climbing structure search.

The network score is the k-fold cross-validated log-likelihood: rows are
split once per run by a seeded shuffle, each fold's CPDs are fitted on the
complement and evaluated on the held-out rows, and the per-node terms sum
over folds.  The score decomposes over nodes, so a candidate operator only
re-scores the node(s) whose parent set or family it changes; every
(node, parents, family) score is memoized for the lifetime of a search.

Hill climbing starts from the empty graph with all nodes linear Gaussian
and repeatedly applies the best of all legal arc additions, deletions,
flips, and family toggles.  With patience `p`, the search keeps applying
the best available operator through up to `p` consecutive iterations that
fail to improve the best score seen, then returns that best state refitted
on the full dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .binned_kde import FkdeCpd, FkdeDimensionError, FkdeGuardConfig, SbkdeCpd, padded_size
from .binning import BinningRule
from .core import Dag, Dataset, NetworkModel, NodeType
from .kde import (
    LOG_2PI,
    BandwidthMatrix,
    CkdeCpd,
    FitError,
    mixture_logpdf,
    normal_reference_bandwidth,
    normal_reference_factor,
)

__all__ = [
    "HcConfig",
    "HillClimbResult",
    "LgCpd",
    "SIGMA2_MIN",
    "SearchStep",
    "cv_folds",
    "cv_score",
    "fit",
    "hill_climb",
    "loglik",
]

# Variance floor for noiseless regressions.
SIGMA2_MIN = 1e-12


@dataclass(frozen=True)
class LgCpd:
    """Linear Gaussian conditional: child ~ N(intercept + coeffs . parents, variance)."""

    child: str
    parents: tuple[str, ...]
    intercept: float
    coefficients: np.ndarray
    variance: float

    family = NodeType.LG

    @classmethod
    def fit(cls, child: str, parents: Sequence[str], matrix: np.ndarray) -> "LgCpd":
        """Maximum likelihood fit; ``matrix`` columns are (child, *parents).

        The variance is the mean squared residual (N denominator), floored
        at SIGMA2_MIN so noiseless fits stay evaluable.
        """
        parents = tuple(parents)
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        n_rows = matrix.shape[0]
        n_par = len(parents)
        if matrix.shape[1] != 1 + n_par:
            raise ValueError("matrix must have one column per (child, *parents)")
        if n_rows <= n_par + 1:
            raise FitError(
                f"node {child!r}: {n_rows} rows cannot fit {n_par} parents plus intercept"
            )
        y = matrix[:, 0]
        design = np.column_stack([np.ones(n_rows), matrix[:, 1:]])
        coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
        if rank < n_par + 1:
            raise FitError(f"node {child!r}: collinear parent columns among {parents}")
        residuals = y - design @ coef
        variance = max(float(np.mean(residuals**2)), SIGMA2_MIN)
        coefficients = np.ascontiguousarray(coef[1:])
        coefficients.setflags(write=False)
        return cls(child, parents, float(coef[0]), coefficients, variance)

    def conditional_logpdf(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        mean = self.intercept + values[:, 1:] @ self.coefficients
        resid = values[:, 0] - mean
        return -0.5 * (LOG_2PI + math.log(self.variance)) - 0.5 * resid**2 / self.variance


@dataclass(frozen=True)
class HcConfig:
    """Knobs for fitting and structure search.

    ``family`` is the nonparametric family that type toggles switch to;
    ``max_parents`` is a global cap on any node's parent count (None for
    unlimited), independent of the FKDE guard.
    """

    patience: int = 3
    folds: int = 5
    family: NodeType = NodeType.CKDE
    rule: BinningRule = BinningRule.LINEAR
    grid_size: int = 100
    guard: FkdeGuardConfig = field(default_factory=FkdeGuardConfig)
    max_parents: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.patience < 0:
            raise ValueError("patience must be >= 0")
        if self.folds < 2:
            raise ValueError("cross validation needs at least 2 folds")
        if self.grid_size < 2:
            raise ValueError("grid size must be at least 2")
        if not self.family.is_nonparametric:
            raise ValueError("family must be one of the nonparametric tags")
        if self.max_parents is not None and self.max_parents < 0:
            raise ValueError("max_parents must be >= 0")


def fit_cpd(
    child: str,
    parents: tuple[str, ...],
    node_type: NodeType,
    matrix: np.ndarray,
    config: HcConfig,
):
    """Fit one node's CPD of the requested family on (child, *parents) columns."""
    try:
        if node_type is NodeType.LG:
            return LgCpd.fit(child, parents, matrix)
        if node_type is NodeType.CKDE:
            return CkdeCpd.fit(child, parents, matrix)
        if node_type is NodeType.SBKDE:
            return SbkdeCpd.fit(child, parents, matrix, config.grid_size, config.rule)
        if node_type is NodeType.FKDE:
            return FkdeCpd.fit(
                child, parents, matrix, config.grid_size, config.rule, config.guard
            )
    except FitError as exc:
        if f"node {child!r}" in str(exc):
            raise
        raise FitError(f"node {child!r}: {exc}") from exc
    raise ValueError(f"unknown node type {node_type}")


def fit(
    dag: Dag, types: Mapping[str, NodeType], dataset: Dataset, config: HcConfig
) -> NetworkModel:
    """Fit every node's CPD for a fixed structure and family assignment."""
    cpds = {}
    for node in dag.nodes:
        parents = dag.parents(node)
        matrix = dataset.matrix((node, *parents))
        cpds[node] = fit_cpd(node, parents, types[node], matrix, config)
    return NetworkModel(dag, dict(types), cpds)


def loglik(model: NetworkModel, dataset: Dataset) -> tuple[np.ndarray, float]:
    """Per-row joint log density (sum of per-node conditionals) and its total."""
    per_row = np.zeros(dataset.n_rows)
    for node in model.dag.nodes:
        cpd = model.cpds[node]
        matrix = dataset.matrix((node, *cpd.parents))
        per_row += cpd.conditional_logpdf(matrix)
    return per_row, float(per_row.sum())


def cv_folds(n_rows: int, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded shuffle split into k (train, held-out) index pairs."""
    if n_rows < k:
        raise ValueError(f"{n_rows} rows cannot form {k} folds")
    perm = np.random.default_rng(seed).permutation(n_rows)
    parts = np.array_split(perm, k)
    folds = []
    for i, part in enumerate(parts):
        train = np.concatenate([parts[j] for j in range(k) if j != i])
        folds.append((np.sort(train), np.sort(part)))
    return folds


class CvScorer:
    """Memoized per-node cross-validated log-likelihood terms.

    The fold partition is fixed at construction so deltas stay comparable
    across all candidates of one search run.  A fold whose fit fails (or
    trips the FKDE guard) scores -inf, which rejects the candidate.

    For exact-KDE nodes the held-out marginal term is child-independent:
    the parent block of the normal-reference joint bandwidth is the scaled
    parent covariance, so its fold sums are cached per parent set and
    shared across every candidate child.
    """

    def __init__(self, dataset: Dataset, config: HcConfig):
        self.dataset = dataset
        self.config = config
        self.folds = cv_folds(dataset.n_rows, config.folds, config.seed)
        self._column_pos = {name: i for i, name in enumerate(dataset.columns)}
        self._memo: dict[tuple, float] = {}
        self._marginal_memo: dict[tuple, float] = {}

    def canonical_parents(self, parents: Sequence[str]) -> tuple[str, ...]:
        return tuple(sorted(parents, key=self._column_pos.__getitem__))

    def node_score(
        self, child: str, parents: Sequence[str], node_type: NodeType
    ) -> float:
        parents = self.canonical_parents(parents)
        key = (child, parents, node_type)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        if node_type is NodeType.CKDE:
            total = self._ckde_score(child, parents)
        else:
            total = self._generic_score(child, parents, node_type)
        self._memo[key] = total
        return total

    def _generic_score(
        self, child: str, parents: tuple[str, ...], node_type: NodeType
    ) -> float:
        matrix = self.dataset.matrix((child, *parents))
        total = 0.0
        for train_idx, test_idx in self.folds:
            try:
                cpd = fit_cpd(child, parents, node_type, matrix[train_idx], self.config)
            except (FitError, FkdeDimensionError):
                return -math.inf
            total += float(cpd.conditional_logpdf(matrix[test_idx]).sum())
        return total

    def _ckde_score(self, child: str, parents: tuple[str, ...]) -> float:
        matrix = self.dataset.matrix((child, *parents))
        total = 0.0
        for fold, (train_idx, test_idx) in enumerate(self.folds):
            train = matrix[train_idx]
            try:
                bandwidth = normal_reference_bandwidth(train, (child, *parents))
                log_w = np.full(len(train), -math.log(len(train)))
                total += float(
                    mixture_logpdf(matrix[test_idx], train, bandwidth, log_w).sum()
                )
                if parents:
                    total -= self._marginal_logpdf_sum(parents, fold)
            except FitError:
                return -math.inf
        return total

    def _marginal_logpdf_sum(self, parents: tuple[str, ...], fold: int) -> float:
        key = (parents, fold)
        cached = self._marginal_memo.get(key)
        if cached is not None:
            return cached
        matrix = self.dataset.matrix(parents)
        train_idx, test_idx = self.folds[fold]
        train = matrix[train_idx]
        cov = np.atleast_2d(np.cov(train, rowvar=False, ddof=1))
        # Parent block of the joint normal-reference bandwidth: the factor is
        # taken at the joint dimension 1 + |parents|.
        bandwidth = BandwidthMatrix.from_matrix(
            normal_reference_factor(len(parents) + 1, len(train)) * cov
        )
        log_w = np.full(len(train), -math.log(len(train)))
        value = float(mixture_logpdf(matrix[test_idx], train, bandwidth, log_w).sum())
        self._marginal_memo[key] = value
        return value

    def network_score(self, dag: Dag, types: Mapping[str, NodeType]) -> float:
        return sum(
            self.node_score(node, dag.parents(node), types[node]) for node in dag.nodes
        )


def cv_score(
    dataset: Dataset, dag: Dag, types: Mapping[str, NodeType], config: HcConfig
) -> float:
    """Cross-validated log-likelihood of a structure + family assignment."""
    return CvScorer(dataset, config).network_score(dag, types)


# ---------------------------------------------------------------------------
# Hill climbing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchStep:
    """One applied operator in the search trace."""

    iteration: int
    kind: str
    parent: str
    child: str
    delta: float
    score: float
    best_score: float


@dataclass(frozen=True)
class HillClimbResult:
    model: NetworkModel
    dag: Dag
    types: dict[str, NodeType]
    score: float
    trace: tuple[SearchStep, ...]


def _parent_capacity(node_type: NodeType, config: HcConfig) -> float:
    """Largest admissible parent count for a node of this family."""
    cap = math.inf if config.max_parents is None else config.max_parents
    if node_type is NodeType.FKDE:
        cap = min(cap, config.guard.max_parents)
        per_axis = padded_size(config.grid_size)
        budget = 0
        while per_axis ** (budget + 2) <= config.guard.max_padded_elements:
            budget += 1
        cap = min(cap, budget)
    return cap


def _legal_operators(dag: Dag, types, config: HcConfig):
    """All (kind, parent, child) operators legal in the current state, sorted."""
    ops = []
    nodes = dag.nodes
    for v in nodes:
        toggled = config.family if types[v] is NodeType.LG else NodeType.LG
        if len(dag.parents(v)) <= _parent_capacity(toggled, config):
            ops.append(("type", "", v))
    for u, v in dag.arcs:
        ops.append(("delete", u, v))
        without = dag.without_arc(u, v)
        if (
            not without.has_path(u, v)
            and len(dag.parents(u)) + 1 <= _parent_capacity(types[u], config)
        ):
            ops.append(("flip", u, v))
    for u in nodes:
        for v in nodes:
            if u == v or (u, v) in dag.arcs:
                continue
            if dag.has_path(v, u):
                continue
            if len(dag.parents(v)) + 1 > _parent_capacity(types[v], config):
                continue
            ops.append(("add", u, v))
    ops.sort(key=lambda op: (op[0], op[2], op[1]))
    return ops


def _operator_delta(op, dag, types, node_scores, scorer: CvScorer):
    """Score change and the re-scored node terms for one candidate operator."""
    kind, u, v = op
    if kind == "type":
        new_type = scorer.config.family if types[v] is NodeType.LG else NodeType.LG
        new = scorer.node_score(v, dag.parents(v), new_type)
        return new - node_scores[v], {v: new}
    parents_v = set(dag.parents(v))
    if kind == "add":
        parents_v.add(u)
    else:
        parents_v.discard(u)
    new_v = scorer.node_score(v, tuple(parents_v), types[v])
    changes = {v: new_v}
    delta = new_v - node_scores[v]
    if kind == "flip":
        parents_u = set(dag.parents(u)) | {v}
        new_u = scorer.node_score(u, tuple(parents_u), types[u])
        changes[u] = new_u
        delta += new_u - node_scores[u]
    return delta, changes


def _apply_operator(op, dag, types, config: HcConfig):
    kind, u, v = op
    if kind == "add":
        return dag.with_arc(u, v), types
    if kind == "delete":
        return dag.without_arc(u, v), types
    if kind == "flip":
        return dag.with_flipped_arc(u, v), types
    new_types = dict(types)
    new_types[v] = config.family if types[v] is NodeType.LG else NodeType.LG
    return dag, new_types


def hill_climb(dataset: Dataset, config: HcConfig | None = None) -> HillClimbResult:
    """Greedy structure search with patience over arcs and node families.

    Starts from the empty graph with every node linear Gaussian.  Each
    iteration applies the operator with the largest score delta (ties broken
    lexicographically on kind, child, parent); with patience p the search
    tolerates up to p consecutive applications that do not improve the best
    score seen before stopping.  The best state is refitted on the full
    dataset and returned together with the applied-operator trace.
    """
    config = config if config is not None else HcConfig()
    scorer = CvScorer(dataset, config)
    dag = Dag(dataset.columns)
    types: dict[str, NodeType] = {v: NodeType.LG for v in dataset.columns}
    node_scores = {v: scorer.node_score(v, (), types[v]) for v in dataset.columns}
    current = sum(node_scores.values())
    best_dag, best_types, best_score = dag, dict(types), current

    trace: list[SearchStep] = []
    streak = 0
    iteration = 0
    while True:
        iteration += 1
        best_op, best_delta, best_changes = None, -math.inf, None
        for op in _legal_operators(dag, types, config):
            delta, changes = _operator_delta(op, dag, types, node_scores, scorer)
            if delta > best_delta:
                best_op, best_delta, best_changes = op, delta, changes
        if best_op is None:
            break
        new_score = current + best_delta
        improving = new_score > best_score
        if not improving and streak >= config.patience:
            break
        dag, types = _apply_operator(best_op, dag, types, config)
        node_scores.update(best_changes)
        current = new_score
        if improving:
            best_dag, best_types, best_score = dag, dict(types), current
            streak = 0
        else:
            streak += 1
        trace.append(
            SearchStep(
                iteration,
                best_op[0],
                best_op[1],
                best_op[2],
                best_delta,
                current,
                best_score,
            )
        )

    model = fit(best_dag, best_types, dataset, config)
    return HillClimbResult(model, best_dag, dict(best_types), best_score, tuple(trace))
