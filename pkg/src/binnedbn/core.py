"""Graph and data containers shared by the estimation and learning modules.

A network is a directed acyclic graph over named continuous variables plus a
conditional density model (CPD) per node.  Every CPD object exposes the same
duck-typed surface:

    cpd.child                   name of the modelled variable
    cpd.parents                 tuple of parent names, in DAG order
    cpd.conditional_logpdf(v)   per-row log density; ``v`` is an (m, 1+p)
                                array whose columns are (child, *parents)

All containers here are immutable after construction and safe to share
across threads; structure search mutates private copies.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "CycleError",
    "Dag",
    "Dataset",
    "NetworkModel",
    "NodeType",
    "is_acyclic",
    "parents",
    "topological_order",
]


class CycleError(ValueError):
    """Raised when an operation requires an acyclic graph and the arcs contain a cycle."""


class NodeType(enum.Enum):
    """CPD family tag for one node.

    LG is the parametric (linear Gaussian) family; the other three are
    nonparametric kernel families.  A learned network mixes LG with at most
    one nonparametric family.
    """

    LG = "LG"
    CKDE = "CKDE"
    SBKDE = "SBKDE"
    FKDE = "FKDE"

    @property
    def is_nonparametric(self) -> bool:
        return self is not NodeType.LG


@dataclass(frozen=True)
class Dag:
    """Directed graph over named nodes.

    The arc set may be cyclic (``is_acyclic`` is an honest predicate); every
    consumer that needs acyclicity checks it or relies on the structure
    learner, which only ever applies acyclicity-preserving operators.

    Parameters
    ----------
    nodes : declaration-ordered variable names (the tie-break order for
        topological sorts).
    arcs : set of (parent, child) pairs.
    """

    nodes: tuple[str, ...]
    arcs: frozenset[tuple[str, str]]

    def __init__(self, nodes: Iterable[str], arcs: Iterable[tuple[str, str]] = ()):
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate node names")
        declared = set(nodes)
        arcset = set()
        for u, v in arcs:
            if u == v:
                raise ValueError(f"self-loop on node {u!r}")
            if u not in declared or v not in declared:
                raise KeyError(f"arc ({u!r}, {v!r}) references an undeclared node")
            arcset.add((u, v))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "arcs", frozenset(arcset))

    @cached_property
    def _index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.nodes)}

    @cached_property
    def _parents(self) -> dict[str, tuple[str, ...]]:
        by_child: dict[str, list[str]] = {v: [] for v in self.nodes}
        for u, v in self.arcs:
            by_child[v].append(u)
        ix = self._index
        return {v: tuple(sorted(ps, key=ix.__getitem__)) for v, ps in by_child.items()}

    @cached_property
    def _children(self) -> dict[str, tuple[str, ...]]:
        by_parent: dict[str, list[str]] = {v: [] for v in self.nodes}
        for u, v in self.arcs:
            by_parent[u].append(v)
        ix = self._index
        return {u: tuple(sorted(cs, key=ix.__getitem__)) for u, cs in by_parent.items()}

    def parents(self, node: str) -> tuple[str, ...]:
        """Sources of arcs into ``node``, in declaration order."""
        try:
            return self._parents[node]
        except KeyError:
            raise KeyError(f"unknown node {node!r}") from None

    def children(self, node: str) -> tuple[str, ...]:
        try:
            return self._children[node]
        except KeyError:
            raise KeyError(f"unknown node {node!r}") from None

    def has_path(self, source: str, target: str) -> bool:
        """True iff a directed path source -> ... -> target exists (length >= 0)."""
        if source == target:
            return True
        stack = [source]
        seen = {source}
        while stack:
            for child in self._children[stack.pop()]:
                if child == target:
                    return True
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return False

    def with_arc(self, u: str, v: str) -> "Dag":
        return Dag(self.nodes, self.arcs | {(u, v)})

    def without_arc(self, u: str, v: str) -> "Dag":
        if (u, v) not in self.arcs:
            raise KeyError(f"arc ({u!r}, {v!r}) not present")
        return Dag(self.nodes, self.arcs - {(u, v)})

    def with_flipped_arc(self, u: str, v: str) -> "Dag":
        return Dag(self.nodes, (self.arcs - {(u, v)}) | {(v, u)})


def is_acyclic(dag: Dag) -> bool:
    """True iff the arc set admits a topological order."""
    try:
        topological_order(dag)
    except CycleError:
        return False
    return True


def topological_order(dag: Dag) -> list[str]:
    """Kahn's algorithm with declaration-order tie-breaking.

    Deterministic: among the nodes whose parents are all placed, the one
    declared first is emitted first.

    Raises
    ------
    CycleError
        If the arcs contain a directed cycle.
    """
    indegree = {v: len(dag.parents(v)) for v in dag.nodes}
    order: list[str] = []
    ready = [v for v in dag.nodes if indegree[v] == 0]
    while ready:
        node = ready.pop(0)
        order.append(node)
        newly = []
        for child in dag.children(node):
            indegree[child] -= 1
            if indegree[child] == 0:
                newly.append(child)
        if newly:
            ready.extend(newly)
            ix = dag._index
            ready.sort(key=ix.__getitem__)
    if len(order) != len(dag.nodes):
        stuck = sorted(v for v, deg in indegree.items() if deg > 0)
        raise CycleError(f"arc set contains a cycle through {stuck}")
    return order


def parents(dag: Dag, node: str) -> tuple[str, ...]:
    return dag.parents(node)


@dataclass(frozen=True)
class Dataset:
    """Column-named table of finite reals, shape (N, n).

    Node identity is the column name; the column order defines the canonical
    node indexing used everywhere downstream.  NaN and infinities are
    rejected here so no kernel ever sees them.
    """

    columns: tuple[str, ...]
    values: np.ndarray

    def __init__(self, columns: Iterable[str], values: np.ndarray):
        columns = tuple(columns)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        if values.shape[0] < 1:
            raise ValueError("dataset needs at least one row")
        if values.shape[1] != len(columns):
            raise ValueError(
                f"{len(columns)} column names for {values.shape[1]} data columns"
            )
        if len(set(columns)) != len(columns):
            raise ValueError("duplicate column names")
        if not np.all(np.isfinite(values)):
            bad = [columns[j] for j in np.unique(np.nonzero(~np.isfinite(values))[1])]
            raise ValueError(f"non-finite values in column(s) {bad}")
        values.setflags(write=False)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "values", values)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {name: j for j, name in enumerate(self.columns)}

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self._index[name]]
        except KeyError:
            raise KeyError(f"unknown column {name!r}") from None

    def matrix(self, names: Iterable[str]) -> np.ndarray:
        """Columns in the requested order as a contiguous (N, k) array."""
        idx = [self._index[name] for name in names]
        return np.ascontiguousarray(self.values[:, idx])

    def take_rows(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.columns, self.values[rows])


@dataclass(frozen=True)
class NetworkModel:
    """A DAG, per-node family tags, and the fitted CPDs.

    Invariants checked at construction: every node carries a tag and a CPD,
    each CPD's parent set equals the DAG's, the CPD family matches the tag,
    and at most one nonparametric family is in use.
    """

    dag: Dag
    types: Mapping[str, NodeType]
    cpds: Mapping[str, object] = field(repr=False)

    def __post_init__(self):
        families = set()
        for node in self.dag.nodes:
            if node not in self.types:
                raise ValueError(f"node {node!r} has no family tag")
            if node not in self.cpds:
                raise ValueError(f"node {node!r} has no fitted CPD")
            cpd = self.cpds[node]
            if tuple(cpd.parents) != self.dag.parents(node):
                raise ValueError(
                    f"CPD parents {cpd.parents} for {node!r} do not match the DAG's "
                    f"{self.dag.parents(node)}"
                )
            tag = self.types[node]
            if cpd.family is not tag:
                raise ValueError(f"node {node!r}: CPD family {cpd.family} != tag {tag}")
            if tag.is_nonparametric:
                families.add(tag)
        if len(families) > 1:
            raise ValueError(f"multiple nonparametric families in one network: {families}")

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.dag.nodes
