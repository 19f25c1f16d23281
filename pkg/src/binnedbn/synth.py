"""Eight synthetic ground-truth networks and ancestral sampling from them.

Models 1-4 mix single Gaussians (tagged LG) with mixtures of Gaussians
(tagged nonparametric); models 5-8 reuse the arc structures of models 1 and
3 with exponential, gamma, beta, and Laplace conditionals, so every node is
nonparametric.  Distribution parameters derived from parent values are
clamped to a small positive floor before sampling, which bounds e.g. the
mean of an exponential whose rate is the reciprocal of a near-zero parent
without affecting the bulk of the distribution.

All spread parameters are standard deviations (or the family's natural
scale parameter), not variances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .core import Dag, Dataset, NodeType, topological_order

__all__ = ["GenerativeSpec", "SamplingError", "build_synthetic", "sample"]

PARAM_FLOOR = 1e-6

ParamMap = Callable[[Mapping[str, np.ndarray]], np.ndarray] | float


class SamplingError(ValueError):
    """A conditional sampler received unusable parameters."""


def _resolve(param: ParamMap, parent_values, n: int) -> np.ndarray:
    value = param(parent_values) if callable(param) else param
    return np.broadcast_to(np.asarray(value, dtype=np.float64), (n,))


def _positive(values: np.ndarray, node: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise SamplingError(f"node {node!r}: non-finite distribution parameter")
    return np.maximum(values, PARAM_FLOOR)


@dataclass(frozen=True)
class Gaussian:
    mean: ParamMap
    sd: float

    def draw(self, rng, parent_values, n, node):
        return _resolve(self.mean, parent_values, n) + self.sd * rng.standard_normal(n)


@dataclass(frozen=True)
class GaussianMixture:
    weights: tuple[float, ...]
    means: tuple[ParamMap, ...]
    sds: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.means) or len(self.weights) != len(self.sds):
            raise ValueError("mixture components are inconsistent")
        if abs(sum(self.weights) - 1.0) > 1e-12 or min(self.weights) <= 0:
            raise ValueError("mixture weights must be positive and sum to 1")

    def draw(self, rng, parent_values, n, node):
        component = rng.choice(len(self.weights), size=n, p=self.weights)
        means = np.stack([_resolve(m, parent_values, n) for m in self.means], axis=1)
        sds = np.asarray(self.sds)
        return means[np.arange(n), component] + sds[component] * rng.standard_normal(n)


@dataclass(frozen=True)
class Exponential:
    rate: ParamMap

    def draw(self, rng, parent_values, n, node):
        rate = _positive(_resolve(self.rate, parent_values, n), node)
        return rng.exponential(scale=1.0 / rate)


@dataclass(frozen=True)
class Gamma:
    shape: ParamMap
    scale: float

    def draw(self, rng, parent_values, n, node):
        shape = _positive(_resolve(self.shape, parent_values, n), node)
        return rng.gamma(shape=shape, scale=self.scale)


@dataclass(frozen=True)
class Beta:
    alpha: ParamMap
    beta: ParamMap

    def draw(self, rng, parent_values, n, node):
        alpha = _positive(_resolve(self.alpha, parent_values, n), node)
        beta = _positive(_resolve(self.beta, parent_values, n), node)
        # Tiny shapes make the sampler underflow to exact 0/1; keep the
        # open-interval support at the nearest representable floats.
        return np.clip(rng.beta(alpha, beta), np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class Laplace:
    loc: ParamMap
    scale: float

    def draw(self, rng, parent_values, n, node):
        return rng.laplace(loc=_resolve(self.loc, parent_values, n), scale=self.scale)


@dataclass(frozen=True)
class GenerativeSpec:
    """Ground-truth DAG, per-node conditional samplers, and true family tags."""

    dag: Dag
    samplers: Mapping[str, object]
    types: Mapping[str, NodeType]


def sample(spec: GenerativeSpec, n: int, seed: int) -> Dataset:
    """Ancestral sampling: nodes in topological order, one RNG stream per seed."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    columns: dict[str, np.ndarray] = {}
    for node in topological_order(spec.dag):
        parent_values = {p: columns[p] for p in spec.dag.parents(node)}
        values = spec.samplers[node].draw(rng, parent_values, n, node)
        if not np.all(np.isfinite(values)):
            raise SamplingError(f"node {node!r}: sampler produced non-finite values")
        columns[node] = values
    order = topological_order(spec.dag)
    return Dataset(order, np.column_stack([columns[v] for v in order]))


# The two shared arc structures (models 5 and 7 reuse #1; models 6 and 8 reuse #3).
_ARCS_1 = [
    ("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("c", "e"), ("d", "e"),
    ("a", "f"), ("d", "f"), ("e", "f"), ("c", "g"),
]
_ARCS_3 = [
    ("a", "b"), ("b", "c"), ("b", "d"), ("d", "e"), ("d", "f"), ("c", "g"), ("c", "h"),
]


def _spec_1() -> GenerativeSpec:
    dag = Dag("abcdefg", _ARCS_1)
    samplers = {
        "a": Gaussian(3.0, 2.0),
        "b": Gaussian(lambda v: 0.5 * v["a"], 2.0),
        "c": GaussianMixture(
            (0.45, 0.55), (lambda v: 0.5 * v["a"], 5.0), (1.5, 1.0)
        ),
        "d": GaussianMixture(
            (0.5, 0.5), (lambda v: 0.5 * v["c"] * v["b"], 3.5), (1.0, 1.0)
        ),
        "e": GaussianMixture(
            (0.5, 0.5), (lambda v: v["d"] + v["c"], 2.0), (1.0, 1.0)
        ),
        "f": GaussianMixture(
            (0.5, 0.5), (lambda v: v["e"] + v["d"], lambda v: 0.7 * v["a"]), (1.0, 0.5)
        ),
        "g": Gaussian(lambda v: 0.3 * v["c"], 2.0),
    }
    types = _types(dag, lg_nodes="abg")
    return GenerativeSpec(dag, samplers, types)


def _spec_2() -> GenerativeSpec:
    nodes = ("a", "b", "c", "d", "e", "h", "i", "j", "f", "g", "k", "l", "m")
    arcs = [
        ("a", "b"), ("a", "c"), ("a", "d"), ("c", "e"), ("d", "h"), ("b", "i"),
        ("e", "j"), ("c", "f"), ("h", "f"), ("d", "g"), ("j", "g"), ("f", "k"),
        ("a", "l"), ("c", "l"), ("f", "l"), ("h", "l"), ("d", "l"),
        ("b", "m"), ("e", "m"), ("g", "m"), ("j", "m"),
    ]
    dag = Dag(nodes, arcs)
    samplers = {
        "a": Gaussian(4.0, 1.5),
        "b": GaussianMixture((0.4, 0.6), (lambda v: 1.2 * v["a"], 1.0), (1.1, 1.0)),
        "c": GaussianMixture((0.5, 0.5), (lambda v: v["a"] + 1.0, 1.0), (1.2, 1.0)),
        "d": Gaussian(lambda v: 0.8 * v["a"], 1.3),
        "e": GaussianMixture((0.6, 0.4), (lambda v: 1.2 * v["c"], -1.0), (1.3, 1.5)),
        "h": GaussianMixture((0.6, 0.4), (lambda v: 2.0 * v["d"], 0.0), (1.2, 1.8)),
        "i": Gaussian(lambda v: 0.6 * v["b"], 2.0),
        "j": Gaussian(lambda v: 0.7 * v["e"], 1.7),
        "f": GaussianMixture(
            (0.5, 0.5), (lambda v: 1.1 * v["c"] + v["h"], 15.0), (1.0, 1.2)
        ),
        "g": GaussianMixture(
            (0.5, 0.5), (lambda v: 0.8 * v["d"] + v["j"], 0.0), (1.0, 1.0)
        ),
        "k": Gaussian(lambda v: 0.3 * v["f"], 2.0),
        "l": GaussianMixture(
            (0.5, 0.5),
            (lambda v: v["a"] + v["c"] + v["f"], lambda v: 0.6 * v["h"] + v["d"]),
            (1.0, 1.5),
        ),
        "m": GaussianMixture(
            (0.4, 0.6),
            (lambda v: v["b"] + v["e"] + v["g"], lambda v: 0.7 * v["j"]),
            (1.2, 1.3),
        ),
    }
    types = _types(dag, lg_nodes="adijk")
    return GenerativeSpec(dag, samplers, types)


def _spec_3() -> GenerativeSpec:
    dag = Dag("abcdefgh", _ARCS_3)
    samplers = {
        "a": GaussianMixture((0.5, 0.5), (4.0, 1.0), (2.0, 1.0)),
        "b": Gaussian(lambda v: 0.5 * v["a"], 2.0),
        "c": Gaussian(lambda v: 2.0 * v["b"], 1.5),
        "d": GaussianMixture((0.5, 0.5), (lambda v: v["b"] - 1.0, 10.0), (1.0, 1.5)),
        "e": GaussianMixture((0.5, 0.5), (lambda v: 2.0 * v["d"], 3.0), (1.5, 1.0)),
        "f": GaussianMixture((0.6, 0.4), (lambda v: 1.5 * v["d"], 0.0), (1.5, 1.0)),
        "g": Gaussian(lambda v: 0.3 * v["c"] + 5.0, 1.0),
        "h": GaussianMixture((0.5, 0.5), (lambda v: 0.5 * v["c"], 10.0), (1.0, 1.0)),
    }
    types = _types(dag, lg_nodes="bcg")
    return GenerativeSpec(dag, samplers, types)


def _spec_4() -> GenerativeSpec:
    nodes = ("a", "b", "c", "d", "e", "f", "g", "h", "k", "i", "j", "o", "m", "n", "l")
    arcs = [
        ("a", "b"), ("a", "c"), ("b", "d"), ("c", "e"), ("c", "f"), ("d", "g"),
        ("d", "h"), ("d", "k"), ("e", "i"), ("e", "j"), ("f", "o"), ("j", "m"),
        ("j", "n"), ("h", "l"),
    ]
    dag = Dag(nodes, arcs)
    samplers = {
        "a": Gaussian(5.0, 2.0),
        "b": Gaussian(lambda v: v["a"] + 2.0, 1.5),
        "c": GaussianMixture((0.4, 0.6), (lambda v: v["a"] + 2.0, 1.0), (1.0, 1.5)),
        "d": GaussianMixture((0.5, 0.5), (lambda v: 0.8 * v["b"], 15.0), (1.5, 1.5)),
        "e": Gaussian(lambda v: 0.7 * v["c"], 2.0),
        "f": GaussianMixture((0.5, 0.5), (lambda v: 1.2 * v["c"], -3.0), (1.5, 1.0)),
        "g": GaussianMixture((0.6, 0.4), (lambda v: v["d"] + 4.0, 8.0), (1.0, 1.5)),
        "h": Gaussian(lambda v: 0.4 * v["d"], 2.0),
        "k": Gaussian(lambda v: 0.5 * v["d"], 2.5),
        "i": GaussianMixture((0.55, 0.45), (lambda v: 1.3 * v["e"], 0.0), (2.0, 1.0)),
        "j": Gaussian(lambda v: 0.5 * v["e"], 2.0),
        "o": GaussianMixture((0.3, 0.7), (lambda v: v["f"] + 1.0, -2.0), (1.4, 0.7)),
        "m": GaussianMixture((0.6, 0.4), (lambda v: 1.5 * v["j"], 7.0), (1.0, 1.5)),
        "n": GaussianMixture((0.4, 0.6), (lambda v: 1.1 * v["j"], -1.0), (1.2, 1.3)),
        "l": GaussianMixture((0.5, 0.5), (lambda v: 0.3 * v["h"], 5.0), (1.1, 1.4)),
    }
    types = _types(dag, lg_nodes="abehkj")
    return GenerativeSpec(dag, samplers, types)


def _spec_5() -> GenerativeSpec:
    dag = Dag("abcdefg", _ARCS_1)
    samplers = {
        "a": Exponential(1.0),
        "b": Exponential(lambda v: 1.0 / v["a"]),
        "c": Exponential(lambda v: 1.0 / (2.0 * v["a"])),
        "d": Exponential(lambda v: 1.0 / (v["b"] * v["c"])),
        "e": Exponential(lambda v: 1.0 / (v["d"] * v["c"])),
        "f": Exponential(lambda v: 1.0 / (v["a"] + 2.0 * v["d"] + v["e"])),
        "g": Exponential(lambda v: 1.0 / v["c"]),
    }
    return GenerativeSpec(dag, samplers, _types(dag, lg_nodes=""))


def _spec_6() -> GenerativeSpec:
    dag = Dag("abcdefgh", _ARCS_3)
    samplers = {
        "a": Gamma(2.0, 1.0),
        "b": Gamma(lambda v: v["a"], 1.0),
        "c": Gamma(lambda v: v["b"], 1.0),
        "d": Gamma(lambda v: v["b"], 1.0),
        "e": Gamma(lambda v: v["d"], 1.0),
        "f": Gamma(lambda v: v["d"], 1.0),
        "g": Gamma(lambda v: v["c"], 1.0),
        "h": Gamma(lambda v: v["c"], 1.0),
    }
    return GenerativeSpec(dag, samplers, _types(dag, lg_nodes=""))


def _spec_7() -> GenerativeSpec:
    dag = Dag("abcdefg", _ARCS_1)
    samplers = {
        "a": Beta(2.0, 8.0),
        "b": Beta(lambda v: v["a"], 2.0),
        "c": Beta(lambda v: v["a"], 4.0),
        "d": Beta(lambda v: v["b"], lambda v: v["c"]),
        "e": Beta(lambda v: v["d"], lambda v: v["c"]),
        "f": Beta(lambda v: v["a"] + 2.0 * v["d"], lambda v: v["e"]),
        "g": Beta(1.0, lambda v: v["c"]),
    }
    return GenerativeSpec(dag, samplers, _types(dag, lg_nodes=""))


def _spec_8() -> GenerativeSpec:
    dag = Dag("abcdefgh", _ARCS_3)
    samplers = {
        "a": Laplace(5.0, 2.0),
        "b": Laplace(lambda v: v["a"], 2.0),
        "c": Laplace(lambda v: v["b"], 2.0),
        "d": Laplace(lambda v: v["b"], 2.0),
        "e": Laplace(lambda v: v["d"], 2.0),
        "f": Laplace(lambda v: v["d"], 2.0),
        "g": Laplace(lambda v: v["c"], 2.0),
        "h": Laplace(lambda v: v["c"], 2.0),
    }
    return GenerativeSpec(dag, samplers, _types(dag, lg_nodes=""))


def _types(dag: Dag, lg_nodes: str) -> dict[str, NodeType]:
    return {
        v: NodeType.LG if v in set(lg_nodes) else NodeType.CKDE for v in dag.nodes
    }


_BUILDERS = {
    1: _spec_1, 2: _spec_2, 3: _spec_3, 4: _spec_4,
    5: _spec_5, 6: _spec_6, 7: _spec_7, 8: _spec_8,
}


def build_synthetic(model_id: int) -> GenerativeSpec:
    """One of the eight ground-truth generative networks (ids 1 through 8)."""
    try:
        builder = _BUILDERS[model_id]
    except KeyError:
        raise ValueError(f"synthetic model id must be 1..8, got {model_id}") from None
    return builder()
