"""Experiment harness: ingestion, orchestration, serialization, reports.

A run draws train/test data (synthetic sampling or a seeded CSV split),
learns a structure by hill climbing, and, when the generative truth is
known, also fits the configured model and the exact-KDE reference on the
true DAG to measure per-row log-likelihood errors and evaluation-time
ratios on the held-out data.  Baseline and candidate share the data and
seeds within a repeat so ratios are like-for-like.

Reports are written as a fixed-schema CSV (one row per repeat) plus a JSON
document with the full records and summary statistics; both serializations
are byte-deterministic given the report.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .binned_kde import FkdeCpd, FkdeGuardConfig, FkdeModel, SbkdeCpd, SbkdeModel
from .binning import BinningRule, Grid, SparseWeightTensor
from .core import Dag, Dataset, NetworkModel, NodeType
from .kde import BandwidthMatrix, CkdeCpd, KdeModel
from .learning import HcConfig, LgCpd, fit, hill_climb, loglik
from .metrics import hmd, loglik_errors, shd, speed_ratio, thmd
from .synth import build_synthetic, sample

__all__ = [
    "ExperimentConfig",
    "IngestionError",
    "MODEL_CHOICES",
    "NetworkFile",
    "RepeatRecord",
    "RunReport",
    "load_csv",
    "load_network",
    "model_family_and_rule",
    "run_experiment",
    "save_network",
    "write_records_csv",
    "write_report",
]

logger = logging.getLogger(__name__)

MODEL_CHOICES = (
    "spbn",
    "bspbn-simple",
    "bspbn-linear",
    "bspbn-fkde-simple",
    "bspbn-fkde-linear",
)

REPORT_COLUMNS = (
    "repeat",
    "seed",
    "model",
    "M",
    "n_train",
    "hmd",
    "shd",
    "thmd",
    "test_loglik",
    "rmse",
    "rmae_pct",
    "hc_seconds",
    "test_seconds",
    "hc_ratio",
    "test_ratio",
)


class IngestionError(ValueError):
    """A data source could not be turned into a usable dataset."""


def model_family_and_rule(model: str) -> tuple[NodeType, BinningRule]:
    """Nonparametric family and binning rule implied by a model name."""
    table = {
        "spbn": (NodeType.CKDE, BinningRule.LINEAR),
        "bspbn-simple": (NodeType.SBKDE, BinningRule.SIMPLE),
        "bspbn-linear": (NodeType.SBKDE, BinningRule.LINEAR),
        "bspbn-fkde-simple": (NodeType.FKDE, BinningRule.SIMPLE),
        "bspbn-fkde-linear": (NodeType.FKDE, BinningRule.LINEAR),
    }
    try:
        return table[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; choose from {MODEL_CHOICES}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """All experiment knobs; mirrors the CLI flags and the JSON config file."""

    source: int | str
    model: str = "spbn"
    grid_size: int = 100
    n_train: int = 16384
    n_test: int = 2048
    folds: int = 5
    patience: int = 3
    max_parents: int | None = None
    fkde_max_parents: int = 3
    fkde_max_padded: int = 2**26
    repeats: int = 5
    seed: int = 0
    out: str | None = None
    timed: bool = False

    def __post_init__(self):
        if self.model not in MODEL_CHOICES:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODEL_CHOICES}")
        for name in ("grid_size", "n_train", "n_test", "folds", "repeats"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")
        family, _ = model_family_and_rule(self.model)
        if (
            family is NodeType.FKDE
            and self.max_parents is not None
            and self.max_parents > self.fkde_max_parents
        ):
            raise ValueError(
                f"fkde dimensionality guard: max_parents={self.max_parents} exceeds "
                f"the fkde parent cap {self.fkde_max_parents}"
            )

    @property
    def synthetic_id(self) -> int | None:
        """The synthetic model id when the source names one, else None."""
        if isinstance(self.source, int):
            return self.source
        text = str(self.source)
        return int(text) if text.isdigit() else None

    def hc_config(self, seed: int) -> HcConfig:
        family, rule = model_family_and_rule(self.model)
        return HcConfig(
            patience=self.patience,
            folds=self.folds,
            family=family,
            rule=rule,
            grid_size=self.grid_size,
            guard=FkdeGuardConfig(self.fkde_max_parents, self.fkde_max_padded),
            max_parents=self.max_parents,
            seed=seed,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def load_csv(path: str | Path) -> Dataset:
    """Read a headered CSV of reals, enforcing the cleaning contract.

    Columns where no cell parses as a number are rejected; remaining rows
    with any missing or unparseable cell are dropped and counted in the log.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        raw_rows = [row for row in reader if row]

    n_cols = len(header)
    parsed: list[list[float | None]] = []
    for row in raw_rows:
        cells: list[float | None] = []
        for j in range(n_cols):
            try:
                value = float(row[j])
                cells.append(value if np.isfinite(value) else None)
            except (ValueError, IndexError):
                cells.append(None)
        parsed.append(cells)

    numeric = [j for j in range(n_cols) if any(row[j] is not None for row in parsed)]
    if not numeric:
        raise IngestionError(f"{path}: no numeric columns")
    if len(numeric) < n_cols:
        rejected = [header[j] for j in range(n_cols) if j not in numeric]
        logger.info("%s: rejected non-numeric column(s) %s", path, rejected)

    kept = [
        [row[j] for j in numeric]
        for row in parsed
        if all(row[j] is not None for j in numeric)
    ]
    dropped = len(parsed) - len(kept)
    if dropped:
        logger.info("%s: dropped %d row(s) with missing or unparseable cells", path, dropped)
    if not kept:
        raise IngestionError(f"{path}: no rows left after cleaning")
    return Dataset([header[j] for j in numeric], np.asarray(kept, dtype=np.float64))


# ---------------------------------------------------------------------------
# Network file format
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkFile:
    """Contents of a network JSON: structure, tags, and CPDs when fitted."""

    dag: Dag
    types: dict[str, NodeType]
    model: NetworkModel | None


def _grid_to_dict(grid: Grid) -> dict:
    return {"lo": grid.lo, "hi": grid.hi, "size": grid.size}


def _grid_from_dict(data: dict) -> Grid:
    return Grid(data["lo"], data["hi"], data["size"])


def _fkde_half_to_dict(half: FkdeModel) -> dict:
    return {
        "grids": [_grid_to_dict(g) for g in half.grids],
        "padded_sizes": list(half.padded_sizes),
        "radii": list(half.radii),
        "total": half.total,
        "floor": half.floor,
        "density": half.density.ravel().tolist(),
    }


def _fkde_half_from_dict(data: dict) -> FkdeModel:
    grids = tuple(_grid_from_dict(g) for g in data["grids"])
    shape = tuple(g.size for g in grids)
    return FkdeModel(
        grids,
        np.asarray(data["density"], dtype=np.float64).reshape(shape),
        tuple(data["padded_sizes"]),
        tuple(data["radii"]),
        data["total"],
        data["floor"],
    )


def _cpd_to_dict(cpd) -> dict:
    if isinstance(cpd, LgCpd):
        return {
            "kind": "lg",
            "parents": list(cpd.parents),
            "intercept": cpd.intercept,
            "coefficients": cpd.coefficients.tolist(),
            "variance": cpd.variance,
        }
    if isinstance(cpd, CkdeCpd):
        return {
            "kind": "ckde",
            "parents": list(cpd.parents),
            "bandwidth": cpd.joint.bandwidth.matrix.tolist(),
            "training": cpd.joint.points.tolist(),
        }
    if isinstance(cpd, SbkdeCpd):
        return {
            "kind": "sbkde",
            "parents": list(cpd.parents),
            "bandwidth": cpd.joint.bandwidth.matrix.tolist(),
            "grids": [_grid_to_dict(g) for g in cpd.joint.grids],
            "indices": cpd.joint.weights.indices.tolist(),
            "weights": cpd.joint.weights.weights.tolist(),
            "total": cpd.joint.total,
        }
    if isinstance(cpd, FkdeCpd):
        return {
            "kind": "fkde",
            "parents": list(cpd.parents),
            "joint": _fkde_half_to_dict(cpd.joint),
            "marginal": None if cpd.marginal is None else _fkde_half_to_dict(cpd.marginal),
        }
    raise TypeError(f"cannot serialize CPD of type {type(cpd).__name__}")


def _cpd_from_dict(child: str, data: dict):
    kind = data["kind"]
    parents = tuple(data["parents"])
    if kind == "lg":
        return LgCpd(
            child,
            parents,
            data["intercept"],
            np.asarray(data["coefficients"], dtype=np.float64),
            data["variance"],
        )
    if kind == "ckde":
        bandwidth = BandwidthMatrix.from_matrix(np.asarray(data["bandwidth"]))
        points = np.asarray(data["training"], dtype=np.float64)
        joint = KdeModel(points, bandwidth)
        marginal = None
        if parents:
            keep = np.arange(1, points.shape[1])
            marginal = KdeModel(
                np.ascontiguousarray(points[:, 1:]), bandwidth.submatrix(keep)
            )
        return CkdeCpd(child, parents, joint, marginal)
    if kind == "sbkde":
        bandwidth = BandwidthMatrix.from_matrix(np.asarray(data["bandwidth"]))
        grids = tuple(_grid_from_dict(g) for g in data["grids"])
        tensor = SparseWeightTensor(
            tuple(g.size for g in grids),
            np.asarray(data["indices"], dtype=np.int64).reshape(-1, len(grids)),
            np.asarray(data["weights"], dtype=np.float64),
            data["total"],
        )
        joint = SbkdeModel(grids, tensor, bandwidth)
        marginal = None
        if parents:
            axes = tuple(range(1, len(grids)))
            marginal = SbkdeModel(grids[1:], tensor.project(axes), bandwidth.submatrix(axes))
        return SbkdeCpd(child, parents, joint, marginal)
    if kind == "fkde":
        joint = _fkde_half_from_dict(data["joint"])
        marginal = None if data["marginal"] is None else _fkde_half_from_dict(data["marginal"])
        return FkdeCpd(child, parents, joint, marginal)
    raise ValueError(f"unknown CPD kind {kind!r}")


def save_network(
    path: str | Path,
    dag: Dag,
    types: dict[str, NodeType],
    model: NetworkModel | None = None,
) -> None:
    """Write the network JSON; pass ``model`` to embed fitted parameters."""
    doc = {
        "nodes": list(dag.nodes),
        "arcs": sorted([list(arc) for arc in dag.arcs]),
        "types": {node: types[node].value for node in dag.nodes},
        "cpds": None
        if model is None
        else {node: _cpd_to_dict(model.cpds[node]) for node in dag.nodes},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_network(path: str | Path) -> NetworkFile:
    doc = json.loads(Path(path).read_text())
    dag = Dag(doc["nodes"], [tuple(arc) for arc in doc["arcs"]])
    types = {node: NodeType(tag) for node, tag in doc["types"].items()}
    model = None
    if doc.get("cpds") is not None:
        cpds = {node: _cpd_from_dict(node, data) for node, data in doc["cpds"].items()}
        model = NetworkModel(dag, types, cpds)
    return NetworkFile(dag, types, model)


# ---------------------------------------------------------------------------
# Experiment runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RepeatRecord:
    """One repeat's measurements; None marks a metric without inputs."""

    repeat: int
    seed: int
    model: str
    M: int
    n_train: int
    hmd: int | None
    shd: int | None
    thmd: int | None
    test_loglik: float
    rmse: float | None
    rmae_pct: float | None
    hc_seconds: float
    test_seconds: float
    hc_ratio: float | None
    test_ratio: float | None
    arcs: tuple[tuple[str, str], ...] = ()
    types: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class RunReport:
    config: ExperimentConfig
    records: tuple[RepeatRecord, ...]


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _split_csv(data: Dataset, config: ExperimentConfig, seed: int) -> tuple[Dataset, Dataset]:
    needed = config.n_train + config.n_test
    if data.n_rows < needed:
        raise IngestionError(
            f"need {needed} rows (train+test) but the source has {data.n_rows}"
        )
    perm = np.random.default_rng(seed).permutation(data.n_rows)
    return (
        data.take_rows(perm[: config.n_train]),
        data.take_rows(perm[config.n_train : needed]),
    )


def _timed_per_row_loglik(model: NetworkModel, data: Dataset) -> tuple[np.ndarray, float]:
    start = time.perf_counter()
    per_row, _ = loglik(model, data)
    return per_row, time.perf_counter() - start


def _mapped_types(true_types: dict[str, NodeType], family: NodeType) -> dict[str, NodeType]:
    return {
        node: family if tag.is_nonparametric else NodeType.LG
        for node, tag in true_types.items()
    }


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Run ``config.repeats`` seeded repeats and collect one record each.

    Synthetic sources resample train/test per repeat; CSV sources reshuffle
    and split.  When the source is synthetic the true DAG drives structural
    distances plus the log-likelihood error and test-time ratio against the
    exact-KDE reference fitted on the same training data.  Baseline hill
    climbing (for the HC ratio) runs only when ``timed`` is set; repeats
    always run sequentially so timings are not skewed by contention.
    """
    synthetic_id = config.synthetic_id
    spec = build_synthetic(synthetic_id) if synthetic_id is not None else None
    csv_data = load_csv(config.source) if spec is None else None
    family, _ = model_family_and_rule(config.model)

    records = []
    for repeat in range(config.repeats):
        seed = _derived_seed(config.seed, repeat)
        if spec is not None:
            train = sample(spec, config.n_train, _derived_seed(config.seed, repeat, 1))
            test = sample(spec, config.n_test, _derived_seed(config.seed, repeat, 2))
        else:
            train, test = _split_csv(csv_data, config, _derived_seed(config.seed, repeat, 1))

        hc_config = config.hc_config(seed)
        start = time.perf_counter()
        result = hill_climb(train, hc_config)
        hc_seconds = time.perf_counter() - start

        hc_ratio = None
        baseline_result = None
        if config.timed and config.model != "spbn":
            baseline_config = dataclasses.replace(
                hc_config, family=NodeType.CKDE, rule=BinningRule.LINEAR
            )
            start = time.perf_counter()
            baseline_result = hill_climb(train, baseline_config)
            hc_ratio = speed_ratio(time.perf_counter() - start, hc_seconds)
        elif config.timed:
            hc_ratio = 1.0

        hmd_val = shd_val = thmd_val = None
        rmse = rmae = test_ratio = None
        if spec is not None:
            hmd_val = hmd(result.dag, spec.dag)
            shd_val = shd(result.dag, spec.dag)
            thmd_val = thmd(result.types, spec.types)
            reference = fit(spec.dag, spec.types, train, hc_config)
            ref_rows, ref_seconds = _timed_per_row_loglik(reference, test)
            if config.model == "spbn":
                test_seconds = ref_seconds
                rmse, rmae, test_ratio = 0.0, 0.0, 1.0
            else:
                candidate = fit(spec.dag, _mapped_types(spec.types, family), train, hc_config)
                cand_rows, test_seconds = _timed_per_row_loglik(candidate, test)
                errors = loglik_errors(ref_rows, cand_rows)
                rmse, rmae = errors.rmse, errors.rmae_pct
                test_ratio = speed_ratio(ref_seconds, test_seconds)
            _, test_loglik = loglik(result.model, test)
        else:
            rows, test_seconds = _timed_per_row_loglik(result.model, test)
            test_loglik = float(rows.sum())
            if baseline_result is not None:
                _, base_seconds = _timed_per_row_loglik(baseline_result.model, test)
                test_ratio = speed_ratio(base_seconds, test_seconds)
            elif config.timed:
                test_ratio = 1.0

        records.append(
            RepeatRecord(
                repeat=repeat,
                seed=seed,
                model=config.model,
                M=config.grid_size,
                n_train=config.n_train,
                hmd=hmd_val,
                shd=shd_val,
                thmd=thmd_val,
                test_loglik=test_loglik,
                rmse=rmse,
                rmae_pct=rmae,
                hc_seconds=hc_seconds,
                test_seconds=test_seconds,
                hc_ratio=hc_ratio,
                test_ratio=test_ratio,
                arcs=tuple(sorted(result.dag.arcs)),
                types={node: tag.value for node, tag in result.types.items()},
            )
        )
    return RunReport(config, tuple(records))


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr even for numpy scalars
    return str(value)


def write_records_csv(records, path: str | Path) -> Path:
    """Fixed-schema CSV, one line per record; None cells stay empty."""
    lines = [",".join(REPORT_COLUMNS)]
    for record in records:
        lines.append(
            ",".join(_format_cell(getattr(record, col)) for col in REPORT_COLUMNS)
        )
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_report(report: RunReport, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.csv`` (fixed schema) and ``<path>.json`` (full records).

    Returns the two file paths.  Output is byte-deterministic given the
    report contents.
    """
    base = Path(path)
    if base.suffix:
        base = base.with_suffix("")
    csv_path = base.with_suffix(".csv")
    json_path = base.with_suffix(".json")
    write_records_csv(report.records, csv_path)

    summary = {}
    for col in REPORT_COLUMNS:
        if col in ("model",):
            continue
        values = [getattr(r, col) for r in report.records if getattr(r, col) is not None]
        if not values:
            continue
        arr = np.asarray(values, dtype=np.float64)
        summary[col] = {
            "mean": float(arr.mean()),
            "std": float(arr.std()),
            "count": len(values),
        }
    doc = {
        "config": report.config.to_dict(),
        "summary": summary,
        "records": [
            {
                **{col: getattr(r, col) for col in REPORT_COLUMNS},
                "arcs": [list(arc) for arc in r.arcs],
                "types": r.types,
            }
            for r in report.records
        ],
    }
    json_path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return csv_path, json_path
