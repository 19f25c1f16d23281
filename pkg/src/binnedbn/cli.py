"""Command line interface.

Subcommands:

    learn             hill-climb a structure on one training draw, save the
                      fitted network as JSON
    evaluate          score a saved network on fresh test data
    sweep-grid        repeat the experiment over a list of grid sizes
    sweep-instances   repeat the experiment over a list of training sizes
    sample-synthetic  write a synthetic dataset (plus its true structure)

Every knob can come from a JSON config file (--config) mirroring the
ExperimentConfig field names; command line flags override the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .core import Dataset
from .experiments import (
    ExperimentConfig,
    MODEL_CHOICES,
    load_csv,
    load_network,
    run_experiment,
    save_network,
    write_records_csv,
    write_report,
)
from .learning import hill_climb, loglik
from .synth import build_synthetic, sample


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--source", help="synthetic model id (1..8) or CSV path")
    parser.add_argument("--model", choices=MODEL_CHOICES)
    parser.add_argument("--grid-size", type=int, dest="grid_size")
    parser.add_argument("--n-train", type=int, dest="n_train")
    parser.add_argument("--n-test", type=int, dest="n_test")
    parser.add_argument("--folds", type=int)
    parser.add_argument("--patience", type=int)
    parser.add_argument("--max-parents", type=int, dest="max_parents")
    parser.add_argument("--repeats", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out")
    parser.add_argument(
        "--timed",
        action="store_true",
        default=None,
        help="also run the paired SPBN baseline and report time ratios",
    )


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    merged: dict = {}
    if args.config:
        merged.update(json.loads(Path(args.config).read_text()))
    for field in (
        "source", "model", "grid_size", "n_train", "n_test", "folds",
        "patience", "max_parents", "repeats", "seed", "out", "timed",
    ):
        value = getattr(args, field, None)
        if value is not None:
            merged[field] = value
    if "source" not in merged:
        raise SystemExit("a data source is required (--source or the config file)")
    return ExperimentConfig.from_dict(merged)


def _training_data(config: ExperimentConfig, seed: int) -> Dataset:
    synthetic_id = config.synthetic_id
    if synthetic_id is not None:
        return sample(build_synthetic(synthetic_id), config.n_train, seed)
    data = load_csv(config.source)
    if data.n_rows <= config.n_train:
        return data
    rows = np.random.default_rng(seed).permutation(data.n_rows)[: config.n_train]
    return data.take_rows(rows)


def _cmd_learn(args) -> int:
    config = _resolve_config(args)
    train = _training_data(config, config.seed)
    start = time.perf_counter()
    result = hill_climb(train, config.hc_config(config.seed))
    elapsed = time.perf_counter() - start
    print(f"learned {len(result.dag.arcs)} arcs in {len(result.trace)} steps "
          f"({elapsed:.2f}s), cross-validated score {result.score:.4f}")
    for u, v in sorted(result.dag.arcs):
        print(f"  {u} -> {v}   [{result.types[v].value}]")
    nonparametric = sorted(v for v, t in result.types.items() if t.is_nonparametric)
    print(f"nonparametric nodes: {nonparametric}")
    if config.out:
        save_network(config.out, result.dag, result.types, result.model)
        print(f"network written to {config.out}")
    return 0


def _cmd_evaluate(args) -> int:
    config = _resolve_config(args)
    network = load_network(args.network)
    if network.model is None:
        raise SystemExit(f"{args.network} holds a structure only, nothing to evaluate")
    synthetic_id = config.synthetic_id
    if synthetic_id is not None:
        test = sample(build_synthetic(synthetic_id), config.n_test, config.seed)
    else:
        test = load_csv(config.source)
        if test.n_rows > config.n_test:
            rows = np.random.default_rng(config.seed).permutation(test.n_rows)[: config.n_test]
            test = test.take_rows(rows)
    per_row, total = loglik(network.model, test)
    print(f"test rows: {test.n_rows}")
    print(f"total log-likelihood: {total!r}")
    print(f"mean log-likelihood:  {total / test.n_rows!r}")
    if config.out:
        lines = ["row,loglik"] + [f"{i},{float(v)!r}" for i, v in enumerate(per_row)]
        Path(config.out).write_text("\n".join(lines) + "\n")
        print(f"per-row log-likelihoods written to {config.out}")
    return 0


def _run_sweep(args, field: str, values: list[int]) -> int:
    config = _resolve_config(args)
    if not config.out:
        raise SystemExit("sweeps need --out for their report files")
    base = Path(config.out)
    if base.suffix:
        base = base.with_suffix("")
    all_records = []
    for value in values:
        sub = dataclasses.replace(config, **{field: value})
        report = run_experiment(sub)
        tag = "M" if field == "grid_size" else "N"
        write_report(report, base.parent / f"{base.name}_{tag}{value}")
        all_records.extend(report.records)
        means = {
            name: np.mean([getattr(r, name) for r in report.records])
            for name in ("test_loglik", "hc_seconds", "test_seconds")
        }
        print(f"{field}={value}: " + ", ".join(f"{k}={v:.4f}" for k, v in means.items()))
    merged = write_records_csv(all_records, base.with_suffix(".csv"))
    print(f"merged report written to {merged}")
    return 0


def _cmd_sweep_grid(args) -> int:
    return _run_sweep(args, "grid_size", _int_list(args.grid_sizes))


def _cmd_sweep_instances(args) -> int:
    return _run_sweep(args, "n_train", _int_list(args.n_trains))


def _cmd_sample_synthetic(args) -> int:
    config = _resolve_config(args)
    if config.synthetic_id is None:
        raise SystemExit("sample-synthetic needs a synthetic model id as --source")
    if not config.out:
        raise SystemExit("sample-synthetic needs --out for the CSV path")
    spec = build_synthetic(config.synthetic_id)
    data = sample(spec, config.n_train, config.seed)
    out = Path(config.out)
    lines = [",".join(data.columns)]
    for row in data.values:
        lines.append(",".join(repr(float(v)) for v in row))
    out.write_text("\n".join(lines) + "\n")
    truth = out.with_suffix(".truth.json")
    save_network(truth, spec.dag, dict(spec.types))
    print(f"{data.n_rows} rows x {data.n_columns} columns written to {out}")
    print(f"true structure written to {truth}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="binnedbn",
        description="Structure learning and density estimation for semiparametric "
        "Bayesian networks with exact or binned kernel CPDs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_learn = sub.add_parser("learn", help="hill-climb a structure and save the network")
    _add_common_flags(p_learn)
    p_learn.set_defaults(func=_cmd_learn)

    p_eval = sub.add_parser("evaluate", help="score a saved network on test data")
    p_eval.add_argument("network", help="network JSON written by learn")
    _add_common_flags(p_eval)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_grid = sub.add_parser("sweep-grid", help="experiment over several grid sizes")
    _add_common_flags(p_grid)
    p_grid.add_argument(
        "--grid-sizes",
        default="10,25,50,80,100,125",
        help="comma-separated grid sizes (default: %(default)s)",
    )
    p_grid.set_defaults(func=_cmd_sweep_grid)

    p_inst = sub.add_parser("sweep-instances", help="experiment over training sizes")
    _add_common_flags(p_inst)
    p_inst.add_argument(
        "--n-trains",
        default="2048,4096,8192,16384",
        help="comma-separated training sizes (default: %(default)s)",
    )
    p_inst.set_defaults(func=_cmd_sweep_instances)

    p_samp = sub.add_parser(
        "sample-synthetic", help="write a synthetic dataset and its true structure"
    )
    _add_common_flags(p_samp)
    p_samp.set_defaults(func=_cmd_sample_synthetic)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
