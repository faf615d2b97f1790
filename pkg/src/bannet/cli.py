"""Command line: train a network from a CSV, evaluate or bound a saved model,
emit the constructive demo networks, and reparametrize activations.

Exit codes: 0 success, 2 data error, 3 configuration error, 4 training abort.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .approx import (
    build_product_approximator,
    build_square_approximator,
    product_grid_error,
    square_grid_error,
)
from .bounds import bound_chain
from .data import SplitSpec, load_csv, split_dataset
from .errors import BannetError, ConfigError, DataError, TrainingAbort
from .model import (
    ActivationParams,
    count_nonzero_parameters,
    forward,
    load_model,
    mse,
    reparametrize_activation,
    save_model,
    write_atomic,
)
from .solvers import LassoConfig
from .train import TrainConfig, build_network


class _Parser(argparse.ArgumentParser):
    # Usage mistakes are configuration errors; argparse's default exit code
    # (2) is reserved for data errors here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(3, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    """Everything needed to reproduce a training run byte-for-byte."""

    dataset: str
    labels: str
    test_fraction: float = 0.25
    val_fraction: float = 0.20
    seed: int = 0
    max_neurons: int = 500
    max_layers: int = 3
    replace_cap: int = 10
    patience: int = 20
    min_layer_gain: float = 0.0
    lambda0: float = 1e5
    divisor: float = 1.5
    max_halvings: int = 200
    cd_tol: float = 1e-8
    cd_max_iters: int = 10_000
    out_dir: str = "."
    software_version: str = __version__

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.test_fraction, self.val_fraction, self.seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            max_neurons_per_layer=self.max_neurons,
            max_hidden_layers=self.max_layers,
            replace_cap=self.replace_cap,
            patience=self.patience,
            lasso=LassoConfig(
                lambda0=self.lambda0,
                divisor=self.divisor,
                max_halvings=self.max_halvings,
                cd_tol=self.cd_tol,
                cd_max_iters=self.cd_max_iters,
            ),
            val_fraction=self.val_fraction,
            seed=self.seed,
            min_layer_gain=self.min_layer_gain,
        )


def load_manifest(path: str) -> RunManifest:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    known = {f for f in RunManifest.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise DataError(f"manifest {path} has unknown fields: {sorted(unknown)}")
    if "dataset" not in doc or "labels" not in doc:
        raise DataError(f"manifest {path} must name a dataset and a label spec")
    return RunManifest(**doc)


def run_train(manifest: RunManifest) -> int:
    data = load_csv(manifest.dataset, manifest.labels)
    train, val, test = split_dataset(data, manifest.split_spec())
    model, report = build_network(train, manifest.train_config(), val_data=val)

    out = manifest.out_dir
    os.makedirs(out, exist_ok=True)
    model_path = os.path.join(out, "model.json")
    report_path = os.path.join(out, "report.csv")
    save_model(model, model_path)
    report.write_csv(report_path)

    test_mse = mse(model, test)
    summary = {
        "architecture": report.architecture,
        "depth": len(model.hidden),
        "width": max(layer.width for layer in model.hidden),
        "train_mse": report.final_train_mse,
        "val_mse": report.final_val_mse,
        "test_mse": test_mse,
        "nonzero_parameters": count_nonzero_parameters(model),
        "rows": {"train": train.m, "val": val.m, "test": test.m},
    }
    write_atomic(os.path.join(out, "summary.json"), json.dumps(summary, indent=2) + "\n")
    write_atomic(os.path.join(out, "manifest.json"), json.dumps(asdict(manifest), indent=2) + "\n")

    arch = "-".join(str(w) for w in report.architecture)
    print(f"architecture: {arch} (depth {summary['depth']}, width {summary['width']})")
    print(f"train mse: {report.final_train_mse:.6g}")
    if report.final_val_mse is not None:
        print(f"val mse:   {report.final_val_mse:.6g}")
    print(f"test mse:  {test_mse:.6g}")
    print(f"nonzero parameters: {summary['nonzero_parameters']}")
    print(f"wrote {model_path}, {report_path}")
    return 0


def run_evaluate(model_path: str, data_path: str, labels: str | None) -> int:
    model = load_model(model_path)
    data = load_csv(data_path, labels if labels is not None else model.out_width)
    if data.n_features != model.in_width:
        raise DataError(
            f"model expects {model.in_width} features, data has {data.n_features}"
        )
    if data.n_labels != model.out_width:
        raise DataError(
            f"model outputs {model.out_width} values, data has {data.n_labels} labels"
        )
    pred = forward(model, data.features)
    per_output = np.mean((pred - data.labels) ** 2, axis=0)
    print(f"mse: {mse(model, data)!r}")
    print("per-output mse: " + ", ".join(repr(float(v)) for v in per_output))
    for k, count, _ in bound_chain(model, data):
        print(f"regions at depth {k}: {count}")
    print(f"nonzero parameters: {count_nonzero_parameters(model)}")
    return 0


def run_bounds(model_path: str, data_path: str, labels: str | None) -> int:
    model = load_model(model_path)
    data = load_csv(data_path, labels if labels is not None else model.out_width)
    if data.n_features != model.in_width:
        raise DataError(
            f"model expects {model.in_width} features, data has {data.n_features}"
        )
    print("k,region_count,bound")
    for k, count, bound in bound_chain(model, data):
        print(f"{k},{count},{bound!r}")
    return 0


def run_demo(args) -> int:
    if args.shape == "square":
        model = build_square_approximator(args.r)
        claimed = 1.0 / (2 * args.r)
        measured = square_grid_error(model)
        out = args.out or f"square_r{args.r}.json"
        label = f"square r={args.r}"
    else:
        model = build_product_approximator(args.m, args.delta)
        claimed = 3.0 * args.m * args.m * args.delta
        measured = product_grid_error(model, args.m)
        out = args.out or f"product_m{args.m:g}_d{args.delta:g}.json"
        label = f"product m={args.m:g} delta={args.delta:g}"
    save_model(model, out)
    print(f"{label} claimed_bound={claimed!r} measured_grid_error={measured!r} model={out}")
    return 0


def run_reparam(args) -> int:
    model = load_model(args.model)
    try:
        target = ActivationParams(args.t, args.h1, args.h2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = reparametrize_activation(model, target)
    out = args.out or (os.path.splitext(args.model)[0] + "_reparam.json")
    save_model(result, out)
    print(f"wrote {out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="bannet",
        description="Greedy construction of compact binary-activated regression networks.",
    )
    parser.add_argument("--version", action="version", version=f"bannet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a network from a CSV dataset")
    train.add_argument("--data", help="CSV file with a header row")
    train.add_argument("--labels", help="label columns: trailing count or comma-separated names")
    train.add_argument("--test-frac", type=float, default=0.25)
    train.add_argument("--val-frac", type=float, default=0.20)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--max-layers", type=int, default=3)
    train.add_argument("--max-neurons", type=int, default=500)
    train.add_argument("--replace-cap", type=int, default=10)
    train.add_argument("--patience", type=int, default=20)
    train.add_argument("--lambda0", type=float, default=1e5)
    train.add_argument("--min-layer-gain", type=float, default=0.0)
    train.add_argument("--out", help="output directory")
    train.add_argument("--from-manifest", help="rerun a recorded manifest")

    ev = sub.add_parser("evaluate", help="evaluate a saved model on a CSV dataset")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--labels")

    bounds = sub.add_parser("bounds", help="per-depth region counts and loss floors")
    bounds.add_argument("--model", required=True)
    bounds.add_argument("--data", required=True)
    bounds.add_argument("--labels")

    demo = sub.add_parser("demo", help="emit a constructive approximator network")
    demo_sub = demo.add_subparsers(dest="shape", required=True)
    square = demo_sub.add_parser("square", help="staircase match of x^2 on [0,1]")
    square.add_argument("--r", type=int, required=True, help="hidden width / level count")
    square.add_argument("--out")
    product = demo_sub.add_parser("product", help="match of x*y on [-m,m]^2")
    product.add_argument("--m", type=float, required=True, help="input magnitude bound")
    product.add_argument("--delta", type=float, required=True, help="per-block error budget")
    product.add_argument("--out")

    reparam = sub.add_parser("reparam", help="rewrite a model for a new activation")
    reparam.add_argument("--model", required=True)
    reparam.add_argument("--t", type=float, required=True)
    reparam.add_argument("--h1", type=float, required=True)
    reparam.add_argument("--h2", type=float, required=True)
    reparam.add_argument("--out")
    return parser


def _train_manifest(args) -> RunManifest:
    if args.from_manifest:
        manifest = load_manifest(args.from_manifest)
        if args.out:
            manifest.out_dir = args.out
        return manifest
    if not args.data or not args.labels or not args.out:
        raise ConfigError("train requires --data, --labels and --out (or --from-manifest)")
    return RunManifest(
        dataset=args.data,
        labels=args.labels,
        test_fraction=args.test_frac,
        val_fraction=args.val_frac,
        seed=args.seed,
        max_neurons=args.max_neurons,
        max_layers=args.max_layers,
        replace_cap=args.replace_cap,
        patience=args.patience,
        min_layer_gain=args.min_layer_gain,
        lambda0=args.lambda0,
        out_dir=args.out,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return run_train(_train_manifest(args))
        if args.command == "evaluate":
            return run_evaluate(args.model, args.data, args.labels)
        if args.command == "bounds":
            return run_bounds(args.model, args.data, args.labels)
        if args.command == "demo":
            return run_demo(args)
        if args.command == "reparam":
            return run_reparam(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except TrainingAbort as exc:
        print(f"training abort: {exc}", file=sys.stderr)
        return 4
    except BannetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
