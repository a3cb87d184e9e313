"""Command line pipeline runner.

    chartcnn --config run.json [--stage all] [--out DIR] [--threads N]
             [--seed N]

Stages: simulate, dataset, train, eval, all. Each stage consumes the
artifacts of the previous one from the output directory:

    meta.json                resolved config and derived seeds (always
                             written first)
    paths/path_{i}.csv       simulated price series
    dataset/                 images/, manifest.csv, meta.json
    checkpoint.bin           trained parameters and architecture
    history.csv              per-epoch train and validation metrics
    report.json              confusion matrix and per-class metrics
    predictions.csv          moving-window step log (moving-window mode)

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric error.
"""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import dataset as ds
from .config import SEED_BALANCE, SEED_MODEL, SEED_PATHS, SEED_SPLIT, STAGES, RunConfig
from .errors import (
    ChartCnnError,
    ConfigError,
    DataError,
    DependencyError,
    NumericError,
    ParameterError,
    ShapeError,
)
from .evaluation import confusion, metrics_report, write_report
from .gbm import simulate_ohlc_path, simulate_path
from .labeler import Label
from .nn.model import load_checkpoint, save_checkpoint
from .seeding import derive_seed
from .series import IndicatorSet, ingest_price_csv, write_price_csv
from .trainer import evaluate, run_moving_window, train_model


def _write_meta(config: RunConfig) -> None:
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    meta = {"config": config.to_dict(), "seeds": config.seeds(), "format_version": 1}
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def stage_simulate(config: RunConfig) -> None:
    g = config["gbm"]
    params = config.gbm_params()
    paths_dir = config.out_dir / "paths"
    paths_dir.mkdir(parents=True, exist_ok=True)
    base = derive_seed(config.master_seed, SEED_PATHS)
    simulate = simulate_ohlc_path if g["ohlc"] else simulate_path
    for i in range(g["n_paths"]):
        path = simulate(params, g["n_steps"], derive_seed(base, i))
        path.path_id = i
        with open(paths_dir / f"path_{i:04d}.csv", "w", newline="") as fh:
            write_price_csv(path, fh)
    print(f"simulate: wrote {g['n_paths']} paths to {paths_dir}")


def _load_paths(config: RunConfig):
    paths_dir = config.out_dir / "paths"
    files = sorted(paths_dir.glob("path_*.csv"))
    if not files:
        raise DependencyError(
            f"no simulated paths under {paths_dir}; run the simulate stage first"
        )
    out = []
    for i, f in enumerate(files):
        with open(f, newline="") as fh:
            path = ingest_price_csv(fh, dt=config["gbm"]["dt"])
        path.path_id = i
        out.append(path)
    return out


def _path_samples(config: RunConfig, path):
    roles = config["chart"]["series"]
    strategy = config.strategy_spec()
    needed = set(ds.rendered_ma_windows(roles)) | set(strategy.ma_windows)
    indicators = IndicatorSet.compute(path, needed) if needed else None
    wspec = ds.WindowSpec(
        window=config["data"]["window"],
        holding=config["data"]["holding"],
        stride=config["data"]["stride"],
    )
    return ds.build_samples(
        path, indicators, wspec, strategy, config.chart_spec(), roles
    )


def stage_dataset(config: RunConfig) -> None:
    paths = _load_paths(config)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            per_path = list(pool.map(lambda p: _path_samples(config, p), paths))
    else:
        per_path = [_path_samples(config, p) for p in paths]
    samples = [s for chunk in per_path for s in chunk]
    ds.split_dataset(
        samples,
        tuple(config["data"]["split"]),
        derive_seed(config.master_seed, SEED_SPLIT),
    )
    meta = {
        "gbm": config["gbm"],
        "data": config["data"],
        "strategy": config["strategy"],
        "chart": config["chart"],
        "master_seed": config.master_seed,
    }
    ds.write_manifest(samples, config.out_dir / "dataset", meta)
    print(
        f"dataset: wrote {len(samples)} samples "
        f"({ds.class_counts(samples)}) to {config.out_dir / 'dataset'}"
    )


def _split_tensors(config: RunConfig, names):
    dataset_dir = config.out_dir / "dataset"
    if not (dataset_dir / "manifest.csv").exists():
        raise DependencyError(
            f"no manifest.csv under {dataset_dir}; run the dataset stage first"
        )
    samples = ds.read_manifest(dataset_dir)
    input_hw = tuple(config["model"]["input"])
    out = {}
    for name in names:
        subset = [s for s in samples if s.split == name]
        if name == "train" and config["data"]["balanced_train"]:
            subset = ds.balanced_subset(
                subset, derive_seed(config.master_seed, SEED_BALANCE)
            )
        out[name] = ds.load_tensors(dataset_dir, subset, input_hw)
    return out


def stage_train(config: RunConfig) -> None:
    tensors = _split_tensors(config, ("train", "val"))
    network, history = train_model(
        config.architecture(),
        tensors["train"],
        tensors["val"],
        config.train_config(),
        init_seed=derive_seed(config.master_seed, SEED_MODEL),
    )
    save_checkpoint(network, config.out_dir / "checkpoint.bin")
    history.to_csv(config.out_dir / "history.csv")
    print(
        f"train: {len(history.train_loss)} epochs, "
        f"final val acc {history.val_acc[-1]:.3f}, "
        f"checkpoint at {config.out_dir / 'checkpoint.bin'}"
    )


def stage_eval(config: RunConfig) -> None:
    checkpoint = config.out_dir / "checkpoint.bin"
    if not checkpoint.exists():
        raise DependencyError(f"no checkpoint at {checkpoint}; run the train stage first")
    network = load_checkpoint(checkpoint)
    tensors = _split_tensors(config, ("test",))
    x, y = tensors["test"]
    _, acc, preds = evaluate(network, x, y)
    report = metrics_report(confusion(preds, y))
    write_report(report, config.out_dir / "report.json")
    print(f"eval: test accuracy {acc:.3f}, report at {config.out_dir / 'report.json'}")


def run_moving_window_mode(config: RunConfig) -> None:
    stage_simulate(config)
    path = _load_paths(config)[0]
    mw = config["moving_window"]
    wspec = ds.WindowSpec(
        window=config["data"]["window"],
        holding=config["data"]["holding"],
        stride=config["data"]["stride"],
    )
    records, matrix = run_moving_window(
        path,
        mw["region"],
        wspec,
        config.strategy_spec(),
        config.chart_spec(),
        config.architecture(),
        config.train_config(),
        config.master_seed,
        series_roles=config["chart"]["series"],
        max_steps=mw["max_steps"],
    )
    with open(config.out_dir / "predictions.csv", "w", newline="") as fh:
        fh.write("step,day,predicted,actual,degenerate\n")
        for r in records:
            fh.write(
                f"{r.step},{r.day},{int(r.predicted)},{int(r.actual)},"
                f"{int(r.degenerate)}\n"
            )
    write_report(metrics_report(matrix), config.out_dir / "report.json")
    degenerate = sum(r.degenerate for r in records)
    print(
        f"moving-window: {len(records)} steps ({degenerate} degenerate), "
        f"accuracy {matrix.accuracy:.3f}"
    )


def run_pipeline(config: RunConfig, stage: str = "all") -> None:
    """Run one stage or the whole pipeline; meta.json is written first."""
    if stage not in STAGES:
        raise ConfigError([f"stage: must be one of {STAGES}, got {stage!r}"])
    _write_meta(config)
    if config.mode == "moving-window":
        if stage == "simulate":
            stage_simulate(config)
        elif stage == "all":
            run_moving_window_mode(config)
        else:
            raise ConfigError(
                [f"stage: moving-window mode supports only simulate/all, got {stage!r}"]
            )
        return
    if stage in ("simulate", "all"):
        stage_simulate(config)
    if stage in ("dataset", "all"):
        stage_dataset(config)
    if stage in ("train", "all"):
        stage_train(config)
    if stage in ("eval", "all"):
        stage_eval(config)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chartcnn",
        description="Simulate price charts, label them, and train a CNN.",
    )
    parser.add_argument("--config", required=True, help="path to a JSON run config")
    parser.add_argument("--stage", default="all", choices=STAGES)
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker cap")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    args = parser.parse_args(argv)

    try:
        config = RunConfig.from_file(args.config)
        config = config.override(
            out=args.out, threads=args.threads, master_seed=args.seed
        )
        run_pipeline(config, args.stage)
    except (ConfigError, ParameterError, ShapeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
