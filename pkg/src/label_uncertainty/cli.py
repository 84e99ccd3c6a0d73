# label_uncertainty/cli.py
"""
Command-line driver: gen, train, eval, bias-check, rank, sweep.

Every command is a pure function of its configuration and master seed.
Library errors are printed as JSON on stderr and mapped to exit codes
0 ok, 1 usage, 2 data, 3 invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence

import numpy as np
import pandas as pd

from label_uncertainty.blur_world import BlurWorld, gen_blur_dataset_with_levels
from label_uncertainty.config import ExperimentConfig, load_config
from label_uncertainty.datasets import (
    FLOAT_FORMAT,
    read_adjudicated,
    read_dataset,
    spawn_seeds,
    split_instances,
    target_vector,
    write_adjudicated,
    write_dataset,
)
from label_uncertainty.discrete_world import load_discrete_world, random_discrete_world
from label_uncertainty.error_codes import ExitCode
from label_uncertainty.errors import (
    AUCUndefinedError,
    BiasFormulaUnavailableError,
    InvalidParameterError,
    InvariantViolationError,
    UncertaintyError,
)
from label_uncertainty.experiments import (
    EvalRow,
    comparison_table,
    compare_modes,
    convergence_frame,
    convergence_study,
    gaussian_world_comparison,
    score_model,
    sweep_frame,
    targets_for,
    train_size_sweep,
)
from label_uncertainty.gaussian_world import gen_gaussian_dataset, sample_gaussian_world
from label_uncertainty.metrics import ranking_report, roc_auc, roc_curve
from label_uncertainty.mlp import MlpModel
from label_uncertainty.models import (
    BIAS_SIGN_TOLERANCE,
    Aggregation,
    TrainMode,
    TransportMetric,
    UncertaintyKind,
)
from label_uncertainty.oracle import bias_report, sign_check
from label_uncertainty.ranking import (
    agreement_labels,
    continuous_disagreement,
    gaussian_adjudicated_set,
    subsampling_curve,
)
from label_uncertainty.training import train_with_history

# logging
logger = logging.getLogger(__name__)

RANDOM_WORLDS = 100


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(int(ExitCode.USAGE), f"{self.prog}: error: {message}\n")


def _write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_frame(path: Path, frame: pd.DataFrame) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def _kinds(text: str | None) -> List[UncertaintyKind]:
    if not text:
        return list(UncertaintyKind)
    try:
        return [UncertaintyKind(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise InvalidParameterError(f"unknown uncertainty kind: {e}")


def _model_dir(config: ExperimentConfig, mode: TrainMode) -> Path:
    return config.out / mode.value


# commands

def cmd_gen(config: ExperimentConfig, args: argparse.Namespace) -> int:
    """Sample a world and write train/test CSVs plus a manifest."""
    out = config.out
    world_seed, data_seed, split_seed, adjudicated_seed = spawn_seeds(config.seed, 4)
    manifest: Dict[str, Any] = {
        "seed": config.seed,
        "config": config.model_dump(mode="json"),
        "spec": config.spec().model_dump(mode="json"),
    }
    if config.world == "gaussian":
        world = sample_gaussian_world(config.dim, config.components, world_seed)
        dataset = gen_gaussian_dataset(
            world, config.effective_instances, config.labels_per_instance, config.spec(), data_seed
        )
        manifest["world"] = {"kind": "gaussian", **world.model_dump(mode="json")}
        if config.adjudicated_instances > 0:
            adjudicated = gaussian_adjudicated_set(
                world, config.adjudicated_instances, config.adjudicated_labels, adjudicated_seed
            )
            write_adjudicated(out / "adjudicated.csv", adjudicated)
            manifest["adjudicated"] = {"file": "adjudicated.csv", "n": len(adjudicated)}
    else:
        blur = BlurWorld(image_size=(config.image_size, config.image_size))
        dataset, levels = gen_blur_dataset_with_levels(config.effective_instances, data_seed, blur)
        targets = np.asarray([inst.targets[UncertaintyKind.DISAGREE] for inst in dataset])
        manifest["world"] = {"kind": "blur", **blur.model_dump(mode="json")}
        manifest["noise_table"] = {str(level): mass for level, mass in blur.noise_table.items()}
        manifest["positive_rate_by_level"] = {
            str(level): float(targets[levels == level].mean()) if np.any(levels == level) else None
            for level in sorted(blur.noise_table)
        }

    train_set, test_set = split_instances(dataset, config.test_fraction, split_seed)
    write_dataset(out / "train.csv", train_set)
    write_dataset(out / "test.csv", test_set)
    positives = int(target_vector(dataset, config.spec(), config.scale).sum())
    manifest["files"] = {"train": "train.csv", "test": "test.csv"}
    manifest["counts"] = {"train": len(train_set), "test": len(test_set), "positives": positives}
    _write_json(out / "manifest.json", manifest)
    logger.info("wrote %d train and %d test instances to %s", len(train_set), len(test_set), out)
    return ExitCode.OK


def cmd_train(config: ExperimentConfig, args: argparse.Namespace) -> int:
    """Train one model on train.csv; write model, metrics and loss history."""
    dataset = read_dataset(config.out / "train.csv", config.scale)
    model, history = train_with_history(
        dataset, config.train_config(), config.scale, config.spec()
    )
    target_dir = _model_dir(config, config.mode)
    model.save(target_dir / "model.json")
    final = history.final
    _write_json(target_dir / "metrics.json", {
        "mode": config.mode.value,
        "seed": config.seed,
        "uncertainty": config.uncertainty.value,
        "best_epoch": history.best_epoch,
        "train_loss": final.train_loss,
        "validation_loss": final.validation_loss,
        "temperature": history.temperature,
        "train_size": history.train_size,
        "validation_size": history.validation_size,
    })
    _write_frame(target_dir / "history.csv", history.to_frame())
    logger.info("saved %s model to %s", config.mode.value, target_dir)
    return ExitCode.OK


def _load_models(config: ExperimentConfig, paths: Sequence[str] | None) -> Dict[str, MlpModel]:
    if paths:
        return {Path(p).parent.name or Path(p).stem: MlpModel.load(p) for p in paths}
    models = {}
    for mode in TrainMode:
        path = _model_dir(config, mode) / "model.json"
        if path.is_file():
            models[mode.value] = MlpModel.load(path)
    if not models:
        raise InvalidParameterError("no model files found; run `train` or pass --model")
    return models


def _write_comparison(out: Path, rows: Sequence[EvalRow]) -> None:
    _write_frame(out / "auc.csv", pd.DataFrame([r.model_dump(mode="json") for r in rows]))
    table = comparison_table(rows)
    _write_frame(out / "comparison.csv", table)
    print(table.to_string(index=False))


def cmd_eval(config: ExperimentConfig, args: argparse.Namespace) -> int:
    """AUC per (model, kind), ROC points and the DUP/UVC comparison table.

    With --retrain both modes are trained on train.csv for `repeats` seeds
    first; otherwise saved models are scored. With --redraw (Gaussian
    worlds only) every seed draws its own world and dataset instead.
    """
    out = config.out / "eval"
    if args.redraw:
        if config.world != "gaussian":
            raise InvalidParameterError("--redraw needs the gaussian world", data={"world": config.world})
        rows = gaussian_world_comparison(
            config.dim, config.components, config.train_config(), config.seeds(),
            config.effective_instances, config.labels_per_instance, config.spec(),
            config.test_fraction, config.workers,
        )
        _write_comparison(out, rows)
        return ExitCode.OK
    test_set = read_dataset(config.out / "test.csv", config.scale)
    kinds = _kinds(args.kinds)
    specs = config.specs()
    if args.retrain:
        train_set = read_dataset(config.out / "train.csv", config.scale)
        rows, models = compare_modes(
            train_set, test_set, config.train_config(), config.seeds(),
            kinds, config.scale, specs, config.workers,
        )
        named = {f"{mode.value}_seed{seed}": model for (mode, seed), model in models.items()}
    else:
        named = _load_models(config, args.model)
        rows = []
        for name, model in named.items():
            trained_on = model.config.uncertainty if model.config else config.uncertainty
            for kind in kinds:
                scores = score_model(model, test_set, kind, config.scale)
                auc = roc_auc(scores, targets_for(test_set, kind, config.scale, specs))
                rows.append(EvalRow(mode=model.mode, kind=kind, trained_on=trained_on,
                                    seed=model.seed or 0, auc=auc))

    for name, model in named.items():
        for kind in kinds:
            fpr, tpr, thresholds = roc_curve(
                score_model(model, test_set, kind, config.scale),
                targets_for(test_set, kind, config.scale, specs),
            )
            _write_frame(out / f"roc_{name}_{kind.value}.csv",
                         pd.DataFrame({"fpr": fpr, "tpr": tpr, "threshold": thresholds}))
    _write_comparison(out, rows)
    return ExitCode.OK


def cmd_bias_check(config: ExperimentConfig, args: argparse.Namespace) -> int:
    """Exact bias reports on one world file or a batch of random worlds."""
    if args.world:
        worlds = [load_discrete_world(args.world)]
    else:
        worlds = [random_discrete_world(s) for s in spawn_seeds(config.seed, args.random)]
    kinds = _kinds(args.kinds)
    reports: List[Dict[str, Any]] = []
    failures = 0
    for index, world in enumerate(worlds):
        for kind in kinds:
            entry: Dict[str, Any] = {"world": index, "kind": kind.value}
            try:
                report = bias_report(world, kind)
                entry.update(report.model_dump(mode="json"))
                entry["violations"] = report.violations()
            except BiasFormulaUnavailableError:
                gaps = sign_check(world, kind)
                entry["gaps"] = [{"x": x, "gap": gap} for x, gap in gaps.items()]
                entry["violations"] = ["sign"] if min(gaps.values()) < -BIAS_SIGN_TOLERANCE else []
            failures += bool(entry["violations"])
            reports.append(entry)
    _write_json(config.out / "bias_report.json", {"worlds": len(worlds), "reports": reports})
    print(f"checked {len(worlds)} world(s) x {len(kinds)} kind(s): {failures} failing report(s)")
    if failures:
        raise InvariantViolationError(
            "bias identities violated", data={"failing_reports": failures}
        )
    return ExitCode.OK


def cmd_rank(config: ExperimentConfig, args: argparse.Namespace) -> int:
    """Spearman of model scores against Wasserstein disagreement with the
    adjudicated grade, agreement AUCs, and the doctor-subsampling curve."""
    instances = read_adjudicated(config.out / "adjudicated.csv")
    scale = config.scale
    named = _load_models(config, args.model)
    metrics = list(TransportMetric)
    fewest = min(len(inst.labels) for inst in instances)
    counts = sorted(set(config.doctor_counts))
    if counts[-1] > fewest:
        raise InvalidParameterError(
            "adjudicated instances have too few labels", data={"needed": counts[-1], "fewest": fewest}
        )
    if fewest not in counts:
        counts.append(fewest)

    spearman_rows, agreement_rows, reports = [], [], []
    for name, model in named.items():
        kind = model.config.uncertainty if model.config else config.uncertainty
        scores = score_model(model, instances, kind, scale)
        for metric in metrics:
            truth = continuous_disagreement(instances, metric, scale)
            report = ranking_report(scores, truth, binary=False)
            spearman_rows.append({"model": name, "metric": metric.value, "spearman": report.spearman})
            reports.append({"model": name, "target": metric.value, **report.summary()})
        for aggregation in Aggregation:
            for referable in (False, True):
                labels = agreement_labels(instances, aggregation, referable, scale)
                target = f"{aggregation.value}_referable" if referable else aggregation.value
                try:
                    report = ranking_report(scores, labels, binary=True)
                except AUCUndefinedError:
                    logger.warning("agreement AUC undefined for %s/%s", aggregation.value, referable)
                    auc = float("nan")
                else:
                    auc = report.auc
                    reports.append({"model": name, "target": target, **report.summary()})
                agreement_rows.append({
                    "model": name, "aggregation": aggregation.value,
                    "referable_only": referable, "auc": auc,
                })

    curve_rows = []
    for metric, seed in zip(metrics, spawn_seeds(config.seed, len(metrics))):
        for n, value in subsampling_curve(instances, counts, metric, seed, args.repeats, scale):
            curve_rows.append({"metric": metric.value, "n_doctors": n, "mean_spearman": value})

    out = config.out / "rank"
    ranking = pd.DataFrame(spearman_rows)
    _write_frame(out / "ranking.csv", ranking)
    _write_frame(out / "agreement.csv", pd.DataFrame(agreement_rows))
    _write_frame(out / "subsampling.csv", pd.DataFrame(curve_rows))
    _write_json(out / "reports.json", reports)
    print(ranking.pivot(index="model", columns="metric", values="spearman").to_string())
    return ExitCode.OK


def cmd_sweep(config: ExperimentConfig, args: argparse.Namespace) -> int:
    """Train-size sweep over `fractions` for both modes, plus the per-epoch
    test AUC of both modes trained on the full training set."""
    train_set = read_dataset(config.out / "train.csv", config.scale)
    test_set = read_dataset(config.out / "test.csv", config.scale)
    rows = train_size_sweep(
        train_set, config.fractions, config.train_config(), config.seeds(),
        test_set=test_set, scale=config.scale, specs=config.specs(), workers=config.workers,
    )
    frame = sweep_frame(rows)
    _write_frame(config.out / "sweep.csv", frame)
    curves = convergence_study(
        train_set, test_set, config.train_config(), config.seeds(),
        scale=config.scale, specs=config.specs(), workers=config.workers,
    )
    _write_frame(config.out / "convergence.csv", convergence_frame(curves))
    print(frame.to_string(index=False))
    return ExitCode.OK


COMMANDS: Dict[str, Callable[[ExperimentConfig, argparse.Namespace], int]] = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "bias-check": cmd_bias_check,
    "rank": cmd_rank,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI file with an [experiment] section")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--mode", choices=[m.value for m in TrainMode], help="training mode")
    common.add_argument("--uncertainty", choices=[k.value for k in UncertaintyKind], help="target U")
    common.add_argument("--out", help="output directory")
    common.add_argument("--calibrate", action="store_true", default=None, help="fit a softmax temperature")
    common.add_argument("--workers", type=int, help="concurrent experiment cells")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="warnings only")

    parser = _Parser(prog="label-uncertainty", description="DUP vs UVC label-disagreement experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="generate datasets")
    sub.add_parser("train", parents=[common], help="train one model")

    p_eval = sub.add_parser("eval", parents=[common], help="score models on test.csv")
    p_eval.add_argument("--model", action="append", help="model.json path (repeatable)")
    p_eval.add_argument("--kinds", help="comma-separated uncertainty kinds (default: all)")
    p_eval.add_argument("--retrain", action="store_true", help="train both modes over `repeats` seeds first")
    p_eval.add_argument("--redraw", action="store_true", help="draw a new gaussian world per seed")

    p_bias = sub.add_parser("bias-check", parents=[common], help="exact oracle identities")
    p_bias.add_argument("--world", help="discrete world JSON file")
    p_bias.add_argument("--random", type=int, default=RANDOM_WORLDS, help="number of random worlds")
    p_bias.add_argument("--kinds", help="comma-separated uncertainty kinds (default: all)")

    p_rank = sub.add_parser("rank", parents=[common], help="ranking against adjudicated grades")
    p_rank.add_argument("--model", action="append", help="model.json path (repeatable)")
    p_rank.add_argument("--repeats", type=int, default=20, help="subsampling repeats")

    sub.add_parser("sweep", parents=[common], help="train-size sweep")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "seed": args.seed,
        "mode": args.mode,
        "uncertainty": args.uncertainty,
        "out": args.out,
        "calibrate": args.calibrate,
        "workers": args.workers,
    }


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config, _overrides(args))
        return int(COMMANDS[args.command](config, args))
    except UncertaintyError as exc:
        logger.error("%s failed: %s", args.command, exc.message)
        print(json.dumps({"error": exc.to_dict()}, default=str), file=sys.stderr)
        return int(exc.EXIT)
    except OSError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return int(ExitCode.DATA)
    except Exception:
        logger.exception("unexpected error in %s", args.command)
        return int(ExitCode.DATA)


if __name__ == "__main__":
    sys.exit(main())
