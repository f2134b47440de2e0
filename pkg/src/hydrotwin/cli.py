"""Command-line entry point.

Exit codes: 0 success, 2 bad input (flags, config, data or model files),
3 runtime failure (solver non-convergence, schedule violation), 4 I/O.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import dataset, pipeline, scenario
from .config import ConfigError, dump_flat_dataclass, load_flat_dataclass, read_entries
from .fddcore import DETECTION_THRESHOLDS, VALIDATION_THRESHOLDS, ThresholdVector, TwinState
from .hydronet import (
    DEFAULT_CONFIG,
    NOMINAL_THETA,
    PARAMETER_NAMES,
    PROCESS_NAMES,
    ControlVector,
    LoopConfig,
    NoConvergence,
    simulate,
)
from .mlkit import FormatError

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunManifest:
    """Enough to regenerate an artifact: the command line plus its inputs."""

    command: str
    argv: list
    seed: int | None = None
    config_paths: tuple = ()
    dataset_path: str | None = None
    model_paths: tuple = ()
    timestamp: str = ""
    cwd: str = ""

    def dump(self) -> str:
        lines = [
            "# regenerate with: hydrotwin rerun --manifest <this file>",
            f"command = {self.command}",
            f"argv = {shlex.join(self.argv)}",
            f"seed = {'' if self.seed is None else self.seed}",
            f"config_paths = {', '.join(self.config_paths)}",
            f"dataset_path = {self.dataset_path or ''}",
            f"model_paths = {', '.join(self.model_paths)}",
            f"timestamp = {self.timestamp}",
            f"cwd = {self.cwd}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_file(cls, path) -> "RunManifest":
        entries = {key: value for _, key, value in read_entries(path)}
        if "argv" not in entries or "command" not in entries:
            raise ConfigError("manifest needs command and argv", path=str(path))

        def items(key):
            return tuple(v.strip() for v in entries.get(key, "").split(",") if v.strip())

        seed = entries.get("seed", "")
        return cls(entries["command"], shlex.split(entries["argv"]), int(seed) if seed else None,
                   items("config_paths"), entries.get("dataset_path") or None, items("model_paths"),
                   entries.get("timestamp", ""), entries.get("cwd", ""))


def _write_manifest(path: Path, args, argv, dataset_path=None, model_paths=()):
    configs = tuple(str(p) for p in (getattr(args, "config", None), getattr(args, "plan", None),
                                     getattr(args, "hyper", None), getattr(args, "spec", None),
                                     getattr(args, "thresholds_detect", None),
                                     getattr(args, "thresholds_validate", None)) if p)
    manifest = RunManifest(args.command, list(argv), getattr(args, "seed", None), configs,
                           str(dataset_path) if dataset_path else None,
                           tuple(str(p) for p in model_paths),
                           time.strftime("%Y-%m-%dT%H:%M:%S%z"), os.getcwd())
    path.write_text(manifest.dump())


def _loop_config(args) -> LoopConfig:
    return DEFAULT_CONFIG if args.config is None else load_flat_dataclass(LoopConfig, args.config)


def _twin(args) -> TwinState:
    classifier, estimators = pipeline.load_models(args.models)
    eps_d = DETECTION_THRESHOLDS if args.thresholds_detect is None else \
        ThresholdVector.from_file(args.thresholds_detect, DETECTION_THRESHOLDS)
    eps_v = VALIDATION_THRESHOLDS if args.thresholds_validate is None else \
        ThresholdVector.from_file(args.thresholds_validate, VALIDATION_THRESHOLDS)
    return TwinState(NOMINAL_THETA, classifier, estimators, _loop_config(args), eps_d, eps_v)


def _theta_override(text: str):
    name, sep, value = text.partition("=")
    if not sep or name.strip() not in PARAMETER_NAMES:
        raise argparse.ArgumentTypeError(f"expected name=value with name in {', '.join(PARAMETER_NAMES)}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number {value!r}") from None


def cmd_simulate(args, argv) -> int:
    theta = NOMINAL_THETA
    for name, value in args.theta or ():
        theta = theta.with_value(PARAMETER_NAMES.index(name) + 1, value)
    y = simulate(ControlVector(args.u1, args.u2), theta, _loop_config(args))
    for name, value in zip(PROCESS_NAMES, y.as_array()):
        print(f"{name} = {value:.6f}")
    return EXIT_OK


def cmd_gen(args, argv) -> int:
    plan = dataset.SamplingPlan() if args.plan is None else dataset.SamplingPlan.from_file(args.plan)
    records, dropped = dataset.generate_counted(plan, NOMINAL_THETA, _loop_config(args))
    out = Path(args.out)
    dataset.save(records, out)
    _write_manifest(out.with_name(out.name + ".manifest"), args, argv, dataset_path=out)
    print(f"records = {len(records)}")
    print(f"dropped = {dropped}")
    return EXIT_OK


def cmd_train(args, argv) -> int:
    hp = pipeline.DEFAULT_HYPERPARAMS if args.hyper is None else pipeline.HyperParams.from_file(args.hyper)
    records = dataset.load(args.data)
    train, test = dataset.split(records, args.train_fraction, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset.save(train, out / "train.csv")
    dataset.save(test, out / "test.csv")
    classifier = pipeline.train_classifier(train, hp)
    estimators = pipeline.train_estimators(train, hp)
    paths = pipeline.save_models(out, classifier, estimators)
    _write_manifest(out / "manifest.txt", args, argv, dataset_path=args.data, model_paths=paths)
    print(f"train_records = {len(train)}")
    print(f"test_records = {len(test)}")
    print(f"tree_nodes = {classifier.n_nodes}")
    print(f"tree_depth = {classifier.depth()}")
    for n, m in sorted(estimators.items()):
        print(f"estimator_{n}.support_vectors = {len(m.dual_coef)}")
    return EXIT_OK


def cmd_eval(args, argv) -> int:
    classifier, estimators = pipeline.load_models(args.models)
    records = dataset.load(args.data)
    loc = scenario.evaluate_localization(classifier, records)
    est = scenario.evaluate_estimation(estimators, classifier, records)
    print("Confusion matrix")
    print(scenario.format_matrix(loc.confusion))
    print()
    print("Accuracy matrix (percent of each truth class)")
    print(scenario.format_matrix(loc.accuracy_matrix, percent=True))
    print()
    print(f"overall_accuracy = {100 * loc.overall_accuracy:.2f}%")
    print()
    print("Estimation relative error (correctly localized records)")
    print(est.summary_text(), end="")
    if args.out_dir is not None:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "localization.csv").write_text(scenario.metrics_text(loc))
        (out / "estimation_summary.csv").write_text(est.summary_text())
        (out / "estimation_errors.csv").write_text(est.samples_text())
        _write_manifest(out / "manifest.txt", args, argv, dataset_path=args.data,
                        model_paths=(args.models,))
    return EXIT_OK


def _run_and_write(spec, args, argv) -> int:
    twin = _twin(args)
    steps, metrics = scenario.run_scenario(spec, twin)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.txt").write_text(spec.dump())
    (out / "trace.csv").write_text(scenario.trace_text(steps))
    (out / "metrics.csv").write_text(scenario.metrics_text(metrics))
    _write_manifest(out / "manifest.txt", args, argv, model_paths=(args.models,))
    print(f"steps = {metrics.n_steps}")
    print(f"events = {metrics.n_events}")
    print(f"detected = {metrics.n_detected}")
    print(f"converged = {metrics.n_converged}")
    print(f"convergence_rate = {metrics.convergence_rate:.4f}")
    print(f"false_triggers = {metrics.n_false_triggers}")
    print(f"false_trigger_rate = {metrics.false_trigger_rate:.4f}")
    return EXIT_OK


def cmd_scenario(args, argv) -> int:
    return _run_and_write(scenario.ScenarioSpec.from_file(args.spec), args, argv)


def cmd_campaign(args, argv) -> int:
    if args.no_fault:
        spec = scenario.no_fault_spec(args.steps, args.seed, args.noise)
    else:
        spec = scenario.campaign_spec(args.events, args.seed, noise_percent=args.noise)
    return _run_and_write(spec, args, argv)


def cmd_config(args, argv) -> int:
    text = {
        "loop": lambda: dump_flat_dataclass(DEFAULT_CONFIG, "loop geometry and fluid"),
        "hyper": lambda: dump_flat_dataclass(pipeline.DEFAULT_HYPERPARAMS, "learner settings"),
        "detect": lambda: dump_flat_dataclass(DETECTION_THRESHOLDS, "detection thresholds"),
        "validate": lambda: dump_flat_dataclass(VALIDATION_THRESHOLDS, "validation thresholds"),
        "plan": lambda: dataset.SamplingPlan().dump(),
        "theta": lambda: dump_flat_dataclass(NOMINAL_THETA, "nominal component vector"),
    }[args.what]()
    print(text, end="")
    return EXIT_OK


def cmd_rerun(args, argv) -> int:
    manifest = RunManifest.from_file(args.manifest)
    if not manifest.argv or manifest.argv[0] == "rerun":
        raise ConfigError("manifest does not hold a rerunnable command", path=str(args.manifest))
    # relative paths in argv resolve against the original working directory
    here = os.getcwd()
    if manifest.cwd:
        os.chdir(manifest.cwd)
    try:
        return main(manifest.argv)
    finally:
        os.chdir(here)


def _add_model_args(p):
    p.add_argument("--models", required=True, help="directory written by train")
    p.add_argument("--config", help="loop config file")
    p.add_argument("--thresholds-detect", help="detection threshold file")
    p.add_argument("--thresholds-validate", help="validation threshold file")
    p.add_argument("--out-dir", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hydrotwin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="steady state at one control point")
    p.add_argument("--u1", type=float, required=True, help="pump speed, percent")
    p.add_argument("--u2", type=float, required=True, help="valve opening, percent")
    p.add_argument("--theta", type=_theta_override, action="append", metavar="NAME=VALUE")
    p.add_argument("--config", help="loop config file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen", help="generate the fault database")
    p.add_argument("--plan", help="sampling plan file")
    p.add_argument("--config", help="loop config file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="split a database and train the models")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--hyper", help="learner settings file")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="localization and estimation metrics on labeled records")
    p.add_argument("--data", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scenario", help="run a fault-injection timeline")
    p.add_argument("--spec", required=True)
    _add_model_args(p)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("campaign", help="random single-fault campaign or no-fault timeline")
    p.add_argument("--events", type=int, default=50)
    p.add_argument("--no-fault", action="store_true", help="random setpoints, no faults")
    p.add_argument("--steps", type=int, default=1000, help="timeline length with --no-fault")
    p.add_argument("--noise", type=float, default=0.0, help="sensor noise, percent")
    p.add_argument("--seed", type=int, default=0)
    _add_model_args(p)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("config", help="print compiled-in defaults")
    p.add_argument("what", choices=("loop", "hyper", "detect", "validate", "plan", "theta"))
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("rerun", help="re-execute the command recorded in a manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, argv)
    except UsageError as exc:
        print(f"hydrotwin: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NoConvergence, scenario.ScheduleViolation) as exc:
        print(f"hydrotwin: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"hydrotwin: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, FormatError, ValueError, KeyError) as exc:
        print(f"hydrotwin: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
