"""Simulated physical twin, fault-injection timelines and evaluation metrics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, parse_float, read_entries
from .dataset import (
    DEFAULT_U1_GRID,
    DEFAULT_U2_GRID,
    FAULT_CLASSES,
    as_arrays,
    fault_class_of,
)
from .fddcore import CLASS_PARAMETER, Outcome, TwinState, run_fdd
from .hydronet import (
    DEFAULT_CONFIG,
    NOMINAL_THETA,
    PARAMETER_NAMES,
    PROCESS_NAMES,
    ComponentVector,
    ControlVector,
    LoopConfig,
    ProcessVector,
    simulate,
)

# noise stddev per channel = noise_percent / 100 * scale
CHANNEL_SCALES = np.array([1.0, 1.0, 1.0, 1.0, NOMINAL_THETA.debit])
CLASS_LABELS = ("theta1", "theta2", "theta3", "theta4", "theta5&6")


class ScheduleViolation(RuntimeError):
    """A fault event would start while the previous one is unresolved."""


class EmptyTestSet(ValueError):
    pass


@dataclass
class PhysicalTwin:
    """Stand-in for the bench: the same solver with hidden parameters."""

    theta: ComponentVector = NOMINAL_THETA
    cfg: LoopConfig = DEFAULT_CONFIG


def step_physical_twin(state: PhysicalTwin, u: ControlVector, noise_percent: float = 0.0,
                       rng: np.random.Generator | None = None) -> ProcessVector:
    y = simulate(u, state.theta, state.cfg)
    if noise_percent <= 0.0:
        return y
    if rng is None:
        raise ValueError("noisy measurements need an rng")
    sigma = noise_percent / 100.0 * CHANNEL_SCALES
    return ProcessVector.from_array(y.as_array() + rng.normal(0.0, sigma))


@dataclass(frozen=True)
class FaultEvent:
    step: int
    parameter_index: int
    value: float
    relative: bool = False  # value is a multiplier on the nominal parameter

    def target(self, nominal: ComponentVector) -> float:
        return nominal.get(self.parameter_index) * self.value if self.relative else self.value


@dataclass(frozen=True)
class ScenarioSpec:
    setpoints: tuple  # ((step, ControlVector), ...)
    events: tuple = ()
    resets: tuple = ()
    noise_percent: float = 0.0
    seed: int = 0
    max_steps: int | None = None

    def validate(self) -> None:
        if not self.setpoints:
            raise ValueError("scenario needs at least one setpoint")
        if self.setpoints[0][0] != 0:
            raise ValueError("first setpoint must be at step 0")
        for name, steps in (("setpoint", [s for s, _ in self.setpoints]),
                            ("event", [e.step for e in self.events]),
                            ("reset", list(self.resets))):
            if any(b <= a for a, b in zip(steps, steps[1:])):
                raise ValueError(f"{name} steps must be strictly increasing")
            if any(s < 0 for s in steps):
                raise ValueError(f"{name} steps must be >= 0")
        if not self.noise_percent >= 0.0:
            raise ValueError("noise_percent must be >= 0")
        for e in self.events:
            if not 1 <= e.parameter_index <= len(PARAMETER_NAMES):
                raise ValueError(f"event parameter index {e.parameter_index} outside 1..6")

    @property
    def n_steps(self) -> int:
        if self.max_steps is not None:
            return int(self.max_steps)
        last = [self.setpoints[-1][0]]
        last += [e.step for e in self.events] + list(self.resets)
        return max(last) + 1

    @classmethod
    def from_file(cls, path) -> "ScenarioSpec":
        """Keys: ``setpoint = step,u1,u2``; ``event = step,index,value`` (a
        value written ``x1.3`` is a multiplier on the nominal); ``reset =
        step``; ``noise_percent``; ``seed``; ``max_steps``."""
        path = str(path)
        setpoints, events, resets = [], [], []
        noise, seed, max_steps = 0.0, 0, None
        for lineno, key, value in read_entries(path):
            parts = [p.strip() for p in value.split(",")]
            try:
                if key == "setpoint":
                    step, u1, u2 = parts
                    setpoints.append((int(step), ControlVector(float(u1), float(u2))))
                elif key == "event":
                    step, index, v = parts
                    relative = v.lower().startswith("x")
                    events.append(FaultEvent(int(step), int(index),
                                             float(v[1:] if relative else v), relative))
                elif key == "reset":
                    resets.append(int(value))
                elif key == "noise_percent":
                    noise = parse_float(value, lineno, path)
                elif key == "seed":
                    seed = int(value)
                elif key == "max_steps":
                    max_steps = int(value)
                else:
                    raise ConfigError(f"unknown key {key!r}", lineno, path)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad {key} entry {value!r}: {exc}", lineno, path) from None
        spec = cls(tuple(setpoints), tuple(events), tuple(resets), noise, seed, max_steps)
        try:
            spec.validate()
        except ValueError as exc:
            raise ConfigError(str(exc), path=path) from None
        return spec

    def dump(self) -> str:
        lines = [f"noise_percent = {self.noise_percent!r}", f"seed = {self.seed}"]
        if self.max_steps is not None:
            lines.append(f"max_steps = {self.max_steps}")
        lines += [f"setpoint = {s}, {u.u1!r}, {u.u2!r}" for s, u in self.setpoints]
        for e in self.events:
            v = f"x{e.value!r}" if e.relative else repr(e.value)
            lines.append(f"event = {e.step}, {e.parameter_index}, {v}")
        lines += [f"reset = {s}" for s in self.resets]
        return "\n".join(lines) + "\n"


@dataclass
class CampaignMetrics:
    """Localization and estimation statistics.

    ``confusion[i, j]`` counts class ``i+1`` predicted for truth ``j+1``
    (rows classification, columns truth). Percentages are normalized per
    truth class.
    """

    confusion: np.ndarray = field(default_factory=lambda: np.zeros((5, 5), dtype=int))
    estimation_errors: dict = field(default_factory=lambda: {i: [] for i in range(1, 7)})
    detection_latency: list = field(default_factory=list)
    n_events: int = 0
    n_detected: int = 0
    n_converged: int = 0
    n_false_triggers: int = 0
    n_steps: int = 0

    @property
    def truth_counts(self) -> np.ndarray:
        return self.confusion.sum(axis=0)

    @property
    def accuracy_matrix(self) -> np.ndarray:
        counts = self.truth_counts.astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = 100.0 * self.confusion / counts[None, :]
        return np.where(counts[None, :] > 0, pct, np.nan)

    @property
    def per_class_accuracy(self) -> np.ndarray:
        return np.diag(self.accuracy_matrix)

    @property
    def overall_accuracy(self) -> float:
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else float("nan")

    @property
    def convergence_rate(self) -> float:
        return self.n_converged / self.n_events if self.n_events else float("nan")

    @property
    def false_trigger_rate(self) -> float:
        return self.n_false_triggers / self.n_steps if self.n_steps else float("nan")

    def add(self, predicted: int, truth: int) -> None:
        self.confusion[predicted - 1, truth - 1] += 1


def format_matrix(matrix, percent: bool = False) -> str:
    width = 10
    head = "classification\\truth".ljust(22) + "".join(lbl.rjust(width) for lbl in CLASS_LABELS)
    lines = [head]
    for i, lbl in enumerate(CLASS_LABELS):
        if percent:
            cells = ["-".rjust(width) if np.isnan(v) else f"{v:.2f}%".rjust(width) for v in matrix[i]]
        else:
            cells = [str(int(v)).rjust(width) for v in matrix[i]]
        lines.append(lbl.ljust(22) + "".join(cells))
    return "\n".join(lines)


def metrics_text(m: CampaignMetrics) -> str:
    """Confusion matrix, accuracy matrix and summary counters as delimited text."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["# confusion (rows classification, columns truth)"])
    w.writerow(["classification", *CLASS_LABELS])
    for i, lbl in enumerate(CLASS_LABELS):
        w.writerow([lbl, *(int(v) for v in m.confusion[i])])
    w.writerow(["# accuracy percent (normalized per truth class)"])
    w.writerow(["classification", *CLASS_LABELS])
    acc = m.accuracy_matrix
    for i, lbl in enumerate(CLASS_LABELS):
        w.writerow([lbl, *("" if np.isnan(v) else f"{v:.4f}" for v in acc[i])])
    w.writerow(["# summary"])
    w.writerow(["overall_accuracy", f"{m.overall_accuracy:.6f}"])
    for name in ("n_events", "n_detected", "n_converged", "n_false_triggers", "n_steps"):
        w.writerow([name, getattr(m, name)])
    w.writerow(["convergence_rate", f"{m.convergence_rate:.6f}"])
    if m.detection_latency:
        w.writerow(["mean_detection_latency", f"{np.mean(m.detection_latency):.6f}"])
    w.writerow(["# estimation relative error quantiles"])
    w.writerow(["parameter", "n", "median", "p90"])
    for index, errs in sorted(m.estimation_errors.items()):
        if errs:
            w.writerow([PARAMETER_NAMES[index - 1], len(errs),
                        f"{np.median(errs):.6g}", f"{np.percentile(errs, 90):.6g}"])
    return out.getvalue()


@dataclass
class StepRecord:
    step: int
    u: ControlVector
    y_s: ProcessVector
    theta_s: ComponentVector
    theta_model: ComponentVector
    report: object
    event: int | None  # index into spec.events of the active event


@dataclass
class _Active:
    index: int
    event: FaultEvent
    detected: bool = False
    resolved: bool = False


def run_scenario(spec: ScenarioSpec, twin: TwinState, physical: PhysicalTwin | None = None):
    """Step a timeline, running the FDD loop on every measurement.

    Returns ``(steps, metrics)``. ``reset`` directives put both the hidden
    and the model parameters back to their initial values and retire the
    active event; a new event while the previous one is neither converged
    nor reset raises :class:`ScheduleViolation`.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    physical = physical or PhysicalTwin(twin.theta, twin.cfg)
    initial_physical, initial_model = physical.theta, twin.theta
    setpoints = dict(spec.setpoints)
    events = {e.step: (k, e) for k, e in enumerate(spec.events)}
    resets = set(spec.resets)
    metrics = CampaignMetrics(n_steps=spec.n_steps, n_events=len(spec.events))
    steps = []
    u = spec.setpoints[0][1]
    active = None
    for step in range(spec.n_steps):
        u = setpoints.get(step, u)
        if step in resets:
            physical.theta, twin.theta = initial_physical, initial_model
            active = None
        if step in events:
            k, event = events[step]
            if active is not None and not active.resolved:
                raise ScheduleViolation(
                    f"event {k} at step {step} overlaps unresolved event {active.index} "
                    f"(step {active.event.step})")
            physical.theta = physical.theta.with_value(event.parameter_index, event.target(initial_physical))
            active = _Active(k, event)

        y_s = step_physical_twin(physical, u, spec.noise_percent, rng)
        report = run_fdd(y_s, u, twin)
        steps.append(StepRecord(step, u, y_s, physical.theta, twin.theta, report,
                                active.index if active is not None else None))

        if not report.triggered:
            continue
        if active is None or active.resolved:
            metrics.n_false_triggers += 1
            continue
        if not active.detected:
            active.detected = True
            metrics.n_detected += 1
            metrics.detection_latency.append(step - active.event.step)
            metrics.add(report.trace[0].fault_class, fault_class_of(active.event.parameter_index))
        if report.outcome is Outcome.CONVERGED:
            active.resolved = True
            metrics.n_converged += 1
            index = report.final.parameter_index
            if index == active.event.parameter_index:
                truth = physical.theta.get(index)
                metrics.estimation_errors[index].append(abs(twin.theta.get(index) - truth) / truth)
    return steps, metrics


def trace_text(steps) -> str:
    """Per-step trace as delimited text for plotting."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["step", "u1", "u2", *PROCESS_NAMES, "triggered", "outcome", "iterations",
                "fault_class", "estimate", "event",
                *(f"true_{n}" for n in PARAMETER_NAMES), *(f"model_{n}" for n in PARAMETER_NAMES)])
    for s in steps:
        r = s.report
        last = r.final
        w.writerow([s.step, repr(s.u.u1), repr(s.u.u2), *(format(v, ".17g") for v in s.y_s.as_array()),
                    int(r.triggered), r.outcome.value, r.iterations,
                    last.fault_class if last else "", format(last.estimate, ".17g") if last else "",
                    "" if s.event is None else s.event,
                    *(format(v, ".17g") for v in s.theta_s.as_array()),
                    *(format(v, ".17g") for v in s.theta_model.as_array())])
    return out.getvalue()


def evaluate_localization(classifier, records) -> CampaignMetrics:
    X, classes, _, _ = as_arrays(records)
    if len(X) == 0:
        raise EmptyTestSet("no records to evaluate")
    predicted = classifier.predict(X)
    metrics = CampaignMetrics()
    np.add.at(metrics.confusion, (predicted.astype(int) - 1, classes - 1), 1)
    return metrics


@dataclass
class EstimationReport:
    """Relative estimation errors per perturbed parameter, on correctly
    localized records only."""

    errors: dict
    n_misclassified: int
    n_unsupported: int  # correctly localized, but the class estimator targets another parameter

    def median(self, index: int) -> float:
        return float(np.median(self.errors[index]))

    def p90(self, index: int) -> float:
        return float(np.percentile(self.errors[index], 90))

    def summary_text(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["parameter", "name", "n", "median", "p90"])
        for index in sorted(self.errors):
            errs = self.errors[index]
            if len(errs):
                w.writerow([index, PARAMETER_NAMES[index - 1], len(errs),
                            f"{np.median(errs):.6g}", f"{np.percentile(errs, 90):.6g}"])
        return out.getvalue()

    def samples_text(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["parameter", "relative_error"])
        for index in sorted(self.errors):
            for e in self.errors[index]:
                w.writerow([index, format(float(e), ".17g")])
        return out.getvalue()


def evaluate_estimation(estimators, classifier, records) -> EstimationReport:
    X, classes, indices, values = as_arrays(records)
    if len(X) == 0:
        raise EmptyTestSet("no records to evaluate")
    predicted = classifier.predict(X)
    correct = predicted == classes
    errors = {}
    unsupported = 0
    for n in FAULT_CLASSES:
        index = CLASS_PARAMETER[n]
        in_class = correct & (classes == n)
        unsupported += int(np.count_nonzero(in_class & (indices != index)))
        mask = in_class & (indices == index)
        if n not in estimators or not mask.any():
            continue
        est = np.maximum(estimators[n].predict(X[mask]), 0.0)
        errors[index] = np.abs(est - values[mask]) / values[mask]
    return EstimationReport(errors, int(np.count_nonzero(~correct)), unsupported)


# operating points where every parameter moves the outputs past the
# detection thresholds
CAMPAIGN_U1 = tuple(u for u in DEFAULT_U1_GRID if u >= 50.0)
CAMPAIGN_U2 = tuple(u for u in DEFAULT_U2_GRID if u < 100.0)


def campaign_spec(n_events: int = 50, seed: int = 0, u1_choices=CAMPAIGN_U1, u2_choices=CAMPAIGN_U2,
                  parameter_indices=(1, 2, 3, 4, 5), deviation=(0.1, 0.4),
                  noise_percent: float = 0.0) -> ScenarioSpec:
    """Single-fault campaign: per event a new setpoint, the abrupt fault one
    step later, and a reset to nominal the step after that."""
    rng = np.random.default_rng(seed)
    setpoints, events, resets = [], [], []
    for e in range(n_events):
        base = 3 * e
        u = ControlVector(float(rng.choice(u1_choices)), float(rng.choice(u2_choices)))
        index = int(rng.choice(parameter_indices))
        mag = rng.uniform(*deviation)
        mult = 1.0 + mag if rng.random() < 0.5 else 1.0 - mag
        setpoints.append((base, u))
        events.append(FaultEvent(base + 1, index, float(mult), relative=True))
        resets.append(base + 2)
    return ScenarioSpec(tuple(setpoints), tuple(events), tuple(resets), noise_percent, seed,
                        3 * n_events)


def no_fault_spec(n_steps: int = 1000, seed: int = 0, noise_percent: float = 0.0) -> ScenarioSpec:
    """Random setpoint every step, no faults."""
    rng = np.random.default_rng(seed)
    setpoints = tuple((s, ControlVector(float(rng.uniform(0, 100)), float(rng.uniform(0, 100))))
                      for s in range(n_steps))
    return ScenarioSpec(setpoints, noise_percent=noise_percent, seed=seed, max_steps=n_steps)
