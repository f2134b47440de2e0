"""Detection, localization, estimation and validation around the 1D twin.

``run_fdd`` is the threshold-gated loop: detect a mismatch between the
measured process vector and the twin's prediction, ask the classifier
which parameter moved, ask that class's regressor for the new value,
re-simulate, and commit the value only when the re-simulated outputs fall
inside the validation thresholds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .config import load_flat_dataclass
from .dataset import MERGED_CLASS
from .hydronet import (
    DEFAULT_CONFIG,
    PROCESS_NAMES,
    ComponentVector,
    ControlVector,
    LoopConfig,
    NoConvergence,
    ProcessVector,
    simulate,
)

MAX_ITERATIONS = 3
CLAMP_FRACTION = 1e-6

# parameter written back for each fault class; class 5 covers rated head
# and rated flow, only the rated head is estimated
CLASS_PARAMETER = {1: 1, 2: 2, 3: 3, 4: 4, MERGED_CLASS: 5}


class MissingEstimator(KeyError):
    pass


@dataclass(frozen=True)
class ThresholdVector:
    """Per-channel residual limits: pressures in bar, flow in m^3/h."""

    p1: float
    p2: float
    p3: float
    p4: float
    fl: float

    def __post_init__(self):
        for name in PROCESS_NAMES:
            if not getattr(self, name) >= 0.0:
                raise ValueError(f"threshold {name} must be >= 0")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PROCESS_NAMES], dtype=float)

    @classmethod
    def from_file(cls, path, defaults: "ThresholdVector") -> "ThresholdVector":
        return load_flat_dataclass(cls, path, defaults)


DETECTION_THRESHOLDS = ThresholdVector(0.02, 0.02, 0.02, 0.02, 1.0)
VALIDATION_THRESHOLDS = ThresholdVector(0.01, 0.01, 0.01, 0.01, 1.0)


def _arr(y) -> np.ndarray:
    return y.as_array() if hasattr(y, "as_array") else np.asarray(y, dtype=float)


def residuals(y_s, y_m) -> np.ndarray:
    return np.abs(_arr(y_s) - _arr(y_m))


def detect(y_s, y_m, eps_d: ThresholdVector = DETECTION_THRESHOLDS):
    """Trigger when some residual exceeds its threshold; equality does not trigger."""
    eps = residuals(y_s, y_m)
    return bool(np.any(eps > eps_d.as_array())), eps


def features(u: ControlVector, y) -> np.ndarray:
    return np.concatenate([u.as_array(), _arr(y)])


def localize(classifier, u: ControlVector, y_s) -> int:
    n = classifier.predict_one(features(u, y_s))
    if n not in CLASS_PARAMETER:
        raise ValueError(f"classifier returned unknown fault class {n}")
    return n


def estimate(estimators, u: ControlVector, y_s, n: int, nominal: ComponentVector | None = None):
    """Estimated value of class ``n``'s parameter, clamped positive.

    Returns ``(value, clamped)``. The clamp floor is a millionth of the
    nominal value (of the estimator's target mean when no nominal vector
    is given).
    """
    try:
        model = estimators[n]
    except KeyError:
        raise MissingEstimator(f"no estimator for fault class {n}") from None
    value = model.predict_one(features(u, y_s))
    if value > 0.0:
        return value, False
    ref = nominal.get(CLASS_PARAMETER[n]) if nominal is not None else abs(model.y_mean)
    return CLAMP_FRACTION * ref, True


@dataclass
class ValidationResult:
    passed: bool
    residuals: np.ndarray
    solver_failed: bool = False
    y_e: ProcessVector | None = None


def validate(y_s, theta_candidate: ComponentVector, u: ControlVector,
             cfg: LoopConfig = DEFAULT_CONFIG,
             eps_v: ThresholdVector = VALIDATION_THRESHOLDS) -> ValidationResult:
    try:
        y_e = simulate(u, theta_candidate, cfg)
    except NoConvergence:
        return ValidationResult(False, np.full(5, np.inf), solver_failed=True)
    eps = residuals(y_s, y_e)
    return ValidationResult(bool(np.all(eps < eps_v.as_array())), eps, y_e=y_e)


class Outcome(enum.Enum):
    NO_FAULT = "NoFault"
    CONVERGED = "Converged"
    FAILED = "FailedToConverge"


@dataclass
class TraceEntry:
    iteration: int
    residuals: np.ndarray  # y_s against the working model before this iteration
    fault_class: int
    parameter_index: int
    estimate: float
    post_residuals: np.ndarray  # y_s against the candidate (validation)
    passed: bool
    clamped: bool = False
    solver_failed: bool = False


@dataclass
class FddReport:
    triggered: bool
    detection_residuals: np.ndarray
    outcome: Outcome
    theta: ComponentVector
    trace: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def final(self) -> TraceEntry | None:
        return self.trace[-1] if self.trace else None

    def to_text(self) -> str:
        def vec(v):
            return " ".join(format(float(x), ".6g") for x in v)

        lines = [
            f"triggered = {int(self.triggered)}",
            f"detection_residuals = {vec(self.detection_residuals)}",
            f"outcome = {self.outcome.value}",
            f"iterations = {self.iterations}",
        ]
        for e in self.trace:
            k = e.iteration
            lines += [
                f"iter{k}.residuals = {vec(e.residuals)}",
                f"iter{k}.class = {e.fault_class}",
                f"iter{k}.parameter = {e.parameter_index}",
                f"iter{k}.estimate = {e.estimate!r}",
                f"iter{k}.post_residuals = {vec(e.post_residuals)}",
                f"iter{k}.passed = {int(e.passed)}",
            ]
            if e.clamped:
                lines.append(f"iter{k}.clamped = 1")
            if e.solver_failed:
                lines.append(f"iter{k}.solver_failed = 1")
        lines.append("theta = " + " ".join(repr(float(v)) for v in self.theta.as_array()))
        return "\n".join(lines) + "\n"


@dataclass
class TwinState:
    """The digital twin: model parameters, trained models and thresholds.

    ``theta`` is mutated by :func:`run_fdd` on a converged diagnosis, so a
    twin instance must not be shared between concurrent callers.
    """

    theta: ComponentVector
    classifier: object
    estimators: dict
    cfg: LoopConfig = DEFAULT_CONFIG
    eps_d: ThresholdVector = DETECTION_THRESHOLDS
    eps_v: ThresholdVector = VALIDATION_THRESHOLDS
    max_iterations: int = MAX_ITERATIONS
    nominal: ComponentVector = field(default_factory=ComponentVector)

    def predict(self, u: ControlVector) -> ProcessVector:
        return simulate(u, self.theta, self.cfg)


def run_fdd(y_s, u: ControlVector, twin: TwinState, max_iterations: int | None = None) -> FddReport:
    """One pass of detect -> (localize -> estimate -> validate) x up to N.

    Every iteration localizes and estimates from the measured ``y_s``.
    From the second iteration on, when the class repeats, the estimate is
    corrected by how far the regressor misreads the previous candidate's
    own simulated output::

        value_k = value_{k-1} + g(u, y_s) - g(u, y_e(value_{k-1}))

    which cancels the regressor's local bias. ``twin.theta`` changes only
    when a candidate passes validation.
    """
    max_iterations = twin.max_iterations if max_iterations is None else max_iterations
    y_s = _arr(y_s)
    y_model = twin.predict(u).as_array()
    triggered, eps = detect(y_s, y_model, twin.eps_d)
    if not triggered:
        return FddReport(False, eps, Outcome.NO_FAULT, twin.theta)

    trace = []
    working_residuals = eps
    prev = None  # (class, value, candidate output)
    for k in range(1, max_iterations + 1):
        n = localize(twin.classifier, u, y_s)
        index = CLASS_PARAMETER[n]
        value, clamped = estimate(twin.estimators, u, y_s, n, twin.nominal)
        if prev is not None and prev[0] == n and prev[2] is not None:
            seen, _ = estimate(twin.estimators, u, prev[2], n, twin.nominal)
            value = prev[1] + value - seen
            if not value > 0.0:
                value, clamped = CLAMP_FRACTION * twin.nominal.get(index), True
        candidate = twin.theta.with_value(index, value)
        result = validate(y_s, candidate, u, twin.cfg, twin.eps_v)
        trace.append(TraceEntry(k, working_residuals, n, index, value, result.residuals,
                                result.passed, clamped, result.solver_failed))
        if result.passed:
            twin.theta = candidate
            return FddReport(True, eps, Outcome.CONVERGED, candidate, trace)
        prev = (n, value, result.y_e)
        working_residuals = result.residuals
    return FddReport(True, eps, Outcome.FAILED, twin.theta, trace)
