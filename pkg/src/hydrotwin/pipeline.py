"""Training glue: database -> classifier + per-class estimators, and model bundles on disk."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .config import load_flat_dataclass
from .dataset import FAULT_CLASSES, as_arrays
from .fddcore import CLASS_PARAMETER
from .mlkit import model_load, model_save, svr_fit, tree_fit


@dataclass(frozen=True)
class HyperParams:
    """Learner settings. ``max_depth <= 0`` means unlimited depth."""

    max_depth: float = 0
    min_samples_leaf: float = 2
    C: float = 100.0
    epsilon: float = 0.01
    gamma: float = 1.0 / 7.0
    tol: float = 1e-3

    @classmethod
    def from_file(cls, path) -> "HyperParams":
        return load_flat_dataclass(cls, path)

    @property
    def depth_limit(self) -> int | None:
        return int(self.max_depth) if self.max_depth > 0 else None


DEFAULT_HYPERPARAMS = HyperParams()


def train_classifier(records, hp: HyperParams = DEFAULT_HYPERPARAMS):
    X, classes, _, _ = as_arrays(records)
    return tree_fit(X, classes, hp.depth_limit, int(hp.min_samples_leaf))


def estimator_rows(records, fault_class: int):
    """Training rows of one class's estimator.

    Only records whose perturbed parameter is the one the class writes
    back; for the merged pump class this drops the rated-flow records.
    """
    X, _, indices, values = as_arrays(records)
    mask = indices == CLASS_PARAMETER[fault_class]
    return X[mask], values[mask]


def train_estimators(records, hp: HyperParams = DEFAULT_HYPERPARAMS) -> dict:
    estimators = {}
    for n in FAULT_CLASSES:
        X, y = estimator_rows(records, n)
        if len(X) < 2:
            continue
        estimators[n] = svr_fit(X, y, hp.C, hp.epsilon, hp.gamma, tol=hp.tol)
    return estimators


def save_models(out_dir, classifier, estimators) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "classifier.model"]
    model_save(classifier, paths[0])
    for n, model in sorted(estimators.items()):
        path = out_dir / f"estimator_{n}.model"
        model_save(model, path)
        paths.append(path)
    return paths


def load_models(model_dir):
    model_dir = Path(model_dir)
    classifier = model_load(model_dir / "classifier.model", kind="tree")
    estimators = {}
    for n in FAULT_CLASSES:
        path = model_dir / f"estimator_{n}.model"
        if path.exists():
            estimators[n] = model_load(path, kind="svr")
    return classifier, estimators
