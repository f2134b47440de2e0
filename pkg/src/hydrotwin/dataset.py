"""Single-perturbation training database: generation, split, persistence."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, parse_float, parse_float_list, read_entries
from .hydronet import (
    DEFAULT_CONFIG,
    NOMINAL_THETA,
    PARAMETER_NAMES,
    ComponentVector,
    ControlVector,
    LoopConfig,
    NoConvergence,
    ProcessVector,
    simulate,
)

log = logging.getLogger(__name__)

N_PARAMETERS = len(PARAMETER_NAMES)
FAULT_CLASSES = (1, 2, 3, 4, 5)
MERGED_CLASS = 5
DEAD_BAND = (0.98, 1.02)

HEADER = ("u1", "u2", "p1", "p2", "p3", "p4", "fl", "fault_class", "perturbed_index", "true_value")

DEFAULT_U1_GRID = tuple(float(v) for v in range(25, 91, 5))
# 10..94 in steps of 7, plus the fully open valve
DEFAULT_U2_GRID = tuple(float(v) for v in range(10, 95, 7)) + (100.0,)
DEFAULT_MULTIPLIERS = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6)


class EmptyPlan(ValueError):
    pass


class TooFewSamples(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def fault_class_of(parameter_index: int) -> int:
    """Localization label; pump rated head and rated flow share class 5."""
    if not 1 <= parameter_index <= N_PARAMETERS:
        raise IndexError(f"parameter index {parameter_index} outside 1..{N_PARAMETERS}")
    return min(parameter_index, MERGED_CLASS)


@dataclass(frozen=True)
class SampleRecord:
    u: ControlVector
    y: ProcessVector
    fault_class: int
    perturbed_index: int
    true_value: float

    def features(self) -> np.ndarray:
        return np.concatenate([self.u.as_array(), self.y.as_array()])


@dataclass(frozen=True)
class SamplingPlan:
    """Control grid and relative perturbation grids, one per parameter."""

    u1_grid: tuple = DEFAULT_U1_GRID
    u2_grid: tuple = DEFAULT_U2_GRID
    multipliers: dict = field(default_factory=lambda: {i: DEFAULT_MULTIPLIERS for i in range(1, N_PARAMETERS + 1)})
    seed: int = 0

    def validate(self) -> None:
        if not self.u1_grid or not self.u2_grid:
            raise EmptyPlan("control grids must be non-empty")
        if set(self.multipliers) != set(range(1, N_PARAMETERS + 1)):
            raise EmptyPlan(f"need a multiplier grid for each parameter 1..{N_PARAMETERS}")
        for index, grid in self.multipliers.items():
            if not grid:
                raise EmptyPlan(f"multiplier grid for parameter {index} is empty")
            for m in grid:
                if not m > 0.0:
                    raise ValueError(f"multiplier {m} for parameter {index} must be > 0")
                if DEAD_BAND[0] < m < DEAD_BAND[1]:
                    raise ValueError(
                        f"multiplier {m} for parameter {index} inside dead-band {DEAD_BAND}"
                    )
        for name, grid in (("u1", self.u1_grid), ("u2", self.u2_grid)):
            for v in grid:
                if not 0.0 <= v <= 100.0:
                    raise ValueError(f"{name} grid value {v} outside [0, 100]")

    def size(self) -> int:
        return len(self.u1_grid) * len(self.u2_grid) * sum(len(g) for g in self.multipliers.values())

    @classmethod
    def from_file(cls, path) -> "SamplingPlan":
        """Keys: ``u1_grid``, ``u2_grid``, ``multipliers`` (all parameters),
        ``multipliers_<i>`` (override for parameter i), ``seed``."""
        path = str(path)
        base = cls()
        u1, u2, seed = base.u1_grid, base.u2_grid, base.seed
        common = None
        per = {}
        for lineno, key, value in read_entries(path):
            if key == "u1_grid":
                u1 = tuple(parse_float_list(value, lineno, path))
            elif key == "u2_grid":
                u2 = tuple(parse_float_list(value, lineno, path))
            elif key == "multipliers":
                common = tuple(parse_float_list(value, lineno, path))
            elif key.startswith("multipliers_"):
                try:
                    index = int(key.split("_", 1)[1])
                except ValueError:
                    raise ConfigError(f"bad key {key!r}", lineno, path) from None
                if not 1 <= index <= N_PARAMETERS:
                    raise ConfigError(f"parameter index {index} outside 1..{N_PARAMETERS}", lineno, path)
                per[index] = tuple(parse_float_list(value, lineno, path))
            elif key == "seed":
                seed = int(parse_float(value, lineno, path))
            else:
                raise ConfigError(f"unknown key {key!r}", lineno, path)
        grids = {i: per.get(i, common if common is not None else DEFAULT_MULTIPLIERS)
                 for i in range(1, N_PARAMETERS + 1)}
        plan = cls(u1, u2, grids, seed)
        try:
            plan.validate()
        except ValueError as exc:
            raise ConfigError(str(exc), path=path) from None
        return plan

    def dump(self) -> str:
        def fmt(values):
            return ", ".join(repr(float(v)) for v in values)

        lines = [f"u1_grid = {fmt(self.u1_grid)}", f"u2_grid = {fmt(self.u2_grid)}"]
        lines += [f"multipliers_{i} = {fmt(self.multipliers[i])}" for i in sorted(self.multipliers)]
        lines.append(f"seed = {self.seed}")
        return "\n".join(lines) + "\n"


def generate_counted(plan: SamplingPlan, theta_nominal: ComponentVector = NOMINAL_THETA,
                     cfg: LoopConfig = DEFAULT_CONFIG) -> tuple[list[SampleRecord], int]:
    """Simulate every (u1, u2, parameter, multiplier) point of the plan.

    Returns the records in plan order and the number of points dropped
    because the operating-point solve failed.
    """
    plan.validate()
    records = []
    dropped = 0
    for u1 in plan.u1_grid:
        for u2 in plan.u2_grid:
            u = ControlVector(float(u1), float(u2))
            for index in range(1, N_PARAMETERS + 1):
                nominal = theta_nominal.get(index)
                for m in plan.multipliers[index]:
                    value = nominal * m
                    try:
                        y = simulate(u, theta_nominal.with_value(index, value), cfg)
                    except NoConvergence:
                        dropped += 1
                        continue
                    records.append(SampleRecord(u, y, fault_class_of(index), index, value))
    if dropped:
        log.warning("dropped %d non-convergent plan points", dropped)
    return records, dropped


def generate(plan: SamplingPlan, theta_nominal: ComponentVector = NOMINAL_THETA,
             cfg: LoopConfig = DEFAULT_CONFIG) -> list[SampleRecord]:
    return generate_counted(plan, theta_nominal, cfg)[0]


def split(records, train_fraction: float = 0.8, seed: int = 0):
    """Stratified shuffle split by fault class."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    records = list(records)
    labels = np.array([r.fault_class for r in records])
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < 2:
            raise TooFewSamples(f"class {c} has {len(members)} record(s), need at least 2")
        members = rng.permutation(members)
        n_train = int(round(train_fraction * len(members)))
        n_train = min(max(n_train, 1), len(members) - 1)
        train_idx.extend(members[:n_train])
        test_idx.extend(members[n_train:])
    # keep the original record order inside each part
    train = [records[i] for i in sorted(train_idx)]
    test = [records[i] for i in sorted(test_idx)]
    return train, test


def as_arrays(records):
    """Features (n, 7), fault classes, perturbed indices and true values."""
    records = list(records)
    if not records:
        return np.empty((0, 7)), np.empty(0, int), np.empty(0, int), np.empty(0)
    X = np.array([r.features() for r in records])
    classes = np.array([r.fault_class for r in records], dtype=int)
    indices = np.array([r.perturbed_index for r in records], dtype=int)
    values = np.array([r.true_value for r in records], dtype=float)
    return X, classes, indices, values


def _fmt(x: float) -> str:
    return format(x, ".17g")


def save(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for r in records:
            writer.writerow([_fmt(r.u.u1), _fmt(r.u.u2), *(_fmt(v) for v in r.y.as_array()),
                             r.fault_class, r.perturbed_index, _fmt(r.true_value)])


def load(path) -> list[SampleRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("missing header", 1)
        if tuple(h.strip() for h in header) != HEADER:
            raise ParseError(f"unexpected header {header}", 1)
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(HEADER):
                raise ParseError(f"expected {len(HEADER)} fields, got {len(row)}", lineno)
            try:
                nums = [float(v) for v in row[:7]]
                fault_class = int(row[7])
                index = int(row[8])
                value = float(row[9])
                record = SampleRecord(ControlVector(nums[0], nums[1]), ProcessVector(*nums[2:]),
                                      fault_class, index, value)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if fault_class not in FAULT_CLASSES or not 1 <= index <= N_PARAMETERS \
                    or fault_class != fault_class_of(index):
                raise ParseError(f"inconsistent labels class={fault_class} index={index}", lineno)
            records.append(record)
    return records
