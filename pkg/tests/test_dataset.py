from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hydrotwin import dataset
from hydrotwin.config import ConfigError
from hydrotwin.dataset import EmptyPlan, ParseError, SamplingPlan, TooFewSamples, fault_class_of
from hydrotwin.hydronet import NOMINAL_THETA, simulate

SMALL = SamplingPlan(u1_grid=(40.0, 80.0), u2_grid=(10.0, 100.0),
                     multipliers={i: (0.5, 1.5) for i in range(1, 7)})


def test_class_map_merges_pump_parameters():
    assert [fault_class_of(i) for i in range(1, 7)] == [1, 2, 3, 4, 5, 5]
    with pytest.raises(IndexError):
        fault_class_of(7)


def test_default_plan_size(database):
    plan = SamplingPlan()
    assert plan.size() == 14 * 14 * 6 * 12 == 14112
    assert len(database) == plan.size()
    counts = Counter(r.fault_class for r in database)
    assert sorted(counts) == [1, 2, 3, 4, 5]
    assert counts[5] == 2 * counts[1]


def test_records_reproduce_solver_output():
    for r in dataset.generate(SMALL):
        theta = NOMINAL_THETA.with_value(r.perturbed_index, r.true_value)
        assert simulate(r.u, theta) == r.y
        ratio = r.true_value / NOMINAL_THETA.get(r.perturbed_index)
        assert ratio == pytest.approx(0.5) or ratio == pytest.approx(1.5)


def test_generation_order_is_plan_order():
    records = dataset.generate(SMALL)
    keys = [(r.u.u1, r.u.u2, r.perturbed_index) for r in records]
    assert keys == sorted(keys)


def test_plan_validation():
    with pytest.raises(EmptyPlan):
        SamplingPlan(u1_grid=()).validate()
    with pytest.raises(EmptyPlan):
        SamplingPlan(multipliers={i: (0.5,) for i in range(1, 6)}).validate()
    with pytest.raises(ValueError, match="dead-band"):
        SamplingPlan(multipliers={i: (0.99,) for i in range(1, 7)}).validate()
    with pytest.raises(ValueError):
        SamplingPlan(u2_grid=(120.0,)).validate()
    with pytest.raises(ValueError):
        SamplingPlan(multipliers={i: (-0.5,) for i in range(1, 7)}).validate()


def test_plan_file_round_trip(tmp_path):
    path = tmp_path / "plan.cfg"
    path.write_text(SMALL.dump())
    assert SamplingPlan.from_file(path) == SMALL
    path.write_text("u1_grid = 50, 60\nmultipliers = 0.8, 1.2\nmultipliers_6 = 0.5\n")
    plan = SamplingPlan.from_file(path)
    assert plan.u1_grid == (50.0, 60.0)
    assert plan.multipliers[1] == (0.8, 1.2) and plan.multipliers[6] == (0.5,)


@pytest.mark.parametrize("text,line", [("u1_grid = 50\nfoo = 1\n", 2),
                                       ("u1_grid = 50, abc\n", 1),
                                       ("multipliers_9 = 0.5\n", 1)])
def test_plan_file_errors_carry_line(tmp_path, text, line):
    path = tmp_path / "plan.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError) as info:
        SamplingPlan.from_file(path)
    assert info.value.line == line


def test_split_is_stratified_and_deterministic(database):
    train, test = dataset.split(database, 0.8, seed=3)
    again, _ = dataset.split(database, 0.8, seed=3)
    assert train == again
    assert len(train) + len(test) == len(database)
    total = Counter(r.fault_class for r in database)
    in_train = Counter(r.fault_class for r in train)
    for c, n in total.items():
        assert abs(in_train[c] - 0.8 * n) <= 1


@given(st.lists(st.sampled_from([1, 2, 3, 4, 6]), min_size=10, max_size=60),
       st.floats(0.05, 0.95), st.integers(0, 100))
def test_split_partitions_records(indices, fraction, seed):
    records = [dataset.SampleRecord(dataset.ControlVector(50, 50),
                                    simulate(dataset.ControlVector(50, 50), NOMINAL_THETA),
                                    fault_class_of(i), i, float(k + 1))
               for k, i in enumerate(indices)]
    if min(Counter(fault_class_of(i) for i in indices).values()) < 2:
        with pytest.raises(TooFewSamples):
            dataset.split(records, fraction, seed)
        return
    train, test = dataset.split(records, fraction, seed)
    assert sorted(r.true_value for r in train + test) == [float(k + 1) for k in range(len(indices))]
    assert {r.fault_class for r in train} == {r.fault_class for r in test}


def test_split_rejects_bad_fraction():
    with pytest.raises(ValueError):
        dataset.split(dataset.generate(SMALL), 1.0)


def test_save_load_round_trip_is_exact(tmp_path):
    records = dataset.generate(SMALL)
    path = tmp_path / "db.csv"
    dataset.save(records, path)
    assert dataset.load(path) == records
    text = path.read_text()
    dataset.save(dataset.load(path), path)
    assert path.read_text() == text


def test_as_arrays_shapes():
    X, classes, indices, values = dataset.as_arrays(dataset.generate(SMALL))
    n = SMALL.size()
    assert X.shape == (n, 7) and classes.shape == indices.shape == values.shape == (n,)
    assert np.all(classes == np.minimum(indices, 5))


def _relabel(row):
    fields = row.rstrip("\n").split(",")
    fields[7] = "2" if fields[7] != "2" else "3"
    return ",".join(fields) + "\n"


@pytest.mark.parametrize("mutate,line", [
    (lambda lines: ["u1,u2\n"] + lines[1:], 1),
    (lambda lines: lines[:2] + ["1,2,3\n"] + lines[3:], 3),
    (lambda lines: lines[:3] + [_relabel(lines[3])] + lines[4:], 4),
    (lambda lines: lines[:2] + [lines[2].replace(lines[2].split(",")[0], "x", 1)] + lines[3:], 3),
])
def test_load_errors_carry_line(tmp_path, mutate, line):
    path = tmp_path / "db.csv"
    dataset.save(dataset.generate(SMALL), path)
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(mutate(lines)))
    with pytest.raises(ParseError) as info:
        dataset.load(path)
    assert info.value.line == line


def test_load_empty_file(tmp_path):
    path = tmp_path / "db.csv"
    path.write_text("")
    with pytest.raises(ParseError):
        dataset.load(path)


def test_split_seed_changes_membership_not_counts(database):
    a, _ = dataset.split(database, 0.8, seed=0)
    b, _ = dataset.split(database, 0.8, seed=1)
    assert a != b
    assert Counter(r.fault_class for r in a) == Counter(r.fault_class for r in b)
