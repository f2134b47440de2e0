import numpy as np
import pytest
from hypothesis import settings

from hydrotwin import dataset, pipeline
from hydrotwin.fddcore import TwinState
from hydrotwin.hydronet import NOMINAL_THETA

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(scope="session")
def database():
    return dataset.generate(dataset.SamplingPlan())


@pytest.fixture(scope="session")
def split_records(database):
    return dataset.split(database, 0.8, seed=0)


@pytest.fixture(scope="session")
def trained(split_records):
    train, _ = split_records
    classifier = pipeline.train_classifier(train)
    estimators = pipeline.train_estimators(train)
    return classifier, estimators


@pytest.fixture(scope="session")
def model_dir(trained, tmp_path_factory):
    out = tmp_path_factory.mktemp("models")
    pipeline.save_models(out, *trained)
    return out


@pytest.fixture
def twin(trained):
    classifier, estimators = trained
    return TwinState(NOMINAL_THETA, classifier, estimators)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, passed, detail)``."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines):
            terminalreporter.write_line(line)
