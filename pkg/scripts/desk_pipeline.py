"""Generate the desk-scale database, train, and report timings and held-out metrics.

Usage: python3 scripts/desk_pipeline.py [--out-dir runs/desk] [--seed 0]
"""

import argparse
import time
from pathlib import Path

from hydrotwin import dataset, pipeline, scenario


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="runs/desk")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    records, dropped = dataset.generate_counted(dataset.SamplingPlan())
    t1 = time.perf_counter()
    train, test = dataset.split(records, 0.8, args.seed)
    classifier = pipeline.train_classifier(train)
    t2 = time.perf_counter()
    estimators = pipeline.train_estimators(train)
    t3 = time.perf_counter()
    pipeline.save_models(out / "models", classifier, estimators)
    dataset.save(test, out / "test.csv")

    loc = scenario.evaluate_localization(classifier, test)
    est = scenario.evaluate_estimation(estimators, classifier, test)
    (out / "localization.csv").write_text(scenario.metrics_text(loc))
    (out / "estimation_summary.csv").write_text(est.summary_text())
    (out / "estimation_errors.csv").write_text(est.samples_text())

    print(f"records {len(records)} (dropped {dropped})")
    print(f"generate {t1 - t0:.1f} s, tree {t2 - t1:.1f} s, estimators {t3 - t2:.1f} s")
    print(scenario.format_matrix(loc.confusion))
    print(scenario.format_matrix(loc.accuracy_matrix, percent=True))
    print(f"overall accuracy {100 * loc.overall_accuracy:.2f}%")
    print(est.summary_text(), end="")


if __name__ == "__main__":
    main()
