"""Run the single-fault campaign over several seeds with a trained model bundle.

Usage: python3 scripts/campaign.py --models runs/desk/models [--events 50] [--seeds 0 1 2]
"""

import argparse

from hydrotwin import pipeline, scenario
from hydrotwin.fddcore import TwinState
from hydrotwin.hydronet import NOMINAL_THETA


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--models", required=True)
    parser.add_argument("--events", type=int, default=50)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    args = parser.parse_args()
    classifier, estimators = pipeline.load_models(args.models)

    print("seed,events,detected,converged,rate,max_rel_error")
    for seed in args.seeds:
        spec = scenario.campaign_spec(args.events, seed)
        _, m = scenario.run_scenario(spec, TwinState(NOMINAL_THETA, classifier, estimators))
        errors = [e for errs in m.estimation_errors.values() for e in errs]
        worst = max(errors) if errors else float("nan")
        print(f"{seed},{m.n_events},{m.n_detected},{m.n_converged},{m.convergence_rate:.3f},{worst:.4f}")


if __name__ == "__main__":
    main()
