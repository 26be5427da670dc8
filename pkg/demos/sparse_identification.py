"""Zero attraction on a sparse plant, through the Python API.

A 64-tap plant with a single nonzero tap is identified behind a dense
secondary path.  MFxAP, ZA-MFxAP and RZA-MFxAP see the same paired noise
realisations, so differences in the table come from the update rules.

    python demos/sparse_identification.py --trials 10
"""

import argparse

from mfxap import AlgorithmConfig, ExperimentSpec, Segment, SegmentSchedule, SparsityClass, VariantSpec
from mfxap import make_path, make_sparse, run_experiment


def build(trials, iterations, mu):
    length = 64
    secondary = make_path(SparsityClass("non-sparse"), length, seed=11)
    variants = [
        VariantSpec("MFxAP", AlgorithmConfig("MFxAP", 4, mu)),
        VariantSpec("ZA", AlgorithmConfig("ZA-MFxAP", 4, mu, rho=1e-7)),
        VariantSpec("RZA", AlgorithmConfig("RZA-MFxAP", 4, mu, rho_prime=1e-7, epsilon=10.0)),
    ]
    return ExperimentSpec(
        filter_length=length,
        plant=make_sparse(length),
        schedule=SegmentSchedule([Segment(0, secondary)], iterations),
        variants=variants,
        trials=trials,
        base_seed=1,
        snr_db=30.0,
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--iterations", type=int, default=6000)
    ap.add_argument("--mu", type=float, default=0.05)
    args = ap.parse_args()

    result = run_experiment(build(args.trials, args.iterations, args.mu))
    print(result.summary(thresholds=(-20.0, -30.0, -35.0)).table())
    for label, curve in result.curves.items():
        # a coarse text view of the averaged learning curve
        marks = " ".join(f"{v:6.1f}" for v in curve.values[:: len(curve) // 8])
        print(f"{label:6s} {marks}")


if __name__ == "__main__":
    main()
