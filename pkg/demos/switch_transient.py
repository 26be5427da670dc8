"""What happens to each filtered-x variant when the secondary path changes.

The adaptive filter keeps its weights across the switch.  FxAP adapts on
the measured error, which stays small because the weights still match
the plant.  The modified variants rebuild their error from a filtered
regressor; right after the switch that regressor still holds samples
filtered through the old path, so their MSD briefly jumps before they
re-converge.

    python demos/switch_transient.py
"""

import argparse

import numpy as np

from mfxap import AlgorithmConfig, ExperimentSpec, Segment, SegmentSchedule, SparsityClass, VariantSpec
from mfxap import make_path, make_sparse, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=8)
    ap.add_argument("--switch", type=int, default=3000)
    args = ap.parse_args()

    length = 64
    schedule = SegmentSchedule([
        Segment(0, make_path(SparsityClass("partially-sparse"), length, seed=11)),
        Segment(args.switch, make_path(SparsityClass("non-sparse"), length, seed=11)),
    ], 2 * args.switch)
    variants = [VariantSpec(name, AlgorithmConfig(name, 4, 0.1)) for name in ("FxAP", "MFxAP", "RZA-MFxAP")]
    spec = ExperimentSpec(length, make_sparse(length), schedule, variants,
                          trials=args.trials, base_seed=3, snr_db=30.0, decimation=10)
    result = run_experiment(spec)

    b = args.switch // spec.decimation
    window = np.arange(b - 5, b + 60, 5)
    print("iteration " + " ".join(f"{label:>10s}" for label in result.curves))
    for i in window:
        row = " ".join(f"{c.values[i]:10.2f}" for c in result.curves.values())
        flag = "  <- switch" if i == b else ""
        print(f"{i * spec.decimation:9d} {row}{flag}")
    print()
    print(result.summary().table())


if __name__ == "__main__":
    main()
