"""Plot a CSV written by ``mfxap run`` (needs matplotlib).

    mfxap run src/mfxap/configs/fig3_desk.cfg --out fig3.csv
    python demos/plot_csv.py fig3.csv --config src/mfxap/configs/fig3_desk.cfg -o fig3.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from mfxap.cli import read_csv  # noqa: E402
from mfxap.config import load_spec  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    ap.add_argument("--config", help="draw the segment boundaries of this config")
    ap.add_argument("-o", "--out", default="msd.png")
    args = ap.parse_args()

    curves, _ = read_csv(args.csv)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for label, curve in curves.items():
        ax.plot(curve.iterations, curve.values, lw=1, label=label)
    if args.config:
        for b in load_spec(args.config).schedule.starts[1:]:
            ax.axvline(b, color="0.6", ls="--", lw=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("normalized MSD (dB)")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
