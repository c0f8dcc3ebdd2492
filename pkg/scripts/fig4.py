"""Real ROA, LF and EAC estimates, grid oracle and fault trajectories.

Writes boundaries.csv, grid.csv, per-trajectory CSVs and fig4_bundle.json;
with ``--plot`` also renders a PNG if matplotlib is installed.

    python scripts/fig4.py [--resolution 201] [--out results/fig4] [--plot]
"""

import argparse
import json
import sys
from pathlib import Path

from pllgss.cli import main


def plot(out: Path) -> None:
    import matplotlib.pyplot as plt

    bundle = json.loads((out / "fig4_bundle.json").read_text())
    fig, ax = plt.subplots(figsize=(8, 4.5))
    styles = {"RealROA": "k-", "LFEstimate": "b-", "EACEstimate": "r--"}
    for label, pts in bundle["boundaries"].items():
        d, x = zip(*pts)
        ax.plot(d, x, styles.get(label, "-"), label=label)
    for key, tr in bundle["trajectories"].items():
        ax.plot(tr["delta"], tr["x"], lw=0.8, label=key)
    v = bundle["containment"].get("EACEstimate", {}).get("violations", [])
    if v:
        d, x = zip(*v)
        ax.plot(d, x, "r.", ms=2, label="EAC mistakes")
    lo, hi, xlo, xhi = bundle["window"]
    ax.set(xlim=(lo, hi), ylim=(xlo, xhi), xlabel="delta (rad)", ylabel="x")
    ax.legend(fontsize=7)
    fig.savefig(out / "fig4.png", dpi=150, bbox_inches="tight")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/fig4")
    ap.add_argument("--resolution", type=int, default=201)
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()
    code = main(["roa", "--resolution", str(args.resolution), "--out", args.out])
    if code == 0 and args.plot:
        plot(Path(args.out))
    sys.exit(code)
