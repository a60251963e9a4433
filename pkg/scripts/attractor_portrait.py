#!/usr/bin/env python3
"""Phase portrait data for the cubic constant-Jacobian family.

Writes the attractor sample, the three fixed points, and an unstable-manifold
polyline of the origin saddle as CSV files ready for any plotting tool.

    python3 scripts/attractor_portrait.py --a 2.8 --out portrait/
"""
import argparse
import csv
from pathlib import Path

from tangencylab.planar import cubic_henon, find_fixed_points, find_saddle, grow_manifold, iterate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a", type=float, default=2.8)
    ap.add_argument("--b", type=float, default=0.1)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--out", type=Path, default=Path("portrait"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    fam = cubic_henon()
    p = (args.a, args.b)
    orb = iterate(fam, p, (0.1, 0.9), args.steps)
    with open(args.out / "attractor.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        w.writerows(orb.points[1000:].tolist())

    fps = find_fixed_points(fam, p, grid=30)
    with open(args.out / "fixed_points.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "eig_unstable", "eig_stable"])
        for f in fps:
            w.writerow([*f.location, f.eig_unstable, f.eig_stable])

    saddle = find_saddle(fam, p, seed=(0.0, 0.0))
    for sign, name in ((+1, "plus"), (-1, "minus")):
        wu = grow_manifold(fam, p, saddle, "unstable", target_arclength=15.0,
                           branch=sign, direction=(1, 1), clip=5.0)
        with open(args.out / f"unstable_{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            w.writerows(wu.points.tolist())

    print(f"wrote portrait data for a={args.a}, b={args.b} to {args.out}/ "
          f"({len(orb.points)} orbit points, {len(fps)} fixed points)")


if __name__ == "__main__":
    main()
