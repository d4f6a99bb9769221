import argparse
import os

from data.reports import curve_frame, surface_frame, to_csv
from functionals.gap import delta_surface, gamma_curve
from models import Lomax

P_GRID = [round(0.01 * k, 12) for k in range(1, 100)]
SURFACE_P_GRID = [round(0.05 * k, 12) for k in range(1, 20)]
SURFACE_Z_GRID = [round(0.25 * k, 12) for k in range(0, 25)]

FINITE_MEAN_SHAPES = (6, 7, 8, 9, 11, 12, 13, 14)
INFINITE_MEAN_SHAPES = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
SURFACE_SHAPES = (8, 12)


def _write(frame, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv(frame))
    print(f"Saved {len(frame)} rows to {path}")


def generate(out_dir="figures", threads=None):
    os.makedirs(out_dir, exist_ok=True)
    written = []

    # 1. Gap curves, finite means: Lomax(10,1) against Lomax(a2,1)
    print("Computing gap curves against Lomax(10,1)...")
    for a2 in FINITE_MEAN_SHAPES:
        rows = gamma_curve(Lomax(10), Lomax(a2), P_GRID, threads=threads)
        path = os.path.join(out_dir, f"gap_lomax10_vs_lomax{a2:g}.csv")
        _write(curve_frame(rows), path)
        written.append(path)

    # 2. Gap curves, infinite means: Lomax(0.5,1) against Lomax(a2,1)
    print("Computing gap curves against Lomax(0.5,1)...")
    for a2 in INFINITE_MEAN_SHAPES:
        rows = gamma_curve(Lomax(0.5), Lomax(a2), P_GRID, threads=threads)
        path = os.path.join(out_dir, f"gap_lomax0.5_vs_lomax{a2:g}.csv")
        _write(curve_frame(rows), path)
        written.append(path)

    # 3. Difference surfaces
    print("Computing difference surfaces...")
    for a2 in SURFACE_SHAPES:
        rows = delta_surface(Lomax(10), Lomax(a2), SURFACE_P_GRID, SURFACE_Z_GRID, threads=threads)
        path = os.path.join(out_dir, f"surface_lomax10_vs_lomax{a2:g}.csv")
        _write(surface_frame(rows), path)
        written.append(path)

    return written


def main():
    parser = argparse.ArgumentParser(description="Write the gap-curve and difference-surface data sets")
    parser.add_argument("--out-dir", type=str, default="figures", help="Directory for the CSV files")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (0 = all cores)")
    args = parser.parse_args()

    generate(args.out_dir, threads=args.threads)
    print("Done.")


if __name__ == "__main__":
    main()
