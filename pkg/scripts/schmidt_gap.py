"""Scan the operator-Schmidt gap of the two-gate left circuit over a grid of angles.

    python3 scripts/schmidt_gap.py --points 5
"""

from __future__ import annotations

import argparse

import numpy as np

from mpukit.obstruction import prop3_schmidt_gap


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=4, help="angles per axis in (0, pi/4)")
    parser.add_argument("--grid", type=int, default=25, help="coarse grid size for the single-gate scan")
    args = parser.parse_args()
    angles = np.linspace(0.0, np.pi / 4, args.points + 2)[1:-1]
    print(f"{'theta_u':>10} {'theta_v':>10} {'closed-form err':>16} {'gap':>12}")
    for tu in angles:
        for tv in angles:
            res = prop3_schmidt_gap(tu, tv, grid_points=args.grid)
            print(f"{tu:10.5f} {tv:10.5f} {res.closed_form_error:16.2e} {res.gap:12.6f}")


if __name__ == "__main__":
    main()
