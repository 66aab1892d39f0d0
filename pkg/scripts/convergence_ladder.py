#!/usr/bin/env python3
"""Refinement study of the geometric residuals on the reference curved run.

Solves the Euclidean free-boundary problem with corner-compatible sine data
at a ladder of resolutions and tabulates each check's residual together with
the observed convergence order between levels.

Usage:
    python scripts/convergence_ladder.py --levels 3 --base 32 --out ladder.csv
"""

import argparse
import csv
import math
import sys
import time

import anisograph.verify as V
from anisograph import EllipticIntegrand, HalfDomain, build_mesh, compute_geometry, solve
from anisograph.boundary_data import evaluate_data_spec

DATA_SPEC = {"type": "sine", "amplitude": 0.25, "kx": 2.0, "ky": math.pi,
             "phase": math.pi / 2}
CHECKS = [
    V.check_boundary_tangency,
    V.check_wall_condition,
    V.check_interior_minimality,
    V.check_wall_principal_direction,
    V.check_first_variation,
    V.check_subharmonicity,
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--base", type=int, default=32, help="cells across at level 0")
    ap.add_argument("--out", default="ladder.csv")
    args = ap.parse_args(argv)

    integrand = EllipticIntegrand.euclidean(3)
    rows = []
    prev = {}
    for level in range(args.levels):
        res = 1.0 / (args.base * 2 ** level)
        t0 = time.perf_counter()
        mesh = build_mesh(HalfDomain(2, depth=1.0, width=0.5, resolution=res))
        data = evaluate_data_spec(DATA_SPEC, mesh.vertices)
        u, rep = solve(integrand, mesh, data)
        if not rep.converged:
            print(f"level {level}: solver did not converge", file=sys.stderr)
            return 3
        geom = compute_geometry(integrand, u)
        row = {"h": mesh.h, "iterations": rep.iterations,
               "seconds": round(time.perf_counter() - t0, 2)}
        for check in CHECKS:
            report = check(geom)
            row[report.check_name] = report.worst_residual
            key = f"{report.check_name}_rate"
            if prev.get(report.check_name, 0.0) > 0 and report.worst_residual > 0:
                row[key] = math.log2(prev[report.check_name] / report.worst_residual)
            else:
                row[key] = ""
            prev[report.check_name] = report.worst_residual
        rows.append(row)
        print(f"h=1/{round(1/mesh.h)}: " + " ".join(
            f"{k}={v:.3e}" for k, v in row.items()
            if not k.endswith("_rate") and k not in ("h", "iterations", "seconds")))

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
