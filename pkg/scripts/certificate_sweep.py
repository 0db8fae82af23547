#!/usr/bin/env python3
"""Sweep the instability certificate over dimensions and conformal exponents.

For each (n, k) and exponent family, builds the equatorial-disk scenario in
the unit ball, runs the certificate and prints the traced second variation
alongside the hypothesis margins.  Use --out to keep the JSON reports.

Examples:
  python scripts/certificate_sweep.py
  python scripts/certificate_sweep.py --seed 3 --out results/sweep
"""

import argparse
import json
from pathlib import Path

from fbstab import domain as dm
from fbstab import submanifold as sub
from fbstab import variation as var
from fbstab.fields import ConformalMetric, make_field

FIELDS = {
    "flat": lambda: make_field("zero"),
    "round": lambda: make_field("radial-spherical"),
    "bowl": lambda: make_field("radial-custom", coeffs=[0.0, 0.25]),
}

DIMS = [(4, 2), (5, 2), (5, 3), (6, 3), (6, 2)]


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--curvature-points", type=int, default=4096)
    args = parser.parse_args()

    header = f"{'n':>2} {'k':>2} {'field':>6} {'traced total':>14} {'K min':>9} " \
             f"{'margin g':>9} {'margin g~':>10} verdict"
    print(header)
    print("-" * len(header))
    rows = []
    for n, k in DIMS:
        dom = dm.make_domain("ball", n, radius=1.0)
        imm = sub.make_immersion("equatorial-disk", n=n, k=k)
        for label, mk in FIELDS.items():
            metric = ConformalMetric(mk(), n)
            cfg = var.CertificateConfig(
                seed=args.seed, curvature_points=args.curvature_points
            )
            rep = var.instability_certificate(imm, metric, dom, cfg)
            print(f"{n:>2} {k:>2} {label:>6} {rep.traced_total:>14.6f} "
                  f"{rep.curvature_min:>9.2e} {rep.margin_g:>9.4f} "
                  f"{rep.margin_gtilde:>10.2e} {rep.verdict}")
            doc = rep.to_dict()
            doc["field"] = label
            rows.append(doc)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.json").write_text(json.dumps(rows, sort_keys=True, indent=2))
        print(f"\nwrote {out / 'sweep.json'}")


if __name__ == "__main__":
    main()
