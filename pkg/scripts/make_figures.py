#!/usr/bin/env python3
"""Render documentation SVGs: the triangle domain with its interface at
criticality, the same coupling field at the near-critical threshold, and a
pivotal-sweep disc overlay.  Output lands in figures/ (created on demand).

Usage: python scripts/make_figures.py [--n 64] [--seed 7] [--out figures]
"""

import argparse
from pathlib import Path

from nearcrit import build_domain, coloring_at, explore, sample_field
from nearcrit.estimators import estimate_pstar
from nearcrit.lattice import Disc, SubTriangle
from nearcrit.render import render_svg


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default="figures")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dom = build_domain(args.n)
    fld = sample_field(dom, args.seed, 0)

    crit = coloring_at(fld, 0.5)
    render_svg(dom, crit, explore(dom, crit), out=str(out / "interface_critical.svg"))

    pstar = estimate_pstar(args.n, 0.1, 2000, 0.005, args.seed).value
    near = coloring_at(fld, pstar)
    render_svg(dom, near, explore(dom, near),
               out=str(out / "interface_near_critical.svg"))

    render_svg(dom, crit, explore(dom, crit),
               regions=[Disc(0.05, 0.30, 0.03),
                        SubTriangle(-0.125, 0.0, 0.25)],
               out=str(out / "interface_with_regions.svg"))
    print(f"wrote 3 SVGs to {out}/ (near-critical threshold {pstar:.5f}); "
          "the same uniforms drive both colorings, so the two interfaces "
          "form a monotone pair")


if __name__ == "__main__":
    main()
