"""Refinement study: rerun a config at n, 2n, ... to a fixed time and report observed orders.

    python scripts/convergence.py configs/csh_abelian.cfg --t 10 --levels 128 256 512
"""
import argparse
from dataclasses import replace

import numpy as np

from cssim import diagnostics as dg
from cssim.algebra import model_algebra
from cssim.config import load_config
from cssim.solver import GridConfig, evolve


def final_record(cfg):
    _, rep = model_algebra(cfg.model)
    final = evolve(cfg, [])
    return dg.sigma_record(0, final, cfg.params, rep, cfg.grid.h)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("--t", type=float, default=None, help="final time (default: config t_end)")
    ap.add_argument("--levels", type=int, nargs="+", default=[128, 256])
    ap.add_argument("--keys", nargs="+", default=["constraint_resid_max", "b_consistency"])
    args = ap.parse_args()
    base = load_config(args.config)
    if base.model == "csd_abelian" and "dirac_resid_max" not in args.keys:
        args.keys.append("dirac_resid_max")
    rows = []
    for n in args.levels:
        cfg = replace(base, grid=GridConfig(n, base.grid.half_width), hyperboloid=replace(base.hyperboloid, taus=()))
        if args.t is not None:
            cfg = replace(cfg, time=replace(cfg.time, t_end=args.t))
        rec = final_record(cfg)
        rows.append(rec)
        print(f"n={n:5d} h={cfg.grid.h:.4g} " + " ".join(f"{k}={rec[k]:.3e}" for k in args.keys), flush=True)
    for (n0, r0), (n1, r1) in zip(zip(args.levels, rows), zip(args.levels[1:], rows[1:])):
        p = {k: np.log(r0[k] / r1[k]) / np.log(n1 / n0) for k in args.keys}
        print(f"order {n0}->{n1}: " + " ".join(f"{k}={v:.2f}" for k, v in p.items()))


if __name__ == "__main__":
    main()
