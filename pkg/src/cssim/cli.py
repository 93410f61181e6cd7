"""Command line entry point: ``cssim run|verify|initdata``."""
from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import model as md
from .algebra import model_algebra
from .config import ConfigError, load_config
from .identities import identity_suite
from .solver import NumericalAbort, RunConfig, build_initial_data, cfl_dt, evolve, write_checkpoint

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_IDENTITY = 0, 2, 3, 4


def thread_count() -> int:
    raw = os.environ.get("CSSIM_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CSSIM_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"CSSIM_THREADS must be a positive integer, got {raw!r}")
    return min(n, os.cpu_count() or 1)


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, columns: list[str], rows: list[dict]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r[c]) for c in columns])


def hyperboloid_rows(results: list[dict]) -> list[dict]:
    rows = []
    for r in results:
        row = {c: r[c] for c in dg.HYP_COLUMNS if c in r}
        row["ode_quantity_axis"], row["ode_quantity_mid"] = r["ode_quantity"][:2]
        rows.append(row)
    return rows


def run(cfg: RunConfig, workers: int = 1, log=print) -> dict:
    """Evolve a validated config and write diagnostics.csv / hyperboloid.csv (and state dumps)."""
    alg, rep = model_algebra(cfg.model)
    grid = cfg.grid.spec()
    out = Path(cfg.output.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    init = build_initial_data(cfg, alg, rep)
    dt = cfl_dt(grid, cfg.time.cfl_safety)
    nsteps = int(np.ceil(cfg.time.t_end / dt - 1e-12))
    monitor = dg.SigmaMonitor(cfg.params, rep, grid.h, cfg.time.diag_every, last_step=nsteps)
    observers = [monitor]
    sampler = None
    if cfg.hyperboloid.taus:
        sampler = dg.HyperboloidSampler(cfg.hyperboloid.taus, cfg.data.radius_R, grid, cfg.params, rep,
                                        cfg.hyperboloid.n_y, cfg.hyperboloid.n_theta, cfg.hyperboloid.stride)
        observers.append(sampler)
    if cfg.output.dump_state:
        write_checkpoint(out / "state_initial.bin", init.state, cfg.model, grid.h)
    log(f"{cfg.model}: n={grid.n} h={grid.h:.6g} steps={nsteps} workers={workers}")
    final = evolve(cfg, observers, workers=workers, init=init)
    g = alg.dim
    write_csv(out / "diagnostics.csv", dg.sigma_columns(cfg.model, g), monitor.records)
    hyp = []
    if sampler is not None:
        sampler.finalize()
        hyp = hyperboloid_rows(sampler.results())
    write_csv(out / "hyperboloid.csv", dg.HYP_COLUMNS, hyp)
    if cfg.output.dump_state:
        write_checkpoint(out / "state_final.bin", final, cfg.model, grid.h)
    last = monitor.records[-1]
    log(f"done: t={final.t:.6g} constraint_resid_max={last['constraint_resid_max']:.3e}")
    return {"records": monitor.records, "hyperboloid": hyp, "state": final}


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    run(cfg, workers=thread_count())
    return EXIT_OK


def cmd_verify(args) -> int:
    algebras = ("u1",) if args.abelian_only else ("u1", "su2", "su3")
    report = identity_suite(args.seed, args.trials, algebras=algebras)
    print(report.format())
    return EXIT_OK if report.passed else EXIT_IDENTITY


def cmd_initdata(args) -> int:
    cfg = load_config(args.config)
    alg, rep = model_algebra(cfg.model)
    h = cfg.grid.h
    init = build_initial_data(cfg, alg, rep)
    s = init.state
    out = Path(cfg.output.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_checkpoint(out / "initdata.bin", s, cfg.model, h,
                     extra={"picard_iterations": init.picard_iterations})
    rmax, rl2, smax = dg.constraint_stats(s, cfg.params, rep, h)
    q = dg.magnetic_charge(s, rep, h)
    q_src = dg.charge_from_source(md.constraint_source(s.phi, s.pi, cfg.params, rep), h)
    print(f"picard_iterations = {init.picard_iterations}")
    print("picard_residuals = " + ", ".join(format(r, ".3e") for r in init.picard_history))
    print(f"constraint_resid_max = {rmax:.17g}")
    print(f"constraint_source_max = {smax:.17g}")
    print("charge = " + ", ".join(format(float(x), ".17g") for x in q))
    print("charge_from_source = " + ", ".join(format(float(x), ".17g") for x in q_src))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cssim", description="Chern-Simons-Higgs/Dirac simulator and identity checker")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="evolve a configuration and write CSV diagnostics")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("verify", help="run the exact identity suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--abelian-only", action="store_true", help="u(1) only; bracket identities are SKIPPED")
    v.set_defaults(func=cmd_verify)
    i = sub.add_parser("initdata", help="solve the constraint and write the initial checkpoint")
    i.add_argument("config")
    i.set_defaults(func=cmd_initdata)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
