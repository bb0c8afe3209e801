"""Command-line driver.

Subcommands: profile, simulate, limit, sweep, generation, fhn.  Every
command accepts ``--config FILE`` (flat ``key = value`` text; unknown keys
rejected) and ``--out DIR``.  Exit codes: 0 success, 1 configuration error,
2 when any per-eps record aborted.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .config import ConfigError, ExperimentConfig, canonical_text, load_config
from .fileio import (
    ensure_dir,
    read_curve_csv,
    write_curves_csv,
    write_pgm,
    write_profile_csv,
    write_theta_csv,
)
from .harness import SweepReport, run_fhn_sweep, run_generation_study, run_validity_sweep
from .interface import circle_curve, extract_level_set
from .nonlinearity import mobility_constant
from .pde import ACParams, energy, radial_initial_data, simulate_ac, stable_dt
from .profile import solve_profile
from .sharp import evolve_curve, evolve_radial, limit_forcing_from


def _write_report(report: SweepReport, out: str) -> None:
    ensure_dir(out)
    with open(os.path.join(out, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    with open(os.path.join(out, "fit.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.fit_text())
    with open(os.path.join(out, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(canonical_text(report.config))
    for rec in report.records:
        if not rec.artifacts:
            continue
        sub = ensure_dir(os.path.join(out, f"eps_{rec.eps:g}"))
        if "field" in rec.artifacts:
            write_pgm(rec.artifacts["field"], os.path.join(sub, "u_final.pgm"))
        if "v_field" in rec.artifacts:
            write_pgm(rec.artifacts["v_field"], os.path.join(sub, "v_final.pgm"))
        if "curve_eps" in rec.artifacts:
            write_curves_csv(rec.artifacts["curve_eps"], os.path.join(sub, "curve_eps.csv"))
        if "curve_ref" in rec.artifacts:
            write_curves_csv(rec.artifacts["curve_ref"], os.path.join(sub, "curve_ref.csv"))
        if "theta" in rec.artifacts:
            s, th = rec.artifacts["theta"]
            write_theta_csv(s, th, os.path.join(sub, "theta.csv"))
        if rec.series:
            with open(os.path.join(sub, "observations.csv"), "w", encoding="utf-8") as fh:
                fh.write("t,hausdorff,layer_error,theta_sup,transversality\n")
                for row in rec.series:
                    fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _cmd_profile(cfg: ExperimentConfig, out: str) -> int:
    nl = cfg.make_nonlinearity()
    prof = solve_profile(nl, cfg.z_max, cfg.n_profile)
    ensure_dir(out)
    write_profile_csv(prof, os.path.join(out, "profile.csv"))
    print(f"wrote {os.path.join(out, 'profile.csv')} "
          f"({cfg.n_profile} samples, tail gap {prof.tail_gap:.3e})")
    return 0


def _cmd_simulate(cfg: ExperimentConfig, out: str) -> int:
    nl = cfg.make_nonlinearity()
    forcing = cfg.make_forcing()
    h = cfg.eps / cfg.grid_divisor
    u0 = radial_initial_data(cfg.domain, h, cfg.R0, cfg.steepness, nl)
    params = ACParams(
        eps=cfg.eps, nl=nl, forcing=forcing,
        dt=stable_dt(u0.h, cfg.eps, nl, cfg.dt_safety),
    )
    times = cfg.observer_times or tuple(
        np.linspace(cfg.t_end / cfg.n_observers, cfg.t_end, cfg.n_observers)
    )
    ensure_dir(out)
    rows = []

    def observe(t, field_):
        k = len(rows)
        write_pgm(field_, os.path.join(out, f"u_{k:04d}.pgm"))
        rows.append(
            (t, energy(field_, cfg.eps, nl),
             float(field_.values.min()), float(field_.values.max()))
        )

    final = simulate_ac(u0, params, cfg.t_end, [(t, observe) for t in times])
    write_pgm(final, os.path.join(out, "u_final.pgm"))
    curves = extract_level_set(final, nl.zeros[1])
    if curves:
        write_curves_csv(curves, os.path.join(out, "level_set_final.csv"))
    with open(os.path.join(out, "observers.csv"), "w", encoding="utf-8") as fh:
        fh.write("t,energy,u_min,u_max\n")
        for row in rows:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    print(f"simulated to t = {cfg.t_end:g} on a {u0.nx}x{u0.ny} grid -> {out}")
    return 0


def _cmd_limit(cfg: ExperimentConfig, out: str) -> int:
    nl = cfg.make_nonlinearity()
    forcing = cfg.make_forcing()
    F = (
        limit_forcing_from(forcing, nl, mobility_constant(nl))
        if forcing is not None
        else None
    )
    ensure_dir(out)
    times = cfg.observer_times or tuple(
        np.linspace(cfg.t_end / 10, cfg.t_end, 10)
    )
    if cfg.curve_file:
        start = read_curve_csv(cfg.curve_file)
        traj = evolve_curve(
            start, F, cfg.t_end, cfg.dt,
            snapshot_times=times, remesh_every=cfg.remesh_every,
        )
        path = os.path.join(out, "trajectory.csv")
        with open(path, "w", encoding="utf-8") as fh:
            for t, c in zip(traj.times, traj.curves):
                fh.write(f"# t = {float(t)!r}\n")
                for x, y in c.points:
                    fh.write(f"{float(x)!r},{float(y)!r}\n")
                fh.write("\n")
        print(f"wrote {path}")
        return 0
    center = (
        0.5 * (cfg.domain[0] + cfg.domain[1]),
        0.5 * (cfg.domain[2] + cfg.domain[3]),
    )
    from .harness import _radial_adapter

    traj = evolve_radial(
        cfg.R0, cfg.N, _radial_adapter(F, center), cfg.t_end, cfg.dt,
        sample_times=times,
    )
    path = os.path.join(out, "radial.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,R\n")
        for t, r in zip(traj.ts, traj.rs):
            fh.write(f"{float(t)!r},{float(r)!r}\n")
    if traj.extinct:
        print(f"extinction inside bracket {traj.extinction_bracket}")
    print(f"wrote {path}")
    return 0


def _run_report(runner, cfg: ExperimentConfig, out: str) -> int:
    report = runner(cfg)
    _write_report(report, out)
    for rec in report.records:
        print(f"eps = {rec.eps:g}: {rec.status}")
    print(f"wrote {os.path.join(out, 'report.csv')}")
    return 2 if report.any_aborted else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sharplab",
        description="Diffuse-interface simulations and their sharp-interface limits",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("profile", "tabulate the layer profile and write (z, U0) CSV"),
        ("simulate", "run one diffuse-interface simulation"),
        ("limit", "solve a limit interface motion (radial ODE or front tracking)"),
        ("sweep", "eps-sweep of the validity statistics"),
        ("generation", "eps-sweep of the layer-generation time"),
        ("fhn", "eps-sweep for the reaction-diffusion system"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="flat key = value config file")
        p.add_argument("--out", default="sharplab_out", help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "profile":
            return _cmd_profile(cfg, args.out)
        if args.command == "simulate":
            return _cmd_simulate(cfg, args.out)
        if args.command == "limit":
            return _cmd_limit(cfg, args.out)
        if args.command == "sweep":
            return _run_report(run_validity_sweep, cfg, args.out)
        if args.command == "generation":
            return _run_report(run_generation_study, cfg, args.out)
        if args.command == "fhn":
            return _run_report(run_fhn_sweep, cfg, args.out)
        raise AssertionError(args.command)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
