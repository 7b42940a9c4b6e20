"""Command-line interface.

Subcommands: simulate, manifold, resonance, compare, scaling, verify.  Every
command reads a TOML config, writes CSV files plus a run manifest into the
output directory, renders companion PNG figures (disable with --no-plot),
and prints a short human-readable summary.  Runs are deterministic given the
config and seed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, acceptance, report
from .config import LoadedConfig, load_config
from .dynamics import FlowState, integrate, trajectory_to_csv
from .errors import SlowManifoldError
from .experiments import (compare_manifolds, distance_to_critical, scaling_study,
                          slow_subsystem_error)
from .lyapunov_perron import LPOptions, lp_graph
from .manifolds import ManifoldGraph, resonance_set
from .output import write_manifest, write_rows
from .sampling import slow_field_sample
from .spectral import FourierField


def _common(sub: argparse.ArgumentParser, config_required: bool = True) -> None:
    sub.add_argument("--config", required=config_required, help="TOML config file")
    sub.add_argument("--seed", type=int, default=None, help="override experiment seed")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--jobs", type=int, default=1, help="worker threads over grid points")
    sub.add_argument("--plot", dest="plot", action="store_true", default=True)
    sub.add_argument("--no-plot", dest="plot", action="store_false")


def _setup(args) -> tuple[LoadedConfig, int, Path]:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.experiment.get("seed", 0))
    out = Path(args.out or cfg.experiment.get("out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return cfg, seed, out


def _lp_options(section: dict) -> LPOptions:
    lp = LPOptions()
    for key in ("tol", "quad_theta", "tail_tol", "norm_budget"):
        if key in section:
            lp = replace(lp, **{key: float(section[key])})
    if "k_ref" in section:
        lp = replace(lp, k_ref=int(section["k_ref"]))
    return lp


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg, seed, out = _setup(args)
    sec = cfg.experiment.get("simulate", {})
    split = cfg.require_split()
    system = cfg.system
    n = int(sec.get("n", 1))
    amp = float(sec.get("amplitude", 0.5))
    v0S = slow_field_sample(seed, split.k0, n, 0, norm=amp)
    if bool(sec.get("on_manifold", True)):
        graph = ManifoldGraph.galerkin_explicit(system.epsilon, split.k0)
        u0, _ = graph.evaluate(v0S)
        u0 = u0.with_resolution(system.resolution)
    else:
        u0 = FourierField.zeros(system.resolution, real=True)
    state = FlowState(0.0, u0, v0S.with_resolution(system.resolution))
    traj = integrate(system, state, float(sec.get("dt", 1e-3)),
                     float(sec.get("t_end", 1.0)),
                     variant=sec.get("variant", "full"), split=split,
                     scheme=sec.get("scheme", "etd4"),
                     stride=int(sec.get("stride", 10)))
    trajectory_to_csv(traj, out / "trajectory.csv")
    files = ["trajectory.csv"]
    if bool(sec.get("compare_reduced", False)):
        rows = slow_subsystem_error(
            system, split, u0=u0, v0=v0S.with_resolution(system.resolution),
            t_end=float(sec.get("t_end", 1.0)), dt=float(sec.get("dt", 1e-3)),
            n=n, stride=int(sec.get("stride", 10)),
            scheme=sec.get("scheme", "etd4"))
        write_rows(out / "slow_error.csv", rows[0].HEADER,
                   [r.astuple() for r in rows])
        files.append("slow_error.csv")
        if args.plot:
            report.plot_slow_error(rows, out / "slow_error.png")
    if args.plot:
        report.plot_trajectory(traj, out / "trajectory.png")
    write_manifest(out, subcommand="simulate", config_sha256=cfg.sha256,
                   seed=seed, version=__version__,
                   counts={"snapshots": len(traj)})
    print(f"simulate: {len(traj)} snapshots -> {', '.join(files)} in {out}")
    return 0


def cmd_manifold(args) -> int:
    cfg, seed, out = _setup(args)
    sec = cfg.experiment.get("manifold", {})
    split = cfg.require_split()
    system = cfg.system
    n = int(sec.get("n", 1))
    kinds = sec.get("kinds", ["critical", "galerkin_explicit", "galerkin_lp", "direct_lp"])
    lp = _lp_options(sec)
    graphs = {}
    for kind in kinds:
        if kind == "critical":
            graphs[kind] = ManifoldGraph.critical_solver(system)
        elif kind == "galerkin_explicit":
            graphs[kind] = ManifoldGraph.galerkin_explicit(system.epsilon, split.k0)
        elif kind in ("galerkin_lp", "direct_lp"):
            graphs[kind] = lp_graph(kind.split("_")[0], system, split, lp, n=n)
        else:
            raise SlowManifoldError(f"unknown manifold kind {kind!r}")
    rows = []
    for i in range(int(sec.get("samples", 3))):
        v0S = slow_field_sample(seed, split.k0, n, i, norm=float(sec.get("amplitude", 1.0)))
        for kind, graph in graphs.items():
            u, vF = graph.evaluate(v0S)
            for k in u.modes:
                z = u.get(int(k))
                rows.append((kind, i, "u", int(k), z.real, z.imag))
            for k in vF.modes:
                z = vF.get(int(k))
                if z != 0:
                    rows.append((kind, i, "v_F", int(k), z.real, z.imag))
    write_rows(out / "manifold.csv",
               ("kind", "sample", "component", "mode", "re", "im"), rows)
    write_manifest(out, subcommand="manifold", config_sha256=cfg.sha256,
                   seed=seed, version=__version__, counts={"rows": len(rows)})
    print(f"manifold: {len(rows)} coefficient rows -> manifold.csv in {out}")
    return 0


def cmd_resonance(args) -> int:
    if args.config:
        cfg, seed, out = _setup(args)
    else:
        cfg, seed, out = None, 0, Path(args.out or "out")
        out.mkdir(parents=True, exist_ok=True)
    k0 = args.k0
    if k0 is None and cfg is not None and cfg.split is not None:
        k0 = cfg.split.k0
    if k0 is None:
        print("error: category=ConfigError need --k0 or a [split] table", file=sys.stderr)
        return 1
    rset = resonance_set(int(k0))
    rset.to_csv(out / "resonance.csv")
    if args.plot and len(rset.entries):
        report.plot_resonance(rset, out / "resonance.png")
    write_manifest(out, subcommand="resonance",
                   config_sha256=cfg.sha256 if cfg else "", seed=seed,
                   version=__version__, counts={"values": len(rset.entries)})
    print(f"resonance: k0={k0}, {len(rset.entries)} epsilon values -> resonance.csv in {out}")
    return 0


def cmd_compare(args) -> int:
    cfg, seed, out = _setup(args)
    sec = cfg.experiment.get("compare", {})
    lp = _lp_options(sec)
    rows = compare_manifolds(
        cfg.system, m=int(sec.get("m", 1)), n=int(sec.get("n", 1)),
        epsilons=[float(e) for e in sec.get("epsilons", [cfg.system.epsilon])],
        k0s=[int(k) for k in sec.get("k0s", [1, 2, 3])],
        samples=int(args.samples if args.samples is not None
                    else sec.get("samples", 8)), seed=seed,
        sample_norm=float(sec.get("sample_norm", 1.0)), lp=lp,
        k_ref_factor=sec.get("k_ref_factor"), jobs=args.jobs)
    write_rows(out / "compare.csv", rows[0].HEADER, [r.astuple() for r in rows])
    dsec = cfg.experiment.get("distance", {})
    drows = distance_to_critical(
        cfg.system, n=int(dsec.get("n", 1)),
        epsilons=[float(e) for e in dsec.get("epsilons", sec.get("epsilons", [cfg.system.epsilon]))],
        k0s=[int(k) for k in dsec.get("k0s", sec.get("k0s", [1, 2]))],
        samples=int(dsec.get("samples", 6)), seed=seed, lp=lp, jobs=args.jobs)
    write_rows(out / "distance.csv", drows[0].HEADER, [r.astuple() for r in drows])
    if args.plot:
        report.plot_compare(rows, out / "compare.png")
        report.plot_distance(drows, out / "distance.png")
    n_ok = sum(1 for r in rows if r.status == "ok")
    n_skip = sum(1 for r in rows if r.status != "ok")
    write_manifest(out, subcommand="compare", config_sha256=cfg.sha256,
                   seed=seed, version=__version__,
                   counts={"ok_rows": n_ok, "skipped_points": n_skip,
                           "distance_rows": len(drows)})
    print(f"compare: {n_ok} ok rows, {n_skip} skipped points -> compare.csv, "
          f"distance.csv in {out}")
    return 0


def cmd_scaling(args) -> int:
    cfg, seed, out = _setup(args)
    sec = cfg.experiment.get("scaling", {})
    lp = _lp_options(sec) if any(k in sec for k in ("tol", "quad_theta", "tail_tol")) \
        else LPOptions(quad_theta=3e-2)
    points, fits = scaling_study(
        cfg.system,
        nm_pairs=[tuple(p) for p in sec.get("nm_pairs", [[1, 1], [2, 1]])],
        k0s=[int(k) for k in sec.get("k0s", [2, 3, 4, 5, 6, 7, 8])],
        epsilons=[float(e) for e in sec.get("epsilons", list(np.geomspace(1e-6, 3e-4, 8)))],
        eps_ratio=float(sec.get("eps_ratio", 0.5)),
        samples=int(args.samples if args.samples is not None
                    else sec.get("samples", 6)), seed=seed, lp=lp, jobs=args.jobs)
    write_rows(out / "scaling_points.csv", points[0].HEADER,
               [p.astuple() for p in points])
    write_rows(out / "scaling_fits.csv", fits[0].HEADER, [f.astuple() for f in fits])
    if args.plot:
        report.plot_scaling(points, fits, out / "scaling.png")
    write_manifest(out, subcommand="scaling", config_sha256=cfg.sha256,
                   seed=seed, version=__version__,
                   counts={"points": len(points), "fits": len(fits)})
    for f in fits:
        print(f"scaling {f.sweep} n={f.n} m={f.m}: measured slope {f.slope:+.3f} "
              f"[{f.ci_low:+.3f}, {f.ci_high:+.3f}], bound-terms slope {f.slope_bound:+.3f}")
    return 0


def cmd_verify(args) -> int:
    cfg, seed, out = _setup(args)
    results = acceptance.run_all(cfg)
    write_rows(out / "acceptance.csv", ("criterion", "name", "passed", "detail"),
               [(r.cid, r.name, r.passed, r.detail) for r in results])
    write_manifest(out, subcommand="verify", config_sha256=cfg.sha256,
                   seed=seed, version=__version__,
                   counts={"passed": sum(r.passed for r in results),
                           "total": len(results)})
    n_pass = sum(r.passed for r in results)
    print(f"verify: {n_pass}/{len(results)} criteria passed -> acceptance.csv in {out}")
    return 0 if n_pass == len(results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="slowmanifold",
        description="Slow manifolds of fast-slow PDEs on the torus: direct "
                    "Lyapunov-Perron and Galerkin constructions, compared.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = p.add_subparsers(dest="command", required=True)

    s = subs.add_parser("simulate", help="integrate the system and reductions")
    _common(s)
    s.set_defaults(fn=cmd_simulate)

    s = subs.add_parser("manifold", help="construct and evaluate manifold graphs")
    _common(s)
    s.set_defaults(fn=cmd_manifold)

    s = subs.add_parser("resonance", help="enumerate the resonance set")
    _common(s, config_required=False)
    s.add_argument("--k0", type=int, default=None, help="mode cutoff")
    s.set_defaults(fn=cmd_resonance)

    s = subs.add_parser("compare", help="direct-vs-Galerkin comparison sweep")
    _common(s)
    s.add_argument("--samples", type=int, default=None,
                   help="override [experiment.compare] samples")
    s.set_defaults(fn=cmd_compare)

    s = subs.add_parser("scaling", help="scaling-exponent fits")
    _common(s)
    s.add_argument("--samples", type=int, default=None,
                   help="override [experiment.scaling] samples")
    s.set_defaults(fn=cmd_scaling)

    s = subs.add_parser("verify", help="run the acceptance suite")
    _common(s)
    s.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SlowManifoldError as exc:
        print(f"error: category={exc.category} {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
