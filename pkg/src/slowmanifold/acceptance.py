"""The acceptance suite: nine verifiable claims about this implementation.

Each criterion is a function of a shared context built from a config (the
shipped quadratic-example config by default).  Grid points that cannot pass
the timescale gate or whose history integrals diverge are legitimate,
classified skips (the sweeps' skip bookkeeping); runnable points must meet
the stated tolerances.

Checks 1-2 and 7 share one set of Lyapunov-Perron solves, cached on the
context.  Check 3 fits scaling exponents exactly as specified against the
measured graph distance; the structural bound slopes are reported alongside.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .config import LoadedConfig
from .dynamics import (FlowState, attraction_rate, exact_example_solution,
                       integrate, invariance_defect)
from .errors import (ContractionViolated, TailToleranceUnreachable,
                     TimescaleOrderViolated)
from .experiments import _system_at, scaling_study
from .lyapunov_perron import LPOptions, extract_graph, solve_fixed_point
from .manifolds import (ManifoldGraph, critical_manifold_explicit,
                        critical_manifold_solve, galerkin_manifold_explicit,
                        resonance_key_lt, resonance_set, safe_epsilon_bound,
                        safe_epsilon_key)
from .sampling import slow_field_sample
from .spectral import (FourierField, project_fast, project_slow, sobolev_norm,
                       split_for_k0, x_norm, y_norm)
from .system import contraction_constant


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        self.passed = bool(self.passed)  # numpy bools leak in via comparisons

    @property
    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"ACCEPTANCE {self.cid} [{tag}] {self.name}: {self.detail}"


@dataclass
class _PointData:
    status: str  # "ok" or "skipped:<reason>"
    sample_err_galerkin: list = field(default_factory=list)
    sample_lhs: list = field(default_factory=list)
    sample_tail: list = field(default_factory=list)
    bound: float = math.nan
    observed_ratio: float = math.nan


class AcceptanceContext:
    """Shared systems, samples and cached solves for all criteria."""

    C12_EPSILONS = (1e-3, 1e-2)
    C12_K0S = (1, 2, 3, 4)
    C12_SAMPLES = 20
    N = 1  # smoothness level of the oracle checks (m = n = 1)

    def __init__(self, config: LoadedConfig):
        self.config = config
        self.system = config.system
        self.cons = config.system.constants
        exp = config.experiment
        self.seed = int(exp.get("seed", 0))
        comp = exp.get("compare", {})
        self.lp = LPOptions(
            tol=1e-10,
            quad_theta=float(comp.get("quad_theta", 5e-4)),
            tail_tol=1e-9,
        )
        self.k_ref_factor = int(comp.get("k_ref_factor", 2))
        self._c12: Optional[dict] = None
        self._c12_elapsed = math.nan

    # -- criteria 1, 2, 7 share these solves --------------------------------
    def c12_data(self) -> dict:
        if self._c12 is not None:
            return self._c12
        t0 = time.monotonic()
        data: dict[tuple[float, int], _PointData] = {}
        n = self.N
        for eps in self.C12_EPSILONS:
            for k0 in self.C12_K0S:
                split = split_for_k0(k0, self.cons.omega_A)
                sys_pt = _system_at(self.system, eps, k0)
                lp = replace(self.lp, k_ref=self.k_ref_factor * k0)
                try:
                    bound = contraction_constant(sys_pt, split)
                    pd = _PointData("ok", bound=bound)
                    worst_ratio = 0.0
                    for i in range(self.C12_SAMPLES):
                        v0S = slow_field_sample(self.seed, k0, n, i, norm=1.0)
                        trajG, diagG = solve_fixed_point("galerkin", v0S, sys_pt, split, lp, n=n)
                        uG, _ = extract_graph(trajG)
                        trajD, diagD = solve_fixed_point("direct", v0S, sys_pt, split, lp, n=n)
                        uD, vF = extract_graph(trajD)
                        ref = galerkin_manifold_explicit(v0S, eps, k0)
                        errG = sobolev_norm(uG - project_slow(ref, k0).with_resolution(k0), 2 * n)
                        lhs = (x_norm(uD - uG.with_resolution(uD.resolution), n)
                               + y_norm(vF, n))
                        tail = sobolev_norm(project_fast(ref, k0), 2 * n)
                        pd.sample_err_galerkin.append(errG)
                        pd.sample_lhs.append(lhs)
                        pd.sample_tail.append(tail)
                        worst_ratio = max(worst_ratio, diagG["observed_ratio"],
                                          diagD["observed_ratio"])
                    pd.observed_ratio = worst_ratio
                except TimescaleOrderViolated:
                    pd = _PointData("skipped:gate")
                except TailToleranceUnreachable:
                    pd = _PointData("skipped:lp_divergent")
                except ContractionViolated:
                    pd = _PointData("skipped:contraction")
                data[(eps, k0)] = pd
        self._c12 = data
        self._c12_elapsed = time.monotonic() - t0
        return data

    def expected_point_status(self, eps: float, k0: int) -> str:
        """Classify a grid point from the gates alone (no solves)."""
        split = split_for_k0(k0, self.cons.omega_A)
        sys_pt = _system_at(self.system, eps, k0)
        try:
            contraction_constant(sys_pt, split)
        except TimescaleOrderViolated:
            return "skipped:gate"
        if eps >= safe_epsilon_bound(k0):
            return "skipped:lp_divergent"
        return "ok"


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def criterion_1(ctx: AcceptanceContext) -> CriterionResult:
    """LP Galerkin graph matches the explicit manifold formula to 1e-6."""
    data = ctx.c12_data()
    tol = 1e-6
    worst = 0.0
    ran, mismatch, wrong_skips = 0, [], []
    for (eps, k0), pd in data.items():
        expected = ctx.expected_point_status(eps, k0)
        if pd.status != expected:
            wrong_skips.append(((eps, k0), pd.status, expected))
        if pd.status == "ok":
            ran += 1
            err = max(pd.sample_err_galerkin)
            worst = max(worst, err)
            if err > tol:
                mismatch.append(((eps, k0), err))
    ok = (not mismatch and not wrong_skips and ran >= 1
          and ctx._c12_elapsed < 60.0)
    skipped = {pt: pd.status for pt, pd in data.items() if pd.status != "ok"}
    detail = (f"{ran} runnable points x {ctx.C12_SAMPLES} samples, worst "
              f"|h_G^LP - formula|_(H^2) = {worst:.2e} (tol {tol:g}); skipped "
              f"{sorted(skipped.items())}; runtime {ctx._c12_elapsed:.1f}s")
    if mismatch:
        detail += f"; MISMATCH at {mismatch}"
    if wrong_skips:
        detail += f"; UNEXPECTED STATUS {wrong_skips}"
    return CriterionResult(1, "oracle equivalence (manifolds)", ok, detail)


def criterion_2(ctx: AcceptanceContext) -> CriterionResult:
    """compare_manifolds left side equals the analytic fast-mode tail."""
    data = ctx.c12_data()
    tol = 1e-6
    worst = 0.0
    for pd in data.values():
        if pd.status != "ok":
            continue
        for lhs, tail in zip(pd.sample_lhs, pd.sample_tail):
            worst = max(worst, abs(lhs - tail))
    ok = worst < tol and any(pd.status == "ok" for pd in data.values())
    return CriterionResult(
        2, "oracle equivalence (tail formula)", ok,
        f"worst |lhs - analytic tail| = {worst:.2e} (tol {tol:g})")


def criterion_3(ctx: AcceptanceContext) -> CriterionResult:
    """Scaling exponents of the measured distance match the quoted rates.

    k0 slope target -(2(n-m)+1) within 0.5 and epsilon slope target
    n-m+1/2 within 0.25, for n-m in {0, 1, 2}.
    """
    t0 = time.monotonic()
    exp = ctx.config.experiment.get("scaling", {})
    nm_pairs = [tuple(p) for p in exp.get("nm_pairs", [[1, 1], [2, 1], [3, 1]])]
    k0s = exp.get("k0s", [2, 3, 4, 5, 6, 7, 8])
    epsilons = exp.get("epsilons",
                       list(np.geomspace(1e-6, 3e-4, 8)))
    lp = LPOptions(quad_theta=float(exp.get("quad_theta", 3e-2)), tail_tol=1e-9)
    points, fits = scaling_study(
        ctx.system, nm_pairs=nm_pairs, k0s=k0s, epsilons=epsilons,
        eps_ratio=float(exp.get("eps_ratio", 0.5)),
        samples=int(exp.get("samples", 6)), seed=ctx.seed, lp=lp)
    elapsed = time.monotonic() - t0
    failures, lines = [], []
    for f in fits:
        nm = f.n - f.m
        if f.sweep == "k0":
            target, tol = -(2 * nm + 1), 0.5
        elif f.sweep == "epsilon":
            target, tol = nm + 0.5, 0.25
        else:  # the v_norm probe is a diagnostic, not a criterion target
            continue
        ok = abs(f.slope - target) <= tol
        lines.append(f"{f.sweep} n-m={nm}: measured {f.slope:+.2f} "
                     f"(bound-terms fit {f.slope_bound:+.2f}, target {target:+.1f}+-{tol})")
        if not ok:
            failures.append(f"{f.sweep} n-m={nm}")
    ok = not failures and elapsed < 300.0
    detail = "; ".join(lines) + f"; runtime {elapsed:.0f}s"
    if failures:
        detail += ("; measured-distance slopes exceed the quoted bound rates "
                   "(see decisions ledger)")
    return CriterionResult(3, "scaling exponents", ok, detail)


def criterion_4(ctx: AcceptanceContext) -> CriterionResult:
    """Resonance sets: exact minimum, 1/2 membership, safe-interval disjointness."""
    problems = []
    for k0 in range(0, 7):
        rset = resonance_set(k0)
        if not np.isfinite(rset.values()).all() or len(rset.entries) == 0:
            problems.append(f"k0={k0}: empty/nonfinite")
            continue
        min_key = rset.min_entry().key
        if min_key != safe_epsilon_key(k0):
            problems.append(f"k0={k0}: min key {min_key} != {safe_epsilon_key(k0)}")
        if not any(e.key == (0, 0) for e in rset.entries):
            problems.append(f"k0={k0}: missing 1/2")
        if any(resonance_key_lt(e.key, safe_epsilon_key(k0)) for e in rset.entries):
            problems.append(f"k0={k0}: entry below the safe bound")
        if abs(rset.min_entry().epsilon - safe_epsilon_bound(k0)) > 1e-15:
            problems.append(f"k0={k0}: float min differs from safe bound")
    ok = not problems
    detail = ("k0 <= 6 enumerated; minima equal 1/(2+8 pi^2 k0^2) by exact "
              "key comparison; 1/2 present; no entry below the safe bound"
              if ok else "; ".join(problems))
    return CriterionResult(4, "resonance set", ok, detail)


def criterion_5(ctx: AcceptanceContext) -> CriterionResult:
    """On-manifold launches stay on the graph: sup defect < 1e-7 on [0, 5]."""
    eps, k0, dt, tol = 1e-2, 2, 1e-3, 1e-7
    split = split_for_k0(k0, ctx.cons.omega_A)
    sys_pt = _system_at(ctx.system, eps, k0)
    graph = ManifoldGraph.galerkin_explicit(eps, k0)
    worst = 0.0
    for i in range(3):
        v0S = slow_field_sample(ctx.seed, k0, ctx.N, i, norm=1.0)
        d = invariance_defect(sys_pt, split, graph, v0S, t_end=5.0, dt=dt,
                              n=ctx.N, scheme="etd4", stride=100)
        worst = max(worst, d)
    ok = worst < tol
    return CriterionResult(
        5, "invariance", ok,
        f"sup defect {worst:.2e} over t in [0,5], dt={dt:g}, eps={eps:g}, "
        f"k0={k0} (tol {tol:g})")


def criterion_6(ctx: AcceptanceContext) -> CriterionResult:
    """Off-manifold offsets decay at the per-mode fast rate, within 10%."""
    k0 = 2
    split = split_for_k0(k0, ctx.cons.omega_A)
    worst_rel, lines = 0.0, []
    for eps in (1e-2, 1e-3):
        sys_pt = _system_at(ctx.system, eps, k0)
        graph = ManifoldGraph.galerkin_explicit(eps, k0)
        v0S = slow_field_sample(ctx.seed, k0, ctx.N, 0, norm=0.5)
        for k in (0, 1):
            target = (1.0 + 4.0 * math.pi**2 * k * k) / eps
            dt = 0.25 / target
            offset = FourierField.from_modes({k: 0.05, -k: 0.05}, 2 * k0, real=True)
            fit = attraction_rate(sys_pt, split, graph, v0S, offset,
                                  t_end=100 * dt, dt=dt, n=ctx.N)
            rel = abs(fit.rate - target) / target
            worst_rel = max(worst_rel, rel)
            lines.append(f"eps={eps:g} k={k}: rate {fit.rate:.5g} vs {target:.5g}")
    ok = worst_rel < 0.10
    return CriterionResult(
        6, "attraction", ok,
        f"worst relative rate error {worst_rel:.2e} (tol 0.10); " + "; ".join(lines))


def criterion_7(ctx: AcceptanceContext) -> CriterionResult:
    """Contraction bookkeeping: observed ratios below the estimate; gated
    points refuse with TimescaleOrderViolated."""
    data = ctx.c12_data()
    problems = []
    ran = 0
    for (eps, k0), pd in data.items():
        if pd.status != "ok":
            continue
        ran += 1
        if not (pd.bound < 1.0):
            problems.append(f"({eps:g},{k0}): bound {pd.bound:.3g} >= 1")
        if not (pd.observed_ratio <= pd.bound + 0.05):
            problems.append(
                f"({eps:g},{k0}): observed {pd.observed_ratio:.3g} > bound+0.05")
    # a nontrivial iteration: small slow-coupling g, ratios must stay under
    # the bound.  Quadratic g grows backward in time, so the data amplitude
    # and horizon are kept small enough for the finite-horizon map to
    # contract (the theory's working-ball restriction).
    sys_g = replace(ctx.system, epsilon=1e-3,
                    g=type(ctx.system.g)(((0.05, 0, 2),)),
                    constants=ctx.cons.with_updates(L_g=0.02))
    split1 = split_for_k0(1, ctx.cons.omega_A)
    bound_g = contraction_constant(sys_g, split1)
    v0S = slow_field_sample(ctx.seed, 1, ctx.N, 0, norm=0.02)
    _, diag = solve_fixed_point(
        "direct", v0S, sys_g, split1,
        replace(ctx.lp, k_ref=4, tol=1e-10, tail_tol=1e-4, quad_theta=1e-3),
        n=ctx.N)
    if not (diag["observed_ratio"] <= bound_g + 0.05):
        problems.append(
            f"g!=0 solve: observed {diag['observed_ratio']:.3g} > {bound_g:.3g}+0.05")
    # gate-failing points must refuse
    refused = 0
    for (eps, k0) in ((1e-2, 1), (1e-2, 2)):
        split = split_for_k0(k0, ctx.cons.omega_A)
        sys_pt = _system_at(ctx.system, eps, k0)
        try:
            solve_fixed_point("galerkin",
                              slow_field_sample(ctx.seed, k0, ctx.N, 0),
                              sys_pt, split, ctx.lp, n=ctx.N)
            problems.append(f"({eps:g},{k0}): gate-failing solve did not refuse")
        except TimescaleOrderViolated:
            refused += 1
        except Exception as exc:
            problems.append(f"({eps:g},{k0}): wrong refusal {type(exc).__name__}")
    ok = not problems and ran >= 1 and refused == 2
    detail = (f"{ran} converging points with observed ratio <= bound+0.05; "
              f"g!=0 ratio {diag['observed_ratio']:.3g} <= {bound_g:.3g}+0.05; "
              f"{refused}/2 gate-failing solves refused")
    if problems:
        detail = "; ".join(problems)
    return CriterionResult(7, "contraction bookkeeping", ok, detail)


def criterion_8(ctx: AcceptanceContext) -> CriterionResult:
    """Picard critical manifold matches the closed form; reduced flow stays
    on the critical graph."""
    k0 = 3
    sys_pt = _system_at(ctx.system, 1e-3, k0)
    worst = 0.0
    for i in range(50):
        v = slow_field_sample(ctx.seed + 1, k0, ctx.N, i, norm=1.0)
        h0 = critical_manifold_solve(sys_pt, v.with_resolution(sys_pt.resolution))
        ref = critical_manifold_explicit(v, k0)
        worst = max(worst, sobolev_norm(
            h0 - ref.with_resolution(h0.resolution), 2 * ctx.N))
    split = split_for_k0(2, ctx.cons.omega_A)
    sys2 = _system_at(ctx.system, 1e-3, 2)
    v0 = slow_field_sample(ctx.seed + 2, 2, ctx.N, 0, norm=0.5)
    traj = integrate(sys2, FlowState(0.0, FourierField.zeros(sys2.resolution),
                                     v0.with_resolution(sys2.resolution)),
                     dt=1e-3, t_end=1.0, variant="reduced_slow", split=split,
                     stride=100)
    worst_red = 0.0
    for st in traj:
        h0 = critical_manifold_solve(sys2, project_slow(st.v, 2))
        worst_red = max(worst_red, x_norm(
            st.u - h0.with_resolution(st.u.resolution), ctx.N))
    ok = worst < 1e-10 and worst_red < 1e-10
    return CriterionResult(
        8, "critical-manifold solver", ok,
        f"50 fields: worst |picard - closed form| = {worst:.2e} (tol 1e-10); "
        f"reduced flow u = h0(v) defect {worst_red:.2e}")


def criterion_9(ctx: AcceptanceContext) -> CriterionResult:
    """Numerics hygiene: integrator order, horizon robustness, determinism."""
    problems = []
    # (a) ETD2 order-2 convergence against the closed-form solution
    k0, eps = 2, 1e-2
    sys_pt = _system_at(ctx.system, eps, k0)
    v0 = slow_field_sample(ctx.seed, k0, ctx.N, 1, norm=1.0)
    u0 = FourierField.from_modes({0: 0.3, 1: 0.1, -1: 0.1}, sys_pt.resolution, real=True)
    errs = []
    for dt in (2e-3, 1e-3, 5e-4):
        traj = integrate(sys_pt, FlowState(0.0, u0, v0.with_resolution(sys_pt.resolution)),
                         dt, 0.25, variant="full", scheme="etd2", stride=10**9)
        ref = exact_example_solution(v0, u0, eps, k0, traj[-1].t)
        errs.append(sobolev_norm(traj[-1].u - ref.u.with_resolution(traj[-1].u.resolution),
                                 2 * ctx.N))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    if not all(1.6 <= o <= 2.4 for o in orders):
        problems.append(f"etd2 orders {['%.2f' % o for o in orders]} not ~2")
    # (b) horizon robustness: doubling T moves the graph less than tail_tol
    split = split_for_k0(2, ctx.cons.omega_A)
    sys_lp = _system_at(ctx.system, 1e-3, 2)
    v0S = slow_field_sample(ctx.seed, 2, ctx.N, 0)
    lp1 = replace(ctx.lp, k_ref=4)
    traj1, diag1 = solve_fixed_point("galerkin", v0S, sys_lp, split, lp1, n=ctx.N)
    lp2 = replace(lp1, horizon=2.0 * diag1["horizon"])
    traj2, _ = solve_fixed_point("galerkin", v0S, sys_lp, split, lp2, n=ctx.N)
    u1, _ = extract_graph(traj1)
    u2, _ = extract_graph(traj2)
    dT = sobolev_norm(u1 - u2, 2 * ctx.N)
    if not dT < lp1.tail_tol:
        problems.append(f"horizon doubling moved graph by {dT:.2e} >= {lp1.tail_tol:g}")
    # (c) determinism: identical seeds give byte-identical CSV
    import tempfile
    from pathlib import Path

    from .experiments import compare_manifolds
    from .output import write_rows
    with tempfile.TemporaryDirectory() as td:
        paths = []
        for run in ("a", "b"):
            rows = compare_manifolds(
                ctx.system, m=1, n=1, epsilons=[1e-3], k0s=[1],
                samples=3, seed=ctx.seed,
                lp=replace(ctx.lp, quad_theta=5e-3, k_ref=2))
            paths.append(write_rows(Path(td) / f"{run}.csv",
                                    rows[0].HEADER, [r.astuple() for r in rows]))
        if paths[0].read_bytes() != paths[1].read_bytes():
            problems.append("compare CSV not byte-identical across reruns")
    ok = not problems
    detail = (f"etd2 orders {['%.2f' % o for o in orders]}; horizon-doubling "
              f"shift {dT:.2e} < {lp1.tail_tol:g}; rerun CSV byte-identical")
    if problems:
        detail = "; ".join(problems)
    return CriterionResult(9, "numerics hygiene", ok, detail)


ALL_CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                criterion_6, criterion_7, criterion_8, criterion_9)


def run_all(config: LoadedConfig, echo=print) -> list[CriterionResult]:
    ctx = AcceptanceContext(config)
    results = []
    for fn in ALL_CRITERIA:
        res = fn(ctx)
        results.append(res)
        if echo is not None:
            echo(res.line)
    return results
