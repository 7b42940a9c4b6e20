"""Time integration of the fast-slow system and its reductions.

The linear part is diagonal in Fourier space, so exponential time
differencing integrates e^{dt A / eps} exactly per mode and the step size
never needs to scale with eps.  Two nonlinear rules are provided: the
second-order ETD2RK predictor/corrector and the classical fourth-order
ETDRK4; their phi-function coefficients are evaluated through the stable
routines in :mod:`slowmanifold.phifuncs`.

Also here: the closed-form solution of the quadratic worked example, the
invariance-defect measurement for a manifold graph, and the exponential
attraction-rate fit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CriticalSolveFailed, DefectBelowFloor, NoConvergence, ResonantEpsilon, StepRejected
from .manifolds import ManifoldGraph, critical_manifold_solve
from .phifuncs import phi1, phi2, phi3
from .spectral import (FOUR_PI_SQ, FourierField, SpectralSplit, project_fast,
                       project_slow, x_norm, y_norm)
from .system import FastSlowSystem


@dataclass(frozen=True)
class FlowState:
    """One snapshot (t, u, v) of the coupled flow."""

    t: float
    u: FourierField
    v: FourierField


# ---------------------------------------------------------------------------
# ETD stepping
# ---------------------------------------------------------------------------

class _EtdCoeffs:
    """Per-mode exponential and phi-weights for one linear rate vector."""

    def __init__(self, z: np.ndarray, dt: float, order: int):
        self.E = np.exp(z)
        self.order = order
        if order == 2:
            self.h_phi1 = dt * phi1(z)
            self.h_phi2 = dt * phi2(z)
        elif order == 4:
            self.E2 = np.exp(0.5 * z)
            self.h2_phi1 = 0.5 * dt * phi1(0.5 * z)
            p1, p2, p3 = phi1(z), phi2(z), phi3(z)
            self.f1 = dt * (p1 - 3.0 * p2 + 4.0 * p3)
            self.f2 = dt * (p2 - 2.0 * p3)
            self.f3 = dt * (4.0 * p3 - p2)
        else:
            raise ValueError("scheme order must be 2 or 4")

    def step(self, y: np.ndarray, N: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        if self.order == 2:
            n0 = N(y)
            a = self.E * y + self.h_phi1 * n0
            return a + self.h_phi2 * (N(a) - n0)
        n0 = N(y)
        a = self.E2 * y + self.h2_phi1 * n0
        n1 = N(a)
        b = self.E2 * y + self.h2_phi1 * n1
        n2 = N(b)
        c = self.E2 * a + self.h2_phi1 * (2.0 * n2 - n0)
        n3 = N(c)
        return self.E * y + self.f1 * n0 + 2.0 * self.f2 * (n1 + n2) + self.f3 * n3


def _pack(u: FourierField, v: FourierField, K: int) -> np.ndarray:
    return np.concatenate([u.with_resolution(K).coef, v.with_resolution(K).coef])


def _unpack(y: np.ndarray, K: int, real: bool) -> tuple[FourierField, FourierField]:
    M = 2 * K + 1
    return FourierField(K, y[:M], real), FourierField(K, y[M:], real)


def integrate(sys: FastSlowSystem, state: FlowState, dt: float, t_end: float,
              variant: str = "full", split: Optional[SpectralSplit] = None,
              scheme: str = "etd4", stride: int = 1,
              critical_tol: float = 1e-12) -> list[FlowState]:
    """March the system from ``state.t`` to ``t_end`` in steps of dt.

    variant "full" integrates at the system resolution; "galerkin" projects
    state and nonlinearities to slow modes (requires ``split``);
    "reduced_slow" evolves only v on the critical manifold and reconstructs
    u = h0(v) at every output time.  Snapshots are recorded every ``stride``
    steps (initial and final always included).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if variant in ("galerkin", "reduced_slow") and split is None:
        raise ValueError(f"variant {variant!r} requires a spectral split")
    order = {"etd2": 2, "etd4": 4}[scheme]
    K = sys.resolution if variant == "full" else split.k0
    real = state.u.real and state.v.real
    modes = np.arange(-K, K + 1)
    mu_B = sys.op_B.mu(modes)

    if variant == "reduced_slow":
        return _integrate_reduced(sys, state, dt, t_end, split, order, stride,
                                  K, mu_B, critical_tol, real)

    mu_A = sys.op_A.mu(modes) / sys.epsilon
    z = np.concatenate([mu_A, mu_B]) * dt
    coeffs = _EtdCoeffs(z, dt, order)
    M = 2 * K + 1
    inv_eps = 1.0 / sys.epsilon
    slow = np.abs(modes) <= (split.k0 if split is not None else K)

    def N(y: np.ndarray) -> np.ndarray:
        u, v = FourierField(K, y[:M]), FourierField(K, y[M:])
        fu = sys.eval_f(u, v, K).coef * inv_eps
        gu = sys.eval_g(u, v, K).coef
        if variant == "galerkin":
            fu = np.where(slow, fu, 0.0)
            gu = np.where(slow, gu, 0.0)
        return np.concatenate([fu, gu])

    y = _pack(state.u, state.v, K)
    if variant == "galerkin":
        y = np.where(np.concatenate([slow, slow]), y, 0.0)
    t = state.t
    nsteps = int(round((t_end - t) / dt))
    out = [FlowState(t, *_unpack(y, K, real))]
    for i in range(1, nsteps + 1):
        y = coeffs.step(y, N)
        if not np.all(np.isfinite(y)):
            raise StepRejected(f"nonfinite state at t = {t + dt:g}")
        t = state.t + i * dt
        if i % stride == 0 or i == nsteps:
            out.append(FlowState(t, *_unpack(y, K, real)))
    return out


def _integrate_reduced(sys, state, dt, t_end, split, order, stride, K, mu_B,
                       critical_tol, real):
    """v' = B v + pr_S g(h0(v), v), with u reconstructed as h0(v)."""
    k0 = split.k0
    modes = np.arange(-K, K + 1)
    slow = np.abs(modes) <= k0
    coeffs = _EtdCoeffs(mu_B * dt, dt, order)

    def solve_h0(v: FourierField) -> FourierField:
        try:
            return critical_manifold_solve(sys, v, tol=critical_tol)
        except NoConvergence as exc:
            raise CriticalSolveFailed(str(exc)) from exc

    def N(y: np.ndarray) -> np.ndarray:
        v = FourierField(K, np.where(slow, y, 0.0))
        u0 = solve_h0(v)
        return np.where(slow, sys.eval_g(u0, v, K).coef, 0.0)

    v = project_slow(state.v.with_resolution(K), k0)
    y = v.coef.copy()
    t = state.t
    nsteps = int(round((t_end - t) / dt))

    def snapshot(t, y):
        v = FourierField(K, y, real)
        return FlowState(t, solve_h0(v).with_resolution(K), v)

    out = [snapshot(t, y)]
    for i in range(1, nsteps + 1):
        y = coeffs.step(y, N)
        if not np.all(np.isfinite(y)):
            raise StepRejected(f"nonfinite state at t = {t + dt:g}")
        t = state.t + i * dt
        if i % stride == 0 or i == nsteps:
            out.append(snapshot(t, y))
    return out


def trajectory_to_csv(traj: list[FlowState], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "component", "mode", "re", "im"])
        for st in traj:
            for name, f in (("u", st.u), ("v", st.v)):
                for k in f.modes:
                    z = f.get(int(k))
                    w.writerow([repr(float(st.t)), name, int(k), repr(z.real), repr(z.imag)])


# ---------------------------------------------------------------------------
# closed-form solution of the worked example
# ---------------------------------------------------------------------------

def exact_example_solution(v0: FourierField, u0: FourierField, epsilon: float,
                           k0: int, t: float, guard: float = 1e-9) -> FlowState:
    """Exact state of the truncated quadratic example at time t.

    v_k(t) = e^{-(1+4 pi^2 k^2) t} v_k(0) and u_k(t) follows by variation of
    constants; for on-manifold data the fast exponentials cancel and the
    formula is valid for t of either sign.
    """
    if v0.support_radius() > k0:
        raise ValueError("v0 must be supported on |k| <= k0")
    K = max(2 * k0, u0.resolution)
    modes = np.arange(-K, K + 1)
    a = 1.0 + FOUR_PI_SQ * modes.astype(float) ** 2
    v_coef = np.zeros(2 * K + 1, dtype=np.complex128)
    sl = np.abs(modes) <= k0
    v_coef[sl] = np.exp(-a[sl] * t) * v0.with_resolution(K).coef[sl]

    # split u0 into the on-manifold part (whose fast exponentials cancel
    # analytically, so t of either sign works) and the off-manifold residue,
    # which carries the e^{-a_k t / eps} layer and blows up backward in time
    graph0 = np.zeros(2 * K + 1, dtype=np.complex128)
    u_coef = np.zeros(2 * K + 1, dtype=np.complex128)
    offenders = []
    for k in range(-2 * k0, 2 * k0 + 1):
        a_k = 1.0 + FOUR_PI_SQ * k * k
        g0, gt = 0.0 + 0.0j, 0.0 + 0.0j
        for j in range(max(-k0, k - k0), min(k0, k + k0) + 1):
            l = k - j
            b = 2.0 + FOUR_PI_SQ * (j * j + l * l)
            den = a_k - epsilon * b
            if abs(den) / a_k < guard:
                offenders.append((j, l, k))
                continue
            w = v0.get(j) * v0.get(l) / den
            g0 += w
            gt += math.exp(-b * t) * w
        graph0[K + k] = g0
        u_coef[K + k] = gt
    if offenders:
        raise ResonantEpsilon(
            f"denominator below guard at triples {offenders}", offenders)
    residue = u0.with_resolution(K).coef - graph0
    nz = residue != 0.0
    with np.errstate(over="ignore"):
        u_coef[nz] += residue[nz] * np.exp(-(a[nz] / epsilon) * t)
    real = v0.real and u0.real
    return FlowState(t, FourierField(K, u_coef, real), FourierField(K, v_coef, real))


# ---------------------------------------------------------------------------
# invariance and attraction measurements
# ---------------------------------------------------------------------------

def invariance_defect(sys: FastSlowSystem, split: SpectralSplit, graph: ManifoldGraph,
                      v0S: FourierField, t_end: float, dt: float = 1e-3,
                      n: float = 1.0, scheme: str = "etd4", variant: str = "full",
                      stride: int = 10) -> float:
    """sup over output times of || (u(t), v_F(t)) - graph(v_S(t)) ||_{X_n x Y_n}
    along the trajectory launched on the graph at v0S."""
    u0, vF0 = graph.evaluate(v0S)
    state = FlowState(0.0, u0.with_resolution(sys.resolution),
                      (v0S + vF0).with_resolution(sys.resolution))
    traj = integrate(sys, state, dt, t_end, variant=variant, split=split,
                     scheme=scheme, stride=stride)
    worst = 0.0
    for st in traj[1:]:
        vS = project_slow(st.v, split.k0)
        gu, gvF = graph.evaluate(vS.with_resolution(split.k0))
        defect = x_norm(st.u - gu.with_resolution(st.u.resolution), n) + \
            y_norm(project_fast(st.v, split.k0) - gvF.with_resolution(st.v.resolution), n)
        worst = max(worst, defect)
    return worst


@dataclass(frozen=True)
class AttractionFit:
    rate: float
    prefactor: float
    r_squared: float
    samples: int


def attraction_rate(sys: FastSlowSystem, split: SpectralSplit, graph: ManifoldGraph,
                    v0S: FourierField, u_offset: FourierField, t_end: float,
                    dt: float, n: float = 1.0, scheme: str = "etd4",
                    rel_floor: float = 1e-8, abs_floor: float = 1e-13) -> AttractionFit:
    """Least-squares fit of log defect(t) for an off-manifold start.

    The start point is (graph(v0S) + u_offset, v0S); the defect is measured
    against the graph along the flow.  The fit window keeps samples above
    rel_floor times the initial defect, so the integrator's own defect floor
    does not flatten the tail of the fit.  DefectBelowFloor is raised when
    fewer than four usable samples exist.
    """
    u0, vF0 = graph.evaluate(v0S)
    state = FlowState(0.0, (u0 + u_offset).with_resolution(sys.resolution),
                      (v0S + vF0).with_resolution(sys.resolution))
    traj = integrate(sys, state, dt, t_end, variant="full", split=split,
                     scheme=scheme, stride=1)
    ts, ds = [], []
    d0 = None
    for st in traj:
        vS = project_slow(st.v, split.k0)
        gu, _ = graph.evaluate(vS.with_resolution(split.k0))
        d = x_norm(st.u - gu.with_resolution(st.u.resolution), n)
        if d0 is None:
            d0 = d
        if d > max(abs_floor, rel_floor * d0):
            ts.append(st.t)
            ds.append(d)
    if len(ts) < 4 or d0 <= abs_floor:
        raise DefectBelowFloor(
            f"only {len(ts)} defect samples above floor; nothing to fit")
    ts, ls = np.asarray(ts), np.log(np.asarray(ds))
    slope, intercept = np.polyfit(ts, ls, 1)
    pred = slope * ts + intercept
    ss_res = float(np.sum((ls - pred) ** 2))
    ss_tot = float(np.sum((ls - np.mean(ls)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return AttractionFit(rate=-slope, prefactor=math.exp(intercept),
                         r_squared=r2, samples=len(ts))
