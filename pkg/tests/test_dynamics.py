import math

import numpy as np
import pytest

from slowmanifold import (FourierField, PolynomialNonlinearity, ResonantEpsilon,
                          sobolev_norm, split_for_k0, x_norm)
from slowmanifold.dynamics import (FlowState, attraction_rate,
                                   exact_example_solution, integrate,
                                   invariance_defect, trajectory_to_csv)
from slowmanifold.errors import DefectBelowFloor, StepRejected
from slowmanifold.manifolds import (ManifoldGraph, critical_manifold_solve,
                                    galerkin_manifold_explicit)
from slowmanifold.spectral import FOUR_PI_SQ, project_slow, semigroup_apply

from conftest import make_example_system, random_slow_field

K0 = 2
SPLIT = split_for_k0(K0, -0.9)


def on_manifold_state(sys_, v0S):
    u0 = galerkin_manifold_explicit(v0S, sys_.epsilon, K0)
    return FlowState(0.0, u0.with_resolution(sys_.resolution),
                     v0S.with_resolution(sys_.resolution))


class TestIntegrate:
    def test_linear_system_exact(self, rng):
        sys_ = make_example_system(epsilon=1e-2, resolution=4)
        sys_lin = type(sys_)(op_A=sys_.op_A, op_B=sys_.op_B,
                             f=PolynomialNonlinearity.zero(),
                             g=PolynomialNonlinearity.zero(),
                             epsilon=1e-2, resolution=4,
                             constants=sys_.constants, gate_c=0.99)
        u0 = random_slow_field(rng, 2, norm=0.5).with_resolution(4)
        v0 = random_slow_field(rng, 2, norm=0.5).with_resolution(4)
        traj = integrate(sys_lin, FlowState(0.0, u0, v0), 1e-3, 0.1,
                         scheme="etd2", stride=10**9)
        t = traj[-1].t
        u_ref = semigroup_apply(sys_lin.op_A, u0, t, timescale=1e-2)
        v_ref = semigroup_apply(sys_lin.op_B, v0, t)
        assert sobolev_norm(traj[-1].u - u_ref, 2.0) < 1e-13
        assert sobolev_norm(traj[-1].v - v_ref, 2.0) < 1e-13

    def test_slow_variable_decays_exactly(self, rng):
        sys_ = make_example_system(epsilon=1e-2, resolution=4)
        v0 = random_slow_field(rng, K0, norm=0.5).with_resolution(4)
        traj = integrate(sys_, FlowState(0.0, FourierField.zeros(4), v0),
                         1e-3, 0.5, stride=100)
        for st in traj:
            ref = semigroup_apply(sys_.op_B, v0, st.t)
            assert sobolev_norm(st.v - ref, 4.0) < 1e-12

    def test_fast_variable_matches_variation_of_constants(self, rng):
        sys_ = make_example_system(epsilon=1e-2, resolution=4)
        v0 = random_slow_field(rng, K0, norm=0.5).with_resolution(4)
        u0 = FourierField.from_modes({0: 0.2, 1: 0.05, -1: 0.05}, 4, real=True)
        traj = integrate(sys_, FlowState(0.0, u0, v0), 2e-4, 0.3,
                         scheme="etd4", stride=10**9)
        ref = exact_example_solution(project_slow(v0, K0).with_resolution(K0),
                                     u0, 1e-2, K0, traj[-1].t)
        assert sobolev_norm(traj[-1].u - ref.u.with_resolution(4), 2.0) < 1e-9

    def test_zero_data_stays_zero(self):
        sys_ = make_example_system(resolution=4)
        traj = integrate(sys_, FlowState(0.0, FourierField.zeros(4),
                                         FourierField.zeros(4)), 1e-3, 0.05)
        assert all(not np.any(st.u.coef) and not np.any(st.v.coef) for st in traj)

    def test_semiflow_property(self, rng):
        sys_ = make_example_system(epsilon=1e-2, resolution=4)
        st0 = on_manifold_state(sys_, random_slow_field(rng, K0, norm=0.5))
        whole = integrate(sys_, st0, 1e-3, 0.4, stride=10**9)[-1]
        half = integrate(sys_, st0, 1e-3, 0.2, stride=10**9)[-1]
        again = integrate(sys_, half, 1e-3, 0.4, stride=10**9)[-1]
        assert sobolev_norm(whole.u - again.u, 2.0) < 1e-11
        assert sobolev_norm(whole.v - again.v, 4.0) < 1e-11

    def test_galerkin_variant_projects(self, rng):
        sys_ = make_example_system(epsilon=1e-3, resolution=6)
        v0 = random_slow_field(rng, K0, norm=0.5).with_resolution(6)
        u0 = FourierField.from_modes({3: 0.1, -3: 0.1}, 6, real=True)
        traj = integrate(sys_, FlowState(0.0, u0, v0), 1e-3, 0.05,
                         variant="galerkin", split=SPLIT, stride=10**9)
        assert traj[-1].u.support_radius() <= K0

    def test_etd2_order_two(self, rng):
        sys_ = make_example_system(epsilon=1e-2, resolution=4)
        v0 = random_slow_field(rng, K0, norm=1.0)
        u0 = FourierField.from_modes({0: 0.3, 2: 0.1, -2: 0.1}, 4, real=True)
        errs = []
        for dt in (2e-3, 1e-3, 5e-4):
            traj = integrate(sys_, FlowState(0.0, u0, v0.with_resolution(4)),
                             dt, 0.25, scheme="etd2", stride=10**9)
            ref = exact_example_solution(v0, u0, 1e-2, K0, traj[-1].t)
            errs.append(sobolev_norm(traj[-1].u - ref.u.with_resolution(4), 2.0))
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(1.6 <= o <= 2.4 for o in orders)

    def test_etd4_beats_etd2(self, rng):
        sys_ = make_example_system(epsilon=1e-2, resolution=4)
        v0 = random_slow_field(rng, K0, norm=1.0)
        u0 = FourierField.from_modes({0: 0.3}, 4, real=True)
        errs = {}
        for scheme in ("etd2", "etd4"):
            traj = integrate(sys_, FlowState(0.0, u0, v0.with_resolution(4)),
                             1e-3, 0.25, scheme=scheme, stride=10**9)
            ref = exact_example_solution(v0, u0, 1e-2, K0, traj[-1].t)
            errs[scheme] = sobolev_norm(traj[-1].u - ref.u.with_resolution(4), 2.0)
        assert errs["etd4"] < errs["etd2"] / 10

    def test_nonfinite_rejected(self):
        sys_ = make_example_system(epsilon=1e-3, resolution=2)
        huge = FourierField.basis(0, 2, amplitude=1e200)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(StepRejected):
                integrate(sys_, FlowState(0.0, FourierField.zeros(2), huge),
                          1e-3, 0.01)

    def test_csv_export(self, rng, tmp_path):
        sys_ = make_example_system(resolution=2)
        traj = integrate(sys_, FlowState(0.0, FourierField.zeros(2),
                                         random_slow_field(rng, 1, norm=0.1).with_resolution(2)),
                         1e-3, 0.01, stride=5)
        p = tmp_path / "t.csv"
        trajectory_to_csv(traj, p)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "t,component,mode,re,im"
        assert len(lines) == 1 + len(traj) * 2 * 5


class TestExactSolution:
    def test_time_zero_identity(self, rng):
        v0 = random_slow_field(rng, K0, norm=0.7)
        u0 = FourierField.from_modes({0: 0.1, 3: 0.02, -3: 0.02}, 4, real=True)
        st = exact_example_solution(v0, u0, 1e-2, K0, 0.0)
        assert np.allclose(st.u.coef, u0.with_resolution(st.u.resolution).coef)
        assert np.allclose(st.v.coef, v0.with_resolution(st.v.resolution).coef)

    def test_on_manifold_evolution_stays_on_graph(self, rng):
        eps = 1e-2
        v0 = random_slow_field(rng, K0, norm=0.7)
        u0 = galerkin_manifold_explicit(v0, eps, K0)
        for t in (0.05, 0.4, -0.05):
            st = exact_example_solution(v0, u0, eps, K0, t)
            vt = project_slow(st.v, K0).with_resolution(K0)
            graph_t = galerkin_manifold_explicit(vt, eps, K0)
            assert sobolev_norm(st.u - graph_t.with_resolution(st.u.resolution),
                                2.0) < 1e-12 * max(1.0, sobolev_norm(st.u, 2.0))

    def test_off_manifold_deviation_decays_per_mode(self, rng):
        eps = 1e-2
        v0 = random_slow_field(rng, K0, norm=0.5)
        u_on = galerkin_manifold_explicit(v0, eps, K0)
        delta = FourierField.from_modes({1: 0.2, -1: 0.2}, u_on.resolution, real=True)
        for t in (0.005, 0.02):
            on = exact_example_solution(v0, u_on, eps, K0, t)
            off = exact_example_solution(v0, u_on + delta, eps, K0, t)
            diff = off.u - on.u
            a1 = 1.0 + FOUR_PI_SQ
            assert diff.get(1) == pytest.approx(0.2 * math.exp(-a1 * t / eps), rel=1e-10)
            assert abs(diff.get(0)) < 1e-15

    def test_resonant_epsilon_raises(self):
        v0 = FourierField.basis(0, 0, amplitude=0.5)
        with pytest.raises(ResonantEpsilon):
            exact_example_solution(v0, FourierField.zeros(0), 0.5, 0, 0.1)


class TestInvarianceAndAttraction:
    def test_zero_data_zero_defect(self):
        sys_ = make_example_system(epsilon=1e-2, resolution=2 * K0)
        graph = ManifoldGraph.galerkin_explicit(1e-2, K0)
        d = invariance_defect(sys_, SPLIT, graph, FourierField.zeros(K0),
                              t_end=0.2, dt=1e-3)
        assert d == 0.0

    def test_explicit_graph_defect_small(self, rng):
        sys_ = make_example_system(epsilon=1e-2, resolution=2 * K0)
        graph = ManifoldGraph.galerkin_explicit(1e-2, K0)
        v0S = random_slow_field(rng, K0, norm=1.0)
        d = invariance_defect(sys_, SPLIT, graph, v0S, t_end=5.0, dt=1e-3,
                              stride=100)
        assert d < 1e-8

    def test_attraction_rate_matches_mode_rate(self, rng):
        eps = 1e-2
        sys_ = make_example_system(epsilon=eps, resolution=2 * K0)
        graph = ManifoldGraph.galerkin_explicit(eps, K0)
        v0S = random_slow_field(rng, K0, norm=0.3)
        for k in (0, 1):
            target = (1.0 + FOUR_PI_SQ * k * k) / eps
            dt = 0.25 / target
            off = FourierField.from_modes({k: 0.05, -k: 0.05}, 2 * K0, real=True)
            fit = attraction_rate(sys_, SPLIT, graph, v0S, off,
                                  t_end=100 * dt, dt=dt)
            assert abs(fit.rate - target) / target < 0.10
            assert fit.r_squared > 0.999

    def test_zero_offset_below_floor(self, rng):
        sys_ = make_example_system(epsilon=1e-2, resolution=2 * K0)
        graph = ManifoldGraph.galerkin_explicit(1e-2, K0)
        v0S = random_slow_field(rng, K0, norm=0.3)
        with pytest.raises(DefectBelowFloor):
            attraction_rate(sys_, SPLIT, graph, v0S,
                            FourierField.zeros(2 * K0), t_end=0.02, dt=2e-4)


class TestReducedSlow:
    def test_u_is_critical_graph_along_flow(self, rng):
        sys_ = make_example_system(epsilon=1e-3, resolution=2 * K0)
        v0 = random_slow_field(rng, K0, norm=0.5).with_resolution(2 * K0)
        traj = integrate(sys_, FlowState(0.0, FourierField.zeros(2 * K0), v0),
                         1e-3, 0.5, variant="reduced_slow", split=SPLIT, stride=50)
        for st in traj:
            h0 = critical_manifold_solve(sys_, project_slow(st.v, K0))
            assert x_norm(st.u - h0.with_resolution(st.u.resolution), 1.0) < 1e-12

    def test_critical_solve_failure_surfaces(self, rng):
        # a strongly u-self-coupled f makes the Picard critical solve diverge
        # for large slow data; reduced_slow must report CriticalSolveFailed
        from slowmanifold import AssumptionConstants, FastSlowSystem, shifted_laplacian
        from slowmanifold.errors import CriticalSolveFailed
        cons = AssumptionConstants(L_f=0.2, L_g=0.0, C_A=1.0, C_B=1.0, M_A=1.0,
                                   M_B=1.0, omega_A=-0.9, omega_B=-0.9,
                                   omega_f=-0.69)
        bad = FastSlowSystem(
            op_A=shifted_laplacian(1.0), op_B=shifted_laplacian(1.0),
            f=PolynomialNonlinearity(((1.0, 0, 2), (80.0, 2, 0))),
            g=PolynomialNonlinearity.zero(),
            epsilon=1e-3, resolution=2, constants=cons, gate_c=0.99)
        split1 = split_for_k0(1, -0.9)
        v0 = FourierField.basis(0, 2, amplitude=2.0)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(CriticalSolveFailed):
                integrate(bad, FlowState(0.0, FourierField.zeros(2), v0),
                          1e-3, 0.01, variant="reduced_slow", split=split1)

    def test_example_reduced_flow_is_linear_decay(self, rng):
        # g = 0 makes the reduced slow equation linear: v(t) = e^{tB} v0
        sys_ = make_example_system(epsilon=1e-3, resolution=2 * K0)
        v0 = random_slow_field(rng, K0, norm=0.5).with_resolution(2 * K0)
        traj = integrate(sys_, FlowState(0.0, FourierField.zeros(2 * K0), v0),
                         1e-3, 0.3, variant="reduced_slow", split=SPLIT, stride=100)
        for st in traj:
            ref = semigroup_apply(sys_.op_B, v0, st.t)
            assert sobolev_norm(st.v - ref, 4.0) < 1e-12
