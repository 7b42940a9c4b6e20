import math

import numpy as np
import pytest

from slowmanifold import (FourierField, LPOptions, TailToleranceUnreachable,
                          TimescaleOrderViolated, extract_graph,
                          galerkin_manifold_explicit, lp_apply_direct,
                          lp_apply_galerkin, lp_graph, sobolev_norm,
                          solve_fixed_point, split_for_k0, x_norm, y_norm)
from slowmanifold.lyapunov_perron import _build_context, initial_guess
from slowmanifold.spectral import project_fast

from conftest import make_example_system, random_slow_field

K0 = 2
SPLIT = split_for_k0(K0, -0.9)
OPTS = LPOptions(tol=1e-10, quad_theta=2e-3, k_ref=2 * K0)


@pytest.fixture(scope="module")
def solved():
    """One converged pair of solves shared by the cheap assertions below."""
    sys_ = make_example_system(epsilon=1e-3)
    rng = np.random.default_rng(42)
    v0S = random_slow_field(rng, K0)
    trajG, diagG = solve_fixed_point("galerkin", v0S, sys_, SPLIT, OPTS)
    trajD, diagD = solve_fixed_point("direct", v0S, sys_, SPLIT, OPTS)
    return sys_, v0S, trajG, diagG, trajD, diagD


class TestOperatorIdentities:
    def test_zero_data_fixed_by_zero(self, example_system):
        ctx = _build_context("galerkin", FourierField.zeros(K0), example_system,
                             SPLIT, OPTS)
        traj = initial_guess(ctx, 1.0)
        out = lp_apply_galerkin(traj, FourierField.zeros(K0), example_system, SPLIT, OPTS)
        assert not np.any(out.u) and not np.any(out.v_S)

    def test_g_zero_vF_vanishes(self, solved):
        sys_, v0S, _, _, trajD, _ = solved
        out = lp_apply_direct(trajD, v0S, sys_, SPLIT, OPTS)
        assert not np.any(out.v_F)

    def test_g_zero_vS_is_group_orbit(self, solved):
        sys_, v0S, trajG, _, _, _ = solved
        out = lp_apply_galerkin(trajG, v0S, sys_, SPLIT, OPTS)
        mu = sys_.op_B.mu(np.arange(-K0, K0 + 1))
        expected = np.exp(np.outer(out.times, mu)) * v0S.coef[None, :]
        assert np.allclose(out.v_S, expected, rtol=1e-12)


class TestSolve:
    def test_zero_input_converges_immediately(self, example_system):
        traj, diag = solve_fixed_point("galerkin", FourierField.zeros(K0),
                                       example_system, SPLIT, OPTS)
        assert diag["iterations"] == 1
        assert not np.any(traj.u)

    def test_galerkin_matches_explicit_formula(self, solved):
        sys_, v0S, trajG, _, _, _ = solved
        uG, vF = extract_graph(trajG)
        ref = galerkin_manifold_explicit(v0S, sys_.epsilon, K0).with_resolution(K0)
        assert sobolev_norm(uG - ref, 2.0) < 5e-8
        assert not np.any(vF.coef)

    def test_direct_matches_full_formula(self, solved):
        sys_, v0S, _, _, trajD, _ = solved
        uD, vF = extract_graph(trajD)
        ref = galerkin_manifold_explicit(v0S, sys_.epsilon, K0)
        assert sobolev_norm(uD - ref.with_resolution(uD.resolution), 2.0) < 5e-8
        assert y_norm(vF, 1.0) == 0.0

    def test_difference_is_fast_tail(self, solved):
        sys_, v0S, trajG, _, trajD, _ = solved
        uG, _ = extract_graph(trajG)
        uD, _ = extract_graph(trajD)
        ref = galerkin_manifold_explicit(v0S, sys_.epsilon, K0)
        tail = project_fast(ref, K0)
        diff = uD - uG.with_resolution(uD.resolution)
        assert abs(x_norm(diff, 1.0) - x_norm(tail, 1.0)) < 1e-9

    def test_residual_of_returned_trajectory(self, solved):
        sys_, v0S, trajG, diagG, _, _ = solved
        out = lp_apply_galerkin(trajG, v0S, sys_, SPLIT, OPTS)
        assert out.weighted_distance(trajG) <= OPTS.tol
        assert diagG["residual"] <= OPTS.tol

    def test_observed_ratio_below_bound(self, solved):
        _, _, _, diagG, _, diagD = solved
        for diag in (diagG, diagD):
            assert diag["observed_ratio"] <= diag["contraction_bound"] + 0.05

    def test_component_supports(self):
        # v_S stays on slow modes and v_F on fast modes at every node
        sys_ = make_example_system(epsilon=1e-3, L_g=0.02, g_coef=0.05)
        rng = np.random.default_rng(6)
        v0S = random_slow_field(rng, 1, norm=0.02)
        split1 = split_for_k0(1, -0.9)
        # an explicit k_ref opts out of the g != 0 truncation warning
        opts = LPOptions(tol=1e-10, quad_theta=1e-3, tail_tol=1e-4, k_ref=3)
        traj, _ = solve_fixed_point("direct", v0S, sys_, split1, opts)
        modes = np.arange(-traj.k_v, traj.k_v + 1)
        assert not np.any(traj.v_S[:, np.abs(modes) > split1.k0])
        assert not np.any(traj.v_F[:, np.abs(modes) <= split1.k0])

    def test_extract_graph_is_final_node(self, solved):
        _, _, trajG, _, trajD, _ = solved
        uG, _ = extract_graph(trajG)
        assert np.array_equal(uG.coef, trajG.u[-1])
        uD, vFD = extract_graph(trajD)
        assert np.array_equal(uD.coef, trajD.u[-1])
        assert np.array_equal(vFD.coef, trajD.v_F[-1])

    def test_gate_refusal(self):
        sys_ = make_example_system(epsilon=1e-2)
        with pytest.raises(TimescaleOrderViolated):
            solve_fixed_point("galerkin", FourierField.basis(0, K0, 0.1),
                              sys_, SPLIT, OPTS)

    def test_divergent_integral_detected(self):
        # even with the gate bypassed, eps above the mode-0 safe bound makes
        # the history integral diverge and the solve must refuse
        sys_ = make_example_system(epsilon=1e-2)
        opts = LPOptions(check_gate=False, quad_theta=2e-3)
        with pytest.raises(TailToleranceUnreachable):
            solve_fixed_point("galerkin", FourierField.basis(0, K0, 0.1),
                              sys_, SPLIT, opts)

    def test_fast_content_rejected(self, example_system):
        bad = FourierField.basis(K0 + 1, K0 + 1, 0.5)
        with pytest.raises(ValueError):
            solve_fixed_point("galerkin", bad, example_system, SPLIT, OPTS)

    def test_lipschitz_in_data(self, solved, rng):
        sys_, _, _, _, _, _ = solved
        graph = lp_graph("galerkin", sys_, SPLIT, OPTS)
        worst = 0.0
        for _ in range(3):
            a = random_slow_field(rng, K0, norm=0.5)
            b = random_slow_field(rng, K0, norm=0.5)
            ua, _ = graph.evaluate(a)
            ub, _ = graph.evaluate(b)
            worst = max(worst, x_norm(ua - ub, 1.0) / y_norm(a - b, 1.0))
        # quadratic graph: local Lipschitz constant ~ 2 sup|v| / spectral gap
        assert worst < 1.0


class TestDiscretizationQuality:
    def test_grid_refinement_second_order(self):
        sys_ = make_example_system(epsilon=1e-3)
        rng = np.random.default_rng(3)
        v0S = random_slow_field(rng, K0)
        ref = galerkin_manifold_explicit(v0S, sys_.epsilon, K0).with_resolution(K0)
        errs = []
        for theta in (2e-2, 1e-2, 5e-3):
            opts = LPOptions(tol=1e-12, quad_theta=theta, k_ref=2 * K0)
            traj, _ = solve_fixed_point("galerkin", v0S, sys_, SPLIT, opts)
            u, _ = extract_graph(traj)
            errs.append(sobolev_norm(u - ref, 2.0))
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(1.5 <= o <= 2.5 for o in orders)

    def test_horizon_robustness(self):
        sys_ = make_example_system(epsilon=1e-3)
        rng = np.random.default_rng(4)
        v0S = random_slow_field(rng, K0)
        traj1, diag1 = solve_fixed_point("galerkin", v0S, sys_, SPLIT, OPTS)
        opts2 = LPOptions(tol=1e-10, quad_theta=2e-3, k_ref=2 * K0,
                          horizon=2.0 * diag1["horizon"])
        traj2, _ = solve_fixed_point("galerkin", v0S, sys_, SPLIT, opts2)
        u1, _ = extract_graph(traj1)
        u2, _ = extract_graph(traj2)
        assert sobolev_norm(u1 - u2, 2.0) < OPTS.tail_tol

    def test_g_nonzero_solve_and_truncation_warning(self):
        # raw quadratic g grows backward in time, so the finite-horizon Picard
        # iteration contracts only for small data and short horizons; these
        # parameters sit safely inside that regime
        sys_ = make_example_system(epsilon=1e-3, L_g=0.02, g_coef=0.05)
        rng = np.random.default_rng(5)
        v0S = random_slow_field(rng, 1, norm=0.02)
        split1 = split_for_k0(1, -0.9)
        opts = LPOptions(tol=1e-10, quad_theta=1e-3, tail_tol=1e-4)
        with pytest.warns(UserWarning, match="truncation"):
            traj, diag = solve_fixed_point("direct", v0S, sys_, split1, opts)
        assert diag["residual"] <= opts.tol
        # quadratic slow input has fast convolution output, so pr_F g feeds v_F
        assert np.any(traj.v_F)

    def test_trajectory_csv(self, solved, tmp_path):
        _, _, trajG, _, trajD, _ = solved
        p = tmp_path / "traj.csv"
        trajD.to_csv(p)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "t,component,mode,re,im"
        n_nodes = trajD.times.size
        assert len(lines) == 1 + n_nodes * (2 * (2 * trajD.k_v + 1) + (2 * trajD.k_u + 1))
