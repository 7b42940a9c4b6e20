import math

import numpy as np
import pytest

from slowmanifold import (FourierField, LPOptions, galerkin_manifold_explicit,
                          split_for_k0, x_norm, y_norm)
from slowmanifold.errors import InsufficientPoints
from slowmanifold.experiments import (compare_manifolds, distance_to_critical,
                                      graph_distance, max_admissible_k0,
                                      scaling_study, skipped_points,
                                      slow_subsystem_error)
from slowmanifold.manifolds import critical_manifold_explicit
from slowmanifold.sampling import slow_field_sample, slow_field_samples
from slowmanifold.spectral import project_fast

from conftest import make_example_system

LP = LPOptions(tol=1e-10, quad_theta=5e-3)


class TestSampling:
    def test_unit_norm_and_support(self):
        for k0 in (1, 3):
            v = slow_field_sample(7, k0, 1, 0)
            assert y_norm(v, 1.0) == pytest.approx(1.0, rel=1e-12)
            assert v.support_radius() <= k0
            assert v.real

    def test_deterministic(self):
        a = slow_field_sample(7, 2, 1, 3)
        b = slow_field_sample(7, 2, 1, 3)
        assert np.array_equal(a.coef, b.coef)
        c = slow_field_sample(8, 2, 1, 3)
        assert not np.array_equal(a.coef, c.coef)

    def test_batch(self):
        vs = slow_field_samples(7, 2, 1, 4, norm=0.5)
        assert len(vs) == 4
        assert all(y_norm(v, 1.0) == pytest.approx(0.5) for v in vs)


class TestCompare:
    def test_zero_input_zero_distance(self, example_system):
        split = split_for_k0(1, -0.9)
        lhs = graph_distance(example_system, split, FourierField.zeros(1),
                             1, 1, LP)
        assert lhs == 0.0

    def test_skip_bookkeeping(self, example_system):
        rows = compare_manifolds(example_system, m=1, n=1,
                                 epsilons=[1e-3, 1e-2], k0s=[1],
                                 samples=2, seed=1, lp=LP, k_ref_factor=2)
        ok_points = {(r.epsilon, r.k0) for r in rows if r.status == "ok"}
        skips = skipped_points(rows)
        assert ok_points == {(1e-3, 1)}
        assert skips == {(1e-2, 1): "skipped:gate"}
        assert len(ok_points) + len(skips) == 2
        for r in rows:
            if r.status == "ok":
                assert r.lhs >= 0 and math.isfinite(r.ratio)

    def test_lhs_equals_analytic_tail(self, example_system):
        rows = compare_manifolds(example_system, m=1, n=1, epsilons=[1e-3],
                                 k0s=[2], samples=3, seed=5, lp=LP, k_ref_factor=2)
        for r in rows:
            v0S = slow_field_sample(5, r.k0, r.n, r.sample)
            tail = project_fast(galerkin_manifold_explicit(v0S, r.epsilon, r.k0), r.k0)
            assert r.lhs == pytest.approx(x_norm(tail, 1.0), abs=5e-8)

    def test_ratio_stable_under_refinement(self, example_system):
        kw = dict(m=1, n=1, epsilons=[1e-3], k0s=[2], samples=3, seed=5,
                  k_ref_factor=2)
        coarse = compare_manifolds(example_system, lp=LPOptions(quad_theta=2e-2), **kw)
        fine = compare_manifolds(example_system, lp=LPOptions(quad_theta=5e-3), **kw)
        c_max = max(r.ratio for r in coarse)
        f_max = max(r.ratio for r in fine)
        assert 0.5 < c_max / f_max < 2.0

    def test_determinism(self, example_system):
        kw = dict(m=1, n=1, epsilons=[1e-3], k0s=[1], samples=2, seed=3, lp=LP)
        a = compare_manifolds(example_system, **kw)
        b = compare_manifolds(example_system, **kw)
        assert [r.astuple() for r in a] == [r.astuple() for r in b]

    def test_jobs_preserve_order(self, example_system):
        kw = dict(m=1, n=1, epsilons=[1e-3], k0s=[1, 2], samples=2, seed=3,
                  lp=LP, k_ref_factor=2)
        seq = compare_manifolds(example_system, jobs=1, **kw)
        par = compare_manifolds(example_system, jobs=3, **kw)
        assert [r.astuple() for r in seq] == [r.astuple() for r in par]


class TestScaling:
    def test_fits_and_points(self, example_system):
        points, fits = scaling_study(example_system, nm_pairs=[(1, 1)],
                                     k0s=[2, 3, 4], epsilons=[2e-4, 4e-4, 8e-4],
                                     samples=2, seed=9,
                                     lp=LPOptions(quad_theta=3e-2))
        sweeps = {f.sweep for f in fits}
        assert sweeps == {"k0", "epsilon", "v_norm"}
        for f in fits:
            assert f.points >= 3
            assert f.ci_low <= f.slope <= f.ci_high
        assert all(p.status == "ok" for p in points)

    def test_norm_probe_reports_quadratic_scaling(self, example_system):
        # the bound is linear in |v0S| but the quadratic example's distance
        # scales with the square; the v_norm fit records that deviation
        _, fits = scaling_study(example_system, nm_pairs=[(1, 1)],
                                k0s=[2, 3, 4], epsilons=[2e-4, 4e-4, 8e-4],
                                samples=1, seed=9,
                                lp=LPOptions(quad_theta=3e-2))
        probe = next(f for f in fits if f.sweep == "v_norm")
        assert probe.slope == pytest.approx(2.0, abs=1e-6)
        assert probe.slope_bound == pytest.approx(1.0)

    def test_insufficient_points(self, example_system):
        with pytest.raises(InsufficientPoints):
            scaling_study(example_system, nm_pairs=[(1, 1)], k0s=[2, 3],
                          epsilons=[2e-4, 4e-4, 8e-4], samples=1, seed=9,
                          lp=LPOptions(quad_theta=3e-2))

    def test_max_admissible_k0_monotone(self, example_system):
        k_small = max_admissible_k0(1e-5, example_system, 0.5)
        k_large = max_admissible_k0(4e-4, example_system, 0.5)
        assert k_small > k_large >= 1
        assert max_admissible_k0(1.0, example_system, 0.5) is None


class TestDistance:
    def test_matches_analytic_difference(self, example_system):
        rows = distance_to_critical(example_system, n=1, epsilons=[1e-3],
                                    k0s=[2], samples=3, seed=11, lp=LP)
        for r in rows:
            assert r.status == "ok"
            v0S = slow_field_sample(11, r.k0, r.n, r.sample)
            diff = galerkin_manifold_explicit(v0S, r.epsilon, r.k0) - \
                critical_manifold_explicit(v0S, r.k0)
            assert r.distance == pytest.approx(x_norm(diff, 1.0), abs=5e-8)
            assert math.isfinite(r.ratio) and r.ratio >= 0

    def test_mode_zero_closed_form(self):
        # |h_G - h0| at mode 0 for v = a e_0 is 2 eps a^2 / (1 - 2 eps)
        a, eps = 0.4, 1e-2
        v = FourierField.basis(0, 0, amplitude=a)
        diff = galerkin_manifold_explicit(v, eps, 0) - critical_manifold_explicit(v, 0)
        assert abs(diff.get(0)) == pytest.approx(2 * eps * a**2 / (1 - 2 * eps),
                                                 rel=1e-12)

    def test_distance_shrinks_with_epsilon(self, example_system):
        rows = distance_to_critical(example_system, n=1,
                                    epsilons=[1e-4, 1e-3], k0s=[1],
                                    samples=2, seed=11, lp=LP)
        d = {}
        for r in rows:
            d.setdefault(r.epsilon, []).append(r.distance)
        assert np.mean(d[1e-4]) < np.mean(d[1e-3])


class TestSlowSubsystem:
    def test_on_manifold_error_small_and_no_layer(self, example_system, rng):
        split = split_for_k0(2, -0.9)
        sys_ = make_example_system(epsilon=1e-3, resolution=4)
        v0 = slow_field_sample(13, 2, 1, 0, norm=0.5).with_resolution(4)
        u0 = critical_manifold_explicit(
            v0.with_resolution(2), 2).with_resolution(4)
        rows = slow_subsystem_error(sys_, split, u0=u0, v0=v0, t_end=0.5,
                                    dt=1e-3, stride=100)
        assert rows[0].u_defect0 < 1e-12
        assert all(r.layer_term < 1e-12 for r in rows)
        # on the critical graph the full flow differs from the reduced one
        # only through the O(eps) manifold gap
        assert all(r.error < 10 * sys_.epsilon for r in rows)

    def test_off_manifold_layer_decay(self):
        split = split_for_k0(2, -0.9)
        sys_ = make_example_system(epsilon=1e-3, resolution=4)
        v0 = slow_field_sample(13, 2, 1, 0, norm=0.5).with_resolution(4)
        u0 = FourierField.from_modes({0: 0.3}, 4, real=True)
        dt = 2e-5
        rows = slow_subsystem_error(sys_, split, u0=u0, v0=v0, t_end=100 * dt,
                                    dt=dt, stride=1)
        # fit the early decay rate of the error; it should be at least
        # (1 - margin) * eps^{-1} |omega_f|
        ts = np.array([r.t for r in rows[:60] if r.error > 1e-9])
        es = np.array([r.error for r in rows[:60] if r.error > 1e-9])
        slope = np.polyfit(ts, np.log(es), 1)[0]
        target = abs(sys_.constants.omega_f) / sys_.epsilon
        assert -slope >= 0.9 * target

    def test_fast_content_recorded(self):
        split = split_for_k0(1, -0.9)
        sys_ = make_example_system(epsilon=1e-3, resolution=4)
        v0 = FourierField.from_modes({1: 0.1, -1: 0.1, 3: 0.05, -3: 0.05}, 4,
                                     real=True)
        rows = slow_subsystem_error(sys_, split, u0=FourierField.zeros(4),
                                    v0=v0, t_end=0.01, dt=1e-3, stride=10)
        assert rows[0].v_fast_norm > 0
