"""Case classification, constraint elimination, the Gram solves, and the reduced objective."""

from __future__ import annotations

import math

import numpy as np
import pytest

from ifreq import (
    Case,
    DegenerateFrequencyError,
    Domain,
    FreqPair,
    GramConditioningError,
    SampledCycle,
    build_basis,
    centered_energy,
    classify,
    enumerate_nodes,
    node_distance,
    objective_p,
    reduce_constraints,
    solve_inner,
)

from conftest import DT, T, T0, make_cycle, random_general_freqs
from oracles import dense_constrained_lstsq


def at(u1: float, u2: float) -> FreqPair:
    return FreqPair.from_dimensionless(u1, u2, T0, T)


class TestClassify:
    def test_odd_node_is_gamma1(self):
        assert classify(at(1.0, 1.0), T0, T) is Case.GAMMA1

    def test_even_node_is_gamma2(self):
        assert classify(at(2.0, 2.0), T0, T) is Case.GAMMA2

    def test_quarter_period_is_general(self):
        assert classify(at(0.5, 0.5), T0, T) is Case.GENERAL

    def test_mixed_parity_integer_pair_is_general(self):
        # cos product is -1 there, far from the degenerate value +1
        assert classify(at(1.0, 2.0), T0, T) is Case.GENERAL

    def test_near_node_inside_tolerance_routes_to_branch(self):
        offset = 1e-5  # |1 - cos*cos| ~ 1e-9, inside the default tolerance
        assert classify(at(1.0 + offset, 1.0), T0, T) is Case.GAMMA1
        assert classify(at(2.0, 2.0 + offset), T0, T) is Case.GAMMA2


class TestNodeDistance:
    def test_exact_nodes(self):
        assert node_distance(1.0, 1.0) == 0.0
        assert node_distance(2.0, 4.0) == 0.0

    def test_mixed_parity_is_not_a_node(self):
        assert node_distance(1.0, 2.0) == pytest.approx(1.0)

    def test_generic_point(self):
        assert node_distance(1.1, 0.95) == pytest.approx(math.hypot(0.1, 0.05))


class TestReduceConstraints:
    def test_quarter_period_swaps_envelopes(self):
        a1, a2 = reduce_constraints(at(0.5, 0.5), b1=3.0, b2=5.0, T0=T0, T=T)
        assert a1 == pytest.approx(5.0, abs=1e-12)
        assert a2 == pytest.approx(3.0, abs=1e-12)

    def test_zero_envelopes(self):
        assert reduce_constraints(at(0.7, 1.3), 0.0, 0.0, T0, T) == (0.0, 0.0)

    def test_degenerate_input_rejected(self):
        with pytest.raises(DegenerateFrequencyError):
            reduce_constraints(at(1.0, 1.0), 1.0, 1.0, T0, T)


class TestBuildBasis:
    def test_degenerate_sine_vectors_have_disjoint_support(self):
        cycle, _ = make_cycle(1.2, 2.5)
        for node in [(1.0, 1.0), (1.0, 3.0), (2.0, 2.0)]:
            basis = build_basis(at(*node), cycle)
            assert basis.case.degenerate
            assert float(basis.v1 @ basis.v2) == 0.0

    def test_gamma1_cosine_vector_blocks(self):
        cycle, _ = make_cycle(1.2, 2.5)
        freqs = at(1.0, 1.0)
        basis = build_basis(freqs, cycle)
        assert basis.case is Case.GAMMA1
        np.testing.assert_array_equal(basis.w0[: cycle.n], np.cos(freqs.omega1 * cycle.t1))
        np.testing.assert_array_equal(basis.w0[cycle.n :], -np.cos(freqs.omega2 * cycle.t2))

    def test_gamma2_cosine_vector_blocks(self):
        cycle, _ = make_cycle(1.2, 2.5)
        freqs = at(2.0, 2.0)
        basis = build_basis(freqs, cycle)
        assert basis.case is Case.GAMMA2
        np.testing.assert_array_equal(basis.w0[cycle.n :], np.cos(freqs.omega2 * cycle.t2))

    def test_general_quarter_period_first_vector_is_sine(self):
        # cos(omega2*(T-T0)) = 0 kills the cosine mix-in on the systolic block
        cycle, _ = make_cycle(1.2, 2.5)
        freqs = at(0.5, 0.5)
        basis = build_basis(freqs, cycle)
        assert basis.case is Case.GENERAL
        np.testing.assert_allclose(
            basis.v1[: cycle.n], np.sin(freqs.omega1 * cycle.t1), atol=1e-12
        )


class TestSolveInner:
    def test_constant_cycle_fits_offset_only(self):
        cycle = SampledCycle(np.full(200, 7.0), dt=DT, n=80, m=120)
        sol = solve_inner(at(0.8, 1.7), cycle)
        assert sol.b1 == pytest.approx(0.0, abs=1e-9)
        assert sol.b2 == pytest.approx(0.0, abs=1e-9)
        assert sol.pbar == pytest.approx(7.0, rel=1e-12)
        assert sol.objective_value <= 1e-16 * float(cycle.samples @ cycle.samples)

    def test_exact_recovery_at_generating_frequencies(self):
        cycle, params = make_cycle(1.15, 2.35, b1=0.3, b2=1.0)
        sol = solve_inner(params.freqs, cycle)
        f_energy = float(cycle.samples @ cycle.samples)
        assert sol.objective_value <= 1e-16 * f_energy
        assert sol.a1 == pytest.approx(params.a1, rel=1e-8, abs=1e-10)
        assert sol.b1 == pytest.approx(params.b1, rel=1e-8, abs=1e-10)
        assert sol.a2 == pytest.approx(params.a2, rel=1e-8, abs=1e-10)
        assert sol.b2 == pytest.approx(params.b2, rel=1e-8, abs=1e-10)
        assert sol.pbar == pytest.approx(params.pbar, rel=1e-10)

    def test_generating_point_is_the_unique_zero(self):
        cycle, params = make_cycle(1.15, 2.35, b1=0.3, b2=1.0)
        truth = params.freqs.dimensionless(T0, T)
        f_energy = float(cycle.samples @ cycle.samples)
        for u1 in np.arange(0.5, 1.51, 0.1):
            for u2 in np.arange(0.5, 3.01, 0.1):
                if node_distance(u1, u2) < 0.05:
                    continue
                value = objective_p(at(u1, u2), cycle)
                if math.hypot(u1 - truth[0], u2 - truth[1]) > 0.1:
                    assert value > 1e-6 * f_energy
        assert objective_p(params.freqs, cycle) <= 1e-16 * f_energy

    def test_conditioning_error_carries_estimate(self):
        cycle, _ = make_cycle(1.1, 2.2)
        with pytest.raises(GramConditioningError) as excinfo:
            solve_inner(at(0.8, 1.7), cycle, cond_max=1.0)
        assert excinfo.value.condition > 1.0
        assert objective_p(at(0.8, 1.7), cycle, cond_max=1.0) == math.inf

    def test_matches_dense_oracle_general_case(self, rng):
        for _ in range(30):
            n = int(rng.integers(5, 21))
            m = int(rng.integers(5, 21))
            dt = 0.005
            t0, t_period = (n - 1) * dt, (n - 1 + m) * dt
            cycle = SampledCycle(rng.normal(50.0, 10.0, size=n + m), dt=dt, n=n, m=m)
            freqs = random_general_freqs(rng, t0, t_period)
            sol = solve_inner(freqs, cycle)
            theta, p_ref = dense_constrained_lstsq(freqs, cycle)
            got = np.array([sol.a1, sol.a2, sol.b1, sol.b2, sol.pbar])
            scale = max(1.0, float(np.max(np.abs(theta))))
            np.testing.assert_allclose(got, theta, rtol=1e-8, atol=1e-8 * scale)
            assert sol.objective_value == pytest.approx(p_ref, rel=1e-8, abs=1e-10)

    def test_matches_dense_oracle_on_nodes(self, rng):
        # the oracle's numeric rank detection reduces to one constraint row there
        n, m = 12, 16
        dt = 0.005
        t0, t_period = (n - 1) * dt, (n - 1 + m) * dt
        for node_u in [(1.0, 1.0), (2.0, 2.0), (1.0, 3.0)]:
            cycle = SampledCycle(rng.normal(50.0, 10.0, size=n + m), dt=dt, n=n, m=m)
            freqs = FreqPair.from_dimensionless(*node_u, t0, t_period)
            sol = solve_inner(freqs, cycle)
            assert sol.case.degenerate
            theta, p_ref = dense_constrained_lstsq(freqs, cycle)
            got = np.array([sol.a1, sol.a2, sol.b1, sol.b2, sol.pbar])
            scale = max(1.0, float(np.max(np.abs(theta))))
            np.testing.assert_allclose(got, theta, rtol=1e-8, atol=1e-8 * scale)
            assert sol.objective_value == pytest.approx(p_ref, rel=1e-8, abs=1e-10)

    def test_residual_orthogonal_to_basis(self, rng):
        for trial in range(20):
            cycle, _ = make_cycle(
                float(rng.uniform(0.6, 1.4)),
                float(rng.uniform(0.6, 2.9)),
                noise_sigma=2.0,
                seed=trial,
            )
            freqs = random_general_freqs(rng)
            sol = solve_inner(freqs, cycle)
            basis = build_basis(freqs, cycle)
            fitted = sol.b1 * basis.v1 + sol.b2 * basis.v2 + sol.pbar
            residual = fitted - cycle.samples
            f_norm = float(np.linalg.norm(cycle.samples))
            for vec in (basis.v1, basis.v2):
                assert abs(float(vec @ residual)) <= 1e-8 * f_norm * float(np.linalg.norm(vec))
            ones_norm = math.sqrt(cycle.samples.size)
            assert abs(float(residual.sum())) <= 1e-8 * f_norm * ones_norm


class TestObjectiveP:
    def test_zero_at_generator_nonnegative_everywhere(self, rng):
        cycle, params = make_cycle(0.95, 1.45, b1=1.0, b2=-0.6)
        assert objective_p(params.freqs, cycle) <= 1e-16 * float(
            cycle.samples @ cycle.samples
        )
        for _ in range(25):
            assert objective_p(random_general_freqs(rng), cycle) >= 0.0

    def test_bounded_by_centered_energy(self, rng):
        for trial in range(10):
            cycle, _ = make_cycle(
                float(rng.uniform(0.6, 1.4)),
                float(rng.uniform(0.6, 2.9)),
                noise_sigma=3.0,
                seed=100 + trial,
            )
            bound = centered_energy(cycle)
            for _ in range(5):
                assert objective_p(random_general_freqs(rng), cycle) <= bound * (1 + 1e-12)

    def test_degenerate_solve_dominates_general_limit(self, rng):
        # approaching a node from four sides, the general-case objective cannot
        # undercut the lattice solve at the node itself
        cycle, _ = make_cycle(1.2, 2.6, noise_sigma=2.0, seed=9)
        for node_u in [(1.0, 1.0), (1.0, 3.0)]:
            p_node = objective_p(FreqPair.from_dimensionless(*node_u, T0, T), cycle)
            for direction in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
                step = 0.004
                u1 = node_u[0] + direction[0] * step
                u2 = node_u[1] + direction[1] * step
                p_limit = objective_p(FreqPair.from_dimensionless(u1, u2, T0, T), cycle)
                assert p_node <= p_limit + 1e-6 * max(1.0, p_limit)

    def test_gradient_smoothness_away_from_nodes(self):
        # central differences at h and h/2 should behave like an O(h^2) scheme
        cycle, _ = make_cycle(1.1, 2.3, b1=0.7, b2=1.0)
        point = (0.95, 1.9)  # generic slope region, >= 0.05 from every node

        def directional(h: float, axis: int) -> float:
            up = list(point)
            down = list(point)
            up[axis] += h
            down[axis] -= h
            p_up = objective_p(FreqPair.from_dimensionless(*up, T0, T), cycle)
            p_dn = objective_p(FreqPair.from_dimensionless(*down, T0, T), cycle)
            return (p_up - p_dn) / (2 * h)

        for axis in (0, 1):
            d1 = directional(0.04, axis)
            d2 = directional(0.02, axis)
            d3 = directional(0.01, axis)
            ratio = (d1 - d2) / (d2 - d3)
            assert 0.8 * 4 <= ratio <= 1.2 * 4


class TestEnumerateNodes:
    def test_default_window(self):
        nodes = enumerate_nodes(T0, T, Domain(0.5, 1.5, 0.5, 3.0))
        coords = sorted((node.u1, node.u2) for node in nodes)
        assert coords == [(1, 1), (1, 3)]
        assert all(node.branch is Case.GAMMA1 for node in nodes)

    def test_closed_rectangle_includes_boundary(self):
        nodes = enumerate_nodes(T0, T, Domain(0.5, 1.5, 1.001, 3.0))
        assert [(n.u1, n.u2) for n in nodes] == [(1, 3)]

    def test_wide_window_has_both_branches(self):
        nodes = enumerate_nodes(T0, T, Domain(0.5, 4.5, 0.5, 4.5))
        odd = sorted((n.u1, n.u2) for n in nodes if n.branch is Case.GAMMA1)
        even = sorted((n.u1, n.u2) for n in nodes if n.branch is Case.GAMMA2)
        assert odd == [(1, 1), (1, 3), (3, 1), (3, 3)]
        assert even == [(2, 2), (2, 4), (4, 2), (4, 4)]

    def test_node_frequencies_satisfy_degeneracy_exactly(self):
        for node in enumerate_nodes(T0, T, Domain(0.5, 4.5, 0.5, 4.5)):
            cc = math.cos(node.omega1 * T0) * math.cos(node.omega2 * (T - T0))
            assert cc == pytest.approx(1.0, abs=1e-12)
