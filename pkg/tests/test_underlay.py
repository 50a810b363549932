"""Tests for underlay module"""

import math
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from d2d_power import rate_model
from d2d_power.errors import InputError
from d2d_power.game_engine import iadrmp_run
from d2d_power.scenario import (
    ChannelParams,
    RadioParams,
    TopologyParams,
    derive_masks,
    generate_scenario,
)
from d2d_power.types import MaskMode
from d2d_power.underlay import (
    VIOLATION_TOLERANCE,
    DualState,
    default_nu_cap,
    dual_upper_bound,
    ellipsoid_step,
    iadrmpic_run,
    inner_solve,
    lagrangian_value,
    max_interference_ratio,
    subgradient,
)
from instances import random_scenario


class TestEllipsoid(unittest.TestCase):
    """Test class for ellipsoid cuts"""

    def test_worked_two_dimensional_step(self) -> None:
        """Test the cut of the unit disc along the first axis"""
        state = DualState.initial(np.ones((1, 2), dtype=bool), 1.0)
        state = ellipsoid_step(state, np.array([1.0, 0.0]))
        assert_allclose(state.center, [-1.0 / 3.0, 0.0], atol=1e-15)
        assert_allclose(state.shape_inverse, np.diag([4.0 / 9.0, 4.0 / 3.0]), atol=1e-15)
        self.assertEqual(state.iteration, 1)

    def test_interval_is_halved(self) -> None:
        """Test that a one-dimensional cut keeps the lower half of the interval"""
        state = DualState.initial(np.ones((1, 1), dtype=bool), 2.0)
        state = ellipsoid_step(state, np.array([1.0]))
        assert_allclose(state.center, [-1.0])
        assert_allclose(state.shape_inverse, [[1.0]])

    def test_volume_decreases(self) -> None:
        """Test that every cut shrinks the ellipsoid"""
        rng = np.random.default_rng(0)
        state = DualState.initial(np.ones((1, 3), dtype=bool), 1.0)
        for _ in range(100):
            volume = state.log_volume
            state = ellipsoid_step(state, rng.standard_normal(3))
            self.assertLess(state.log_volume, volume)

    def test_zero_direction_converges(self) -> None:
        """Test that a zero subgradient flags the state as converged"""
        state = DualState.initial(np.ones((2, 1), dtype=bool), 1.0)
        stepped = ellipsoid_step(state, np.zeros(2))
        self.assertTrue(stepped.converged)
        assert_array_equal(stepped.center, state.center)

    def test_multipliers_projected(self) -> None:
        """Test that negative center coordinates map to zero multipliers"""
        active = np.array([[True, False, True]])
        state = DualState(
            center=np.array([-1.0, 2.0]),
            shape_inverse=np.eye(2),
            grid=(1, 3),
            active=active,
        )
        assert_array_equal(state.nu, [[0.0, 0.0, 2.0]])
        self.assertEqual(state.dimension, 2)


class TestLagrangian(unittest.TestCase):
    """Test class for the priced objective"""

    def setUp(self) -> None:
        self.scenario = random_scenario(
            np.random.default_rng(1), 3, 2, num_cells=2, thresholds=0.4
        )
        self.p = np.full((3, 2), 0.3)

    def test_zero_multipliers_give_sum_rate(self) -> None:
        """Test that nu = 0 leaves the sum rate unchanged"""
        self.assertEqual(
            lagrangian_value(self.p, np.zeros((2, 2)), self.scenario),
            rate_model.sum_rate(self.p, self.scenario),
        )

    def test_priced_slack(self) -> None:
        """Test R(p) + sum nu (Q - sum A p)"""
        nu = np.array([[1.0, 0.0], [0.5, 2.0]])
        slack = 0.4 - rate_model.enb_interference(self.p, self.scenario)
        self.assertAlmostEqual(
            lagrangian_value(self.p, nu, self.scenario),
            rate_model.sum_rate(self.p, self.scenario) + float(np.sum(nu * slack)),
        )
        assert_allclose(subgradient(self.p, self.scenario), slack.ravel())

    def test_inner_solve_checks_multipliers(self) -> None:
        """Test that negative or misshaped multipliers are rejected"""
        with self.assertRaises(InputError):
            inner_solve(-np.ones((2, 2)), self.p, self.scenario)
        with self.assertRaises(InputError):
            inner_solve(np.ones((3, 2)), self.p, self.scenario)

    def test_inner_solve_ascends(self) -> None:
        """Test that the inner dynamics never lower the Lagrangian"""
        nu = np.full((2, 2), 0.5)
        p = inner_solve(nu, self.p, self.scenario)
        self.assertGreaterEqual(
            lagrangian_value(p, nu, self.scenario),
            lagrangian_value(self.p, nu, self.scenario) - 1e-12,
        )

    def test_max_interference_ratio(self) -> None:
        """Test that only finite positive thresholds count"""
        interference = np.array([[1.0, 5.0, 3.0]])
        thresholds = np.array([[2.0, np.inf, 0.0]])
        self.assertEqual(max_interference_ratio(interference, thresholds), 0.5)
        self.assertEqual(
            max_interference_ratio(interference, np.full((1, 3), np.inf)), 0.0
        )

    def test_default_cap_positive(self) -> None:
        """Test that the default multiplier scale is positive and finite"""
        cap = default_nu_cap(self.scenario)
        self.assertGreater(cap, 0.0)
        self.assertTrue(math.isfinite(cap))


class TestIadrmpic(unittest.TestCase):
    """Test class for the interference-constrained heuristic"""

    def test_constraints_met_at_convergence(self) -> None:
        """Test interference close to the threshold on random instances"""
        rng = np.random.default_rng(2)
        converged = 0
        for _ in range(10):
            scenario = random_scenario(rng, 3, 2, thresholds=0.3)
            result = iadrmpic_run(scenario)
            self.assertEqual(result.lower_model_violations, 0)
            if result.converged:
                converged += 1
                self.assertLessEqual(
                    result.max_interference_ratio(scenario.thresholds),
                    1.0 + VIOLATION_TOLERANCE,
                )
                self.assertLessEqual(
                    result.max_interference_ratio(scenario.thresholds), 1.05
                )
        self.assertGreaterEqual(converged, 8)

    def test_trace_records(self) -> None:
        """Test one record per multiplier update with consistent values"""
        scenario = random_scenario(np.random.default_rng(3), 3, 2, thresholds=0.3)
        result = iadrmpic_run(scenario, max_outer=40)
        steps = [record.step for record in result.trace]
        self.assertEqual(steps, list(range(1, len(result.trace) + 1)))
        self.assertEqual(result.trace[0].nu_max, 0.0)
        self.assertAlmostEqual(result.trace[-1].primal_value, result.primal_value)
        assert_allclose(
            result.interference, rate_model.enb_interference(result.powers, scenario)
        )

    def test_unconstrained_matches_iadrmp(self) -> None:
        """Test that infinite thresholds leave the multipliers at zero"""
        scenario = random_scenario(np.random.default_rng(4), 3, 3)
        result = iadrmpic_run(scenario)
        assert_array_equal(result.nu, np.zeros((1, 3)))
        self.assertTrue(result.converged)
        self.assertGreaterEqual(
            result.primal_value, iadrmp_run(scenario).sum_rate - 1e-9
        )

    def test_zero_tolerance_shuts_down(self) -> None:
        """Test that Q = 0 with derived masks leaves every couple silent"""
        scenario = random_scenario(np.random.default_rng(5), 3, 2, thresholds=0.0)
        scenario = scenario.with_masks(
            derive_masks(scenario, MaskMode.INTERFERENCE_DERIVED)
        )
        result = iadrmpic_run(scenario)
        self.assertTrue(result.converged)
        self.assertEqual(result.primal_value, 0.0)
        assert_array_equal(result.powers, np.zeros((3, 2)))

    def test_step_size_must_be_positive(self) -> None:
        """Test that gamma <= 0 is rejected"""
        scenario = random_scenario(np.random.default_rng(6), 2, 2, thresholds=0.3)
        with self.assertRaises(InputError):
            iadrmpic_run(scenario, gamma=0.0)

    def test_cellular_instances_meet_thresholds(self) -> None:
        """Test convergence below 1.05 Q on default cellular drops at Q = noise"""
        for seed in range(5):
            with self.subTest(seed=seed):
                scenario = generate_scenario(
                    seed, TopologyParams(), ChannelParams(), RadioParams()
                )
                result = iadrmpic_run(scenario)
                self.assertTrue(result.converged)
                self.assertLessEqual(
                    result.max_interference_ratio(scenario.thresholds), 1.05
                )
                self.assertGreater(result.primal_value, 0.0)

    def test_steady_progress_keeps_step_size(self) -> None:
        """Test that a one-sided approach to the thresholds never halves gamma"""
        scenario = generate_scenario(0, TopologyParams(), ChannelParams(), RadioParams())
        result = iadrmpic_run(scenario, max_outer=10)
        ratios = [
            float(np.max(record.interference / scenario.thresholds))
            for record in result.trace
        ]
        if all(ratio > 1.0 + VIOLATION_TOLERANCE for ratio in ratios):
            self.assertEqual({record.gamma for record in result.trace}, {0.1})


class TestDualBound(unittest.TestCase):
    """Test class for the ellipsoid upper bound"""

    def test_weak_duality(self) -> None:
        """Test that the bound is not below the heuristic's value"""
        for seed in range(3):
            rng = np.random.default_rng(seed)
            scenario = random_scenario(rng, 3, 2, thresholds=0.3)
            result = iadrmpic_run(scenario)
            bound = dual_upper_bound(
                scenario,
                num_orders=2,
                num_inits=1,
                max_steps=30,
                rng=rng,
                warm_starts=[result.powers],
            )
            # a slightly violated heuristic profile is priced at the bound's nu
            violation = np.minimum(scenario.thresholds - result.interference, 0.0)
            self.assertGreaterEqual(
                bound.value,
                result.primal_value + float(np.sum(bound.nu * violation)) - 1e-9,
            )
            self.assertEqual(bound.value, min(bound.evaluations))
            self.assertLessEqual(bound.steps, 30)

    def test_weak_duality_on_cellular_instances(self) -> None:
        """Test the bound against the heuristic on default cellular drops"""
        for seed in range(3):
            with self.subTest(seed=seed):
                scenario = generate_scenario(
                    seed, TopologyParams(), ChannelParams(), RadioParams()
                )
                result = iadrmpic_run(scenario)
                bound = dual_upper_bound(
                    scenario,
                    num_orders=2,
                    num_inits=1,
                    max_steps=20,
                    rng=np.random.default_rng(seed),
                    warm_starts=[result.powers],
                )
                violation = np.minimum(scenario.thresholds - result.interference, 0.0)
                priced = result.primal_value + float(np.sum(bound.nu * violation))
                self.assertGreaterEqual(bound.value, priced - 1e-6 * abs(priced))

    def test_no_finite_threshold(self) -> None:
        """Test that without constraints the bound is one multi-start evaluation"""
        scenario = random_scenario(np.random.default_rng(7), 3, 2)
        bound = dual_upper_bound(scenario, num_orders=2, num_inits=1)
        self.assertEqual(bound.steps, 0)
        self.assertEqual(len(bound.evaluations), 1)
        self.assertGreaterEqual(bound.value, iadrmp_run(scenario).sum_rate - 1e-12)


if __name__ == "__main__":
    unittest.main()
