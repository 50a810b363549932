"""Tests for sounding module"""

import unittest

import numpy as np
from numpy.testing import assert_allclose

from d2d_power import rate_model, utils
from d2d_power.errors import InputError
from d2d_power.game_engine import iadrmp_run
from d2d_power.sounding import build_frame, measure_and_estimate, sounding_penalty
from instances import random_scenario


class TestSounding(unittest.TestCase):
    """Test class for measurement-based penalty estimation"""

    def setUp(self) -> None:
        rng = np.random.default_rng(0)
        self.scenario = random_scenario(rng, 4, 3, num_cells=2, thresholds=0.5)
        self.p = rng.uniform(0.05, 0.3, size=(4, 3))

    def test_exact_reconstruction(self) -> None:
        """Test that noiseless sounding reproduces alpha"""
        frame = build_frame(self.p, None, self.scenario)
        for k in range(4):
            self.assertLess(
                utils.relative_error(
                    measure_and_estimate(k, frame, self.scenario),
                    rate_model.alpha(k, self.p, self.scenario),
                ),
                1e-12,
            )

    def test_reconstruction_with_multipliers(self) -> None:
        """Test that eNB broadcasts add the interference price"""
        nu = np.array([[0.5, 0.0, 1.0], [0.2, 0.3, 0.0]])
        frame = build_frame(self.p, nu, self.scenario, p0=1e-2)
        for k in range(4):
            expected = rate_model.alpha(
                k, self.p, self.scenario
            ) - rate_model.interference_penalty(k, nu, self.scenario)
            self.assertLess(
                utils.relative_error(
                    measure_and_estimate(k, frame, self.scenario), expected
                ),
                1e-12,
            )

    def test_broadcast_powers_non_negative(self) -> None:
        """Test that receivers and eNBs send delta p0 and nu p0"""
        nu = np.full((2, 3), 0.4)
        frame = build_frame(self.p, nu, self.scenario, p0=2e-3)
        self.assertTrue(np.all(frame.rx_broadcast >= 0.0))
        assert_allclose(
            frame.rx_broadcast, rate_model.delta_matrix(self.p, self.scenario) * 2e-3
        )
        assert_allclose(frame.enb_broadcast, nu * 2e-3)

    def test_invalid_reference_power(self) -> None:
        """Test that p0 must be positive"""
        with self.assertRaises(InputError):
            build_frame(self.p, None, self.scenario, p0=0.0)

    def test_negative_multipliers(self) -> None:
        """Test that eNBs cannot broadcast negative prices"""
        with self.assertRaises(InputError):
            build_frame(self.p, -np.ones((2, 3)), self.scenario)

    def test_noisy_estimate_is_reproducible(self) -> None:
        """Test that measurement noise follows the supplied generator"""
        frame = build_frame(self.p, None, self.scenario)
        first = measure_and_estimate(
            0, frame, self.scenario, 0.1, np.random.default_rng(3)
        )
        second = measure_and_estimate(
            0, frame, self.scenario, 0.1, np.random.default_rng(3)
        )
        exact = measure_and_estimate(0, frame, self.scenario)
        assert_allclose(first, second)
        self.assertFalse(np.allclose(first, exact))

    def test_dynamics_with_sounding(self) -> None:
        """Test that IADRMP driven by exact sounding matches the direct run"""
        direct = iadrmp_run(self.scenario)
        sounded = iadrmp_run(self.scenario, penalty=sounding_penalty(self.scenario))
        assert_allclose(sounded.powers, direct.powers, rtol=1e-6, atol=1e-9)
        self.assertAlmostEqual(sounded.sum_rate, direct.sum_rate, places=6)


if __name__ == "__main__":
    unittest.main()
