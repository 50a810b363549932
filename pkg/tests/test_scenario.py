"""Tests for scenario module"""

import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from d2d_power.errors import ConfigurationError, InputError
from d2d_power.scenario import (
    ChannelParams,
    RadioParams,
    Scenario,
    TopologyParams,
    derive_masks,
    dump_scenario,
    generate_scenario,
    generate_topology,
    hex_centers,
    in_cells,
    in_hexagon,
    load_scenario,
    sample_gains,
)
from d2d_power.types import MaskMode


class TestGeometry(unittest.TestCase):
    """Test class for the hexagonal layout"""

    def test_single_cell_at_origin(self) -> None:
        """Test that the first cell is centered at the origin"""
        assert_array_equal(hex_centers(1, 500.0), np.zeros((1, 2)))

    def test_first_three_cells_mutually_adjacent(self) -> None:
        """Test that cells 0, 1 and 2 are sqrt(3) R apart from each other"""
        centers = hex_centers(3, 500.0)
        for i in range(3):
            for j in range(i + 1, 3):
                self.assertAlmostEqual(
                    float(np.linalg.norm(centers[i] - centers[j])), np.sqrt(3) * 500.0
                )

    def test_first_ring_surrounds_center(self) -> None:
        """Test that cells 1 to 6 all touch the central cell"""
        centers = hex_centers(7, 100.0)
        distances = np.linalg.norm(centers[1:], axis=1)
        assert_allclose(distances, np.sqrt(3) * 100.0)
        self.assertEqual(len({tuple(np.round(c, 6)) for c in centers}), 7)

    def test_hexagon_membership(self) -> None:
        """Test points on, inside and outside a flat-topped hexagon"""
        points = np.array(
            [[0.0, 0.0], [100.0, 0.0], [100.5, 0.0], [0.0, 90.0], [0.0, 86.0]]
        )
        assert_array_equal(
            in_hexagon(points, np.zeros(2), 100.0), [True, True, False, False, True]
        )

    def test_union_of_cells(self) -> None:
        """Test that a neighbouring cell center belongs to the union"""
        centers = hex_centers(3, 100.0)
        self.assertTrue(in_cells(centers[2], centers, 100.0)[0])
        self.assertFalse(in_cells(np.array([1000.0, 1000.0]), centers, 100.0)[0])


class TestTopology(unittest.TestCase):
    """Test class for random node drops"""

    def test_counts_and_distances(self) -> None:
        """Test couple count, receiver distance and cell membership"""
        params = TopologyParams(num_cells=3, pairs_per_cell=5, d_max=50.0)
        topology = generate_topology(params, np.random.default_rng(1))
        self.assertEqual(topology.num_couples, 15)
        self.assertEqual(topology.num_cells, 3)
        distances = np.linalg.norm(topology.tx_positions - topology.rx_positions, axis=1)
        self.assertTrue(np.all(distances <= 50.0 + 1e-9))
        centers = topology.enb_positions
        self.assertTrue(np.all(in_cells(topology.tx_positions, centers, 500.0)))
        self.assertTrue(np.all(in_cells(topology.rx_positions, centers, 500.0)))

    def test_serving_is_nearest_enb(self) -> None:
        """Test that every transmitter is served by its nearest eNB"""
        params = TopologyParams(num_cells=7, pairs_per_cell=3)
        topology = generate_topology(params, np.random.default_rng(2))
        for tx, _, serving in topology.d2d_pairs:
            distances = np.linalg.norm(topology.enb_positions - tx, axis=1)
            self.assertEqual(serving, int(np.argmin(distances)))

    def test_ues_are_dropped_per_cell(self) -> None:
        """Test UE positions and their cells"""
        params = TopologyParams(num_cells=2, pairs_per_cell=1, ues_per_cell=4)
        topology = generate_topology(params, np.random.default_rng(3))
        assert topology.ue_serving is not None
        assert_array_equal(topology.ue_serving, [0, 0, 0, 0, 1, 1, 1, 1])

    def test_zero_cells_rejected(self) -> None:
        """Test that B = 0 is a configuration error"""
        with self.assertRaises(ConfigurationError):
            generate_topology(TopologyParams(num_cells=0), np.random.default_rng(0))

    def test_invalid_geometry_rejected(self) -> None:
        """Test that out of range geometry is reported as configuration error"""
        for params in (
            TopologyParams(cell_radius=0.0),
            TopologyParams(pairs_per_cell=0),
            TopologyParams(d_max=-1.0),
            TopologyParams(d_min=0.0),
            TopologyParams(ues_per_cell=-1),
        ):
            with self.subTest(params=params):
                with self.assertRaises(ConfigurationError):
                    generate_topology(params, np.random.default_rng(0))


class TestGains(unittest.TestCase):
    """Test class for the propagation model"""

    def test_deterministic_path_loss(self) -> None:
        """Test gains without shadowing and fading against C d^-4"""
        params = TopologyParams(pairs_per_cell=2)
        topology = generate_topology(params, np.random.default_rng(4))
        channel = ChannelParams(shadowing=False, fading=False, path_loss_constant=2.0)
        gains = sample_gains(topology, channel, 3, np.random.default_rng(5))
        self.assertEqual(gains.d2d.shape, (2, 2, 3))
        self.assertEqual(gains.enb.shape, (2, 1, 3))
        distance = np.linalg.norm(topology.tx_positions[0] - topology.rx_positions[1])
        assert_allclose(gains.d2d[0, 1], 2.0 * max(distance, 1.0) ** -4.0)
        self.assertIsNone(gains.ue_enb)

    def test_fading_varies_over_subcarriers(self) -> None:
        """Test that Rayleigh fading draws one value per subcarrier"""
        topology = generate_topology(TopologyParams(), np.random.default_rng(6))
        gains = sample_gains(topology, ChannelParams(), 8, np.random.default_rng(7))
        self.assertTrue(np.all(gains.d2d > 0))
        self.assertGreater(np.ptp(gains.d2d[0, 0]), 0.0)

    def test_fading_has_unit_mean(self) -> None:
        """Test that the Rayleigh power gain averages to one"""
        topology = generate_topology(
            TopologyParams(pairs_per_cell=1), np.random.default_rng(8)
        )
        faded = sample_gains(
            topology, ChannelParams(shadowing=False), 100_000, np.random.default_rng(9)
        )
        flat = sample_gains(
            topology,
            ChannelParams(shadowing=False, fading=False),
            1,
            np.random.default_rng(9),
        )
        samples = faded.d2d[0, 0] / flat.d2d[0, 0, 0]
        self.assertEqual(samples.shape, (100_000,))
        self.assertAlmostEqual(float(np.mean(samples)), 1.0, delta=0.02)


class TestScenario(unittest.TestCase):
    """Test class for problem instances"""

    def test_builder_defaults(self) -> None:
        """Test defaults of masks, thresholds and serving cells"""
        scenario = Scenario.new().gains(np.ones((2, 2, 3))).budget(0.5).create()
        assert_array_equal(scenario.masks, np.full((2, 3), 0.5))
        self.assertTrue(np.all(np.isinf(scenario.thresholds)))
        assert_array_equal(scenario.serving, [0, 0])
        self.assertEqual(scenario.num_cells, 1)
        assert_array_equal(scenario.cross_gains[0, 0], np.zeros(3))

    def test_builder_without_gains(self) -> None:
        """Test that gains are mandatory"""
        with self.assertRaises(InputError):
            Scenario.new().create()

    def test_zero_direct_gain_rejected(self) -> None:
        """Test that G[k][k][n] must be positive"""
        gains = np.ones((2, 2, 2))
        gains[1, 1, 0] = 0.0
        with self.assertRaises(InputError):
            Scenario.new().gains(gains).create()

    def test_non_positive_noise_rejected(self) -> None:
        """Test that noise must be positive"""
        with self.assertRaises(InputError):
            Scenario.new().gains(np.ones((1, 1, 1))).noise(0.0).create()

    def test_arrays_are_read_only(self) -> None:
        """Test immutability of the tensors"""
        scenario = Scenario.new().gains(np.ones((1, 1, 1))).create()
        with self.assertRaises(ValueError):
            scenario.noise[0, 0] = 2.0

    def test_interference_derived_masks(self) -> None:
        """Test caps Q / A on the serving eNB and the cap for zero gains"""
        enb_gains = np.array([[[0.5, 0.0]], [[2.0, 4.0]]])
        scenario = (
            Scenario.new()
            .gains(np.ones((2, 2, 2)))
            .enb_gains(enb_gains)
            .thresholds(1.0)
            .create()
        )
        masks = derive_masks(scenario, MaskMode.INTERFERENCE_DERIVED, cap=10.0)
        assert_allclose(masks, [[2.0, 10.0], [0.5, 0.25]])
        assert_allclose(derive_masks(scenario, MaskMode.CONSTANT, 0.3), 0.3)

    def test_restrict_subcarriers(self) -> None:
        """Test that restricting keeps the selected subcarriers only"""
        scenario = generate_scenario(0, TopologyParams(), ChannelParams(), RadioParams())
        restricted = scenario.restrict_subcarriers(np.array([1, 3]))
        self.assertEqual(restricted.num_subcarriers, 2)
        assert_array_equal(restricted.gains, scenario.gains[:, :, [1, 3]])
        assert_array_equal(restricted.thresholds, scenario.thresholds[:, [1, 3]])

    def test_with_thresholds_broadcasts(self) -> None:
        """Test replacing the thresholds by a scalar"""
        scenario = generate_scenario(0, TopologyParams(), ChannelParams(), RadioParams())
        assert_array_equal(scenario.with_thresholds(2.0).thresholds, np.full((1, 8), 2.0))

    def test_default_instance_dimensions(self) -> None:
        """Test the default realization: one cell, 8 couples and 8 subcarriers"""
        scenario = generate_scenario(3, TopologyParams(), ChannelParams(), RadioParams())
        self.assertEqual(scenario.num_couples, 8)
        self.assertEqual(scenario.num_subcarriers, 8)
        assert_array_equal(scenario.budgets, np.full(8, 0.25))
        assert_array_equal(scenario.noise, np.full((8, 8), 1e-13))

    def test_same_seed_same_instance(self) -> None:
        """Test that a seed fully determines the realization"""
        params = (TopologyParams(num_cells=3), ChannelParams(), RadioParams())
        first = generate_scenario(11, *params)
        second = generate_scenario(11, *params)
        other = generate_scenario(12, *params)
        assert_array_equal(first.gains, second.gains)
        assert_array_equal(first.masks, second.masks)
        self.assertFalse(np.array_equal(first.gains, other.gains))

    def test_sweep_keeps_realization(self) -> None:
        """Test that changing budget or threshold keeps gains and positions"""
        radio = RadioParams()
        first = generate_scenario(5, TopologyParams(), ChannelParams(), radio)
        second = generate_scenario(
            5, TopologyParams(), ChannelParams(), replace(radio, power_budget=1.0)
        )
        assert_array_equal(first.gains, second.gains)
        assert_array_equal(second.budgets, np.full(8, 1.0))

    def test_dump_and_load(self) -> None:
        """Test that a dumped scenario loads back bit for bit"""
        scenario = generate_scenario(
            9, TopologyParams(num_cells=3, pairs_per_cell=2), ChannelParams(), RadioParams()
        )
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory).joinpath("scenario.txt")
            dump_scenario(scenario, path)
            loaded = load_scenario(path)
        for name in ("gains", "enb_gains", "noise", "budgets", "masks", "thresholds"):
            assert_array_equal(getattr(loaded, name), getattr(scenario, name))
        assert_array_equal(loaded.serving, scenario.serving)

    def test_load_malformed(self) -> None:
        """Test that a malformed header is an input error"""
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory).joinpath("scenario.txt")
            path.write_text("two one one\n", encoding="utf-8")
            with self.assertRaises(InputError):
                load_scenario(path)


if __name__ == "__main__":
    unittest.main()
