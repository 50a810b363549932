"""Tests for validation and config modules"""

import json
import tempfile
import unittest
from pathlib import Path

from d2d_power.config import ExperimentConfig, parse_config
from d2d_power.errors import ConfigurationError
from d2d_power.types import ExperimentMode, MaskMode
from d2d_power.validation import ConfigValidator, Result, ValidationFailure


class ConfigFileTestCase(unittest.TestCase):
    """Base class writing configuration files into a temporary directory"""

    def setUp(self) -> None:
        self.directory = tempfile.TemporaryDirectory()  # pylint: disable=R1732
        self.addCleanup(self.directory.cleanup)

    def write(self, text: str, name: str = "config.json") -> Path:
        """Write raw text and return its path"""
        path = Path(self.directory.name).joinpath(name)
        path.write_text(text, encoding="utf-8")
        return path

    def write_json(self, document: dict) -> Path:
        """Write a document and return its path"""
        return self.write(json.dumps(document, indent=2))


class TestConfigValidation(ConfigFileTestCase):
    """Test class for configuration file validation"""

    def validate(self, path: Path) -> tuple[Result, list[ValidationFailure]]:
        """Validate and return the result with the failure classes found"""
        validator = ConfigValidator()
        result = validator.validate(path)
        return result, [finding.failure for finding in validator.details()]

    def test_minimal_config_valid(self) -> None:
        """Test that a mode alone is a complete configuration"""
        result, failures = self.validate(self.write_json({"mode": "overlay-iadrmp"}))
        self.assertEqual(result, Result.SUCCESS)
        self.assertEqual(failures, [])

    def test_missing_file(self) -> None:
        """Test that a missing path is reported as such"""
        result, failures = self.validate(Path(self.directory.name, "absent.json"))
        self.assertEqual(result, Result.FAILURE)
        self.assertEqual(failures, [ValidationFailure.MISSING_FILE])

    def test_malformed_syntax(self) -> None:
        """Test that broken JSON is reported with its line"""
        validator = ConfigValidator()
        path = self.write('{\n  "mode": "overlay-iadrmp",\n  "seeds": [1, 2,\n}\n')
        self.assertEqual(validator.validate(path), Result.FAILURE)
        self.assertEqual(
            validator.details()[0].failure, ValidationFailure.MALFORMED_SYNTAX
        )
        self.assertIn("line 4", validator.details()[0].message_additional)

    def test_duplicate_key(self) -> None:
        """Test that a repeated key is named together with its line"""
        validator = ConfigValidator()
        path = self.write(
            '{\n  "mode": "overlay-iadrmp",\n  "seeds": 2,\n  "seeds": 3\n}\n'
        )
        self.assertEqual(validator.validate(path), Result.FAILURE)
        finding = validator.details()[0]
        self.assertEqual(finding.failure, ValidationFailure.DUPLICATE_KEY)
        self.assertIn("'seeds'", finding.message_additional)
        self.assertIn("line 4", finding.message_additional)

    def test_unknown_key(self) -> None:
        """Test that keys outside the schema are rejected"""
        validator = ConfigValidator()
        path = self.write_json(
            {"mode": "overlay-iadrmp", "radio": {"num_subcarrier": 4}}
        )
        self.assertEqual(validator.validate(path), Result.FAILURE)
        finding = validator.details()[0]
        self.assertEqual(finding.failure, ValidationFailure.UNKNOWN_KEY)
        self.assertIn("'num_subcarrier'", finding.message_additional)
        self.assertIn("radio", finding.message_additional)

    def test_unknown_top_level_key(self) -> None:
        """Test that unknown keys are found at the top level too"""
        _, failures = self.validate(
            self.write_json({"mode": "overlay-iadrmp", "colour": "red"})
        )
        self.assertEqual(failures, [ValidationFailure.UNKNOWN_KEY])

    def test_missing_mode(self) -> None:
        """Test that the mode is required"""
        _, failures = self.validate(self.write_json({"seeds": 3}))
        self.assertEqual(failures, [ValidationFailure.INVALID_VALUE])

    def test_invalid_values(self) -> None:
        """Test out of range and mistyped values"""
        for document in (
            {"mode": "overlay-iadrmp", "radio": {"num_subcarriers": 0}},
            {"mode": "overlay-iadrmp", "topology": {"num_cells": 0}},
            {"mode": "overlay-iadrmp", "radio": {"power_budget": -1.0}},
            {"mode": "overlay-iadrmp", "seeds": 0},
            {"mode": "overlay-iadrmp", "seeds": "many"},
            {"mode": "overlay-everything"},
            {"mode": ["overlay-iadrmp", 3]},
        ):
            with self.subTest(document=document):
                result, failures = self.validate(self.write_json(document))
                self.assertEqual(result, Result.FAILURE)
                self.assertIn(ValidationFailure.INVALID_VALUE, failures)

    def test_dedicated_exceeds_subcarriers(self) -> None:
        """Test that N_d above N is an inconsistent combination"""
        _, failures = self.validate(
            self.write_json(
                {
                    "mode": "mode-comparison",
                    "comparison": {
                        "num_subcarriers": 8,
                        "dedicated_subcarriers": [4, 9],
                        "q_max": [1e-13, 1e-13],
                    },
                }
            )
        )
        self.assertEqual(failures, [ValidationFailure.INVALID_COMBINATION])

    def test_dedicated_equal_to_subcarriers(self) -> None:
        """Test that reserving every subcarrier to D2D is allowed"""
        result, _ = self.validate(
            self.write_json(
                {
                    "mode": "mode-comparison",
                    "comparison": {
                        "num_subcarriers": 8,
                        "dedicated_subcarriers": [8],
                        "q_max": [0.0],
                    },
                }
            )
        )
        self.assertEqual(result, Result.SUCCESS)

    def test_scenario_lists_differ(self) -> None:
        """Test that every dedicated size needs its threshold"""
        for comparison in (
            {"dedicated_subcarriers": [4, 8], "q_max": [1e-13]},
            {"dedicated_subcarriers": [4, 8]},
            {"q_max": [1e-13]},
        ):
            with self.subTest(comparison=comparison):
                _, failures = self.validate(
                    self.write_json({"mode": "mode-comparison", "comparison": comparison})
                )
                self.assertIn(ValidationFailure.INVALID_COMBINATION, failures)

    def test_duplicate_seeds(self) -> None:
        """Test that a seed list must not repeat seeds"""
        _, failures = self.validate(
            self.write_json({"mode": "overlay-iwf", "seeds": [1, 2, 1]})
        )
        self.assertEqual(failures, [ValidationFailure.INVALID_COMBINATION])

    def test_minimum_distance_beyond_radius(self) -> None:
        """Test that d_min must fit into the cell"""
        _, failures = self.validate(
            self.write_json(
                {
                    "mode": "overlay-iwf",
                    "topology": {"cell_radius": 50.0, "d_min": 60.0},
                }
            )
        )
        self.assertEqual(failures, [ValidationFailure.INVALID_COMBINATION])

    def test_findings_reset(self) -> None:
        """Test that a new validation discards earlier findings"""
        validator = ConfigValidator()
        validator.validate(self.write_json({"mode": "bogus"}))
        self.assertNotEqual(len(validator.details()), 0)
        validator.validate(self.write_json({"mode": "overlay-iwf"}))
        self.assertEqual(len(validator.details()), 0)


class TestParseConfig(ConfigFileTestCase):
    """Test class for typed configuration parsing"""

    def test_defaults(self) -> None:
        """Test the default experiment"""
        config = parse_config(self.write_json({"mode": "overlay-iadrmp"}))
        self.assertEqual(config.mode, [ExperimentMode.OVERLAY_IADRMP])
        self.assertEqual(config.seeds, [0])
        self.assertEqual(config.workers, 1)
        self.assertEqual(config.topology.num_cells, 1)
        self.assertEqual(config.topology.pairs_per_cell, 8)
        self.assertEqual(config.topology.d_max, 100.0)
        self.assertEqual(config.topology.cell_radius, 500.0)
        self.assertEqual(config.radio.num_subcarriers, 8)
        self.assertEqual(config.radio.power_budget, 0.25)
        self.assertEqual(config.radio.noise_power, 1e-13)
        self.assertEqual(config.radio.mask_mode, MaskMode.INTERFERENCE_DERIVED)
        self.assertEqual(config.algorithm.epsilon, 1e-4)
        self.assertEqual(config.comparison.dedicated_subcarriers, [4, 8, 12])
        self.assertEqual(len(config.comparison.q_max), 3)
        self.assertEqual(config.sweep_points(), [(0.25, 1e-13)])

    def test_nested_values(self) -> None:
        """Test that nested sections and enums are decoded"""
        config = parse_config(
            self.write_json(
                {
                    "mode": ["overlay-iwf", "underlay-ub"],
                    "seeds": [3, 5],
                    "radio": {"num_subcarriers": 4, "mask_mode": "constant"},
                    "algorithm": {"gamma": 0.5},
                    "sweep": {"power_budgets": [0.1, 0.2]},
                }
            )
        )
        self.assertEqual(
            config.mode, [ExperimentMode.OVERLAY_IWF, ExperimentMode.UNDERLAY_UB]
        )
        self.assertEqual(config.seeds, [3, 5])
        self.assertEqual(config.radio.num_subcarriers, 4)
        self.assertEqual(config.radio.mask_mode, MaskMode.CONSTANT)
        self.assertEqual(config.algorithm.gamma, 0.5)
        self.assertEqual(config.algorithm.max_outer, 500)
        self.assertEqual(config.sweep_points(), [(0.1, 1e-13), (0.2, 1e-13)])

    def test_seed_count(self) -> None:
        """Test that an integer seed count expands to 0 .. count - 1"""
        config = parse_config(self.write_json({"mode": "overlay-iwf", "seeds": 4}))
        self.assertEqual(config.seeds, [0, 1, 2, 3])

    def test_sweep_grid(self) -> None:
        """Test that budgets are the outer sweep axis"""
        config = parse_config(
            self.write_json(
                {
                    "mode": "underlay-iadrmpic",
                    "sweep": {
                        "power_budgets": [0.1, 0.2],
                        "interference_thresholds": [1e-13, 1e-12],
                    },
                }
            )
        )
        self.assertEqual(
            config.sweep_points(),
            [(0.1, 1e-13), (0.1, 1e-12), (0.2, 1e-13), (0.2, 1e-12)],
        )

    def test_invalid_config_raises(self) -> None:
        """Test that validation findings travel with the error"""
        with self.assertRaises(ConfigurationError) as context:
            parse_config(self.write_json({"mode": "overlay-iadrmp", "seeds": 0}))
        self.assertEqual(
            context.exception.findings[0].failure, ValidationFailure.INVALID_VALUE
        )
        self.assertIn("INVALID_VALUE", str(context.exception))

    def test_round_trip_of_resolved_config(self) -> None:
        """Test that a resolved configuration can be written and read back"""
        config = parse_config(self.write_json({"mode": "overlay-multistart"}))
        restored = ExperimentConfig.from_dict(config.to_dict(encode_json=True))
        self.assertEqual(restored, config)


if __name__ == "__main__":
    unittest.main()
