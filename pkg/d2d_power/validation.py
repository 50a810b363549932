"""Validation class for evaluating an experiment configuration file"""

import json
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum, Flag
from pathlib import Path
from typing import Any, Optional

from jsonschema.exceptions import ValidationError
from jsonschema.validators import Draft6Validator

SCHEMA_NAME: str = "experiment-config"
DEFAULT_NUM_SUBCARRIERS: int = 24
DEFAULT_SCENARIO_COUNT: int = 3


class Result(Flag):
    """
    Represents the overall validation result value as a combination of flags.
    """

    SUCCESS = 0
    """validation successful"""

    FAILURE = 1
    """validation failed"""


class ValidationFailure(str, Enum):
    """Validation failure types, one per error class reported to the user"""

    MISSING_FILE = "configuration file not found"
    """path does not point to a readable file"""

    MALFORMED_SYNTAX = "configuration is not valid JSON"
    """file could not be parsed"""

    DUPLICATE_KEY = "key defined more than once"
    """same key appears twice in one object"""

    UNKNOWN_KEY = "unknown key"
    """key is not part of the configuration schema"""

    INVALID_VALUE = "invalid value"
    """value has the wrong type or is out of range"""

    INVALID_COMBINATION = "inconsistent values"
    """individually valid values contradict each other"""


@dataclass
class Finding:
    """
    Class for storing an individual finding during configuration validation
    """

    failure: ValidationFailure
    """Validation failure"""

    message: str
    """Corresponding failure message"""

    message_additional: str = ""
    """Addition information, including the line where it is known"""

    def __str__(self) -> str:
        suffix = f" ({self.message_additional})" if self.message_additional else ""
        return f"{self.failure.name}: {self.message}{suffix}"


class AbstractConfigValidator(ABC):
    """
    Abstract interface for configuration validators
    """

    @abstractmethod
    def validate(self, path: str | Path, debug: bool = False) -> Result:
        """
        Run validation on a configuration file.

        Args:
            path (str | Path): Configuration file to be validated
            debug (bool): Print every finding

        Returns:
            Result: Validation result
        """

    @abstractmethod
    def details(self) -> list[Finding]:
        """
        Return a list of all individual findings occurred during the last validation.
        The data will last until a new validation is executed.

        Returns:
            list[Finding]: List of findings
        """


class ConfigValidator(AbstractConfigValidator):
    """
    Validator class checking syntax, duplicate keys, the packaged schema and
    cross-field consistency of an experiment configuration.
    """

    def __init__(self, schema_name: str = SCHEMA_NAME) -> None:
        self.__schema_name: str = schema_name
        self.__text: str = ""
        self.__document: Optional[dict[str, Any]] = None
        self.__duplicates: list[str] = []
        self.__findings: list[Finding] = []

    def validate(self, path: str | Path, debug: bool = False) -> Result:
        self.__reset()
        self.__validate_file(Path(path))

        if debug:
            self.__debug()

        return Result.SUCCESS if len(self.__findings) == 0 else Result.FAILURE

    def details(self) -> list[Finding]:
        return self.__findings

    def document(self) -> dict[str, Any]:
        """
        Parsed document of the last successful validation

        Returns:
            dict[str, Any]: Raw configuration as read from the file
        """
        assert self.__document is not None
        return self.__document

    def __reset(self) -> None:
        self.__text = ""
        self.__document = None
        self.__duplicates = []
        self.__findings = []

    def __add(self, failure: ValidationFailure, additional: str = "") -> None:
        self.__findings.append(Finding(failure, failure.value, additional))

    def __validate_file(self, path: Path) -> None:
        if not path.is_file():
            self.__add(ValidationFailure.MISSING_FILE, str(path))
            return

        self.__text = path.read_text(encoding="utf-8")
        try:
            document = json.loads(self.__text, object_pairs_hook=self.__collect_pairs)
        except json.JSONDecodeError as ex:
            self.__add(
                ValidationFailure.MALFORMED_SYNTAX,
                f"line {ex.lineno}, column {ex.colno}: {ex.msg}",
            )
            return

        for key in self.__duplicates:
            self.__add(
                ValidationFailure.DUPLICATE_KEY,
                f"'{key}' at line {self.__line_of(key)}",
            )
        if not isinstance(document, dict):
            self.__add(ValidationFailure.INVALID_VALUE, "top level must be an object")
            return

        # structure first, cross-field rules only make sense on a valid structure
        self.__validate_schema(document)
        if not self.__findings:
            self.__validate_combinations(document)
        if not self.__findings:
            self.__document = document

    def __collect_pairs(self, pairs: list[tuple[str, Any]]) -> dict[str, Any]:
        result: dict[str, Any] = {}
        for key, value in pairs:
            if key in result:
                self.__duplicates.append(key)
            result[key] = value
        return result

    def __line_of(self, key: str) -> Optional[int]:
        """
        Line of the last occurrence of a key in the source text

        Args:
            key (str): Object key

        Returns:
            Optional[int]: 1-based line number, None if not found
        """
        matches = list(re.finditer(rf'"{re.escape(key)}"\s*:', self.__text))
        if not matches:
            return None
        return self.__text.count("\n", 0, matches[-1].start()) + 1

    def __read_schema_file(self) -> dict[str, Any]:
        with open(
            Path(__file__)
            .parent.joinpath("schemas")
            .joinpath(f"{self.__schema_name}.json"),
            "r",
            encoding="utf-8",
        ) as f:  # pylint: disable=C0103
            return json.load(f)

    def __validate_schema(self, document: dict[str, Any]) -> None:
        schema: dict[str, Any] = self.__read_schema_file()
        errors: list[ValidationError] = sorted(
            Draft6Validator(schema).iter_errors(document),
            key=lambda error: [str(part) for part in error.absolute_path],
        )
        for error in errors:
            location = "/".join(str(part) for part in error.absolute_path) or "<root>"
            if error.validator == "additionalProperties":
                known = set(error.schema.get("properties", {}))
                for key in sorted(set(error.instance) - known):
                    self.__add(
                        ValidationFailure.UNKNOWN_KEY,
                        f"'{key}' in {location} at line {self.__line_of(key)}",
                    )
                continue
            last_key = next(
                (part for part in reversed(error.absolute_path) if isinstance(part, str)),
                None,
            )
            line = f" at line {self.__line_of(last_key)}" if last_key else ""
            self.__add(
                ValidationFailure.INVALID_VALUE,
                f"{location}{line}: {error.message}",
            )

    def __validate_combinations(self, document: dict[str, Any]) -> None:
        comparison: dict[str, Any] = document.get("comparison", {})
        num_subcarriers = comparison.get("num_subcarriers", DEFAULT_NUM_SUBCARRIERS)
        dedicated = comparison.get("dedicated_subcarriers", [4, 8, 12])
        q_max_count = len(comparison.get("q_max", range(DEFAULT_SCENARIO_COUNT)))
        if q_max_count != len(dedicated):
            self.__add(
                ValidationFailure.INVALID_COMBINATION,
                "comparison: dedicated_subcarriers and q_max differ in length",
            )
        for value in dedicated:
            if value > num_subcarriers:
                self.__add(
                    ValidationFailure.INVALID_COMBINATION,
                    f"comparison: {value} dedicated subcarriers exceed the "
                    f"{num_subcarriers} available",
                )

        seeds = document.get("seeds")
        if isinstance(seeds, list) and len(set(seeds)) != len(seeds):
            self.__add(
                ValidationFailure.INVALID_COMBINATION,
                f"seeds contain duplicates at line {self.__line_of('seeds')}",
            )

        topology: dict[str, Any] = document.get("topology", {})
        if topology.get("d_min", 1.0) > topology.get("cell_radius", 500.0):
            self.__add(
                ValidationFailure.INVALID_COMBINATION,
                "topology: d_min exceeds the cell radius",
            )

    def __debug(self) -> None:
        for finding in self.__findings:
            print(finding.message, finding.message_additional)
