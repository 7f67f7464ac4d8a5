"""
The experiment configuration document: scenario, model and federation sections plus the
data and output directories. Unknown keys anywhere are errors.
"""
from typing import Any, Dict, List, Literal, Optional
import json
import logging
import os

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from fedcy.common.checks import ConfigurationError
from fedcy.common.util import FORMAT_VERSION, PathLike, write_json
from fedcy.data.synthetic import ScenarioConfig
from fedcy.federation.config import FederationConfig
from fedcy.models.phase_recognizer import ModelConfig

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

CONFIG_FILE_NAME = "config.json"


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    format_version: Literal[1] = FORMAT_VERSION
    scenario: ScenarioConfig = ScenarioConfig()
    model: ModelConfig = ModelConfig()
    federation: FederationConfig = FederationConfig()
    data_dir: str = "data/scenario"
    output_dir: str = "runs"

    @model_validator(mode="after")
    def _model_fits_scenario(self) -> "ExperimentConfig":
        if self.model.input_dim != self.scenario.input_dim:
            raise ValueError(f"model.input_dim ({self.model.input_dim}) must equal scenario.input_dim "
                             f"({self.scenario.input_dim})")
        if self.model.num_phases != self.scenario.workflow.num_phases:
            raise ValueError(f"model.num_phases ({self.model.num_phases}) must equal "
                             f"scenario.workflow.num_phases ({self.scenario.workflow.num_phases})")
        return self

    def with_overrides(self,
                       mode: Optional[str] = None,
                       seed: Optional[int] = None,
                       scenario_seed: Optional[int] = None) -> "ExperimentConfig":
        """
        Applies command line overrides: ``mode`` and ``seed`` to the federation section,
        ``scenario_seed`` to the scenario section.
        """
        document = self.model_dump(mode="json")
        if mode is not None:
            document["federation"]["mode"] = mode
        if seed is not None:
            document["federation"]["master_seed"] = seed
        if scenario_seed is not None:
            document["scenario"]["seed"] = scenario_seed
        return parse_experiment_config(document, "command line overrides")

    def to_json(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _describe_validation_error(error: ValidationError) -> List[str]:
    messages = []
    for problem in error.errors():
        location = ".".join(str(part) for part in problem["loc"]) or "<root>"
        messages.append(f"{location}: {problem['msg']}")
    return messages


def parse_experiment_config(document: Any, source: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as error:
        problems = _describe_validation_error(error)
        raise ConfigurationError(f"invalid configuration in {source}: " + "; ".join(problems)) from error


def load_experiment_config(path: PathLike) -> ExperimentConfig:
    """
    Reads and validates a JSON experiment config. Syntax errors name the line and column;
    validation errors name the dotted field path.
    """
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as config_file:
        text = config_file.read()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigurationError(f"{path}: line {error.lineno}, column {error.colno}: {error.msg}") from error
    config = parse_experiment_config(document, str(path))
    logger.info("Loaded experiment config from %s", path)
    return config


def save_experiment_config(config: ExperimentConfig, directory: PathLike) -> str:
    path = os.path.join(directory, CONFIG_FILE_NAME)
    write_json(path, config.to_json())
    return path
