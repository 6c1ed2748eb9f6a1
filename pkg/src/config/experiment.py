"""
Loading and validation of experiment config files (YAML).
"""

from pathlib import Path
from typing import Any, List, Union

import yaml
from pydantic import BaseModel, Field, ValidationError

from src.errors import ConfigError
from src.models.experiment import ExperimentConfig
from src.utils.logger import get_logger


logger = get_logger(__name__)

PathLike = Union[str, Path]


class ConfigReport(BaseModel):
    """Outcome of validating a config file."""

    path: str
    issues: List[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues


def _read_yaml(path: PathLike) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from e
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(
            f"{path}: YAML parse error at {where}: {e.problem}",
            issues=[f"{where}: {e.problem}"],
        ) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: YAML parse error: {e}", issues=[str(e)]) from e


def format_validation_error(error: ValidationError) -> List[str]:
    """One ``dotted.field: message`` line per pydantic error."""
    issues = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"])
        message = item["msg"]
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        if location:
            issues.extend(f"{location}: {line}" for line in message.splitlines())
        else:
            # model-level validators already prefix their lines
            issues.extend(message.splitlines())
    return issues


def parse_config(data: Any, source: str = "<memory>") -> ExperimentConfig:
    """
    Validate an already parsed mapping.

    Raises:
        ConfigError: With one issue per violated invariant
    """
    if not isinstance(data, dict):
        raise ConfigError(
            f"{source}: top level must be a mapping of blocks",
            issues=["config: top level must be a mapping"],
        )
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        issues = format_validation_error(e)
        raise ConfigError(
            f"{source}: {len(issues)} invalid setting(s)\n  " + "\n  ".join(issues),
            issues=issues,
        ) from e


def load_config(path: PathLike) -> ExperimentConfig:
    """
    Read and validate a config file.

    Raises:
        ConfigError: On unreadable files, YAML syntax errors or invalid values
    """
    config = parse_config(_read_yaml(path), source=str(path))
    logger.info("Config loaded", path=str(path), output_dir=str(config.output_dir))
    return config


def validate_config(path: PathLike) -> ConfigReport:
    """
    List every violated invariant without running anything.

    Raises:
        ConfigError: Only when the file cannot be read or parsed as YAML
    """
    data = _read_yaml(path)
    try:
        parse_config(data, source=str(path))
    except ConfigError as e:
        return ConfigReport(path=str(path), issues=e.issues)
    return ConfigReport(path=str(path))
