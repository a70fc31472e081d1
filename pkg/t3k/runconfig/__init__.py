"""Run configuration pipeline: YAML -> parsed models -> cross-field validation."""
from pathlib import Path
import logging

import pydantic
import yaml

from t3k.core.errors import ConfigError
from t3k.core.hooks import observable_registry
from t3k.runconfig.parser import RunConfig, dump_config, load_document
from t3k.runconfig.validator import ConfigValidator, config_error_from

# registers the built-in sweep observables
import t3k.services.observables  # noqa: F401

logger = logging.getLogger(__name__)

__all__ = ["RunConfig", "dump_config", "load_config", "parse_config"]


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run config document.

    Raises:
        ConfigError: With the dotted path of the offending key
    """
    try:
        data = load_document(text)
    except yaml.YAMLError as e:
        raise ConfigError("", f"malformed YAML: {e}") from e
    except TypeError as e:
        raise ConfigError("", str(e)) from e

    try:
        config = RunConfig.model_validate(data)
    except pydantic.ValidationError as e:
        raise config_error_from(e) from e

    ConfigValidator(observable_registry).validate(config)
    logger.debug(f"Parsed run config with blocks: {', '.join(data)}")
    return config


def load_config(path: Path | str) -> RunConfig:
    """Read and parse a run config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError("", f"cannot read {path}: {e}") from e
    return parse_config(text)
