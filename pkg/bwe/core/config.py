import configparser
import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from pydantic import ValidationError
from pydantic_settings import BaseSettings

from bwe.core.exceptions import ConfigError
from bwe.schemas.run import RunConfig

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    PROJECT_NAME: str = "Exciter/LTV Bandwidth Extension"
    ENGINE_VERSION: str = "1.0.0"
    SEED: int = 0  # BWE_SEED overrides global_seed of every run
    WORKERS: int = 0  # 0 = logical cores
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    class Config:
        env_prefix = "BWE_"
        env_file = ".env"
        case_sensitive = True
        extra = "ignore"


settings = Settings()

COMMON_SECTION = "run"


def read_config_file(path: str, command: str) -> Dict[str, str]:
    """
    Reads a `key = value` config file with one section per subcommand.
    Keys from [run] apply to every subcommand; the subcommand's own section
    overrides them.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case sensitive
    try:
        with open(path, "r", encoding="utf-8") as f:
            parser.read_file(f)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except configparser.Error as e:
        raise ConfigError(f"Malformed config file {path}: {e}") from e

    values: Dict[str, str] = {}
    for section in (COMMON_SECTION, command):
        if parser.has_section(section):
            values.update(dict(parser.items(section)))
    return values


def resolve_run_config(
    command: str,
    config_path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Builds the effective RunConfig for a subcommand.

    Precedence: defaults < config file < BWE_SEED < explicit CLI flags.
    Unknown keys anywhere are rejected.
    """
    values: Dict[str, Any] = {}
    if config_path:
        values.update(read_config_file(config_path, command))

    env = Settings()
    if "SEED" in env.model_fields_set:
        values["global_seed"] = env.SEED

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    try:
        config = RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration for '{command}': {e}") from e

    logger.debug(f"Effective config for {command}: {config.model_dump(exclude_none=True)}")
    return config


def resolve_workers(requested: int) -> int:
    """Maps the 0 = "all logical cores" convention onto a concrete count."""
    if requested and requested > 0:
        return requested
    if settings.WORKERS > 0:
        return settings.WORKERS
    return os.cpu_count() or 1


def lock_path(output_dir: str) -> Path:
    return Path(output_dir) / "run.lock"
