"""
Effective run configuration: defaults < environment < config file < flags.
"""

import argparse
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import orjson
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from core.model_1_4_0.model import ModelConfig
from core.training_1_5_0.trainer import TrainConfig
from core.utils.errors import FormatError, MissingFileError
from core.utils.helpers import dump_json

SECTIONS: Dict[str, type] = {"model": ModelConfig, "train": TrainConfig}


class RunConfig(BaseSettings):
    """Model and training sections; ``I2MV_TRAIN__LR=0.01`` sets train.lr."""

    model_config = SettingsConfigDict(env_prefix="I2MV_", env_nested_delimiter="__", extra="forbid")

    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)

    def header(self) -> str:
        return "# effective config\n" + dump_json(self.model_dump()).decode("utf-8")


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    """One ``--<section>.<field>`` flag per config field."""
    group = parser.add_argument_group("configuration overrides")
    for section, model in SECTIONS.items():
        for name, info in model.model_fields.items():
            group.add_argument(f"--{section}.{name}", dest=f"{section}.{name}", default=None, metavar="VALUE",
                               help=info.description)


def parse_value(raw: str) -> Any:
    """JSON literals (numbers, booleans, lists, null) are decoded; anything else stays a string."""
    try:
        return orjson.loads(raw)
    except orjson.JSONDecodeError:
        return raw


def flag_overrides(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    overrides: Dict[str, Dict[str, Any]] = {}
    for key, raw in vars(args).items():
        section, _, name = key.partition(".")
        if section in SECTIONS and name and raw is not None:
            overrides.setdefault(section, {})[name] = parse_value(raw)
    return overrides


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path)
    try:
        payload = orjson.loads(path.read_bytes())
    except orjson.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON ({exc})", path=path) from exc
    if not isinstance(payload, dict):
        raise FormatError("config file must hold a JSON object", path=path)
    return payload


def _merge(*layers: Mapping[str, Any]) -> Dict[str, Any]:
    merged: Dict[str, Any] = {}
    for layer in layers:
        for key, value in layer.items():
            if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = dict(value) if isinstance(value, Mapping) else value
    return merged


def build_run_config(config_path: Optional[Union[str, Path]] = None,
                     overrides: Optional[Mapping[str, Any]] = None,
                     base: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Resolve the effective configuration.

    ``base`` replaces the built-in defaults for the fields it names and, like
    the file and flags, takes precedence over the environment.

    Raises:
        pydantic.ValidationError: On unknown keys or invalid values.
    """
    file_values = read_config_file(config_path) if config_path else {}
    return RunConfig(**_merge(base or {}, file_values, overrides or {}))
