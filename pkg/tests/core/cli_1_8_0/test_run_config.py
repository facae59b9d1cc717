import argparse

import orjson
import pytest
from pydantic import ValidationError

from core.cli_1_8_0.run_config import add_config_flags, build_run_config, flag_overrides, parse_value, read_config_file
from core.utils.errors import FormatError, MissingFileError


@pytest.fixture
def parser():
    parser = argparse.ArgumentParser()
    add_config_flags(parser)
    return parser


def test_parse_value():
    """Test flag value decoding.

    This test verifies that:
    1. JSON literals decode to numbers, booleans, lists and null
    2. Anything else stays a string
    """
    assert parse_value("3") == 3
    assert parse_value("0.5") == 0.5
    assert parse_value("true") is True
    assert parse_value("[0, 0.5, 1]") == [0, 0.5, 1]
    assert parse_value("null") is None
    assert parse_value("mean") == "mean"


def test_flag_overrides_group_by_section(parser):
    """Test collecting --section.field flags.

    This test verifies that:
    1. Only flags that were given appear
    2. Values are grouped under their section
    """
    args = parser.parse_args(["--model.r", "16", "--train.lambda_local", "0.5"])
    assert flag_overrides(args) == {"model": {"r": 16}, "train": {"lambda_local": 0.5}}


def test_precedence(tmp_path, parser, monkeypatch):
    """Test defaults < environment < file < flags.

    This test verifies that:
    1. The environment overrides defaults
    2. The file overrides the environment
    3. Flags override the file
    """
    monkeypatch.setenv("I2MV_TRAIN__EPOCHS", "7")
    monkeypatch.setenv("I2MV_MODEL__R", "12")
    path = tmp_path / "run.json"
    path.write_bytes(orjson.dumps({"model": {"r": 16, "heads": 2}, "train": {"lr": 0.01}}))
    args = parser.parse_args(["--model.r", "24"])

    run_config = build_run_config(path, flag_overrides(args))

    assert run_config.train.epochs == 7
    assert run_config.train.lr == 0.01
    assert run_config.model.heads == 2
    assert run_config.model.r == 24
    assert run_config.model.T == 8


def test_base_overrides_environment(monkeypatch):
    """Test the base layer used by gradcheck.

    This test verifies that:
    1. Base values win over the environment
    2. Fields the base leaves out still come from the environment
    """
    monkeypatch.setenv("I2MV_MODEL__R", "64")
    monkeypatch.setenv("I2MV_MODEL__SEED", "5")
    run_config = build_run_config(base={"model": {"r": 8, "heads": 2}})
    assert run_config.model.r == 8
    assert run_config.model.seed == 5


def test_unknown_keys_rejected(tmp_path):
    """Test unknown keys.

    This test verifies that:
    1. Unknown fields and unknown sections both fail validation
    """
    path = tmp_path / "run.json"
    path.write_bytes(orjson.dumps({"model": {"width": 3}}))
    with pytest.raises(ValidationError, match="width"):
        build_run_config(path)
    path.write_bytes(orjson.dumps({"optimizer": {}}))
    with pytest.raises(ValidationError, match="optimizer"):
        build_run_config(path)


def test_header_echoes_defaults():
    """Test the effective-config header.

    This test verifies that:
    1. Every model and train field is printed, defaults included
    """
    run_config = build_run_config()
    header = run_config.header()
    assert header.startswith("# effective config\n")
    payload = orjson.loads(header.split("\n", 1)[1])
    assert set(payload["model"]) == set(type(run_config.model).model_fields)
    assert set(payload["train"]) == set(type(run_config.train).model_fields)


def test_read_config_file_errors(tmp_path):
    """Test config file errors.

    This test verifies that:
    1. A missing file raises MissingFileError
    2. Invalid JSON and non-object payloads raise FormatError
    """
    with pytest.raises(MissingFileError):
        read_config_file(tmp_path / "absent.json")
    path = tmp_path / "run.json"
    path.write_text("{not json")
    with pytest.raises(FormatError, match="invalid JSON"):
        read_config_file(path)
    path.write_text("[1, 2]")
    with pytest.raises(FormatError, match="JSON object"):
        read_config_file(path)
