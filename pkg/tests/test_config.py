import logging

import pytest

from config import app_config
from log import Log
from src import get_settings
from src.errors import ConfigError


def test_development_config():
    """
    Development settings log at DEBUG and keep the full-size protocol
    """

    settings = get_settings(env="development")
    assert settings["DEBUG"]
    assert not settings["TESTING"]
    assert settings["LOG_LEVEL"] == "DEBUG"
    assert settings["R"] == 200


def test_production_config():
    """
    Production settings are neither debug nor testing
    """

    settings = get_settings(env="production")
    assert not settings["DEBUG"]
    assert not settings["TESTING"]


def test_testing_config():
    """
    Testing settings shrink the replication count and the ensembles
    """

    settings = get_settings(env="testing")
    assert settings["DEBUG"]
    assert settings["TESTING"]
    assert settings["R"] < app_config["development"].R
    assert settings["B"] < app_config["development"].B


def test_env_variable_selects_config(monkeypatch):
    """
    HDLSS_ENV picks the config class when no env is passed
    """

    monkeypatch.setenv("HDLSS_ENV", "production")
    assert not get_settings()["TESTING"]


def test_mapping_overrides_config():
    """
    A mapping passed to get_settings is layered on top of the config class
    """

    settings = get_settings(test_config={"R": 3, "B": 7}, env="testing")
    assert settings["R"] == 3
    assert settings["B"] == 7
    assert settings["TRAIN_FRACTION"] == pytest.approx(2 / 3)


def test_unknown_env():
    """
    An unknown environment is a config error
    """

    with pytest.raises(ConfigError, match="Unknown settings environment"):
        get_settings(env="staging")


def test_defaults_cover_every_method_setting():
    """
    The defaults carry every key the method registry reads
    """

    settings = get_settings(env="development")
    for key in ("REGULARIZATION", "REG_LAMBDA", "REG_ALPHA", "MCD_STARTS", "PP_RANDOM_DIRECTIONS", "PP_REFINE_ROUNDS",
                "PP_STEP", "PP_PAIRWISE_LIMIT", "PP_REFINE_COORDINATES", "HUBER_C", "BIWEIGHT_C", "SIMCA_VARIANCE",
                "SIMCA_TRIM", "B", "D_MODE", "D", "MAX_DEPTH", "MIN_LEAF", "N_JOBS", "WORKERS", "RECORD_RUNTIME"):
        assert key in settings


def test_log_file_handler(tmp_path):
    """
    A log directory adds a rotating file handler next to the console one
    """

    logger = Log("hdlss-test", log_dir=str(tmp_path), log_level=logging.DEBUG).get_logger("hdlss-test-file")
    assert len(logger.handlers) == 2
    logger.info("written")
    assert any(path.name.startswith("hdlss-test_") for path in tmp_path.iterdir())
