import logging
import os

from config import app_config
from log import Log

ARTIFACT_VERSION = "0.1.0"

LOGGER = Log(
    "hdlss-robust",
    log_dir=os.getenv("HDLSS_LOG_DIR"),
    log_level=logging.INFO,
).get_logger(logger_name="hdlss")


def get_settings(test_config=None, env=None):
    """
    Resolve the settings mapping used by every command: config class first, then an optional mapping on top
    """

    env = env or os.getenv("HDLSS_ENV", "development")
    if env not in app_config:
        from src.errors import ConfigError
        raise ConfigError(f"Unknown settings environment '{env}'. Use one of: {', '.join(sorted(app_config))}.")

    LOGGER.debug(f"Load settings from config.{app_config[env].__name__}")
    config_class = app_config[env]
    settings = {key: getattr(config_class, key) for key in dir(config_class) if key.isupper()}

    if test_config is not None:
        LOGGER.debug(f"test-config is not None ({test_config}). Add settings from mapping")
        settings.update(test_config)

    LOGGER.setLevel(settings.get("LOG_LEVEL", "INFO"))
    return settings
