import datetime
import logging
import os
import sys
from logging.handlers import TimedRotatingFileHandler

is_color_log_presented = True
try:
    import colorlog
except ImportError:
    is_color_log_presented = False


class Log:
    def __init__(self, logfile_name, log_dir=None, log_level=logging.INFO):
        self.log_file_formatter = logging.Formatter("%(asctime)s %(levelname)-8s | %(name)s | %(message)s")
        self.log_file = logfile_name
        self.log_dir = log_dir
        self.log_level = log_level

    def get_console_handler(self):
        """
        Print out log in the console (stderr, so that stdout stays clean for command output)
        """

        console_handler = logging.StreamHandler(sys.stderr)

        if is_color_log_presented:
            log_stream_format = " %(log_color)s%(asctime)s %(levelname)-8s%(reset)s | %(log_color)s%(message)s%(reset)s"
            log_stream_formatter = colorlog.ColoredFormatter(
                log_stream_format,
                log_colors={
                    "DEBUG": "bold_cyan",
                    "INFO": "white",
                    "WARNING": "bold_yellow",
                    "ERROR": "red",
                    "CRITICAL": "bold_red",
                },
            )
            console_handler.setFormatter(log_stream_formatter)
        else:
            console_handler.setFormatter(self.log_file_formatter)

        return console_handler

    def get_file_handler(self):
        """
        Print out log in a file rotated at midnight
        """

        os.makedirs(self.log_dir, exist_ok=True)
        file_handler = TimedRotatingFileHandler(
            filename=os.path.join(self.log_dir, datetime.datetime.now().strftime(self.log_file + "_%Y%m%d.log")),
            when="midnight",
        )
        file_handler.setFormatter(self.log_file_formatter)
        return file_handler

    def get_logger(self, logger_name):
        logger = logging.getLogger(logger_name)
        logger.setLevel(self.log_level)
        if not logger.handlers:
            logger.addHandler(self.get_console_handler())
            if self.log_dir:
                logger.addHandler(self.get_file_handler())
        logger.propagate = False
        return logger
