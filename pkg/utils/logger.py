import logging
from typing import Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logger(verbose: bool = False, log_file: Optional[str] = None) -> logging.Logger:
    """
    Configure the root logger with a stderr handler and an optional file handler.
    Stdout is reserved for reports. Calling it again only adjusts the levels.
    """
    logger: logging.Logger = logging.getLogger()  # Get the root logger
    logger.setLevel(logging.DEBUG)
    level = logging.DEBUG if verbose else logging.INFO

    console = next((h for h in logger.handlers if getattr(h, "name", None) == "qam-console"), None)
    if console is None:
        console = logging.StreamHandler()  # stderr
        console.set_name("qam-console")
        console.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(console)
    console.setLevel(level)

    if log_file and not any(getattr(h, "name", None) == "qam-file" for h in logger.handlers):
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.set_name("qam-file")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_handler)

    # numpy RuntimeWarnings (overflow in exp, log of 0) go through logging too
    logging.captureWarnings(True)
    logging.getLogger("asyncio").setLevel(logging.WARNING)

    return logger
