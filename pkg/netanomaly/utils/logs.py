"""Logging helpers shared by the detectors."""
import contextlib
import functools
import logging
import time
from typing import Iterator


@contextlib.contextmanager
def timelogger(logger: logging.Logger, task: str, level: int = logging.INFO) -> Iterator[None]:
    """Log the wall time of the enclosed phase (PCA fits, simulations, item-set mining)."""
    start = time.perf_counter()
    yield
    logger.log(level, f'{task} took {time.perf_counter() - start:.3f} seconds')


@functools.cache
def warn_once(logger: logging.Logger, message: str):
    # repeated numeric repairs (jitter, clamping) are reported once per message
    logger.warning(message)
