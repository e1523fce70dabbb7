"""
Environment configuration.

Values are read once at import time, after loading a ``.env`` file if one is
present. Every variable is optional; a present but malformed value raises
``ValueError``.
"""

import os

from dotenv import load_dotenv

load_dotenv()

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def positive_float(name: str, default: float) -> float:
    """
    Read a strictly positive float from the environment.

    Parameters:
    - name (str): The environment variable name.
    - default (float): The value used when the variable is unset or empty.

    Returns:
    - The parsed value.
    """
    value = os.environ.get(name)
    if value is None or value == "":
        return default
    try:
        parsed = float(value)
    except ValueError:
        raise ValueError(f"{name} is not a valid float") from None
    if not parsed > 0:
        raise ValueError(f"{name} is not a valid positive float")
    return parsed


def log_level(name: str, default: str) -> str:
    value = os.environ.get(name)
    if value is None or value == "":
        return default
    if value.upper() not in LOG_LEVELS:
        raise ValueError(f"{name} is not a valid logging level")
    return value.upper()


TAIL_TOLERANCE = positive_float("HCSLAB_TAIL_TOLERANCE", 1e-10)
EIGEN_CLIP = positive_float("HCSLAB_EIGEN_CLIP", 1e-12)
GRAM_REGULARIZATION = positive_float("HCSLAB_GRAM_REGULARIZATION", 1e-12)
MERGE_DISTANCE = positive_float("HCSLAB_MERGE_DISTANCE", 1e-12)
GRAM_CONDITION_LIMIT = positive_float("HCSLAB_GRAM_CONDITION_LIMIT", 1e14)
TRACE_DRIFT = positive_float("HCSLAB_TRACE_DRIFT", 1e-6)
LOG_LEVEL = log_level("HCSLAB_LOG_LEVEL", "WARNING")
