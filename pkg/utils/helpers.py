import logging
import re
from typing import List, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def wrap_to_pi(angle: ArrayLike) -> np.ndarray:
    """Wrap angle(s) into (-π, π]"""
    return np.arctan2(np.sin(angle), np.cos(angle))


def wrap_into(value: ArrayLike, lower: ArrayLike, upper: ArrayLike) -> ArrayLike:
    """
    Wrap values periodically into [lower, upper)

    Zero-width intervals collapse onto the lower bound.

    Args:
        value: Values to wrap
        lower: Lower bounds (inclusive)
        upper: Upper bounds (exclusive)

    Returns:
        Wrapped values
    """
    value = np.asarray(value, dtype=float)
    lower = np.asarray(lower, dtype=float)
    width = np.asarray(upper, dtype=float) - lower
    safe_width = np.where(width > 0, width, 1.0)
    wrapped = lower + np.mod(value - lower, safe_width)
    wrapped = np.where(wrapped >= lower + safe_width, lower, wrapped)
    return np.where(width > 0, wrapped, lower)


def reflect_into(value: ArrayLike, lower: ArrayLike, upper: ArrayLike) -> ArrayLike:
    """
    Reflect values back into [lower, upper] as a triangle wave

    Args:
        value: Values to reflect
        lower: Lower bounds
        upper: Upper bounds

    Returns:
        Reflected values, always inside the closed interval
    """
    value = np.asarray(value, dtype=float)
    lower = np.asarray(lower, dtype=float)
    width = np.asarray(upper, dtype=float) - lower
    safe_width = np.where(width > 0, width, 1.0)
    folded = np.mod(value - lower, 2.0 * safe_width)
    folded = np.where(folded > safe_width, 2.0 * safe_width - folded, folded)
    return np.where(width > 0, lower + folded, lower)


def clamp_unit(value: ArrayLike) -> ArrayLike:
    """Clamp cosines into [-1, 1] before arccos"""
    return np.clip(value, -1.0, 1.0)


def format_angle(value: float) -> str:
    """Six decimals, the precision context of the published tables"""
    return f"{value:.6f}"


def format_float_list(values: Sequence[float]) -> str:
    """Comma-join floats at full precision (round-trips through float())"""
    return ",".join(repr(float(v)) for v in values)


def parse_float_list(text: str) -> List[float]:
    """
    Parse a comma- or whitespace-separated list of floats

    Args:
        text: Raw text, e.g. "0.1, 0.2 0.3"

    Returns:
        List of floats (empty list for blank input)

    Raises:
        ValueError: If any entry is not a number
    """
    tokens = [t for t in re.split(r'[,\s]+', text.strip()) if t]
    return [float(t) for t in tokens]


def clean_filename(filename: str) -> str:
    """
    Clean a string to make it safe for use as a filename

    Args:
        filename: Original filename

    Returns:
        Safe filename
    """
    # Replace invalid characters with underscore
    clean = re.sub(r'[\\/*?:"<>|]', '_', filename)
    # Replace multiple spaces/underscores with single
    clean = re.sub(r'[_\s]+', '_', clean)
    return clean.strip('_').strip()
