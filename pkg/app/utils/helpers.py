import zlib
from typing import List

import numpy as np

from app.core.config import settings
from app.core.errors import InputError


def trial_rng(seed: int, salt: str, trial: int) -> np.random.Generator:
    """Independent generator for one trial of one named law."""
    return np.random.default_rng([seed, zlib.crc32(salt.encode()), trial])


def format_decimal(value: float) -> str:
    """Decimal string with enough digits to round-trip a double exactly."""
    return f"{value:.{settings.DECIMAL_DIGITS}g}"


def parse_decimal(text: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise InputError(f"{text!r} is not a decimal number")


def parse_symbol(text: str):
    """Domain symbols that look like integers are used as integers."""
    text = text.strip()
    if text.lstrip("-").isdigit() and str(int(text)) == text:
        return int(text)
    return text


def parse_float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"Expected a comma-separated list of numbers, got {text!r}")
