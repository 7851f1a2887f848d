import math

from pydantic import ValidationError

from app.core.errors import InputError
from app.schemas.run_config import RunConfig
from app.services.mechanism_io import validation_detail
from app.utils.helpers import parse_float_list


def build_config(**options) -> RunConfig:
    """Validate CLI options, reporting pydantic errors as input errors."""
    if isinstance(options.get("epsilons"), str):
        options["epsilons"] = parse_float_list(options["epsilons"])
    try:
        return RunConfig(**options)
    except ValidationError as exc:
        raise InputError(f"Invalid options: {validation_detail(exc)}")


def parse_log_base(text: str) -> float:
    if text.strip().lower() == "e":
        return math.e
    try:
        base = float(text)
    except ValueError:
        raise InputError(f"log base must be 'e' or a number, got {text!r}")
    if not base > 1:
        raise InputError("log base must exceed 1")
    return base
