"""Unit tags accepted in run configurations.

Every quantity in a config file is written as ``"<value> <unit>"``. Natural
units carry the single tag ``natural``; SI quantities carry one of the tags
below and are converted to the SI base unit on ingestion. Ordinary
frequencies (the ``Hz`` family) become angular frequencies, so every rate the
physics layer sees is in rad/s.
"""
import math
import re

from scipy import constants

NATURAL = "natural"

LENGTH = "length"
MASS = "mass"
FREQUENCY = "frequency"
TIME = "time"

# unit tag -> factor to the SI base unit of its dimension
UNITS: dict[str, dict[str, float]] = {
    LENGTH: {
        "m": 1.0,
        "mm": constants.milli,
        "um": constants.micro,
        "nm": constants.nano,
        "pm": constants.pico,
    },
    MASS: {
        "kg": 1.0,
        "g": constants.gram,
        "u": constants.atomic_mass,
    },
    FREQUENCY: {
        "rad/s": 1.0,
        "Hz": 2.0 * math.pi,
        "kHz": 2.0 * math.pi * constants.kilo,
        "MHz": 2.0 * math.pi * constants.mega,
        "GHz": 2.0 * math.pi * constants.giga,
    },
    TIME: {
        "s": 1.0,
        "ms": constants.milli,
        "us": constants.micro,
    },
}

_QUANTITY_RE = re.compile(r"^\s*(?P<value>\S+)\s+(?P<unit>\S+)\s*$")


def split_quantity(text: str) -> tuple[float, str]:
    """Split ``"51.1 GHz"`` into ``(51.1, "GHz")``.

    Raises:
        ValueError: If the unit tag is missing or the value is not a number
    """
    match = _QUANTITY_RE.match(text)
    if match is None:
        raise ValueError(f"expected '<value> <unit>', got {text!r} (unit tag is mandatory)")
    try:
        value = float(match.group("value"))
    except ValueError:
        raise ValueError(f"not a number: {match.group('value')!r}") from None
    return value, match.group("unit")


def to_si(value: float, unit: str, dimension: str) -> float:
    """Convert a tagged value to its SI base unit (rad/s for frequencies)."""
    table = UNITS[dimension]
    if unit not in table:
        raise ValueError(
            f"unit '{unit}' is not a {dimension} unit. Valid units: {', '.join(table)}"
        )
    return value * table[unit]


def valid_units(dimension: str) -> list[str]:
    """List the tags accepted for a dimension (``natural`` for natural-unit fields)."""
    if dimension == NATURAL:
        return [NATURAL]
    return list(UNITS[dimension])
