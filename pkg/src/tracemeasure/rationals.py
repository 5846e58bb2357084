"""Exact probability helpers.

Probabilities throughout the package are `fractions.Fraction` values in [0, 1],
kept in lowest terms by construction. Floats never enter any computation; the
decimal renderings produced here are advisory display strings only.
"""

from __future__ import annotations

from fractions import Fraction

Prob = Fraction


def check_prob(value: Fraction, what: str = "probability") -> Fraction:
    """Validate that `value` is an exact rational in [0, 1]."""
    if not isinstance(value, Fraction):
        raise TypeError(f"{what} must be an exact Fraction, got {type(value).__name__}")
    if value < 0 or value > 1:
        raise ValueError(f"{what} out of range [0, 1]: {value}")
    return value


def format_prob(value: Fraction) -> str:
    """Render an exact rational the way the CLI prints it (`1/4`, `0`, `1`)."""
    return str(Fraction(value))


def format_decimal(value: Fraction, digits: int = 10) -> str:
    """Advisory decimal rendering with `digits` significant digits."""
    return f"{float(value):.{digits}g}"


def parse_prob(text: str) -> Fraction:
    """Parse `n/d`, integer, or decimal text into an exact Fraction."""
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc
    return value
