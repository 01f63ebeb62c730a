"""Exact rounding helpers shared by every score computation.

All ratio-to-score conversions in the package round half away from zero,
and the weighted aggregate is computed in exact rational arithmetic so
results are identical across platforms.
"""

from __future__ import annotations

from fractions import Fraction


def round_half_away(value: Fraction, digits: int = 0) -> Fraction:
    """Round to `digits` decimal places, ties going away from zero."""
    scale = Fraction(10) ** digits
    scaled = value * scale
    if scaled >= 0:
        rounded = (2 * scaled + 1) // 2
    else:
        rounded = -((-2 * scaled + 1) // 2)
    return Fraction(rounded, 1) / scale


def ratio_score(part: int, whole: int) -> int:
    """Map a part/whole ratio onto the 0..10 score scale."""
    if whole <= 0:
        raise ValueError("ratio_score requires a positive denominator")
    return int(round_half_away(Fraction(10 * part, whole)))
