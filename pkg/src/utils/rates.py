#!/usr/bin/env python3
from __future__ import annotations

import math
from typing import List, Optional, Sequence


def observed_rate(coarse_err: Optional[float], fine_err: Optional[float], ratio: float = 2.0) -> Optional[float]:
    """log(e_coarse / e_fine) / log(ratio); None when either error is missing or not positive."""
    if coarse_err is None or fine_err is None:
        return None
    if not (coarse_err > 0.0 and fine_err > 0.0) or ratio <= 1.0:
        return None
    return math.log(coarse_err / fine_err) / math.log(ratio)


def observed_rates(resolutions: Sequence[int], errors: Sequence[Optional[float]]) -> List[Optional[float]]:
    """Rates stored against the finer entry; the first entry is always None."""
    if len(resolutions) != len(errors):
        raise ValueError("resolutions and errors differ in length")
    out: List[Optional[float]] = [None] * len(errors)
    for i in range(1, len(errors)):
        out[i] = observed_rate(errors[i - 1], errors[i], resolutions[i] / resolutions[i - 1])
    return out
