"""
Binomial interval estimates
"""
import math
from typing import Tuple

from scipy.stats import norm

from ..errors import DomainError


def wilson_ci(successes: int, trials: int, level: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval; exact 0 / 1 endpoints at the boundary counts"""
    if trials < 1 or not 0 <= successes <= trials:
        raise DomainError(f"need 0 <= successes <= trials, trials >= 1; got {successes}/{trials}")
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must lie in (0, 1), got {level}")
    z = float(norm.ppf(0.5 + level / 2.0))
    n = trials
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return min(lo, p), max(hi, p)
