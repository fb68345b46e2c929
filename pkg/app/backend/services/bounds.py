"""
Closed-form bounds and decay-rate fitting
"""
import math
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import DomainError
from ..schemas import DecayFit

EXACT_TAIL_DIRECT_MAX_N = 1000
EXACT_TAIL_MAX_N = 10**4
UNION_RATIO_SCALE = 2.0 ** 32


def chernoff(beta: float, t: float, m: int) -> float:
    """[(1 - beta + beta e^t)^8 / e^(4t)]^m"""
    return ((1.0 - beta + beta * math.exp(t)) ** 8 / math.exp(4.0 * t)) ** m


def exact_binom_tail(n: int, beta: float, k: int) -> float:
    """P(Bin(n, beta) > k), by direct summation (log-space terms above n = 1000)"""
    if not 0 <= k <= n <= EXACT_TAIL_MAX_N:
        raise DomainError(f"need 0 <= k <= n <= {EXACT_TAIL_MAX_N}, got k = {k}, n = {n}")
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    if beta == 0.0:
        return 0.0
    if beta == 1.0:
        return 1.0 if k < n else 0.0
    if n <= EXACT_TAIL_DIRECT_MAX_N:
        return math.fsum(math.comb(n, j) * beta**j * (1.0 - beta) ** (n - j) for j in range(k + 1, n + 1))
    lb, lq = math.log(beta), math.log1p(-beta)
    lgn = math.lgamma(n + 1)
    terms = [lgn - math.lgamma(j + 1) - math.lgamma(n - j + 1) + j * lb + (n - j) * lq for j in range(k + 1, n + 1)]
    if not terms:
        return 0.0
    top = max(terms)
    return min(1.0, math.exp(top) * math.fsum(math.exp(x - top) for x in terms))


def q_of_gamma(gamma: float) -> float:
    """The bond density q with 1 - gamma = (1 - q)^2"""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    return 1.0 - math.sqrt(1.0 - gamma)


def contour_bound_shape(c: float, q: float, m: int) -> float:
    if c <= 0:
        raise DomainError(f"c must be positive, got {c}")
    return (c * (1.0 - q)) ** (m / 2.0)


def union_budget(a: float) -> float:
    """sum_m (2^32 a)^m; math.inf when the series diverges"""
    if a <= 0:
        raise DomainError(f"a must be positive, got {a}")
    x = UNION_RATIO_SCALE * a
    if x >= 1.0:
        return math.inf
    return x / (1.0 - x)


def e2_bound(beta: float, s: int) -> float:
    return beta ** s


def lemma_decay_bound(c: float, gamma: float, beta: float, t: float, m: int) -> float:
    """2 [c (1 - q(gamma))]^(m/2) + beta^m + chernoff(beta, t, m)"""
    return 2.0 * contour_bound_shape(c, q_of_gamma(gamma), m) + e2_bound(beta, m) + chernoff(beta, t, m)


def word_entropy(m: int) -> int:
    """|Xi_{16m}| = 2^(2(16m - 1)), the number of words a scale-m union bound covers"""
    return 1 << (2 * (16 * m - 1))


def multiscale_scales(j_max: int) -> List[int]:
    return [4**j for j in range(j_max + 1)]


def fit_decay(points: Sequence[Tuple[int, float]]) -> DecayFit:
    """
    Least squares of log(estimate) against m; a_hat = exp(slope).

    Zero estimates are dropped and listed in the result.
    """
    kept = [(m, p) for m, p in points if p > 0]
    dropped = [m for m, p in points if p <= 0]
    if not kept:
        raise DomainError("rate indistinguishable from 0")
    if len(kept) < 2:
        raise DomainError(f"need at least two nonzero estimates, got {len(kept)}")
    ms = np.array([m for m, _ in kept], dtype=float)
    logs = np.log(np.array([p for _, p in kept], dtype=float))
    slope, intercept = np.polyfit(ms, logs, 1)
    fitted = slope * ms + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return DecayFit(points=[(int(m), float(p)) for m, p in kept], a_hat=float(math.exp(slope)), r2=r2, dropped=dropped)
