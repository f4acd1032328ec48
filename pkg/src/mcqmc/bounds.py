"""Closed-form evaluators for the theoretical discrepancy budgets.

Every bound consumed by experiments or tests is computed here, in plain
float arithmetic, so budgets can be audited independently of the machinery
that produces discrepancy estimates.  Logarithms are natural throughout.

The one non-computable ingredient is the absolute constant from the
empirical-process literature; it enters as the explicit parameter ``c``
(default 1.0) and is surfaced in every report that depends on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .errors import DomainError, ParameterError

__all__ = [
    "BoundInputs",
    "TailBound",
    "gap_bound",
    "hoeffding_tail",
    "hoeffding_min_n",
    "existence_bound",
    "cover_cardinality_bound",
    "koksma_hlawka_budget",
    "sphere_bounds",
    "zonal_constant",
    "complete_beta_half",
]

EXISTENCE_VARIANTS = ("chain", "pushback", "chain-coro45", "pushback-coro45")


@dataclass(frozen=True)
class BoundInputs:
    """Validated parameter bundle for budget sweeps.

    Attributes
    ----------
    alpha, M : float
        Uniform-ergodicity certificate, ``0 <= alpha < 1``, ``M > 0``.
    n : int
        Chain length, ``n >= 1``.
    delta : float
        Cover gap, in ``(0, 1]``.
    cardinality : int
        Cover size, ``>= 1``.
    d : int
        State-space dimension, ``>= 1``.
    c : float
        Stand-in for the absolute constant (``> 0``, default 1).
    c_dev : float
        Deviation threshold for the concentration tail (``> 0``).
    h1_norm : float
        Function norm used by the integration-error budget (``>= 0``).
    """

    alpha: float = 0.0
    M: float = 1.0
    n: int = 1
    delta: float = 1.0
    cardinality: int = 1
    d: int = 1
    c: float = 1.0
    c_dev: float = 0.5
    h1_norm: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < 1.0:
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.M > 0.0:
            raise DomainError(f"M must be positive, got {self.M}")
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(f"delta must lie in (0, 1], got {self.delta}")
        if self.cardinality < 1:
            raise DomainError(f"cardinality must be >= 1, got {self.cardinality}")
        if self.d < 1:
            raise DomainError(f"d must be >= 1, got {self.d}")
        if not self.c > 0.0:
            raise DomainError(f"c must be positive, got {self.c}")
        if not self.c_dev > 0.0:
            raise DomainError(f"c_dev must be positive, got {self.c_dev}")
        if self.h1_norm < 0.0:
            raise DomainError(f"h1_norm must be nonnegative, got {self.h1_norm}")


class TailBound(NamedTuple):
    """Concentration tail with the raw (possibly vacuous) value retained."""

    value: float  # clamped to [0, 1] for reporting
    raw: float


def _check_alpha_M(alpha: float, M: float) -> None:
    if not 0.0 <= alpha < 1.0:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    if not M > 0.0:
        raise DomainError(f"M must be positive, got {M}")


def gap_bound(alpha: float, M: float, n: int) -> float:
    """Worst-case gap between chain and driver discrepancies, ``alpha*M / (n*(1-alpha))``."""
    _check_alpha_M(alpha, M)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return alpha * M / (n * (1.0 - alpha))


def hoeffding_min_n(alpha: float, M: float, c_dev: float) -> float:
    """Smallest chain length for which the concentration tail is valid."""
    _check_alpha_M(alpha, M)
    if not c_dev > 0.0:
        raise DomainError(f"c_dev must be positive, got {c_dev}")
    return 4.0 * M / ((1.0 - alpha) * c_dev)


def hoeffding_tail(alpha: float, M: float, n: int, c_dev: float) -> TailBound:
    """Concentration tail for the deviation of an empirical mean of indicators.

    Returns ``2 exp(-((1-alpha)^2/M^2) (n c_dev - 2M/(1-alpha))^2 / (8n))``,
    valid for ``n >= 4M/((1-alpha) c_dev)``.  Near the validity boundary the
    raw value exceeds 1; the reported ``value`` is clamped while ``raw`` keeps
    the unclamped number.
    """
    n_min = hoeffding_min_n(alpha, M, c_dev)
    if n < n_min:
        raise DomainError(
            f"tail bound requires n >= 4M/((1-alpha)*c_dev) = {n_min:.6g}, got n = {n}"
        )
    shift = n * c_dev - 2.0 * M / (1.0 - alpha)
    raw = 2.0 * math.exp(-((1.0 - alpha) ** 2 / M**2) * shift**2 / (8.0 * n))
    return TailBound(value=min(1.0, max(0.0, raw)), raw=raw)


def existence_bound(
    alpha: float,
    M: float,
    n: int,
    *,
    cardinality: int | None = None,
    delta: float | None = None,
    d: int | None = None,
    c: float | None = None,
    variant: str = "chain",
) -> float:
    """Existence budget for the discrepancy of a well-chosen driver sequence.

    Variants
    --------
    ``chain``
        ``8M/(1-alpha) * sqrt(log(cardinality)/n) + delta``.
    ``pushback``
        chain budget plus one ``gap_bound`` term.
    ``chain-coro45`` / ``pushback-coro45``
        Anchored-box specialization
        ``8M/(1-alpha) * sqrt(d log(3+4c^2 n)/n) + sqrt(d/n)`` plus two
        (chain) resp. one (pushback) ``gap_bound`` terms.
    """
    _check_alpha_M(alpha, M)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if variant not in EXISTENCE_VARIANTS:
        raise ParameterError(f"unknown variant {variant!r}; expected one of {EXISTENCE_VARIANTS}")
    gap = gap_bound(alpha, M, n)
    lead = 8.0 * M / (1.0 - alpha)
    if variant in ("chain", "pushback"):
        if cardinality is None or delta is None:
            raise ParameterError(f"variant {variant!r} requires cardinality and delta")
        if cardinality < 1:
            raise DomainError(f"cardinality must be >= 1, got {cardinality}")
        if not 0.0 < delta <= 1.0:
            raise DomainError(f"delta must lie in (0, 1], got {delta}")
        base = lead * math.sqrt(math.log(cardinality) / n) + delta
        return base + (gap if variant == "pushback" else 0.0)
    if d is None or c is None:
        raise ParameterError(f"variant {variant!r} requires d and c")
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if not c > 0.0:
        raise DomainError(f"c must be positive, got {c}")
    base = lead * math.sqrt(d * math.log(3.0 + 4.0 * c**2 * n) / n) + math.sqrt(d / n)
    return base + (2.0 * gap if variant == "chain-coro45" else gap)


def cover_cardinality_bound(d: int, delta: float, c: float = 1.0) -> float:
    """Size bound ``(3 + 4 c^2 d / delta^2)^d`` for anchored-box covers.

    Overflowing inputs return ``+inf`` (flagged by ``math.isinf`` on the
    caller's side) rather than raising.
    """
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if not delta > 0.0:
        raise DomainError(f"delta must be positive, got {delta}")
    if not c > 0.0:
        raise DomainError(f"c must be positive, got {c}")
    try:
        base = 3.0 + 4.0 * c**2 * d / delta**2
        return base**d
    except (OverflowError, ZeroDivisionError):
        return math.inf


def koksma_hlawka_budget(d_pushback: float, alpha: float, M: float, n: int, h1_norm: float) -> float:
    """Integration-error budget ``(D_pushback + gap_bound) * h1_norm``."""
    if d_pushback < 0.0:
        raise DomainError(f"d_pushback must be nonnegative, got {d_pushback}")
    if h1_norm < 0.0:
        raise DomainError(f"h1_norm must be nonnegative, got {h1_norm}")
    return (d_pushback + gap_bound(alpha, M, n)) * h1_norm


def sphere_bounds(n: float, d: int, c: float = 1.0) -> tuple[float, float]:
    """Spherical-cap discrepancy budget and the matching lower-bound floor.

    Returns ``(c*(sqrt(d) + sqrt((d+1) log n))/sqrt(n), n**(-1/2 - 1/(2d)))``.
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    upper = c * (math.sqrt(d) + math.sqrt((d + 1) * math.log(n))) / math.sqrt(n)
    beck_lower = n ** (-0.5 - 1.0 / (2.0 * d))
    return upper, beck_lower


def _double_factorial(k: int) -> int:
    """(k)!! with the empty-product convention for k <= 0."""
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def _gamma_ratio_times_d_sqrt_pi(d: int) -> tuple[Fraction, bool]:
    """Exact value of ``d * sqrt(pi) * Gamma(d/2) / Gamma((d+1)/2)``.

    Returns ``(q, needs_pi)`` where the value is ``q`` for even ``d`` and
    ``q * pi`` for odd ``d``.  Half-integer gamma values reduce to double
    factorials, so the ratio is exactly rational (times pi when d is odd);
    computing it this way keeps ``zonal_constant(2) == 16.0`` bit-exact.
    """
    if d % 2 == 0:
        q = Fraction(d * math.factorial(d // 2 - 1) * 2 ** (d // 2), _double_factorial(d - 1))
        return q, False
    q = Fraction(d * _double_factorial(d - 2), 2 ** ((d - 1) // 2) * math.factorial((d - 1) // 2))
    return q, True


def zonal_constant(d: int) -> float:
    """Mesh-norm constant ``c_d = 8 (d sqrt(pi) Gamma(d/2) / Gamma((d+1)/2))^{1/d}``.

    ``zonal_constant(2)`` is exactly 16, and ``c_d < 21`` for every ``d >= 2``.
    For ``d = 1`` the formula evaluates to ``8*pi``; the usual ``< 21`` squeeze
    needs the gamma ratio to be at most 1, which only holds from ``d = 3`` on
    (at ``d = 2`` the exact value 16 is still below 21).
    """
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    q, needs_pi = _gamma_ratio_times_d_sqrt_pi(d)
    inner = float(q) * (math.pi if needs_pi else 1.0)
    if d == 1:
        return 8.0 * inner
    if d == 2:
        return 8.0 * math.sqrt(inner)
    return 8.0 * inner ** (1.0 / d)


def complete_beta_half(d: int) -> float:
    """Complete beta value ``B(d/2, 1/2) = sqrt(pi) Gamma(d/2) / Gamma((d+1)/2)``."""
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    q, needs_pi = _gamma_ratio_times_d_sqrt_pi(d)
    return float(q / d) * (math.pi if needs_pi else 1.0)
