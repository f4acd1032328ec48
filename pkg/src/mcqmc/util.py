"""Small shared helpers: seeded RNG streams, certified quadrature, CSV floats."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from .errors import QuadratureError

__all__ = ["philox", "simpson_adaptive", "fmt17", "ols_slope"]


def philox(seed: int) -> np.random.Generator:
    """Counter-based Philox stream; the package's only source of randomness."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def simpson_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_panels: int = 1 << 16,
) -> float:
    """Composite Simpson with panel doubling until the Richardson estimate meets ``tol``.

    ``f`` must accept a vector of abscissae.  Raises ``QuadratureError`` when the
    panel budget is exhausted before the error estimate drops below ``tol``.
    """
    if b <= a:
        return 0.0
    panels = 8
    prev = _simpson_fixed(f, a, b, panels)
    while panels <= max_panels:
        panels *= 2
        cur = _simpson_fixed(f, a, b, panels)
        if abs(cur - prev) <= 15.0 * tol:
            return cur + (cur - prev) / 15.0
        prev = cur
    raise QuadratureError(f"Simpson rule did not reach tol={tol} within {max_panels} panels")


def _simpson_fixed(f, a: float, b: float, panels: int) -> float:
    x = np.linspace(a, b, 2 * panels + 1)
    y = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(y)):
        raise QuadratureError("integrand returned non-finite values")
    h = (b - a) / (2 * panels)
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-2:2].sum()))


def fmt17(x: float) -> str:
    """Format a float with 17 significant digits (bit-exact round trip)."""
    return format(float(x), ".17g")


def ols_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Ordinary least squares slope of y on x, with the fit's residual norm."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.linalg.norm(y - design @ coef))
    return float(coef[0]), resid
