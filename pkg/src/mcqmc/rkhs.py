"""Anchored-box function spaces H_q, their norms, and the integration-error check.

Functions carry the representation ``f(x) = f0 + ∫ 1_{(-inf,z)}(x) f~(z) dz``
with Lebesgue weight on the unit cube.  In d = 1 this means ``f~ = -f'`` and
``f0 = f(1)``; in d >= 2 only products of one-dimensional factors vanishing
at 1 are supported, which keeps every quadrature certified.  The weight
measure is distinct from any target density a Metropolis chain may carry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Callable, Sequence

import numpy as np
from scipy import integrate

from .discrepancy import lp_discrepancy
from .errors import CertificateError, ParameterError, QuadratureError
from .measures import TargetMeasure, UnitCube, cdf_box

__all__ = ["H1Function", "KHReport", "h_norm", "integration_error", "kh_check", "kernel_q"]

QUAD_TOL = 1e-10


@dataclass(frozen=True)
class H1Function:
    """A function with an anchored-box representation on [0,1]^d.

    ``factors`` holds per-coordinate ``(g_j, g_j')`` pairs for product
    functions (d >= 2); in d = 1 the single factor is ``(f - f0, f')``.
    """

    label: str
    dimension: int
    f0: float
    evaluate: Callable[[np.ndarray], float]
    f_tilde: Callable[[np.ndarray], np.ndarray]  # vectorized on a (k, d) grid
    factors: tuple = ()

    @staticmethod
    def from_d1(f, fprime, label: str = "f") -> "H1Function":
        """d=1 representation: ``f~ = -f'`` and ``f0 = f(1)``."""
        f0 = float(f(1.0))

        def tilde(z: np.ndarray) -> np.ndarray:
            z = np.asarray(z, dtype=float).reshape(-1)
            return -np.asarray([fprime(float(v)) for v in z])

        return H1Function(
            label=label,
            dimension=1,
            f0=f0,
            evaluate=lambda x: float(f(float(np.asarray(x).reshape(-1)[0]))),
            f_tilde=tilde,
            factors=((f, fprime),),
        )

    @staticmethod
    def from_product(f0: float, factors: Sequence[tuple], label: str = "f") -> "H1Function":
        """``f(x) = f0 + prod_j g_j(x_j)`` with every ``g_j(1) = 0``."""
        for g, _ in factors:
            if abs(float(g(1.0))) > 1e-12:
                raise ParameterError("product factors must vanish at 1 for the representation")
        d = len(factors)

        def ev(x: np.ndarray) -> float:
            x = np.asarray(x, dtype=float).reshape(-1)
            return f0 + math.prod(float(g(float(x[j]))) for j, (g, _) in enumerate(factors))

        def tilde(z: np.ndarray) -> np.ndarray:
            z = np.asarray(z, dtype=float).reshape(-1, d)
            out = np.ones(z.shape[0])
            for j, (_, gp) in enumerate(factors):
                out *= -np.asarray([gp(float(v)) for v in z[:, j]])
            return out

        return H1Function(
            label=label, dimension=d, f0=f0, evaluate=ev, f_tilde=tilde, factors=tuple(factors)
        )

    def representation_gap(self, x: float) -> float:
        """|f(x) - f0 - ∫_x^1 f~| at a d=1 point; a consistency diagnostic."""
        if self.dimension != 1:
            raise ParameterError("representation_gap is a d=1 diagnostic")
        tail, _ = integrate.quad(lambda z: float(self.f_tilde([z])[0]), x, 1.0, epsabs=QUAD_TOL)
        return abs(self.evaluate([x]) - self.f0 - tail)


def _factor_abs_power_integral(gp, q: float) -> float:
    val, err = integrate.quad(lambda z: abs(float(gp(z))) ** q, 0.0, 1.0, epsabs=QUAD_TOL, limit=200)
    if not math.isfinite(val) or err > 100 * QUAD_TOL + 1e-8 * abs(val):
        raise QuadratureError(f"norm quadrature did not certify (value={val}, err={err})")
    return val


def h_norm(f: H1Function, q: float) -> float:
    """H_q norm ``(|f0|^q + ∫ |f~|^q dz)^(1/q)`` (sup form for q = inf)."""
    if q == math.inf:
        grid = np.linspace(0.0, 1.0, 100_001)
        if f.dimension == 1:
            sup = float(np.max(np.abs(f.f_tilde(grid))))
        else:
            sup = 1.0
            for _, gp in f.factors:
                sup *= float(np.max(np.abs([gp(float(v)) for v in grid])))
        return max(abs(f.f0), sup)
    if q < 1:
        raise ParameterError(f"q must be >= 1, got {q}")
    integral = 1.0
    for _, gp in f.factors:
        integral *= _factor_abs_power_integral(gp, q)
    return (abs(f.f0) ** q + integral) ** (1.0 / q)


def integration_error(
    f: H1Function, P, measure: TargetMeasure, exact_integral: float | None = None
) -> float:
    """Quadrature error ``∫ f dπ - (1/n) sum f(x_i)``."""
    pts = np.asarray(P, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if exact_integral is not None:
        mean = exact_integral
    elif f.dimension == 1:
        if measure.density is not None:
            num, _ = integrate.quad(
                lambda x: f.evaluate([x]) * measure.density_at(np.array([x])), 0.0, 1.0,
                epsabs=QUAD_TOL, limit=200,
            )
            mean = num / measure.total_mass
        else:
            mean, _ = integrate.quad(lambda x: f.evaluate([x]), 0.0, 1.0, epsabs=QUAD_TOL, limit=200)
    else:
        if not (isinstance(measure.support, UnitCube) and measure.density is None):
            raise ParameterError("d >= 2 integration needs the uniform cube (or exact_integral)")
        mean = f.f0
        prod = 1.0
        for g, _ in f.factors:
            val, _ = integrate.quad(lambda x: float(g(x)), 0.0, 1.0, epsabs=QUAD_TOL, limit=200)
            prod *= val
        mean += prod
    emp = float(np.mean([f.evaluate(x) for x in pts]))
    return mean - emp


@dataclass(frozen=True)
class KHReport:
    f_label: str
    n: int
    p: float
    error: float
    norm: float
    discrepancy: float
    budget: float
    holds: bool
    dual_gap: float | None

    def csv_row(self) -> str:
        dg = "" if self.dual_gap is None else format(self.dual_gap, ".17g")
        return ",".join(
            [
                self.f_label,
                str(self.n),
                "inf" if self.p == math.inf else format(self.p, "g"),
                format(self.error, ".17g"),
                format(self.norm, ".17g"),
                format(self.discrepancy, ".17g"),
                format(self.budget, ".17g"),
                str(self.holds).lower(),
                dg,
            ]
        )


def _dual_error_d1(f: H1Function, pts: np.ndarray, measure: TargetMeasure) -> float:
    """``∫ f~(z) h~(z) dz`` with ``h~(z) = cdf(z) - empirical(z)``, segment by segment."""
    xs = np.concatenate([[0.0], np.sort(pts[:, 0]), [1.0]])
    n = pts.shape[0]
    total = 0.0
    for k in range(len(xs) - 1):
        lo, hi = xs[k], xs[k + 1]
        if hi <= lo:
            continue
        emp = np.searchsorted(np.sort(pts[:, 0]), (lo + hi) / 2.0, side="right") / n

        def integrand(z: float, emp=emp) -> float:
            return float(f.f_tilde([z])[0]) * (cdf_box(measure, (z,)) - emp)

        val, _ = integrate.quad(integrand, lo, hi, epsabs=QUAD_TOL, limit=100)
        total += val
    return total


def kh_check(f: H1Function, P, measure: TargetMeasure, p: float, tol: float = 1e-9) -> KHReport:
    """Verify ``|∫ f dπ - mean f(x_i)| <= ||f||_{H_q} D*_p`` with 1/p + 1/q = 1.

    Also checks the dual representation of the error against the
    local-discrepancy profile in d = 1.  A violated inequality is an
    implementation bug, not a data condition, and raises.
    """
    if p == math.inf:
        q = 1.0
    elif p == 2:
        q = 2.0
    else:
        raise ParameterError(f"p must be 2 or inf, got {p}")
    pts = np.asarray(P, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    err = integration_error(f, pts, measure)
    norm = h_norm(f, q)
    disc = lp_discrepancy(pts, p, measure) if p == 2 else _star_for_kh(pts, measure)
    budget = norm * disc
    holds = abs(err) <= budget + tol
    dual_gap = None
    if f.dimension == 1:
        dual_gap = abs(err - _dual_error_d1(f, pts, measure))
    if not holds:
        raise CertificateError(
            f"integration-error inequality violated for {f.label!r}: |{err:.6g}| > {budget:.6g}"
        )
    return KHReport(
        f_label=f.label, n=pts.shape[0], p=p, error=err, norm=norm,
        discrepancy=disc, budget=budget, holds=holds, dual_gap=dual_gap,
    )


def _star_for_kh(pts: np.ndarray, measure: TargetMeasure) -> float:
    from .discrepancy import star_discrepancy_exact

    return star_discrepancy_exact(pts, measure).value


def kernel_q(x, y) -> float:
    """Reproducing kernel ``1 + prod_j (1 - max(x_j, y_j))`` for Lebesgue weight on the cube.

    In d = 1 this is the familiar ``1 + min(1-x, 1-y)``.
    """
    xv = np.asarray(x, dtype=float).reshape(-1)
    yv = np.asarray(y, dtype=float).reshape(-1)
    return 1.0 + float(np.prod(1.0 - np.maximum(xv, yv)))
