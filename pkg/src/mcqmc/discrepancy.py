"""Discrepancy functionals: local, star (exact and cover-bracketed), push-back, L_p.

The anchored-box family is evaluated with both the strict (``x < anchor``)
and non-strict (``x <= anchor``) counting conventions at every candidate
anchor: the supremum over open boxes is approached from both sides of each
point coordinate, and the cover sandwich needs closed inner boxes.  Target
masses never see the distinction (the supported measures are atomless).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .chains import ChainModel, ChainPath, iterate_chain
from .drivers import DriverSequence
from .errors import CapabilityError, DomainError, SizeError, ToleranceError
from .measures import TargetMeasure, UnitCube, cdf_box
from .util import philox

__all__ = [
    "DiscrepancyReport",
    "local_discrepancy",
    "star_discrepancy_exact",
    "star_discrepancy_formula_d1",
    "star_discrepancy_sweep",
    "star_discrepancy_via_cover",
    "kernel_power",
    "pushback_discrepancy",
    "lp_discrepancy",
    "count_in_boxes",
    "clear_replica_cache",
]

SWEEP_MAX_N = 4096
SWEEP_MAX_CORNERS = 1 << 26


@dataclass(frozen=True)
class DiscrepancyReport:
    """A discrepancy value or bracket, with the method that produced it.

    ``lower == upper`` for exact methods; for cover brackets the true supremum
    lies in ``[lower, upper]`` with ``upper = min(1, lower + delta)``.
    """

    family: str
    n: int
    method: str  # 'exact-sweep' | 'cover-bracket' | 'formula-d1'
    lower: float
    upper: float
    delta: float
    measure_name: str
    alpha: float | None = None
    M: float | None = None
    bound_gap: float | None = None
    kernel_se: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.lower <= self.upper <= 1.0 + 1e-12:
            raise DomainError(f"bracket [{self.lower}, {self.upper}] violates 0 <= lo <= hi <= 1")

    @property
    def value(self) -> float:
        """The exact value; only meaningful when lower == upper."""
        return self.upper

    def csv_row(self) -> str:
        opt = lambda v: "" if v is None else format(v, ".17g")
        return ",".join(
            [
                self.family,
                str(self.n),
                self.method,
                format(self.lower, ".17g"),
                format(self.upper, ".17g"),
                format(self.delta, ".17g"),
                opt(self.alpha),
                opt(self.M),
                opt(self.bound_gap),
            ]
        )


def _as_points(P, d_hint: int | None = None) -> np.ndarray:
    if isinstance(P, ChainPath):
        pts = P.points
    else:
        pts = np.asarray(P, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if d_hint is not None and pts.shape[1] != d_hint:
        raise DomainError(f"points have dimension {pts.shape[1]}, expected {d_hint}")
    return pts


def count_in_boxes(points: np.ndarray, anchors: np.ndarray, closed: bool) -> np.ndarray:
    """Counts of ``points`` inside each anchored box, strict or closed at the anchor.

    d=1 sorts once and bisects; higher dimensions fall back to a chunked
    boolean sweep with bounded working memory.
    """
    k, d = points.shape
    if d == 1:
        ordered = np.sort(points[:, 0])
        return np.searchsorted(ordered, anchors[:, 0], side="right" if closed else "left")
    out = np.empty(anchors.shape[0], dtype=np.int64)
    chunk = max(1, (1 << 24) // max(1, k * d))
    for lo in range(0, anchors.shape[0], chunk):
        anc = anchors[lo : lo + chunk, None, :]
        hit = (points[None, :, :] <= anc) if closed else (points[None, :, :] < anc)
        out[lo : lo + anc.shape[0]] = hit.all(axis=2).sum(axis=1)
    return out


def local_discrepancy(P, box, measure: TargetMeasure) -> float:
    """Empirical mass of the box minus its target mass, ``(1/n) sum 1_{x in A} - pi(A)``."""
    pts = _as_points(P, measure.dimension)
    if pts.shape[0] < 1:
        raise DomainError("local discrepancy needs n >= 1")
    anchor = np.asarray(getattr(box, "anchor", box), dtype=float).reshape(1, -1)
    closed = bool(np.all(getattr(box, "closed", False)))
    cnt = int(count_in_boxes(pts, anchor, closed=closed)[0])
    return cnt / pts.shape[0] - cdf_box(measure, anchor[0])


def star_discrepancy_formula_d1(values: np.ndarray, measure: TargetMeasure) -> float:
    """Closed-form d=1 star discrepancy via the measure's CDF transform.

    With ``y_(1) <= ... <= y_(n)`` the transformed points, the supremum over
    anchored intervals is ``max_i max(i/n - y_(i), y_(i) - (i-1)/n)``.
    """
    vals = np.asarray(values, dtype=float).reshape(-1)
    y = np.sort([cdf_box(measure, (v,)) for v in vals])
    n = y.size
    i = np.arange(1, n + 1)
    return float(np.maximum(i / n - y, y - (i - 1) / n).max())


def _corner_cdf_grid(measure: TargetMeasure, grids: list[np.ndarray]) -> np.ndarray:
    """Target CDF at every grid corner, vectorized for product-uniform supports."""
    if isinstance(measure.support, UnitCube) and measure.density is None:
        clipped = [np.clip(g, 0.0, 1.0) for g in grids]
        out = clipped[0]
        for g in clipped[1:]:
            out = np.multiply.outer(out, g)
        return out
    shape = tuple(len(g) for g in grids)
    out = np.empty(shape)
    for idx in np.ndindex(shape):
        out[idx] = cdf_box(measure, [grids[j][idx[j]] for j in range(len(grids))])
    return out


def star_discrepancy_sweep(P, measure: TargetMeasure) -> float:
    """Exact sup over anchored boxes via the grid induced by point coordinates.

    Evaluates both counting conventions at every corner; the grid carries a
    ``+inf`` sentinel per coordinate so half-unbounded anchors are covered.
    """
    pts = _as_points(P, measure.dimension)
    n, d = pts.shape
    grids = [np.append(np.unique(pts[:, j]), math.inf) for j in range(d)]
    corners = math.prod(len(g) for g in grids)
    if corners > SWEEP_MAX_CORNERS:
        raise SizeError(
            f"sweep would visit {corners} corners (> {SWEEP_MAX_CORNERS}); "
            "use star_discrepancy_via_cover instead"
        )
    idx = [np.searchsorted(grids[j], pts[:, j], side="left") for j in range(d)]
    hist = np.zeros(tuple(len(g) for g in grids))
    np.add.at(hist, tuple(idx), 1.0)
    closed = hist
    for axis in range(d):
        closed = np.cumsum(closed, axis=axis)
    strict = closed
    for axis in range(d):
        pad_shape = list(strict.shape)
        pad_shape[axis] = 1
        strict = np.concatenate([np.zeros(pad_shape), np.take(strict, range(strict.shape[axis] - 1), axis=axis)], axis=axis)
    F = _corner_cdf_grid(measure, grids)
    over = F - strict / n
    under = closed / n - F
    return float(max(over.max(), under.max(), 0.0))


def star_discrepancy_exact(P, measure: TargetMeasure) -> DiscrepancyReport:
    """Exact star discrepancy; closed form in d=1, corner sweep in d=2 and d=3."""
    pts = _as_points(P, measure.dimension)
    n, d = pts.shape
    if n < 1:
        raise DomainError("star discrepancy needs n >= 1")
    if d > 3 or n > SWEEP_MAX_N:
        raise SizeError(
            f"exact evaluation is guarded to d <= 3 and n <= {SWEEP_MAX_N} "
            f"(got d={d}, n={n}); use star_discrepancy_via_cover instead"
        )
    if d == 1:
        value = star_discrepancy_formula_d1(pts[:, 0], measure)
        method = "formula-d1"
    else:
        value = star_discrepancy_sweep(pts, measure)
        method = "exact-sweep"
    return DiscrepancyReport(
        family="anchored-box",
        n=n,
        method=method,
        lower=value,
        upper=value,
        delta=0.0,
        measure_name=measure.name,
    )


def _cover_local_max(pts: np.ndarray, cover, reference: np.ndarray) -> float:
    """Max over cover sets (both conventions) of |count/n - reference_per_set|."""
    n = pts.shape[0]
    worst = 0.0
    for closed in (False, True):
        emp = count_in_boxes(pts, cover.anchors, closed=closed) / n
        worst = max(worst, float(np.abs(emp - reference).max()))
    return worst


def star_discrepancy_via_cover(P, cover) -> DiscrepancyReport:
    """Bracket ``(L, L + delta)``: the true supremum lies inside by the cover inequality."""
    pts = _as_points(P, cover.measure.dimension)
    n = pts.shape[0]
    lower = _cover_local_max(pts, cover, cover.masses)
    return DiscrepancyReport(
        family=cover.family,
        n=n,
        method="cover-bracket",
        lower=lower,
        upper=min(1.0, lower + cover.delta),
        delta=cover.delta,
        measure_name=cover.measure.name,
    )


# ---------------------------------------------------------------------------
# Kernel powers and push-back discrepancy
# ---------------------------------------------------------------------------

_replica_cache: dict = {}
_replica_lock = threading.Lock()


def clear_replica_cache() -> None:
    _replica_cache.clear()


def _replica_paths(model: ChainModel, x0: np.ndarray, n: int, m: int, seed: int) -> np.ndarray:
    """(m, n, d) array of m independent seeded chain paths from x0; cached per key."""
    key = (model, bytes(np.asarray(x0, dtype=float)), n, m, seed)
    with _replica_lock:
        hit = _replica_cache.get(key)
    if hit is not None:
        return hit
    s = model.driver_dim
    u_all = philox(seed).random((m, n, s))
    states = np.tile(np.asarray(x0, dtype=float).reshape(1, -1), (m, 1))
    out = np.empty((m, n, states.shape[1]))
    for i in range(n):
        states = model.update_many(states, u_all[:, i, :])
        out[:, i, :] = states
    with _replica_lock:
        _replica_cache.setdefault(key, out)
    return _replica_cache[key]


def kernel_power(
    model: ChainModel,
    x: np.ndarray,
    A,
    i: int,
    m: int = 4096,
    seed: int = 0,
) -> tuple[float, float]:
    """Estimate of ``K^i(x, A)`` with its standard error.

    Direct simulation returns the exact target mass with zero error; other
    chains Monte Carlo the i-step law over ``m`` seeded replica paths, so the
    standard error is at most ``1/(2 sqrt(m))``.
    """
    if i < 1 or m < 1:
        raise DomainError(f"need i >= 1 and m >= 1, got i={i}, m={m}")
    anchor = np.asarray(getattr(A, "anchor", A), dtype=float).reshape(1, -1)
    if model.is_direct:
        return cdf_box(model.target, anchor[0]), 0.0
    paths = _replica_paths(model, np.asarray(x, dtype=float), i, m, seed)
    hits = count_in_boxes(paths[:, i - 1, :], anchor, closed=False)[0]
    p = hits / m
    return float(p), math.sqrt(p * (1.0 - p) / m)


def pushback_discrepancy(
    driver: DriverSequence,
    model: ChainModel,
    x0: np.ndarray,
    cover=None,
    kernel: str = "analytic",
    m: int = 4096,
    seed: int = 0,
    tol: float | None = None,
) -> DiscrepancyReport:
    """Discrepancy of the driver sequence measured through the iterated update.

    The i-th indicator ``1_{(u_1..u_i) in B_i(x0, A)}`` is evaluated as
    ``1_{x_i in A}`` with ``x_i`` the chain path, and the centering term
    ``K^i(x0, A)`` is exact for direct simulation (``kernel='analytic'``) or a
    seeded replica estimate (``kernel='mc'``).  Without a cover the exact d=1
    direct-simulation supremum is computed; with a cover the result is the
    bracket ``(L, L + delta)``.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    path = iterate_chain(model, x0, driver)
    pts = path.points
    n = driver.n
    if n < 1:
        raise DomainError("push-back discrepancy needs n >= 1")
    cert = model.certificate
    alpha = cert.alpha if cert is not None else None
    M = cert.M if cert is not None else None
    gap = alpha * M / (n * (1.0 - alpha)) if cert is not None else None

    if kernel == "analytic":
        if not model.is_direct:
            raise CapabilityError("analytic kernel mode is exact only for direct simulation")
        if cover is None:
            if model.target.dimension != 1:
                raise CapabilityError("exact push-back evaluation requires d=1 (or a cover)")
            value = _pushback_exact_d1(pts[:, 0], model)
            return DiscrepancyReport(
                family="anchored-box", n=n, method="formula-d1",
                lower=value, upper=value, delta=0.0,
                measure_name=model.target.name, alpha=alpha, M=M, bound_gap=gap,
            )
        kbar = np.array(cover.masses, dtype=float)  # mean over i of K^i = pi(A)
        lower = _cover_local_max(pts, cover, kbar)
        return DiscrepancyReport(
            family=cover.family, n=n, method="cover-bracket",
            lower=lower, upper=min(1.0, lower + cover.delta), delta=cover.delta,
            measure_name=model.target.name, alpha=alpha, M=M, bound_gap=gap,
        )

    if kernel != "mc":
        raise DomainError(f"kernel mode must be 'analytic' or 'mc', got {kernel!r}")
    if cover is None:
        raise CapabilityError("mc kernel mode evaluates over a delta-cover; pass one")
    se_bound = 0.5 / math.sqrt(m)
    if tol is not None and se_bound > tol:
        need = math.ceil(0.25 / tol**2)
        raise ToleranceError(f"m={m} gives kernel se {se_bound:.3g} > tol={tol}; need m >= {need}")
    paths = _replica_paths(model, x0, n, m, seed)
    flat = paths.reshape(m * n, -1)
    worst = 0.0
    for closed in (False, True):
        emp = count_in_boxes(pts, cover.anchors, closed=closed) / n
        # mean over replicas of the per-path average indicator = (1/n) sum_i Khat^i
        kbar = count_in_boxes(flat, cover.anchors, closed=closed) / (m * n)
        worst = max(worst, float(np.abs(emp - kbar).max()))
    return DiscrepancyReport(
        family=cover.family, n=n, method="cover-bracket",
        lower=worst, upper=min(1.0, worst + cover.delta), delta=cover.delta,
        measure_name=model.target.name, alpha=alpha, M=M, bound_gap=gap,
        kernel_se=se_bound,
    )


def _pushback_exact_d1(values: np.ndarray, model: ChainModel) -> float:
    """Exact d=1 direct-simulation push-back supremum.

    The local function ``z -> (1/n) sum_i [1_{x_i < z} - K^i(x0, (-inf, z))]``
    has all K^i equal to the target mass, is piecewise constant minus a
    continuous CDF, so its supremum is attained at the point values under
    the two counting conventions.
    """
    measure = model.target
    vals = np.sort(np.asarray(values, dtype=float))
    n = vals.size
    worst = 0.0
    for v in np.unique(vals):
        kbar = cdf_box(measure, (v,))
        strict = np.searchsorted(vals, v, side="left") / n
        closed = np.searchsorted(vals, v, side="right") / n
        worst = max(worst, abs(strict - kbar), abs(closed - kbar))
    return worst


def lp_discrepancy(P, p, measure: TargetMeasure) -> float:
    """L_p discrepancy for uniform weight on the unit cube; p in {2, inf}.

    ``p = 2`` expands the squared integral into the closed double-sum form;
    ``p = inf`` coincides with the exact star discrepancy.
    """
    if not (isinstance(measure.support, UnitCube) and measure.density is None):
        raise CapabilityError("lp_discrepancy supports the uniform unit cube only")
    pts = _as_points(P, measure.dimension)
    n, d = pts.shape
    if p == math.inf:
        return star_discrepancy_exact(pts, measure).value
    if p != 2:
        raise CapabilityError(f"p must be 2 or inf, got {p}")
    term1 = 3.0**-d
    term2 = (2.0 / n) * float(np.prod((1.0 - pts**2) / 2.0, axis=1).sum())
    maxes = np.maximum(pts[:, None, :], pts[None, :, :])
    term3 = float(np.prod(1.0 - maxes, axis=2).sum()) / n**2
    return math.sqrt(max(0.0, term1 - term2 + term3))
