"""Update functions, chain iteration, and uniform-ergodicity certificates.

A chain model is a deterministic update ``x_{i} = update(x_{i-1}, u_i)`` fed
by rows of a driver sequence.  Three update kinds are built in:

* ``direct``: ignores the state and returns ``generator(u)``;
* ``hit-and-run``: uniform point on the chord through ``x`` in a convex body
  (ball or axis box, via closed-form chord oracles);
* ``independence-metropolis``: uniform proposal on the support accepted with
  probability ``min(1, rho(y)/rho(x))``; the tie ``u == A`` accepts.

Certificates ``(alpha, M)`` witness total-variation decay
``sup_x ||K^j(x,.) - pi||_tv <= alpha^j M``; provenance records whether they
are analytic (direct simulation), derived from a minorization constant
(independence Metropolis), or merely asserted (hit-and-run).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from collections.abc import Callable

import numpy as np

from .drivers import DriverSequence
from .errors import (
    BoundaryError,
    CapabilityError,
    CertificateError,
    DimensionError,
    DomainError,
    InvalidStateError,
)
from .measures import AxisBox, Ball, Support, TargetMeasure, UnitCube, generate, sphere_direction

__all__ = [
    "ErgodicityCertificate",
    "ChainModel",
    "ChainPath",
    "direct_update",
    "chord_endpoints",
    "hit_and_run_update",
    "metropolis_update",
    "iterate_chain",
    "certify_metropolis",
    "direct_chain",
    "hit_and_run_chain",
    "metropolis_chain",
    "metropolis_kernel_matrix",
    "tv_distance",
]

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class ErgodicityCertificate:
    alpha: float
    M: float
    provenance: str  # 'analytic' | 'minorization' | 'asserted'

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < 1.0:
            raise CertificateError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.M > 0.0:
            raise CertificateError(f"M must be positive, got {self.M}")


@dataclass(frozen=True)
class ChainModel:
    """An update function together with its target and driver row width."""

    kind: str
    target: TargetMeasure
    driver_dim: int
    certificate: ErgodicityCertificate | None = None

    def update(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.kind == "direct":
            return direct_update(self.target, x, u)
        if self.kind == "hit-and-run":
            return hit_and_run_update(self.target.support, x, u)
        if self.kind == "independence-metropolis":
            return metropolis_update(self.target, x, u)
        raise CapabilityError(f"unknown chain kind {self.kind!r}")

    def update_many(self, states: np.ndarray, u_block: np.ndarray) -> np.ndarray:
        """One synchronous step for a batch of replica states (m, d) with (m, s) driver rows."""
        if self.kind == "independence-metropolis":
            return _metropolis_step_many(self.target, states, u_block)
        return np.stack([self.update(states[j], u_block[j]) for j in range(states.shape[0])])

    @property
    def is_direct(self) -> bool:
        return self.kind == "direct"


@dataclass(frozen=True)
class ChainPath:
    """The points ``x_1..x_n`` produced from ``start`` by a driver sequence."""

    start: np.ndarray
    points: np.ndarray  # (n, d)
    driver: DriverSequence

    @property
    def n(self) -> int:
        return self.points.shape[0]


def direct_update(target: TargetMeasure, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Direct-simulation update: returns ``generator(u)``, independent of ``x``."""
    return generate(target, u)


def chord_endpoints(body: Support, x: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints ``a, b`` of the chord ``{x + s theta} ∩ body`` (closed-form oracle).

    ``a`` is the endpoint in the ``-theta`` direction, ``b`` in the ``+theta``
    direction.  ``x`` must be strictly inside; starts within 1e-12 of the
    boundary are rejected rather than perturbed, to keep replay deterministic.
    """
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if isinstance(body, Ball):
        r = body.radius
        nx2 = float(np.dot(x, x))
        if nx2 > r * r:
            raise DomainError("hit-and-run state lies outside the ball")
        if nx2 >= (r - BOUNDARY_TOL) ** 2:
            raise BoundaryError("hit-and-run state within 1e-12 of the ball boundary")
        xt = float(np.dot(x, theta))
        disc = math.sqrt(xt * xt + r * r - nx2)
        s_lo, s_hi = -xt - disc, -xt + disc
    elif isinstance(body, (AxisBox, UnitCube)):
        lo, hi = (0.0, 1.0) if isinstance(body, UnitCube) else (body.lower, body.upper)
        if np.any(x < lo) or np.any(x > hi):
            raise DomainError("hit-and-run state lies outside the box")
        if np.any(x < lo + BOUNDARY_TOL) or np.any(x > hi - BOUNDARY_TOL):
            raise BoundaryError("hit-and-run state within 1e-12 of the box boundary")
        s_lo, s_hi = -math.inf, math.inf
        for j in range(x.size):
            if theta[j] == 0.0:
                continue
            c1 = (lo - x[j]) / theta[j]
            c2 = (hi - x[j]) / theta[j]
            s_lo = max(s_lo, min(c1, c2))
            s_hi = min(s_hi, max(c1, c2))
        if not math.isfinite(s_lo) or not math.isfinite(s_hi):
            raise DomainError("degenerate direction for the box chord")
    else:
        raise CapabilityError(f"no chord oracle for support {type(body).__name__}")
    return x + s_lo * theta, x + s_hi * theta


def hit_and_run_update(body: Support, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Hit-and-run transition: direction from ``u[:d-1]``, chord position from ``u[d-1]``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float).reshape(-1)
    d = x.size
    if u.size != d:
        raise DimensionError(f"hit-and-run needs a driver row of width d={d}, got {u.size}")
    theta = sphere_direction(u[: d - 1], d)
    a, b = chord_endpoints(body, x, theta)
    return u[d - 1] * a + (1.0 - u[d - 1]) * b


def metropolis_update(target: TargetMeasure, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Independence-Metropolis transition; the boundary case ``u_{s+1} == A`` accepts."""
    if target.density is None:
        raise CapabilityError("independence Metropolis requires a target density")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float).reshape(-1)
    s = target.dimension
    if u.size != s + 1:
        raise DimensionError(f"Metropolis needs a driver row of width s+1={s + 1}, got {u.size}")
    rho_x = target.density_at(x)
    if rho_x <= 0.0:
        raise InvalidStateError(f"density vanishes at the current state {x!r}")
    y = target.uniform_proposal(u[:s])
    accept = min(1.0, target.density_at(y) / rho_x)
    return y if u[s] <= accept else x


def _metropolis_step_many(target: TargetMeasure, states: np.ndarray, u_block: np.ndarray) -> np.ndarray:
    dens = _density_batch(target)
    s = target.dimension
    proposals = np.stack([target.uniform_proposal(u_block[j, :s]) for j in range(u_block.shape[0])]) \
        if not isinstance(target.support, UnitCube) else np.array(u_block[:, :s], dtype=float)
    ratio = dens(proposals) / dens(states)
    accept = u_block[:, s] <= np.minimum(1.0, ratio)
    out = states.copy()
    out[accept] = proposals[accept]
    return out


def _density_batch(target: TargetMeasure) -> Callable[[np.ndarray], np.ndarray]:
    if target.density_batch is not None:
        return lambda pts: np.asarray(target.density_batch(pts), dtype=float)

    def dens(pts: np.ndarray) -> np.ndarray:
        return np.asarray([target.density_at(p) for p in pts], dtype=float)

    return dens


def iterate_chain(model: ChainModel, x0: np.ndarray, driver: DriverSequence) -> ChainPath:
    """Run the chain through every driver row; errors carry the failing step index."""
    if driver.s != model.driver_dim:
        raise DimensionError(
            f"driver row width {driver.s} does not match the model's s={model.driver_dim}"
        )
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.size != model.target.dimension:
        raise DimensionError(
            f"start has dimension {x.size}, state space has d={model.target.dimension}"
        )
    points = np.empty((driver.n, x.size))
    for i in range(driver.n):
        try:
            x = model.update(x, driver.rows[i])
        except Exception as exc:
            raise type(exc)(f"update failed at step i={i + 1}: {exc}") from exc
        points[i] = x
    return ChainPath(start=np.asarray(x0, dtype=float).reshape(-1), points=points, driver=driver)


def certify_metropolis(target: TargetMeasure) -> ErgodicityCertificate:
    """Minorization certificate ``alpha = 1 - mass/(vol(G) * rho_max)``, ``M = 1``.

    A uniform proposal is accepted from any state with probability at least
    ``rho(y)/rho_max``, so the kernel dominates ``beta * pi`` with
    ``beta = mass/(vol * rho_max)`` and the total-variation distance contracts
    by ``1 - beta`` per step.  ``beta >= 1`` clamps to the direct-simulation
    certificate; ``beta <= 0`` cannot certify anything.
    """
    if target.density is None or target.density_max is None or target.total_mass is None:
        raise CapabilityError("certification needs a density with declared bounds and mass")
    vol = target.support.volume
    if not (math.isfinite(vol) and vol > 0.0):
        raise CertificateError(f"support volume must be finite and positive, got {vol}")
    beta = target.total_mass / (vol * target.density_max)
    if beta <= 0.0:
        raise CertificateError(f"minorization constant must be positive, got {beta}")
    if beta >= 1.0:
        return ErgodicityCertificate(alpha=0.0, M=1.0, provenance="minorization")
    return ErgodicityCertificate(alpha=1.0 - beta, M=1.0, provenance="minorization")


def direct_chain(target: TargetMeasure, M: float = 1.0) -> ChainModel:
    """Direct simulation; uniformly ergodic with ``alpha = 0`` and any ``M > 0``."""
    if not target.has_generator:
        raise CapabilityError("direct simulation requires a measure with a generator")
    cert = ErgodicityCertificate(alpha=0.0, M=M, provenance="analytic")
    return ChainModel("direct", target, driver_dim=target.generator_dim, certificate=cert)


def hit_and_run_chain(target: TargetMeasure, certificate: ErgodicityCertificate | None = None) -> ChainModel:
    """Hit-and-run on a ball or axis-box body; certificates are user-asserted."""
    if not isinstance(target.support, (Ball, AxisBox, UnitCube)):
        raise CapabilityError("hit-and-run supports ball and axis-box bodies")
    if certificate is not None and certificate.provenance != "asserted":
        raise CertificateError("hit-and-run certificates must carry provenance 'asserted'")
    return ChainModel("hit-and-run", target, driver_dim=target.dimension, certificate=certificate)


def metropolis_chain(target: TargetMeasure, certificate: ErgodicityCertificate | None = None) -> ChainModel:
    """Independence Metropolis with the minorization certificate attached by default."""
    cert = certificate if certificate is not None else certify_metropolis(target)
    return ChainModel(
        "independence-metropolis", target, driver_dim=target.dimension + 1, certificate=cert
    )


# ---------------------------------------------------------------------------
# Discretized-kernel oracle (validates certificates and kernel laws in tests)
# ---------------------------------------------------------------------------


def metropolis_kernel_matrix(target: TargetMeasure, cells: int = 512) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Midpoint discretization of the d=1 independence-Metropolis kernel.

    Returns ``(P, pi_vec, centers)`` where ``P[i, j]`` approximates the
    transition probability from cell ``i`` to cell ``j`` and ``pi_vec`` is the
    discretized target.  Off-diagonal mass is ``h * min(1, rho_j/rho_i)``;
    rejected mass stays on the diagonal.
    """
    if target.dimension != 1 or target.density is None:
        raise CapabilityError("the kernel oracle handles d=1 density targets only")
    h = 1.0 / cells
    centers = (np.arange(cells) + 0.5) * h
    rho = np.asarray([target.density_at(np.array([c])) for c in centers])
    ratio = np.minimum(1.0, rho[None, :] / rho[:, None])
    P = h * ratio
    P[np.diag_indices(cells)] += 1.0 - P.sum(axis=1)
    pi_vec = rho / rho.sum()
    return P, pi_vec, centers


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance between two discrete distributions."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
