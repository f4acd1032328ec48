"""Driver sequences: the deterministic substitute for i.i.d. uniforms.

A driver sequence is an ``(n, s)`` array of values in ``[0, 1)`` together with
a provenance string that makes it replayable bit-exactly.  Randomized drivers
come from the counter-based Philox generator (seeded), low-discrepancy
baselines from radical inverses, and ``best_of_k_driver`` operationalizes the
probabilistic existence argument: draw ``k`` seeded candidates, keep the
discrepancy minimizer.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from collections.abc import Callable, Sequence

import numpy as np

from .errors import DomainError, ParameterError, SchemaError, SizeError
from .util import fmt17, philox

__all__ = [
    "DriverSequence",
    "iid_driver",
    "radical_inverse_driver",
    "best_of_k_driver",
    "export_driver_csv",
    "import_driver_csv",
]

MAX_ENTRIES = 2**31


@dataclass(frozen=True)
class DriverSequence:
    rows: np.ndarray  # (n, s), entries in [0, 1)
    provenance: str

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        # n = 0 is tolerated so an empty driver yields an empty chain path;
        # the builders below always produce n >= 1.
        if rows.ndim != 2 or rows.shape[1] < 1:
            raise DomainError(f"driver rows must form an (n, s) array, got shape {rows.shape}")
        if np.any(rows < 0.0) or np.any(rows >= 1.0):
            raise DomainError("driver entries must lie in [0, 1)")
        object.__setattr__(self, "rows", rows)
        self.rows.setflags(write=False)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def s(self) -> int:
        return self.rows.shape[1]


def iid_driver(seed: int, n: int, s: int) -> DriverSequence:
    """Seeded pseudo-uniform driver from the counter-based Philox generator."""
    if n < 1 or s < 1:
        raise DomainError(f"need n, s >= 1, got n={n}, s={s}")
    if n * s > MAX_ENTRIES:
        raise SizeError(f"n*s = {n * s} exceeds the 2^31 entry limit")
    rows = philox(seed).random((n, s))
    return DriverSequence(rows, provenance=f"iid-seeded(seed={seed})")


def _radical_inverse(indices: np.ndarray, base: int) -> np.ndarray:
    vals = indices.astype(np.int64).copy()
    inv = np.zeros(len(vals), dtype=float)
    scale = 1.0 / base
    while np.any(vals > 0):
        inv += (vals % base) * scale
        vals //= base
        scale /= base
    return inv


def radical_inverse_driver(bases: Sequence[int], n: int) -> DriverSequence:
    """Low-discrepancy driver: row ``i`` holds the radical inverses of ``i`` per base."""
    bases = [int(b) for b in bases]
    if n < 1:
        raise DomainError(f"need n >= 1, got n={n}")
    if any(b < 2 for b in bases):
        raise ParameterError(f"bases must be >= 2, got {bases}")
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            if math.gcd(bases[i], bases[j]) != 1:
                raise ParameterError(f"bases must be pairwise coprime, got {bases[i]} and {bases[j]}")
    idx = np.arange(1, n + 1)
    rows = np.column_stack([_radical_inverse(idx, b) for b in bases])
    return DriverSequence(rows, provenance=f"radical-inverse(bases={';'.join(map(str, bases))})")


def best_of_k_driver(
    k: int,
    n: int,
    model,
    x0: np.ndarray,
    objective: Callable[..., float],
    seed: int,
    objective_name: str = "objective",
    threads: int = 1,
) -> tuple[DriverSequence, float]:
    """Draw ``k`` seeded iid candidates and keep the objective minimizer.

    Candidate ``i`` uses seed ``seed + i`` so runs are auditable; ties break
    toward the lower candidate index, and the result is independent of the
    thread count.  The objective is called as ``objective(model, x0, driver)``.
    """
    if k < 1:
        raise DomainError(f"need k >= 1, got k={k}")
    s = model.driver_dim
    candidates = [iid_driver(seed + i, n, s) for i in range(k)]

    def score(i: int) -> float:
        try:
            return float(objective(model, x0, candidates[i]))
        except Exception as exc:
            raise type(exc)(f"objective failed on candidate {i}: {exc}") from exc

    if threads == 1 or k == 1:
        scores = [score(i) for i in range(k)]
    else:
        workers = threads if threads > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(score, range(k)))
    best = min(range(k), key=lambda i: (scores[i], i))
    winner = DriverSequence(
        candidates[best].rows,
        provenance=f"selected(best-of-{k};objective={objective_name};seed={seed};pick={best})",
    )
    return winner, scores[best]


def export_driver_csv(driver: DriverSequence, path: str | Path) -> None:
    """Write ``# n,s,provenance`` header lines, then one row of s floats per line."""
    lines = ["# n,s,provenance", f"# {driver.n},{driver.s},{driver.provenance}"]
    lines += [",".join(fmt17(v) for v in row) for row in driver.rows]
    Path(path).write_text("\n".join(lines) + "\n")


def import_driver_csv(path: str | Path) -> DriverSequence:
    """Bit-exact inverse of :func:`export_driver_csv`."""
    lines = Path(path).read_text().splitlines()
    if len(lines) < 3 or not lines[0].startswith("#") or not lines[1].startswith("#"):
        raise SchemaError(f"{path}: missing driver header lines")
    meta = lines[1][1:].strip().split(",", 2)
    if len(meta) != 3:
        raise SchemaError(f"{path}: malformed driver header {lines[1]!r}")
    n, s, provenance = int(meta[0]), int(meta[1]), meta[2]
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[2:] if line.strip()])
    if rows.shape != (n, s):
        raise SchemaError(f"{path}: header promises shape ({n}, {s}), file has {rows.shape}")
    return DriverSequence(rows, provenance=provenance)
