"""INI experiment configs: parsing, validation, and builders for measures/chains.

The format is plain ``key = value`` under ``[section]`` headers so configs
diff cleanly and can be echoed verbatim into output headers.  Parse errors
keep configparser's line numbers; semantic errors name section and key.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import chains, measures
from .errors import ConfigError

__all__ = ["ExperimentConfig", "load_config", "build_measure", "build_chain", "parse_n_grid"]

EXPERIMENT_KINDS = ("converge", "search", "sphere", "bounds", "kh-check")


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    raw_text: str
    path: str
    sections: dict = field(repr=False, default_factory=dict)

    def get(self, section: str, key: str, default=None, required: bool = False) -> str | None:
        val = self.sections.get(section, {}).get(key)
        if val is None:
            if required:
                raise ConfigError(f"missing required key [{section}] {key}")
            return default
        return val

    def get_int(self, section: str, key: str, default=None, required: bool = False) -> int | None:
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} must be an integer, got {raw!r}") from exc

    def get_float(self, section: str, key: str, default=None, required: bool = False) -> float | None:
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} must be a number, got {raw!r}") from exc


def load_config(path: str | Path, seed_override: int | None = None) -> ExperimentConfig:
    """Read and validate an experiment config file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    text = p.read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep key case (e.g. M vs m_const)
    try:
        parser.read_string(text, source=str(p))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    sections = {s: dict(parser.items(s)) for s in parser.sections()}
    kind = sections.get("experiment", {}).get("kind")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"[experiment] kind must be one of {EXPERIMENT_KINDS}, got {kind!r}")
    seed_raw = sections.get("experiment", {}).get("seed", "0")
    try:
        seed = int(seed_raw)
    except ValueError as exc:
        raise ConfigError(f"[experiment] seed must be an integer, got {seed_raw!r}") from exc
    if seed_override is not None:
        seed = seed_override
    return ExperimentConfig(kind=kind, seed=seed, raw_text=text, path=str(p), sections=sections)


def parse_n_grid(cfg: ExperimentConfig, section: str = "grid") -> list[int]:
    raw = cfg.get(section, "n", required=True)
    try:
        grid = [int(v.strip()) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"[{section}] n must be a comma list of integers, got {raw!r}") from exc
    if not grid or any(v < 1 for v in grid):
        raise ConfigError(f"[{section}] n must be positive integers, got {raw!r}")
    return grid


def build_measure(cfg: ExperimentConfig) -> measures.TargetMeasure:
    kind = cfg.get("measure", "kind", default="uniform-cube")
    d = cfg.get_int("measure", "d", default=1)
    if kind == "uniform-cube":
        return measures.uniform_cube(d)
    if kind == "uniform-ball":
        return measures.uniform_ball(d, cfg.get_float("measure", "radius", default=1.0))
    if kind == "axis-box":
        return measures.uniform_axis_box(
            d,
            cfg.get_float("measure", "lower", required=True),
            cfg.get_float("measure", "upper", required=True),
        )
    if kind == "linear-density":
        if d != 1:
            raise ConfigError("[measure] linear-density is one-dimensional")
        return measures.linear_density()
    raise ConfigError(f"[measure] unknown kind {kind!r}")


def build_chain(cfg: ExperimentConfig, measure: measures.TargetMeasure) -> tuple[chains.ChainModel, np.ndarray]:
    kind = cfg.get("chain", "kind", default="direct")
    x0_raw = cfg.get("chain", "x0")
    if x0_raw is not None:
        x0 = np.array([float(v) for v in x0_raw.split()], dtype=float)
    else:
        lo, hi = measure.support.bounding_box()
        x0 = (lo + hi) / 2.0
    if kind == "direct":
        return chains.direct_chain(measure), x0
    if kind == "independence-metropolis":
        return chains.metropolis_chain(measure), x0
    if kind == "hit-and-run":
        alpha = cfg.get_float("chain", "alpha")
        M = cfg.get_float("chain", "m_const")
        cert = None
        if alpha is not None and M is not None:
            cert = chains.ErgodicityCertificate(alpha=alpha, M=M, provenance="asserted")
        return chains.hit_and_run_chain(measure, cert), x0
    raise ConfigError(f"[chain] unknown kind {kind!r}")
