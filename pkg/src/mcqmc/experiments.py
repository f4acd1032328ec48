"""Experiment runners: convergence studies, driver search, sphere slopes, bound sweeps.

Every output CSV starts with a comment header carrying the tool version, the
effective seed, and the config echoed verbatim, so any file can be reproduced
bit-exactly from its own header.  Rows are flushed as they are produced;
a failure partway through a grid leaves the completed rows on disk.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import __version__, bounds, covers, discrepancy, drivers, rkhs, sphere
from .chains import iterate_chain
from .config import ExperimentConfig, build_chain, build_measure, parse_n_grid
from .errors import CertificateError, ConfigError, SizeError
from .measures import uniform_cube
from .util import fmt17, ols_slope, philox

__all__ = ["run_converge", "run_driver_search", "run_sphere", "run_bounds", "run_kh_check", "run_experiment"]

CONVERGE_COLUMNS = (
    "n,score,chain_lower,chain_upper,push_lower,push_upper,delta,cover_size,"
    "bound_chain,bound_push,gap_bound"
)
SPHERE_COLUMNS = "n,lower,upper,delta,budget,beck_floor"
SEARCH_COLUMNS = "candidate,seed,score"
KH_COLUMNS = "f_tag,n,p,error,norm,discrepancy,budget,holds,dual_gap"


def _open_output(path: Path, cfg: ExperimentConfig, columns: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = path.open("w")
    fh.write(f"# mcqmc {__version__}\n")
    fh.write(f"# seed = {cfg.seed}\n")
    fh.write("# config-begin\n")
    for line in cfg.raw_text.splitlines():
        fh.write(f"# {line}\n")
    fh.write("# config-end\n")
    fh.write(columns + "\n")
    return fh


def _auto_r(n: int, d: int) -> int:
    """Reference-point count for a measured cover: ~sqrt(n), snapped to a d-th power."""
    if d == 1:
        return max(2, round(math.sqrt(n)))
    m = max(2, round(n ** (1.0 / (2 * d))))
    return m**d


def _cover_for(cfg: ExperimentConfig, measure, n: int):
    raw = cfg.get("cover", "r", default="auto")
    r = _auto_r(n, measure.dimension) if raw == "auto" else int(raw)
    pts, _ = covers.reference_points(measure, r, seed=cfg.seed)
    cover = covers.build_box_cover(pts, measure)
    delta_max = cfg.get_float("cover", "delta_max")
    if delta_max is not None and cover.delta > delta_max:
        raise CertificateError(
            f"cover delta {cover.delta:.6g} exceeds the required delta_max {delta_max}"
        )
    validate_n = cfg.get_int("cover", "validate", default=0)
    if validate_n:
        report = covers.validate_cover(cover, samples=validate_n, seed=cfg.seed + 1)
        if not report.passed:
            raise CertificateError(f"cover failed validation: {report.defect} at {report.witness}")
    return cover


def _objective(cfg: ExperimentConfig, cover, kernel_m: int, seed: int):
    name = cfg.get("driver", "objective", default="chain-star")
    if name == "chain-star":

        def chain_star(model, x0, driver):
            path = iterate_chain(model, x0, driver)
            try:
                return discrepancy.star_discrepancy_exact(path.points, model.target).value
            except SizeError:
                return discrepancy.star_discrepancy_via_cover(path.points, cover).upper

        return chain_star, name
    if name == "pushback":

        def pushback(model, x0, driver):
            if model.is_direct:
                rep = discrepancy.pushback_discrepancy(driver, model, x0, cover=cover)
            else:
                rep = discrepancy.pushback_discrepancy(
                    driver, model, x0, cover=cover, kernel="mc", m=kernel_m, seed=seed
                )
            return rep.upper

        return pushback, name
    raise ConfigError(f"[driver] unknown objective {name!r}")


def run_converge(cfg: ExperimentConfig, out_dir: str | Path, threads: int = 1) -> Path:
    """Best-of-K drivers over an n grid: discrepancies, brackets, and budgets per n."""
    measure = build_measure(cfg)
    model, x0 = build_chain(cfg, measure)
    grid = parse_n_grid(cfg)
    k = cfg.get_int("driver", "k", default=32)
    kernel_m = cfg.get_int("pushback", "m", default=4096)
    out = Path(out_dir) / f"{cfg.get('output', 'prefix', default='converge')}.csv"
    fh = _open_output(out, cfg, CONVERGE_COLUMNS)
    log_n, log_upper = [], []
    cert = model.certificate
    try:
        for n in grid:
            try:
                cover = _cover_for(cfg, measure, n)
                objective, obj_name = _objective(cfg, cover, kernel_m, cfg.seed)
                driver, score = drivers.best_of_k_driver(
                    k, n, model, x0, objective, seed=cfg.seed, objective_name=obj_name,
                    threads=threads,
                )
                path = iterate_chain(model, x0, driver)
                try:
                    chain_rep = discrepancy.star_discrepancy_exact(path.points, measure)
                except SizeError:
                    chain_rep = discrepancy.star_discrepancy_via_cover(path.points, cover)
                if model.is_direct and measure.dimension == 1:
                    push_rep = discrepancy.pushback_discrepancy(driver, model, x0)
                elif model.is_direct:
                    push_rep = discrepancy.pushback_discrepancy(driver, model, x0, cover=cover)
                else:
                    push_rep = discrepancy.pushback_discrepancy(
                        driver, model, x0, cover=cover, kernel="mc", m=kernel_m, seed=cfg.seed
                    )
                alpha, M = (cert.alpha, cert.M) if cert else (0.0, 1.0)
                bound_chain = bounds.existence_bound(
                    alpha, M, n, cardinality=cover.cardinality, delta=cover.delta, variant="chain"
                )
                bound_push = bounds.existence_bound(
                    alpha, M, n, cardinality=cover.cardinality, delta=cover.delta, variant="pushback"
                )
                gap = bounds.gap_bound(alpha, M, n)
                fh.write(
                    ",".join(
                        [
                            str(n),
                            fmt17(score),
                            fmt17(chain_rep.lower),
                            fmt17(chain_rep.upper),
                            fmt17(push_rep.lower),
                            fmt17(push_rep.upper),
                            fmt17(cover.delta),
                            str(cover.cardinality),
                            fmt17(bound_chain),
                            fmt17(bound_push),
                            fmt17(gap),
                        ]
                    )
                    + "\n"
                )
                fh.flush()
                log_n.append(math.log(n))
                log_upper.append(math.log(max(chain_rep.upper, 1e-300)))
            except (ConfigError, CertificateError):
                raise
            except Exception as exc:
                fh.write(f"# failed at n={n}: {exc}\n")
                fh.flush()
                raise
        if len(log_n) >= 2:
            slope, resid = ols_slope(np.array(log_n), np.array(log_upper))
            fh.write(f"slope,{fmt17(slope)},{fmt17(resid)}\n")
    finally:
        fh.close()
    return out


def run_driver_search(cfg: ExperimentConfig, out_dir: str | Path, threads: int = 1) -> Path:
    """Score k seeded candidates, emit the per-candidate table and the winning driver."""
    measure = build_measure(cfg)
    model, x0 = build_chain(cfg, measure)
    n = parse_n_grid(cfg)[0]
    k = cfg.get_int("driver", "k", default=32)
    kernel_m = cfg.get_int("pushback", "m", default=4096)
    cover = _cover_for(cfg, measure, n)
    objective, obj_name = _objective(cfg, cover, kernel_m, cfg.seed)
    prefix = cfg.get("output", "prefix", default="search")
    out = Path(out_dir) / f"{prefix}.csv"
    fh = _open_output(out, cfg, SEARCH_COLUMNS)
    best_idx, best_score = -1, math.inf
    try:
        for i in range(k):
            cand = drivers.iid_driver(cfg.seed + i, n, model.driver_dim)
            score = float(objective(model, x0, cand))
            fh.write(f"{i},{cfg.seed + i},{fmt17(score)}\n")
            fh.flush()
            if score < best_score:
                best_idx, best_score = i, score
    finally:
        fh.close()
    winner = drivers.iid_driver(cfg.seed + best_idx, n, model.driver_dim)
    winner = drivers.DriverSequence(
        winner.rows,
        provenance=f"selected(best-of-{k};objective={obj_name};seed={cfg.seed};pick={best_idx})",
    )
    drivers.export_driver_csv(winner, Path(out_dir) / f"{prefix}_best_driver.csv")
    return out


def rescore_driver(cfg: ExperimentConfig, driver_path: str | Path) -> float:
    """Re-evaluate the search objective on an exported driver (bit-exact replay)."""
    measure = build_measure(cfg)
    model, x0 = build_chain(cfg, measure)
    driver = drivers.import_driver_csv(driver_path)
    cover = _cover_for(cfg, measure, driver.n)
    kernel_m = cfg.get_int("pushback", "m", default=4096)
    objective, _ = _objective(cfg, cover, kernel_m, cfg.seed)
    return float(objective(model, x0, driver))


def run_sphere(cfg: ExperimentConfig, out_dir: str | Path, threads: int = 1) -> Path:
    """Best-of-K sphere point sets against a fixed cap cover, with budget columns."""
    d = cfg.get_int("sphere", "d", default=2)
    n_centers = cfg.get_int("sphere", "n_centers", default=16384)
    height_steps = cfg.get_int("sphere", "height_steps")
    k = cfg.get_int("sphere", "k", default=32)
    probes = cfg.get_int("sphere", "probes", default=100_000)
    certify = cfg.get_int("sphere", "certify_samples", default=2000)
    grid = parse_n_grid(cfg)
    cover = sphere.cap_cover(
        d=d, n_centers=n_centers, height_steps=height_steps, seed=cfg.seed,
        certify_samples=certify, probes=probes,
    )
    out = Path(out_dir) / f"{cfg.get('output', 'prefix', default='sphere')}.csv"
    fh = _open_output(out, cfg, SPHERE_COLUMNS)
    c_hat: float | None = None
    log_n, log_upper = [], []
    try:
        for n in grid:
            _, rep = sphere.best_of_k_sphere_points(k, n, cover, seed=cfg.seed)
            raw_upper, beck = bounds.sphere_bounds(n, d, c=1.0)
            if c_hat is None:
                c_hat = rep.upper / raw_upper  # calibrated once at the first n, fixed after
            budget = c_hat * raw_upper
            fh.write(
                ",".join(
                    [str(n), fmt17(rep.lower), fmt17(rep.upper), fmt17(cover.delta),
                     fmt17(budget), fmt17(beck)]
                )
                + "\n"
            )
            fh.flush()
            log_n.append(math.log(n))
            log_upper.append(math.log(max(rep.upper, 1e-300)))
        if len(log_n) >= 2:
            slope, resid = ols_slope(np.array(log_n), np.array(log_upper))
            fh.write(f"slope,{fmt17(slope)},{fmt17(resid)}\n")
    finally:
        fh.close()
    return out


_BOUND_EVALUATORS = {
    "gap_bound": lambda p: bounds.gap_bound(p["alpha"], p["M"], int(p["n"])),
    "hoeffding_tail": lambda p: bounds.hoeffding_tail(p["alpha"], p["M"], int(p["n"]), p["c_dev"]).raw,
    "existence_bound": lambda p: bounds.existence_bound(
        p["alpha"], p["M"], int(p["n"]),
        cardinality=int(p["cardinality"]) if "cardinality" in p else None,
        delta=p.get("delta"), d=int(p["d"]) if "d" in p else None, c=p.get("c"),
        variant=p.get("variant", "chain"),
    ),
    "cover_cardinality_bound": lambda p: bounds.cover_cardinality_bound(int(p["d"]), p["delta"], p.get("c", 1.0)),
    "koksma_hlawka_budget": lambda p: bounds.koksma_hlawka_budget(
        p["d_pushback"], p["alpha"], p["M"], int(p["n"]), p["h1_norm"]
    ),
    "sphere_upper": lambda p: bounds.sphere_bounds(p["n"], int(p["d"]), p.get("c", 1.0))[0],
    "beck_lower": lambda p: bounds.sphere_bounds(p["n"], int(p["d"]), 1.0)[1],
}


def run_bounds(cfg: ExperimentConfig, out_dir: str | Path, threads: int = 1) -> Path:
    """Sweep one bound evaluator over a parameter grid; every other key is fixed."""
    section = dict(cfg.sections.get("bounds", {}))
    name = section.pop("evaluator", None)
    if name not in _BOUND_EVALUATORS:
        raise ConfigError(f"[bounds] evaluator must be one of {sorted(_BOUND_EVALUATORS)}, got {name!r}")
    vary = section.pop("vary", None)
    values_raw = section.pop("values", None)
    if vary is None or values_raw is None:
        raise ConfigError("[bounds] needs vary = <param> and values = <comma list>")
    try:
        values = [float(v) for v in values_raw.split(",") if v.strip()]
        fixed = {key: (val if key == "variant" else float(val)) for key, val in section.items()}
    except ValueError as exc:
        raise ConfigError(f"[bounds] non-numeric parameter: {exc}") from exc
    out = Path(out_dir) / f"{cfg.get('output', 'prefix', default='bounds')}.csv"
    fh = _open_output(out, cfg, f"{vary},{name}")
    try:
        for v in values:
            params = dict(fixed)
            params[vary] = v
            fh.write(f"{fmt17(v)},{fmt17(_BOUND_EVALUATORS[name](params))}\n")
    finally:
        fh.close()
    return out


def run_kh_check(cfg: ExperimentConfig, out_dir: str | Path, threads: int = 1) -> Path:
    """Integration-error checks for the built-in test family on seeded point sets."""
    trials = cfg.get_int("kh", "trials", default=10)
    n_points = cfg.get_int("kh", "points", default=16)
    measure = uniform_cube(1)
    family = [
        rkhs.H1Function.from_d1(lambda x: x, lambda x: 1.0, label="x"),
        rkhs.H1Function.from_d1(lambda x: x * x, lambda x: 2.0 * x, label="x^2"),
        rkhs.H1Function.from_d1(math.exp, math.exp, label="exp"),
    ]
    rng = philox(cfg.seed)
    out = Path(out_dir) / f"{cfg.get('output', 'prefix', default='kh')}.csv"
    fh = _open_output(out, cfg, KH_COLUMNS)
    try:
        for _ in range(trials):
            P = rng.random((n_points, 1))
            for f in family:
                for p in (math.inf, 2):
                    fh.write(rkhs.kh_check(f, P, measure, p=p).csv_row() + "\n")
    finally:
        fh.close()
    return out


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path, threads: int = 1) -> Path:
    runner = {
        "converge": run_converge,
        "search": run_driver_search,
        "sphere": run_sphere,
        "bounds": run_bounds,
        "kh-check": run_kh_check,
    }[cfg.kind]
    return runner(cfg, out_dir, threads=threads)
