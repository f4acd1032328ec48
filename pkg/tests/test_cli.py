import math
from pathlib import Path

import numpy as np
import pytest

from mcqmc import cli, drivers, experiments
from mcqmc.config import load_config
from mcqmc.errors import SchemaError
from mcqmc.plotting import emit_plot

CONVERGE_INI = """\
[experiment]
kind = converge
seed = 11

[measure]
kind = uniform-cube
d = 1

[chain]
kind = direct

[driver]
k = 4
objective = chain-star

[grid]
n = 16,32,64

[output]
prefix = conv
"""

SEARCH_INI = """\
[experiment]
kind = search
seed = 5

[measure]
kind = uniform-cube
d = 1

[chain]
kind = direct

[driver]
k = 6
objective = chain-star

[grid]
n = 32

[output]
prefix = hunt
"""

BOUNDS_INI = """\
[experiment]
kind = bounds
seed = 0

[bounds]
evaluator = existence_bound
variant = chain
alpha = 0.0
M = 1.0
cardinality = 16
delta = 0.0625
vary = n
values = 64,256,1024

[output]
prefix = budget
"""

KH_INI = """\
[experiment]
kind = kh-check
seed = 3

[kh]
trials = 2
points = 8

[output]
prefix = kh
"""

SPHERE_INI = """\
[experiment]
kind = sphere
seed = 9

[sphere]
d = 2
n_centers = 512
height_steps = 32
k = 4
probes = 20000
certify_samples = 200

[grid]
n = 32,64

[output]
prefix = caps
"""


def _write(tmp_path: Path, text: str, name: str = "exp.ini") -> Path:
    p = tmp_path / name
    p.write_text(text)
    return p


def test_cli_missing_config_is_exit_2(tmp_path):
    assert cli.main(["converge", "--config", str(tmp_path / "nope.ini")]) == 2


def test_cli_bad_kind_is_exit_2(tmp_path):
    p = _write(tmp_path, CONVERGE_INI.replace("kind = converge", "kind = search"))
    assert cli.main(["converge", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_cli_unparseable_config_reports_line(tmp_path):
    p = _write(tmp_path, "not an ini file at all\n")
    assert cli.main(["converge", "--config", str(p)]) == 2


def test_converge_run_and_header_reproducibility(tmp_path):
    p = _write(tmp_path, CONVERGE_INI)
    assert cli.main(["converge", "--config", str(p), "--out", str(tmp_path / "a")]) == 0
    out = tmp_path / "a" / "conv.csv"
    text = out.read_text()
    assert text.startswith("# mcqmc 0.1.0\n# seed = 11\n")
    lines = text.splitlines()
    begin = lines.index("# config-begin")
    end = lines.index("# config-end")
    echoed = "\n".join(ln[2:] for ln in lines[begin + 1 : end]) + "\n"
    seed = int(lines[1].split("=")[1])
    p2 = _write(tmp_path, echoed, "echo.ini")
    assert cli.main(["converge", "--config", str(p2), "--seed", str(seed),
                     "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "conv.csv").read_bytes() == out.read_bytes()


def test_converge_rows_and_slope(tmp_path):
    p = _write(tmp_path, CONVERGE_INI)
    cfg = load_config(p)
    out = experiments.run_converge(cfg, tmp_path / "run")
    rows = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    header = rows[0].split(",")
    assert header[:4] == ["n", "score", "chain_lower", "chain_upper"]
    data = [r.split(",") for r in rows[1:] if not r.startswith("slope")]
    assert [int(r[0]) for r in data] == [16, 32, 64]
    for r in data:
        lo, hi = float(r[2]), float(r[3])
        assert 0.0 <= lo <= hi <= 1.0
        assert float(r[4]) == pytest.approx(lo)  # direct d=1: push-back equals the chain value
    assert rows[-1].startswith("slope,")


def test_converge_threads_do_not_change_output(tmp_path):
    p = _write(tmp_path, CONVERGE_INI)
    cfg = load_config(p)
    out1 = experiments.run_converge(cfg, tmp_path / "t1", threads=1)
    out4 = experiments.run_converge(load_config(p), tmp_path / "t4", threads=4)
    assert out1.read_bytes() == out4.read_bytes()


def test_search_emits_rescorable_driver(tmp_path):
    p = _write(tmp_path, SEARCH_INI)
    cfg = load_config(p)
    out = experiments.run_driver_search(cfg, tmp_path / "s")
    rows = [r for r in out.read_text().splitlines() if not r.startswith("#")][1:]
    scores = [float(r.split(",")[2]) for r in rows]
    assert min(scores) <= float(np.median(scores))
    best_path = tmp_path / "s" / "hunt_best_driver.csv"
    driver = drivers.import_driver_csv(best_path)
    assert driver.n == 32
    rescored = experiments.rescore_driver(load_config(p), best_path)
    assert rescored == min(scores)  # bit-exact replay


def test_bounds_sweep(tmp_path):
    p = _write(tmp_path, BOUNDS_INI)
    assert cli.main(["bounds", "--config", str(p), "--out", str(tmp_path / "b")]) == 0
    rows = [r for r in (tmp_path / "b" / "budget.csv").read_text().splitlines()
            if not r.startswith("#")]
    assert rows[0] == "n,existence_bound"
    vals = [float(r.split(",")[1]) for r in rows[1:]]
    assert vals[0] > vals[1] > vals[2]
    assert vals[1] == pytest.approx(0.8950546111576978, rel=1e-13)


def test_kh_check_cli(tmp_path):
    p = _write(tmp_path, KH_INI)
    assert cli.main(["kh-check", "--config", str(p), "--out", str(tmp_path / "k")]) == 0
    rows = [r for r in (tmp_path / "k" / "kh.csv").read_text().splitlines() if not r.startswith("#")]
    assert rows[0].startswith("f_tag,")
    assert len(rows) == 1 + 2 * 3 * 2
    assert all(",true," in r for r in rows[1:])


def test_sphere_cli_smoke(tmp_path):
    p = _write(tmp_path, SPHERE_INI)
    assert cli.main(["sphere", "--config", str(p), "--out", str(tmp_path / "sp")]) == 0
    rows = [r for r in (tmp_path / "sp" / "caps.csv").read_text().splitlines()
            if not r.startswith("#")]
    assert rows[0] == "n,lower,upper,delta,budget,beck_floor"
    data = [r.split(",") for r in rows[1:] if not r.startswith("slope")]
    for r in data:
        assert float(r[1]) <= float(r[2])
        assert float(r[1]) >= float(r[5])  # Beck sanity floor


def test_certificate_failure_exits_3(tmp_path):
    strict = CONVERGE_INI + "\n[cover]\nr = auto\ndelta_max = 0.001\n"
    p = _write(tmp_path, strict)
    assert cli.main(["converge", "--config", str(p), "--out", str(tmp_path / "c")]) == 3


def test_plot_deterministic_and_schema(tmp_path):
    p = _write(tmp_path, CONVERGE_INI)
    cfg = load_config(p)
    csv = experiments.run_converge(cfg, tmp_path / "r")
    svg1 = emit_plot(csv, "loglog", tmp_path / "p1.svg")
    svg2 = emit_plot(csv, "loglog", tmp_path / "p2.svg")
    assert svg1.read_bytes() == svg2.read_bytes()
    assert svg1.read_text().startswith("<svg ")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaError, match="n"):
        emit_plot(bad, "loglog", tmp_path / "p3.svg")


def test_plot_bracket_segments_match_rows(tmp_path):
    csv = tmp_path / "br.csv"
    csv.write_text("n,lower,upper\n16,0.1,0.2\n32,0.05,0.15\n64,0.02,0.08\n")
    svg = emit_plot(csv, "bracket", tmp_path / "br.svg")
    assert svg.read_text().count('class="bracket"') == 3


def test_plot_empty_data_gives_axes_only(tmp_path):
    csv = tmp_path / "empty.csv"
    csv.write_text("n,lower,upper\n")
    svg = emit_plot(csv, "bracket", tmp_path / "empty.svg")
    text = svg.read_text()
    assert "<rect" in text and "polyline" not in text


def test_plot_cli(tmp_path):
    csv = tmp_path / "br.csv"
    csv.write_text("n,lower,upper\n16,0.1,0.2\n")
    assert cli.main(["plot", str(csv), "--kind", "bracket",
                     "--out", str(tmp_path / "o.svg")]) == 0
    assert cli.main(["plot", str(tmp_path / "missing.csv"), "--out",
                     str(tmp_path / "x.svg")]) == 2
