import math

import numpy as np
import pytest

from mcqmc import bounds, covers, discrepancy, measures
from mcqmc.errors import ParameterError
from mcqmc.util import philox


@pytest.fixture(scope="module")
def cube1():
    return measures.uniform_cube(1)


def test_reference_points_d1_quantile_midgrid(cube1):
    pts, achieved = covers.reference_points(cube1, 3)
    assert np.allclose(sorted(pts[:, 0]), [1 / 6, 1 / 2, 5 / 6])
    assert achieved == pytest.approx(1 / 6, abs=1e-15)


def test_reference_points_single(cube1):
    pts, achieved = covers.reference_points(cube1, 1)
    assert pts[0, 0] == pytest.approx(0.5)
    assert achieved == pytest.approx(0.5)


def test_reference_points_d2_product_grid():
    m = measures.uniform_cube(2)
    pts, achieved = covers.reference_points(m, 4)
    expect = {(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)}
    assert {tuple(np.round(p, 12)) for p in pts} == expect
    assert achieved == pytest.approx(discrepancy.star_discrepancy_exact(pts, m).value)


def test_reference_points_requires_dth_power():
    with pytest.raises(ParameterError):
        covers.reference_points(measures.uniform_cube(2), 3)


def test_reference_points_disk_best_of_k():
    disk = measures.uniform_ball(2)
    pts, achieved = covers.reference_points(disk, 9, seed=3, k=8)
    assert pts.shape == (9, 2)
    assert achieved == pytest.approx(discrepancy.star_discrepancy_exact(pts, disk).value)
    # best-of-8 cannot be worse than the first candidate alone
    first, ach1 = covers.reference_points(disk, 9, seed=3, k=1)
    assert achieved <= ach1


def test_build_box_cover_d1(cube1):
    pts, _ = covers.reference_points(cube1, 3)
    cov = covers.build_box_cover(pts, cube1)
    assert cov.cardinality == 5
    got = sorted(cov.anchors[:, 0])
    assert got[0] == -math.inf and got[-1] == math.inf
    assert np.allclose(got[1:4], [1 / 6, 1 / 2, 5 / 6])
    assert cov.delta == pytest.approx(1 / 3, abs=1e-15)


def test_build_box_cover_cardinality_d2():
    m = measures.uniform_cube(2)
    pts, _ = covers.reference_points(m, 4)
    cov = covers.build_box_cover(pts, m)
    assert cov.cardinality == 36  # (r+2)^d with multiplicities kept


def test_cardinality_respects_lemma_bound(cube1):
    for r in (3, 9, 27):
        pts, _ = covers.reference_points(cube1, r)
        cov = covers.build_box_cover(pts, cube1)
        bound = bounds.cover_cardinality_bound(1, cov.delta, c=1.0)
        if bound >= cov.cardinality:
            assert cov.cardinality <= bound
        assert cov.cardinality == r + 2


def test_validate_trivial_cover(cube1):
    anchors = np.array([[-math.inf], [math.inf]])
    cov = covers.DeltaCover(
        family="anchored-box",
        sets=[covers.BoxSet((-math.inf,), (False,)), covers.BoxSet((math.inf,), (False,))],
        delta=1.0,
        measure=cube1,
        anchors=anchors,
        masses=np.array([0.0, 1.0]),
    )
    report = covers.validate_cover(cov, samples=200, seed=1)
    assert report.passed and report.max_gap <= 1.0


def test_validate_quantile_cover_hits_delta(cube1):
    pts, _ = covers.reference_points(cube1, 3)
    cov = covers.build_box_cover(pts, cube1)
    report = covers.validate_cover(cov, samples=1000, seed=2)
    assert report.passed
    assert report.max_gap <= 1 / 3 + 1e-12
    assert report.max_gap > 0.3  # the widest gap is essentially delta


def test_validate_detects_deleted_anchor(cube1):
    pts, _ = covers.reference_points(cube1, 3)
    cov = covers.build_box_cover(pts, cube1)
    keep = [i for i, s in enumerate(cov.sets) if s.anchor[0] != 0.5]
    broken = covers.DeltaCover(
        family="anchored-box",
        sets=[cov.sets[i] for i in keep],
        delta=cov.delta,
        measure=cube1,
        anchors=cov.anchors[keep],
        masses=cov.masses[keep],
    )
    report = covers.validate_cover(broken, samples=1000, seed=2)
    assert not report.passed
    assert report.witness is not None
    assert 1 / 6 < report.witness[0] < 5 / 6  # witness sits in the deleted gap


def test_validate_cover_d2():
    m = measures.uniform_cube(2)
    pts, _ = covers.reference_points(m, 16)
    cov = covers.build_box_cover(pts, m)
    report = covers.validate_cover(cov, samples=1000, seed=4)
    assert report.passed


def test_sandwich_inequality_against_exact_oracle(cube1):
    """sup-family discrepancy <= max-over-cover + delta, on 100 random point sets."""
    pts, _ = covers.reference_points(cube1, 9)
    cov = covers.build_box_cover(pts, cube1)
    rng = philox(11)
    for _ in range(100):
        P = rng.random((int(rng.integers(2, 40)), 1))
        exact = discrepancy.star_discrepancy_exact(P, cube1).value
        bracket = discrepancy.star_discrepancy_via_cover(P, cov)
        assert bracket.lower <= exact + 1e-12
        assert exact <= bracket.lower + cov.delta + 1e-12


def test_cover_csv_export(tmp_path, cube1):
    pts, _ = covers.reference_points(cube1, 3)
    cov = covers.build_box_cover(pts, cube1)
    path = tmp_path / "cover.csv"
    covers.export_cover_csv(cov, path)
    text = path.read_text().splitlines()
    assert text[1].startswith("box,-inf")
    assert any(",inf," in line for line in text)
