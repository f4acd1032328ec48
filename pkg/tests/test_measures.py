import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mcqmc import measures
from mcqmc.errors import CapabilityError, DimensionError, DomainError
from mcqmc.util import philox

INF = math.inf


def test_cdf_uniform_square_quarter():
    m = measures.uniform_cube(2)
    assert measures.cdf_box(m, (0.5, 0.5)) == 0.25


def test_cdf_minus_infinity_is_empty_box():
    m = measures.uniform_cube(1)
    assert measures.cdf_box(m, (-INF,)) == 0.0
    m2 = measures.uniform_cube(3)
    assert measures.cdf_box(m2, (0.5, -INF, 0.9)) == 0.0


def test_cdf_plus_infinity_is_whole_space():
    for m in (measures.uniform_cube(2), measures.uniform_ball(2), measures.linear_density()):
        anchor = [INF] * m.dimension
        assert measures.cdf_box(m, anchor) == pytest.approx(1.0, abs=1e-10)


def test_cdf_linear_density_worked_value():
    m = measures.linear_density()
    # integral of (2 - x) over [0, 0.5] is 0.875; normalized by mass 1.5
    assert measures.cdf_box(m, (0.5,)) == pytest.approx(0.875 / 1.5, abs=1e-10)


def test_cdf_dimension_mismatch():
    m = measures.uniform_cube(2)
    with pytest.raises(DimensionError):
        measures.cdf_box(m, (0.5,))


def test_generate_identity_on_cube():
    m = measures.uniform_cube(2)
    assert np.allclose(measures.generate(m, (0.3, 0.7)), [0.3, 0.7])


def test_generate_is_deterministic():
    m = measures.uniform_ball(2)
    u = (0.37, 0.91)
    assert np.array_equal(measures.generate(m, u), measures.generate(m, u))


def test_generate_rejects_out_of_domain():
    m = measures.uniform_cube(1)
    with pytest.raises(DomainError):
        measures.generate(m, (1.2,))


def test_generate_disk_center():
    m = measures.uniform_ball(2)
    assert np.allclose(measures.generate(m, (0.0, 0.0)), [0.0, 0.0])


def test_disk_generator_chi_square_on_annulus_sector_cells():
    """Area-preserving polar map: uniform cell counts on 4 annuli x 8 sectors."""
    m = measures.uniform_ball(2)
    rng = philox(71)
    n = 20_000
    u = rng.random((n, 2))
    pts = np.array([measures.generate(m, row) for row in u])
    radius = np.hypot(pts[:, 0], pts[:, 1])
    angle = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * math.pi)
    ann = np.clip(np.searchsorted(np.sqrt(np.arange(1, 4) / 4.0), radius, side="right"), 0, 3)
    sec = np.clip((angle / (2 * math.pi / 8)).astype(int), 0, 7)
    counts = np.bincount(ann * 8 + sec, minlength=32)
    expected = n / 32.0
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < stats.chi2.ppf(0.999, 31)


def test_sphere_direction_worked_values():
    v = measures.sphere_direction((0.25,), 2)
    assert abs(v[0]) <= 1e-12 and v[1] == pytest.approx(1.0, abs=1e-12)
    w = measures.sphere_direction((0.5, 0.0), 3)
    assert w[2] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        measures.sphere_direction((), 1)


@settings(max_examples=200)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=4), st.data())
def test_sphere_direction_unit_norm(u, data):
    d = len(u) + 1
    v = measures.sphere_direction(u, d)
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-12


@pytest.mark.parametrize(
    "make",
    [
        lambda: measures.uniform_cube(1),
        lambda: measures.uniform_cube(2),
        lambda: measures.uniform_axis_box(2, -1.0, 3.0),
        lambda: measures.uniform_ball(1),
        lambda: measures.uniform_ball(2),
        lambda: measures.linear_density(),
    ],
    ids=["cube1", "cube2", "box2", "ball1", "ball2", "lindens"],
)
def test_generator_matches_cdf_at_anchor_grid(make):
    """KS distance below 3/sqrt(1e5) at a 100-anchor grid, fixed seed."""
    m = make()
    n = 100_000
    rng = philox(2024)
    u = rng.random((n, m.generator_dim))
    pts = np.array([measures.generate(m, row) for row in u])
    lo, hi = m.support.bounding_box()
    if m.dimension == 1:
        anchors = np.linspace(lo[0], hi[0], 100).reshape(-1, 1)
    else:
        side = np.linspace(lo[0], hi[0], 10)
        anchors = np.array([[a, b] for a in side for b in np.linspace(lo[1], hi[1], 10)])
    worst = 0.0
    for a in anchors:
        emp = float(np.mean(np.all(pts < a[None, :], axis=1)))
        worst = max(worst, abs(emp - measures.cdf_box(m, a)))
    assert worst < 3.0 / math.sqrt(n)


@pytest.mark.parametrize("make", [lambda: measures.uniform_ball(2), lambda: measures.linear_density()])
def test_cdf_monotone_along_nested_anchors(make):
    m = make()
    rng = philox(5)
    lo, hi = m.support.bounding_box()
    chain = np.sort(rng.uniform(lo, hi, size=(100, m.dimension)), axis=0)
    vals = [measures.cdf_box(m, a) for a in chain]
    assert all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2), st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2))
def test_cube_cdf_monotone_property(a, b):
    m = measures.uniform_cube(2)
    lo = np.minimum(a, b)
    assert measures.cdf_box(m, lo) <= measures.cdf_box(m, np.maximum(a, b)) + 1e-15


def test_density_measure_requires_low_dimension():
    with pytest.raises(CapabilityError):
        measures.density_measure(3, lambda x: 1.0, 1.0, 1.0)


def test_ball_cdf_capability_error_in_3d():
    m = measures.uniform_ball(3)
    with pytest.raises(CapabilityError):
        measures.cdf_box(m, (0.1, 0.1, 0.1))
