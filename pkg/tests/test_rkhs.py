import math

import numpy as np
import pytest

from mcqmc import measures, rkhs
from mcqmc.errors import CertificateError, ParameterError
from mcqmc.util import philox


@pytest.fixture(scope="module")
def cube1():
    return measures.uniform_cube(1)


def f_identity():
    return rkhs.H1Function.from_d1(lambda x: x, lambda x: 1.0, label="x")


def f_square():
    return rkhs.H1Function.from_d1(lambda x: x * x, lambda x: 2.0 * x, label="x^2")


def f_exp():
    return rkhs.H1Function.from_d1(math.exp, math.exp, label="exp")


def f_const(a):
    return rkhs.H1Function.from_d1(lambda x: a, lambda x: 0.0, label=f"const{a}")


def test_h1_norm_worked_values():
    assert rkhs.h_norm(f_identity(), 1) == pytest.approx(2.0, abs=1e-9)
    assert rkhs.h_norm(f_const(3.5), 1) == pytest.approx(3.5, abs=1e-12)
    assert rkhs.h_norm(f_exp(), 1) == pytest.approx(2.0 * math.e - 1.0, abs=1e-9)


def test_h2_and_sup_norms():
    # f = x: f0 = 1, f~ = -1: H2 norm = sqrt(1 + 1)
    assert rkhs.h_norm(f_identity(), 2) == pytest.approx(math.sqrt(2.0), abs=1e-9)
    assert rkhs.h_norm(f_square(), math.inf) == pytest.approx(2.0, abs=1e-6)


def test_representation_consistency():
    rng = philox(3)
    for f in (f_identity(), f_square(), f_exp()):
        for _ in range(20):
            assert f.representation_gap(float(rng.random())) < 1e-9


def test_integration_error_worked_values(cube1):
    assert rkhs.integration_error(f_const(2.0), [[0.3], [0.9]], cube1) == pytest.approx(0.0, abs=1e-10)
    assert rkhs.integration_error(f_identity(), [[0.5]], cube1) == pytest.approx(0.0, abs=1e-10)
    assert rkhs.integration_error(f_square(), [[0.5]], cube1) == pytest.approx(1.0 / 12.0, abs=1e-10)


def test_kh_check_worked_case(cube1):
    rep = rkhs.kh_check(f_square(), [[0.5]], cube1, p=math.inf)
    assert rep.error == pytest.approx(1.0 / 12.0, abs=1e-10)
    assert rep.norm == pytest.approx(2.0, abs=1e-9)
    assert rep.discrepancy == pytest.approx(0.5)
    assert rep.budget == pytest.approx(1.0, abs=1e-8)
    assert rep.holds
    assert rep.dual_gap < 1e-8


def test_kh_check_constant_function(cube1):
    rep = rkhs.kh_check(f_const(4.0), [[0.1], [0.8], [0.33]], cube1, p=math.inf)
    assert rep.holds and abs(rep.error) < 1e-9


def test_kh_check_rejects_bad_p(cube1):
    with pytest.raises(ParameterError):
        rkhs.kh_check(f_identity(), [[0.5]], cube1, p=3)


def test_kh_inequality_family_p_inf_and_p2(cube1):
    rng = philox(9)
    family = [f_identity(), f_square(), f_exp(),
              rkhs.H1Function.from_d1(lambda x: x**3 - 0.2 * x, lambda x: 3 * x**2 - 0.2, "cubic")]
    for _ in range(100):
        P = rng.random((int(rng.integers(1, 30)), 1))
        f = family[int(rng.integers(0, len(family)))]
        for p in (math.inf, 2):
            rep = rkhs.kh_check(f, P, cube1, p=p)
            assert rep.holds
            assert rep.dual_gap < 1e-8


def test_kh_check_density_measure_p_inf():
    lin = measures.linear_density()
    rep = rkhs.kh_check(f_square(), [[0.2], [0.6], [0.9]], lin, p=math.inf)
    assert rep.holds
    assert rep.dual_gap < 1e-8


def test_kernel_q_d1_closed_form():
    rng = philox(5)
    for _ in range(50):
        x, y = float(rng.random()), float(rng.random())
        assert rkhs.kernel_q(x, y) == pytest.approx(1.0 + min(1.0 - x, 1.0 - y), abs=1e-15)


def test_kernel_positive_semidefinite():
    rng = philox(7)
    for _ in range(20):
        n = int(rng.integers(2, 12))
        pts = rng.random(n)
        b = rng.standard_normal(n)
        Q = np.array([[rkhs.kernel_q(x, y) for y in pts] for x in pts])
        quad_form = float(b @ Q @ b)
        assert quad_form >= -1e-12


def test_product_function_d2():
    cube2 = measures.uniform_cube(2)
    g = lambda x: x - 1.0
    gp = lambda x: 1.0
    f = rkhs.H1Function.from_product(0.5, [(g, gp), (g, gp)], label="prod")
    # f(x) = 0.5 + (x1-1)(x2-1); integral over the cube = 0.5 + 1/4
    err = rkhs.integration_error(f, [[0.5, 0.5]], cube2)
    assert err == pytest.approx(0.75 - (0.5 + 0.25), abs=1e-9)
    rep = rkhs.kh_check(f, [[0.5, 0.5], [0.25, 0.75]], cube2, p=math.inf)
    assert rep.holds


def test_product_requires_vanishing_at_one():
    with pytest.raises(ParameterError):
        rkhs.H1Function.from_product(0.0, [(lambda x: x, lambda x: 1.0)])


def test_hard_failure_on_violated_inequality(cube1, monkeypatch):
    f = f_square()
    monkeypatch.setattr(rkhs, "h_norm", lambda *a, **k: 0.0)
    with pytest.raises(CertificateError):
        rkhs.kh_check(f, [[0.5]], cube1, p=math.inf)
