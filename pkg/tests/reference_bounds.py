"""Independent 50-digit reference evaluations of every budget formula.

Deliberately written against mpmath only, with no imports from the package,
so the float evaluators in ``mcqmc.bounds`` can be checked against a second
implementation.  Keep the formulas spelled out; do not refactor them to call
into the package.
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 50


def ref_gap_bound(alpha, M, n):
    a, m, nn = mp.mpf(alpha), mp.mpf(M), mp.mpf(n)
    return a * m / (nn * (1 - a))


def ref_hoeffding_tail(alpha, M, n, c_dev):
    a, m, nn, c = mp.mpf(alpha), mp.mpf(M), mp.mpf(n), mp.mpf(c_dev)
    shift = nn * c - 2 * m / (1 - a)
    return 2 * mp.exp(-((1 - a) ** 2 / m**2) * shift**2 / (8 * nn))


def ref_existence_bound(alpha, M, n, cardinality=None, delta=None, d=None, c=None, variant="chain"):
    a, m, nn = mp.mpf(alpha), mp.mpf(M), mp.mpf(n)
    gap = ref_gap_bound(alpha, M, n)
    lead = 8 * m / (1 - a)
    if variant in ("chain", "pushback"):
        base = lead * mp.sqrt(mp.log(mp.mpf(cardinality)) / nn) + mp.mpf(delta)
        return base + (gap if variant == "pushback" else 0)
    dd, cc = mp.mpf(d), mp.mpf(c)
    base = lead * mp.sqrt(dd * mp.log(3 + 4 * cc**2 * nn) / nn) + mp.sqrt(dd / nn)
    return base + (2 * gap if variant == "chain-coro45" else gap)


def ref_cover_cardinality_bound(d, delta, c):
    dd, de, cc = mp.mpf(d), mp.mpf(delta), mp.mpf(c)
    return (3 + 4 * cc**2 * dd / de**2) ** d


def ref_koksma_hlawka_budget(d_pushback, alpha, M, n, h1_norm):
    return (mp.mpf(d_pushback) + ref_gap_bound(alpha, M, n)) * mp.mpf(h1_norm)


def ref_sphere_upper(n, d, c):
    nn, dd, cc = mp.mpf(n), mp.mpf(d), mp.mpf(c)
    return cc * (mp.sqrt(dd) + mp.sqrt((dd + 1) * mp.log(nn))) / mp.sqrt(nn)


def ref_beck_lower(n, d):
    nn = mp.mpf(n)
    return nn ** (mp.mpf(-1) / 2 - mp.mpf(1) / (2 * d))


def ref_zonal_constant(d):
    dd = mp.mpf(d)
    return 8 * (dd * mp.sqrt(mp.pi) * mp.gamma(dd / 2) / mp.gamma((dd + 1) / 2)) ** (1 / dd)


def ref_complete_beta_half(d):
    dd = mp.mpf(d)
    return mp.sqrt(mp.pi) * mp.gamma(dd / 2) / mp.gamma((dd + 1) / 2)


def rel_err(float_value, ref_value) -> float:
    """Relative error of a float against an mpmath reference.

    References smaller than the double underflow threshold cannot be resolved
    by a float64 evaluator at all; compare those absolutely so an evaluator
    returning a (sub)normal zero is not flagged as wrong.
    """
    ref = mp.mpf(ref_value)
    if abs(ref) < mp.mpf("1e-300"):
        return float(abs(mp.mpf(float_value) - ref))
    return float(abs((mp.mpf(float_value) - ref) / ref))
