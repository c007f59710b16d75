import math

import pytest
from hypothesis import given, strategies as st

from noisy_shadows.channels import make_amplitude_damping, make_depolarizing, make_identity
from noisy_shadows.errors import NotInvertibleError, ParameterError
from noisy_shadows.planner import (advisory_f_bounds, ceil_slack, num_buckets, plan_amplitude_damping,
                                   plan_depolarizing, plan_general, plan_global, plan_pauli)
from noisy_shadows.seminorm import seminorm_pauli_product


def test_general_examples():
    p = plan_general(1.0, 1, 1.0, 2 / math.e)
    assert (p.N, p.K) == (34, 2)
    p = plan_general(3.0, 10, 0.1, 0.01)
    assert (p.N, p.K) == (10200, 16)
    assert p.N_total == 10200 * 16
    assert plan_general(3.0, 20, 0.1, 0.01).N == p.N


def test_general_rejects_bad_inputs():
    for args in ((1.0, 0, 0.1, 0.1), (1.0, 1, 0.0, 0.1), (1.0, 1, 0.1, 1.0), (1.0, 1, 1.5, 0.1), (-1.0, 1, 0.1, 0.1)):
        with pytest.raises(ParameterError):
            plan_general(*args)


def test_ceil_slack():
    assert ceil_slack(34 * 3 / 0.01) == 10200
    assert ceil_slack(2.0000001) == 3
    assert ceil_slack(2.0) == 2


def test_global_examples():
    p = plan_global(4.0, 2, 1.5, 5, 0.2, 0.05)
    assert p.n_total_bound == pytest.approx(204 * 9 * math.log(200) / (0.25 * 0.04) * 4)
    assert p.bound_source == "global_3design"
    n = 3
    p = plan_global(2.0, n, 2.0**n, 4, 0.3, 0.1)
    assert p.n_total_bound == pytest.approx(204 * math.log(80) / 0.09 * 2.0)
    with pytest.raises(NotInvertibleError):
        plan_global(1.0, 2, 1.0, 1, 0.1, 0.1)
    bounds = [plan_global(1.0, 2, 1 + h, 1, 0.1, 0.1).n_total_bound for h in (1e-1, 1e-3, 1e-5)]
    assert bounds[0] < bounds[1] < bounds[2] and bounds[2] > 1e14


def test_pauli_examples():
    p = plan_pauli([0, 1, 2, 3], 1 / 3, None, 0.5, 0.1)
    assert p.max_seminorm_sq == pytest.approx(27)
    assert plan_pauli([0], 0.05, 1, 0.5, 0.1).max_seminorm_sq == 1
    f = 0.4
    p = plan_depolarizing([2], f, 1, 0.5, 0.1)
    assert p.max_seminorm_sq == pytest.approx((3 / f**2) ** 2)
    pa = plan_amplitude_damping([1, 2], 0.5, None, 0.5, 0.1)
    assert pa.max_seminorm_sq == pytest.approx(144)
    assert plan_pauli([2], None, 1, 0.5, 0.1, beta=2.0).max_seminorm_sq == pytest.approx(9)
    with pytest.raises(NotInvertibleError):
        plan_pauli([1], 0.0, 1, 0.5, 0.1)


def test_pauli_bound_formula():
    p = plan_pauli([1, 3], 0.2, 7, 0.25, 0.02)
    assert p.n_total_bound == pytest.approx(68 * math.log(2 * 7 / 0.02) / 0.25**2 * (1 / (3 * 0.04)) ** 3)


def test_general_consistent_with_pauli():
    for wt in range(4):
        for f in (1 / 3, 0.2, 0.1):
            sq = seminorm_pauli_product("X" * wt, f).value_squared
            a = plan_general(sq, 3, 0.2, 0.1)
            b = plan_pauli([wt], f, 3, 0.2, 0.1)
            assert (a.N, a.K) == (b.N, b.K)


@given(st.floats(0.01, 100), st.integers(1, 50), st.floats(0.01, 1.0), st.floats(0.001, 0.99),
       st.floats(1.01, 3.0))
def test_monotone(sq, m, eps, delta, scale):
    base = plan_general(sq, m, eps, delta)
    assert plan_general(sq * scale, m, eps, delta).N_total >= base.N_total
    assert plan_general(sq, m * 2, eps, delta).N_total >= base.N_total
    assert plan_general(sq, m, eps / scale, delta).N_total >= base.N_total
    assert plan_general(sq, m, eps, delta / scale).N_total >= base.N_total
    assert base.N >= 1 and base.K >= 1


def test_num_buckets():
    assert num_buckets(1, 0.05) == math.ceil(2 * math.log(40))
    assert num_buckets(2, 0.05) - num_buckets(1, 0.05) in (1, 2)


def test_advisory_examples():
    r = advisory_f_bounds(make_identity(1))
    assert r["severity_ratio"] == pytest.approx(1) and r["within_bounds"] and r["invertible"]
    r = advisory_f_bounds(make_amplitude_damping(1, 0.5))
    assert r["f"] == pytest.approx(1 / 6) and r["severity_ratio"] == pytest.approx(0.5)
    assert r["inverse_parameter"] == pytest.approx(6)
    r = advisory_f_bounds(make_depolarizing(2, 0.0))
    assert r["f"] == pytest.approx(0, abs=1e-15) and not r["invertible"] and r["inverse_parameter"] is None
    assert r["interval"] == pytest.approx([-1 / 15, 1 / 5])
