import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisy_shadows.channels import (in_lambda_n, make_amplitude_damping, make_depolarizing, make_identity,
                                    random_cptp, tensor)
from noisy_shadows.ensembles import enumerate_clifford, product_clifford, single_qubit_clifford_group
from noisy_shadows.errors import ContractViolationError, NotInvertibleError, ParameterError
from noisy_shadows.linalg import kron, pauli_matrix, random_hermitian, traceless_part
from noisy_shadows.seminorm import (klocal_matrix, klocal_table_report, locality_reduce, seminorm_auto,
                                    seminorm_bruteforce, seminorm_global, seminorm_global_bounds,
                                    seminorm_global_traceless, seminorm_klocal_depolarizing,
                                    seminorm_pauli_product)

C1 = single_qubit_clifford_group()
Z = pauli_matrix("Z")
X = pauli_matrix("X")


def test_identity_observable_is_one(rng):
    for ens, e in ((C1, make_identity(1)), (C1, random_cptp(1, rng)),
                   (enumerate_clifford(2), make_amplitude_damping(2, 0.4))):
        assert seminorm_bruteforce(np.eye(ens.d), ens, e).value == pytest.approx(1, abs=1e-9)


def test_bruteforce_examples():
    assert seminorm_bruteforce(Z, C1, make_identity(1)).value == pytest.approx(np.sqrt(3))
    assert seminorm_bruteforce(X, C1, make_depolarizing(1, 0.5)).value_squared == pytest.approx(12)


def test_bruteforce_non_invertible():
    with pytest.raises(NotInvertibleError):
        seminorm_bruteforce(Z, C1, make_depolarizing(1, 0.0))


def test_global_closed_form_examples():
    assert seminorm_global_traceless(Z, 1, 2, 2).value_squared == pytest.approx(3)
    assert seminorm_global_traceless(Z, 1, 2, 1.5).value_squared == pytest.approx(12)
    assert seminorm_global(Z, make_depolarizing(1, 0.5)).value_squared == pytest.approx(12)
    with pytest.raises(ContractViolationError):
        seminorm_global_traceless(np.eye(2), 1, 2, 2)
    with pytest.raises(NotInvertibleError):
        seminorm_global_traceless(Z, 1, 2, 1)


def test_noiseless_specialization(rng):
    for n in (1, 2, 3):
        d = 2**n
        o = traceless_part(random_hermitian(d, rng), n)
        o2 = o @ o
        expect = (d + 1) / (d + 2) * (np.trace(o2).real + 2 * np.linalg.norm(o2, 2))
        assert seminorm_global(o, make_identity(n)).value_squared == pytest.approx(expect)


@pytest.mark.parametrize("n", [1, 2])
def test_global_closed_form_matches_oracle(n, rng):
    ens = enumerate_clifford(n)
    for e in (make_identity(n), make_depolarizing(n, 0.6), make_amplitude_damping(n, 0.5), random_cptp(n, rng)):
        o = traceless_part(random_hermitian(2**n, rng), n)
        assert seminorm_global(o, e).value == pytest.approx(seminorm_bruteforce(o, ens, e).value, abs=1e-8)


def test_global_bounds_ordering(rng):
    for _ in range(50):
        n = int(rng.integers(1, 4))
        d = 2**n
        b = float(rng.uniform(1.01, d))
        o = random_hermitian(d, rng)
        lo, up1, up2 = seminorm_global_bounds(o, n, b)
        exact = seminorm_global_traceless(traceless_part(o, n), n, d, b).value_squared
        assert lo <= exact * (1 + 1e-9) + 1e-12
        assert exact <= up1 * (1 + 1e-9) + 1e-12
        assert up1 <= up2 + 1e-12


def test_global_bounds_examples():
    lo, up1, up2 = seminorm_global_bounds(Z, 1, 2)
    assert up2 == pytest.approx(6) and lo <= 3 <= up1
    assert seminorm_global_bounds(np.eye(2), 1, 1.5)[:2] == pytest.approx((0, 0))
    with pytest.raises(NotInvertibleError):
        seminorm_global_bounds(Z, 1, 1.0)


def test_pauli_product_examples():
    assert seminorm_pauli_product("II", 0.2).value == 1
    assert seminorm_pauli_product(0, 0.2).value == 1
    assert seminorm_pauli_product("XZ", 1 / 3).value_squared == pytest.approx(9)
    p = 0.35
    assert seminorm_pauli_product("IYI", p / 3).value_squared == pytest.approx(3 / p**2)
    with pytest.raises(NotInvertibleError):
        seminorm_pauli_product("X", 0.0)
    with pytest.raises(ParameterError):
        seminorm_pauli_product("XX", [0.1])


def test_pauli_product_matches_oracle(rng):
    e = tensor([make_amplitude_damping(1, 0.4), random_cptp(1, rng)])
    fs = [(c.superop.mat[0, 0] + c.superop.mat[3, 3] - 1).real / 3 for c in e.factors]
    res = seminorm_bruteforce(pauli_matrix("YX"), product_clifford(2), e)
    assert seminorm_pauli_product("YX", fs).value == pytest.approx(res.value, abs=1e-8)


def test_klocal_examples():
    for f in (1.0, 0.7, 0.3):
        assert seminorm_klocal_depolarizing({"X": 1.0}, f).value_squared == pytest.approx(3 / f**2)
    r = seminorm_klocal_depolarizing({"X": 1.0, "Z": 1.0}, 1.0)
    assert r.value_squared == pytest.approx(6)
    assert np.allclose(klocal_matrix({"X": 1.0, "Z": 1.0}, 1.0), 6 * np.eye(2))
    bf = seminorm_bruteforce(X + Z, C1, make_depolarizing(1, 0.5)).value
    assert seminorm_klocal_depolarizing({"X": 1.0, "Z": 1.0}, 0.5).value == pytest.approx(bf, abs=1e-8)
    with pytest.raises(ParameterError):
        seminorm_klocal_depolarizing({"X": 1.0}, 0.0)
    with pytest.raises(ParameterError):
        seminorm_klocal_depolarizing({"X": 1.0}, 1.5)


def test_klocal_vector_input():
    v = np.zeros(4)
    v[1] = v[3] = 1.0
    assert seminorm_klocal_depolarizing(v, 1.0).value_squared == pytest.approx(6)


def test_klocal_table_report():
    rep = klocal_table_report()
    assert rep["no_identity_passed"]
    assert rep["no_identity_max_discrepancy"] < 1e-8
    cell = rep["identity_cell"]
    assert cell["derived_matches_oracle"]
    assert not cell["printed_matches_oracle"]


def test_locality_reduce_examples():
    red, sup = locality_reduce(kron(Z, np.eye(2), np.eye(2)))
    assert sup == (0,) and np.allclose(red, Z)
    red, sup = locality_reduce(np.eye(8))
    assert sup == () and np.allclose(red, [[1]])
    red, sup = locality_reduce(kron(np.eye(2), X, Z) + 0.5 * np.eye(8))
    assert sup == (1, 2)
    assert np.allclose(red, kron(X, Z) + 0.5 * np.eye(4))


def test_locality_oracle_agreement():
    e = make_amplitude_damping(2, 0.6)
    big = seminorm_bruteforce(kron(Z, np.eye(2)), product_clifford(2), e).value
    small = seminorm_bruteforce(Z, C1, make_amplitude_damping(1, 0.6)).value
    assert big == pytest.approx(small, abs=1e-9)


def test_auto_routes():
    r = seminorm_auto(pauli_matrix("XZ"), product_clifford(2), make_amplitude_damping(2, 0.5), oracle=True)
    assert r.method == "pauli" and r.value_squared == pytest.approx(144)
    assert r.oracle_discrepancy < 1e-8
    r = seminorm_auto(np.eye(8), product_clifford(3), make_identity(3))
    assert r.value == pytest.approx(1)
    r = seminorm_auto(Z, enumerate_clifford(1), make_identity(1), oracle=True)
    assert r.method == "global_closed" and r.oracle_discrepancy < 1e-8


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3).filter(lambda c: abs(c) > 1e-3))
def test_homogeneity_and_triangle(seed, c):
    rng = np.random.default_rng(seed)
    e = random_cptp(1, rng)
    s, t = random_hermitian(2, rng), random_hermitian(2, rng)
    ns = seminorm_bruteforce(s, C1, e).value
    nt = seminorm_bruteforce(t, C1, e).value
    assert seminorm_bruteforce(c * s, C1, e).value == pytest.approx(abs(c) * ns, rel=1e-9, abs=1e-9)
    assert seminorm_bruteforce(s + t, C1, e).value <= ns + nt + 1e-9


def test_norm_condition(rng):
    for e in (make_identity(1), make_amplitude_damping(1, 0.5), make_depolarizing(1, 0.4)):
        assert in_lambda_n(e)
        for _ in range(20):
            o = random_hermitian(2, rng)
            o = o / np.linalg.norm(o, 2)
            for scale in (1.0, 1e-3):
                val = seminorm_bruteforce(scale * o, C1, e).value
                assert val > 0.1 * scale


def test_monotone_blow_up():
    grid = [1.0, 0.8, 0.6, 0.4, 0.2]
    vals = [seminorm_klocal_depolarizing({"XY": 1.0}, f).value for f in grid]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    vals = [seminorm_pauli_product("XY", f / 3).value for f in grid]
    assert all(a < b for a, b in zip(vals, vals[1:]))
