import numpy as np
import pytest

from noisy_shadows.channels import alpha, beta, make_identity, random_cptp
from noisy_shadows.ensembles import enumerate_clifford, single_qubit_clifford_group
from noisy_shadows.errors import ParameterError
from noisy_shadows.identities import (build_r_operators, check_haar3_vs_clifford, check_lemma3design,
                                      check_permutation_homomorphism, compose_perm, cycle, lemma3design_lhs,
                                      lemma3design_rhs, lemma_pauli_reduction, permutation_operator,
                                      run_battery, swap_operator, t3d_third_rhs,
                                      verify_t3_monte_carlo, verify_t3_projection_identities)
from noisy_shadows.linalg import ket, kron, pauli_matrix, random_matrix
from noisy_shadows.seminorm import seminorm_bruteforce, seminorm_global

C1 = single_qubit_clifford_group()


def test_swap_examples(rng):
    w = swap_operator(2)
    assert np.allclose(w @ ket("01"), ket("10"))
    for d in (2, 3, 4):
        w = swap_operator(d)
        assert np.trace(w) == pytest.approx(d)
        assert np.allclose(w @ w, np.eye(d * d))
        a, b = random_matrix(d, rng), random_matrix(d, rng)
        assert np.trace(w @ kron(a, b)) == pytest.approx(np.trace(a @ b))
    with pytest.raises(ParameterError):
        swap_operator(1)


def test_permutations():
    assert cycle(1, 2, 3) == (1, 2, 0)
    for d in (2, 3):
        assert check_permutation_homomorphism(d).passed
        for p in [(0, 1, 2), cycle(1, 2), cycle(1, 2, 3)]:
            w = permutation_operator(p, d)
            assert np.allclose(w @ w.conj().T, np.eye(d**3))
    assert compose_perm(cycle(1, 2), cycle(1, 2)) == (0, 1, 2)


def test_r_operator_examples():
    r = build_r_operators(2)
    assert np.allclose(r.r_plus @ r.r_plus, r.r_plus, atol=1e-10)
    assert np.allclose(r.r_minus, 0)
    assert np.trace(r.r_plus) == pytest.approx(4)
    r3 = build_r_operators(3)
    assert np.trace(r3.r_plus) == pytest.approx(10)
    assert np.trace(r3.r_minus) == pytest.approx(1)
    for m in r3.as_list():
        assert np.allclose(m, m.conj().T)


def test_lemma_trivial_inputs():
    for n in (1, 2):
        d = 2**n
        e = make_identity(n)
        ens = C1 if n == 1 else enumerate_clifford(2)
        eye = np.eye(d)
        lhs = lemma3design_lhs(eye, eye, eye, e, ens)
        assert lhs == pytest.approx(d)
        assert lemma3design_rhs(eye, eye, eye, alpha(e), beta(e), d) == pytest.approx(lhs)


def test_lemma_identity_channel_example():
    e = make_identity(1)
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    z = pauli_matrix("Z")
    assert lemma3design_lhs(a, z, z, e, C1) == pytest.approx(lemma3design_rhs(a, z, z, 2, 2, 2), abs=1e-12)


def test_lemma_random_channels(rng):
    assert check_lemma3design(rng, 20, cptp=True).passed
    assert check_lemma3design(rng, 20, cptp=False).passed


def test_lemma_pauli_reduction(rng):
    for lab in "XYZ":
        p = pauli_matrix(lab)
        for _ in range(5):
            e = random_cptp(1, rng)
            a = random_matrix(2, rng)
            assert lemma3design_rhs(a, p, p, alpha(e), beta(e), 2) == pytest.approx(lemma_pauli_reduction(a))
            assert lemma3design_lhs(a, p, p, e, C1) == pytest.approx(lemma_pauli_reduction(a))


def test_lemma_noiseless_matches_seminorm(rng):
    o = pauli_matrix("X") + 0.4 * pauli_matrix("Y")
    e = make_identity(1)
    assert seminorm_global(o, e).value == pytest.approx(seminorm_bruteforce(o, C1, e).value)


def test_t3_closed_form_matches_clifford():
    assert check_haar3_vs_clifford().passed


@pytest.mark.parametrize("d", [2, 3])
def test_t3_projection_identities(d, rng):
    for chk in verify_t3_projection_identities(d, rng):
        assert chk.passed, chk


def test_t3_third_identity_channel_reduces():
    # t = Lambda_xxxx = 1, B = Z, C = I: only the B tr(C) + BC + CB terms survive
    z = pauli_matrix("Z")
    assert np.allclose(t3d_third_rhs(1, 1, z, np.eye(2), 2), z / 6)


def test_t3_monte_carlo_d3():
    for chk in verify_t3_monte_carlo(3, np.random.default_rng(5), samples=20_000):
        assert chk.passed, chk.to_dict()


def test_battery_without_monte_carlo():
    checks = run_battery(seed=1, monte_carlo=False)
    assert len(checks) >= 15
    assert all(c.passed for c in checks), [c.name for c in checks if not c.passed]
