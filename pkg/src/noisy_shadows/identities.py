"""Permutation operators, the R-operator basis and the three-design identity battery."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatchError, ParameterError
from .linalg import as_operator, kron, partial_trace


def compose_perm(p, q) -> tuple[int, ...]:
    """(p q)(k) = p(q(k)), permutations as 0-indexed image tuples."""
    return tuple(p[q[k]] for k in range(len(p)))


def perm_sign(p) -> int:
    sign, seen = 1, set()
    for start in range(len(p)):
        if start in seen:
            continue
        k, length = start, 0
        while k not in seen:
            seen.add(k)
            k = p[k]
            length += 1
        sign *= (-1) ** (length - 1)
    return sign


def cycle(*points, size: int = 3) -> tuple[int, ...]:
    """Permutation from 1-indexed cycle notation, e.g. ``cycle(1, 2, 3)``."""
    img = list(range(size))
    for a, b in zip(points, points[1:] + points[:1]):
        img[a - 1] = b - 1
    return tuple(img)


@lru_cache(maxsize=None)
def _perm_operator_cached(pi: tuple, d: int) -> np.ndarray:
    t = len(pi)
    D = d**t
    out = np.zeros((D, D), dtype=complex)
    inv = [0] * t
    for k, v in enumerate(pi):
        inv[v] = k
    for idx in itertools.product(range(d), repeat=t):
        img = tuple(idx[inv[j]] for j in range(t))
        col = int(np.ravel_multi_index(idx, (d,) * t))
        row = int(np.ravel_multi_index(img, (d,) * t))
        out[row, col] = 1
    out.setflags(write=False)
    return out


def permutation_operator(pi, d: int) -> np.ndarray:
    """W_pi with W_pi (x_1 (x) ... (x) x_t) = x_{pi^-1(1)} (x) ... (x) x_{pi^-1(t)}."""
    pi = tuple(int(v) for v in pi)
    if sorted(pi) != list(range(len(pi))):
        raise ParameterError(f"{pi} is not a permutation")
    return _perm_operator_cached(pi, d)


def swap_operator(d: int) -> np.ndarray:
    """W = sum_ij |ij><ji| on C^d (x) C^d."""
    if d < 2:
        raise ParameterError("swap operator needs d >= 2")
    return permutation_operator((1, 0), d)


@dataclass(frozen=True)
class ROperators:
    d: int
    r_plus: np.ndarray
    r_minus: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray

    def as_list(self):
        return [self.r_plus, self.r_minus, self.r0, self.r1, self.r2, self.r3]


S3 = {
    "1": (0, 1, 2),
    "12": cycle(1, 2),
    "13": cycle(1, 3),
    "23": cycle(2, 3),
    "123": cycle(1, 2, 3),
    "132": cycle(1, 3, 2),
}


@lru_cache(maxsize=None)
def build_r_operators(d: int) -> ROperators:
    if d < 2:
        raise ParameterError("R operators need d >= 2")
    W = {k: permutation_operator(p, d) for k, p in S3.items()}
    r_plus = sum(W.values()) / 6
    r_minus = sum(perm_sign(S3[k]) * W[k] for k in W) / 6
    r0 = (2 * W["1"] - W["123"] - W["132"]) / 3
    r1 = (2 * W["23"] - W["13"] - W["12"]) / 3
    r2 = (W["12"] - W["13"]) / np.sqrt(3)
    r3 = 1j * (W["123"] - W["132"]) / np.sqrt(3)
    return ROperators(d, r_plus, r_minus, r0, r1, r2, r3)


# ---------------------------------------------------------------- three-design sum

def lemma3design_rhs(a, b, c, alpha, beta, d: int) -> complex:
    """Closed form of E_U sum_x <x|E(UAU^dag)|x><x|UBU^dag|x><x|UCU^dag|x>.

    ``alpha = tr E(I)`` and ``beta = Tr(E o diag)``.
    """
    a, b, c = as_operator(a), as_operator(b), as_operator(c)
    if not a.shape == b.shape == c.shape == (d, d):
        raise DimensionMismatchError("A, B, C must all be d x d")
    denom = (d - 1) * d * (d + 1) * (d + 2)
    ta, tb, tc = np.trace(a), np.trace(b), np.trace(c)
    c1 = ((1 + d) * alpha - 2 * beta) / denom
    c2 = (d * beta - alpha) / denom
    t1 = ta * np.trace(b @ c) + ta * tb * tc
    t2 = np.trace(a @ b) * tc + np.trace(a @ c) * tb + np.trace(a @ b @ c) + np.trace(a @ c @ b)
    return complex(c1 * t1 + c2 * t2)


def lemma3design_lhs(a, b, c, e, ens) -> complex:
    """Exact average over an enumerable ensemble and all basis outcomes."""
    a, b, c = as_operator(a), as_operator(b), as_operator(c)
    els = ens.elements()
    d = els.shape[1]
    if a.shape[0] != d or e.d != d:
        raise DimensionMismatchError("operator, channel and ensemble dimensions differ")
    # <x|E(U A U^dag)|x> through the superoperator, vectorised over elements
    ua = np.einsum("kij,jl,kml->kim", els, a, els.conj(), optimize=True)
    s = e.superop.mat
    diag_rows = s[[x + d * x for x in range(d)], :]  # rows giving <x|E(.)|x>
    pa = np.einsum("xv,kv->kx", diag_rows, ua.transpose(0, 2, 1).reshape(len(els), -1))
    ub = np.einsum("kxj,jl,kxl->kx", els, b, els.conj(), optimize=True)
    uc = np.einsum("kxj,jl,kxl->kx", els, c, els.conj(), optimize=True)
    return complex(np.sum(pa * ub * uc) / len(els))


def lemma_pauli_reduction(a) -> complex:
    """Value tr(A)/3 taken by the sum when d = 2, B = C = a Pauli and E is trace preserving."""
    return complex(np.trace(as_operator(a)) / 3)


# ---------------------------------------------------------------- T3 identities

def t3d_first_rhs(x: int, y: int, z: int, d: int) -> np.ndarray:
    r = build_r_operators(d)
    dyz = float(y == z)
    dxyz = float(x == y == z)
    return (2 / (d * (d + 1) * (d + 2)) * (dyz + 2 * dxyz) * r.r_plus
            + 1 / (d * (d + 1) * (d - 1)) * (dyz - dxyz) * (r.r0 + r.r1))


def t3d_second_rhs(gamma, x: int, d: int) -> np.ndarray:
    r = build_r_operators(d)
    tg = np.trace(gamma)
    gx = gamma[x, x]
    return (2 / (d * (d + 1) * (d + 2)) * (tg + 2 * gx) * r.r_plus
            + 1 / (d * (d + 1) * (d - 1)) * (tg - gx) * (r.r0 + r.r1))


def t3d_third_rhs(t_lx, l_xxxx, b, c, d: int) -> np.ndarray:
    denom = (d - 1) * d * (d + 1) * (d + 2)
    eye = np.eye(d)
    tb, tc = np.trace(b), np.trace(c)
    first = ((1 + d) * t_lx - 2 * l_xxxx) * (np.trace(b @ c) + tb * tc) * eye
    second = (d * l_xxxx - t_lx) * (b * tc + c * tb + b @ c + c @ b)
    return (first + second) / denom


def t3d_third_lhs(gamma, x: int, b, c, d: int, twirl3) -> np.ndarray:
    """tr_23{ T3(Gamma (x) |xx><xx|) (I (x) B (x) C) } with a supplied twirl."""
    px = np.zeros((d, d), dtype=complex)
    px[x, x] = 1
    big = twirl3(kron(gamma, px, px)) @ kron(np.eye(d), b, c)
    return partial_trace(big, [d, d, d], [0])


def xi_operator(pi, b, c, d: int) -> np.ndarray:
    """xi_pi = tr_23(W_pi (I (x) B (x) C))."""
    return partial_trace(permutation_operator(pi, d) @ kron(np.eye(d), b, c), [d, d, d], [0])


@dataclass
class IdentityCheck:
    name: str
    passed: bool
    max_residual: float
    detail: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "max_residual": self.max_residual, **self.detail}


def _haar3_closed(d):
    from .ensembles import haar_twirl_3
    return lambda a: haar_twirl_3(a, d)


def verify_t3_projection_identities(d: int, rng: np.random.Generator | None = None,
                                    tol: float = 1e-9, trials: int = 3) -> list[IdentityCheck]:
    """Check the three twirl identities with the closed-form T3 for all x, y, z."""
    from .channels import make_identity, random_linear_map
    if d not in (2, 3):
        raise ParameterError("verification is provided for d in {2, 3}")
    rng = rng or np.random.default_rng(0)
    T3 = _haar3_closed(d)
    out = []
    worst = 0.0
    for x, y, z in itertools.product(range(d), repeat=3):
        a = np.zeros((d**3, d**3), dtype=complex)
        row = np.ravel_multi_index((z, x, x), (d,) * 3)
        col = np.ravel_multi_index((y, x, x), (d,) * 3)
        a[row, col] = 1
        worst = max(worst, float(np.max(np.abs(T3(a) - t3d_first_rhs(x, y, z, d)))))
    out.append(IdentityCheck(f"T3_first_d{d}", worst <= tol, worst, {}))

    worst = 0.0
    gammas = [np.eye(d, dtype=complex)] + [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
                                         for _ in range(trials)]
    for g in gammas:
        for x in range(d):
            px = np.zeros((d, d))
            px[x, x] = 1
            lhs = T3(kron(g, px, px))
            worst = max(worst, float(np.max(np.abs(lhs - t3d_second_rhs(g, x, d)))))
    out.append(IdentityCheck(f"T3_second_d{d}", worst <= tol, worst, {}))

    worst = 0.0
    chans = []
    if d == 2:
        chans = [make_identity(1)] + [random_linear_map(1, rng) for _ in range(trials)]
    else:
        # d = 3 is not a qubit dimension; build generic linear maps from Kraus pairs directly
        chans = [None] + [None] * trials
    for idx, ch in enumerate(chans):
        b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        c = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        if ch is None:
            js = [np.eye(d)] if idx == 0 else [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
                                              for _ in range(2)]
            ks = [np.eye(d)] if idx == 0 else [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
                                              for _ in range(2)]
            lam = lambda m, js=js, ks=ks: sum(j @ m @ k.conj().T for j, k in zip(js, ks))
        else:
            lam = ch.apply
        for x in range(d):
            px = np.zeros((d, d), dtype=complex)
            px[x, x] = 1
            gamma = lam(px)
            t_lx = np.trace(gamma)
            l_xxxx = gamma[x, x]
            lhs = t3d_third_lhs(gamma, x, b, c, d, T3)
            rhs = t3d_third_rhs(t_lx, l_xxxx, b, c, d)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    out.append(IdentityCheck(f"T3_third_d{d}", worst <= tol, worst, {}))
    return out


def verify_t3_monte_carlo(d: int, rng: np.random.Generator, samples: int = 100_000,
                          chunk: int = 5000, n_se: float = 5.0) -> list[IdentityCheck]:
    """Haar Monte Carlo left-hand sides against the printed right-hand sides.

    Each entry must lie within ``n_se`` standard errors (plus 1e-12 slack for
    entries that are identically zero).
    """
    from .linalg import haar_unitary
    x = 0
    y = z = 1 % d
    gamma = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    b = (b + b.conj().T) / 2
    c = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    c = (c + c.conj().T) / 2
    px = np.zeros((d, d), dtype=complex)
    px[x, x] = 1
    targets = {
        "first": (lambda u: _kron3_outer(u, (z, x, x), (y, x, x)), t3d_first_rhs(x, y, z, d)),
        "first_diag": (lambda u: _kron3_outer(u, (x, x, x), (x, x, x)), t3d_first_rhs(x, x, x, d)),
        "second": (lambda u: _second_sample(u, gamma, x), t3d_second_rhs(gamma, x, d)),
        "third": (lambda u: _third_sample(u, gamma, x, b, c),
                  t3d_third_rhs(np.trace(gamma), gamma[x, x], b, c, d)),
    }
    sums = {k: [0, 0, 0] for k in targets}
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        us = haar_unitary(d, rng, size=m)
        for k, (fn, _) in targets.items():
            vals = fn(us)
            s = sums[k]
            s[0] = s[0] + vals.sum(0)
            s[1] = s[1] + (vals.real**2).sum(0)
            s[2] = s[2] + (vals.imag**2).sum(0)
        done += m
    out = []
    for k, (_, rhs) in targets.items():
        s1, s2r, s2i = sums[k]
        mean = s1 / samples
        var = (np.maximum(s2r - samples * mean.real**2, 0) + np.maximum(s2i - samples * mean.imag**2, 0))
        se = np.sqrt(var / (samples - 1) / samples)
        dev = np.abs(mean - rhs)
        ratio = np.where(se > 0, dev / np.where(se > 0, se, 1), np.where(dev > 1e-12, np.inf, 0.0))
        worst = float(np.max(ratio))
        out.append(IdentityCheck(f"T3_{k}_d{d}_haar_mc", bool(np.all(dev <= n_se * se + 1e-12)),
                                 float(np.max(dev)), {"max_se_ratio": worst, "samples": samples}))
    return out


def _kron3_outer(us, ket_idx, bra_idx):
    a = us[:, :, ket_idx[0]]
    b = us[:, :, ket_idx[1]]
    c = us[:, :, ket_idx[2]]
    ket = np.einsum("ki,kj,kl->kijl", a, b, c, optimize=True).reshape(len(us), -1)
    a2 = us[:, :, bra_idx[0]]
    b2 = us[:, :, bra_idx[1]]
    c2 = us[:, :, bra_idx[2]]
    bra = np.einsum("ki,kj,kl->kijl", a2, b2, c2, optimize=True).reshape(len(us), -1)
    return np.einsum("ki,kj->kij", ket, bra.conj())


def _second_sample(us, gamma, x):
    ug = np.einsum("kij,jl,kml->kim", us, gamma, us.conj(), optimize=True)
    v = us[:, :, x]
    vv = np.einsum("ki,kj->kij", v, v).reshape(len(us), -1)
    proj = np.einsum("ki,kj->kij", vv, vv.conj())
    d = us.shape[1]
    return np.einsum("kab,kij->kaibj", ug, proj).reshape(len(us), d**3, d**3)


def _third_sample(us, gamma, x, b, c):
    ug = np.einsum("kij,jl,kml->kim", us, gamma, us.conj(), optimize=True)
    v = us[:, :, x]
    wb = np.einsum("ki,ij,kj->k", v.conj(), b, v, optimize=True)
    wc = np.einsum("ki,ij,kj->k", v.conj(), c, v, optimize=True)
    return ug * (wb * wc)[:, None, None]


def check_permutation_homomorphism(d: int, t: int = 3) -> IdentityCheck:
    worst = 0.0
    perms = list(itertools.permutations(range(t)))
    for p in perms:
        for q in perms:
            lhs = permutation_operator(p, d) @ permutation_operator(q, d)
            rhs = permutation_operator(compose_perm(p, q), d)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return IdentityCheck(f"W_homomorphism_d{d}", worst <= 1e-12, worst, {"pairs": len(perms) ** 2})


def check_xi_identities(d: int, rng: np.random.Generator) -> IdentityCheck:
    """xi_pi = tr_23(W_pi (I (x) B (x) C)) for all six permutations."""
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    c = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    eye = np.eye(d)
    expected = {
        "1": np.trace(b) * np.trace(c) * eye,
        "12": b * np.trace(c),
        "13": c * np.trace(b),
        "23": np.trace(b @ c) * eye,
        "123": c @ b,
        "132": b @ c,
    }
    res = {k: float(np.max(np.abs(xi_operator(S3[k], b, c, d) - v))) for k, v in expected.items()}
    worst = max(res.values())
    return IdentityCheck(f"xi_d{d}", worst <= 1e-10, worst, {"per_permutation": res})


def check_lemma3design(rng: np.random.Generator, trials: int = 20, tol: float = 1e-9,
                       cptp: bool = False) -> IdentityCheck:
    """Exhaustive single-qubit Clifford LHS against the closed-form RHS."""
    from .channels import alpha as ch_alpha, beta as ch_beta, random_cptp, random_linear_map
    from .ensembles import single_qubit_clifford_group
    ens = single_qubit_clifford_group()
    worst = 0.0
    for _ in range(trials):
        e = random_cptp(1, rng) if cptp else random_linear_map(1, rng)
        a, b, c = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3)]
        lhs = lemma3design_lhs(a, b, c, e, ens)
        rhs = lemma3design_rhs(a, b, c, ch_alpha(e), ch_beta(e), 2)
        worst = max(worst, abs(lhs - rhs))
    name = "lemma3design_cptp_d2" if cptp else "lemma3design_linear_d2"
    return IdentityCheck(name, worst <= tol, float(worst), {"trials": trials})


def check_haar3_vs_clifford(tol: float = 1e-9) -> IdentityCheck:
    """Closed-form T3 equals the single-qubit Clifford three-fold twirl on a full basis."""
    from .ensembles import haar_twirl_3, single_qubit_clifford_group, twirl_superop
    from .channels import Superoperator
    S = twirl_superop(single_qubit_clifford_group(), 3)
    H = Superoperator.from_function(lambda a: haar_twirl_3(a, 2), 8).mat
    worst = float(np.max(np.abs(S - H)))
    return IdentityCheck("T3_closed_vs_clifford_d2", worst <= tol, worst, {})


def check_haar3_vs_projection(d: int, rng: np.random.Generator, tol: float = 1e-9) -> IdentityCheck:
    """Closed-form T3 against the generic projection onto span{W_pi}."""
    from .ensembles import haar_twirl, haar_twirl_3
    worst = 0.0
    for _ in range(3):
        a = rng.normal(size=(d**3, d**3)) + 1j * rng.normal(size=(d**3, d**3))
        worst = max(worst, float(np.max(np.abs(haar_twirl_3(a, d) - haar_twirl(a, d, 3)))))
    return IdentityCheck(f"T3_closed_vs_projection_d{d}", worst <= tol, worst, {})


def check_r_operators(d: int) -> IdentityCheck:
    r = build_r_operators(d)
    res = {
        "r_plus_idempotent": float(np.max(np.abs(r.r_plus @ r.r_plus - r.r_plus))),
        "hermitian": max(float(np.max(np.abs(m - m.conj().T))) for m in r.as_list()),
        "r_plus_trace": float(abs(np.trace(r.r_plus) - d * (d + 1) * (d + 2) / 6)),
    }
    if d == 2:
        res["r_minus_zero"] = float(np.max(np.abs(r.r_minus)))
    worst = max(res.values())
    return IdentityCheck(f"R_operators_d{d}", worst <= 1e-10, worst, {"residuals": res})


def run_battery(seed: int = 0, monte_carlo: bool = True, samples: int = 100_000) -> list[IdentityCheck]:
    """Every identity check; the d = 3 Monte Carlo part is optional because it is slow."""
    rng = np.random.default_rng(seed)
    out = [check_permutation_homomorphism(2), check_permutation_homomorphism(3),
           check_r_operators(2), check_r_operators(3),
           check_xi_identities(2, rng), check_xi_identities(3, rng),
           check_lemma3design(rng, 20), check_lemma3design(rng, 20, cptp=True),
           check_haar3_vs_clifford(), check_haar3_vs_projection(2, rng), check_haar3_vs_projection(3, rng)]
    out += verify_t3_projection_identities(2, rng)
    out += verify_t3_projection_identities(3, rng)
    if monte_carlo:
        out += verify_t3_monte_carlo(3, rng, samples=samples)
    return out
