"""Shadow seminorm: brute-force oracle and closed forms."""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field

import numpy as np

from .channels import QuantumChannel, alpha as ch_alpha, beta as ch_beta, ddagger, tensor
from .ensembles import UnitaryEnsemble, product_clifford
from .errors import ContractViolationError, NotInvertibleError, ParameterError, UnsupportedError
from .linalg import (as_hermitian, lambda_max, num_qubits, pauli_coefficients, pauli_labels,
                     pauli_matrix, pauli_weight, spectral_norm, traceless_part)
from .shadow import ShadowChannel, is_invertible, shadow_superop_bruteforce

TRACE_TOL = 1e-9


@dataclass
class SeminormResult:
    value: float
    method: str
    inputs_digest: str = ""
    oracle_value: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def value_squared(self) -> float:
        return self.value**2

    @property
    def oracle_discrepancy(self) -> float | None:
        if self.oracle_value is None:
            return None
        return abs(self.value - self.oracle_value)

    def to_dict(self) -> dict:
        out = {"value": self.value, "value_squared": self.value_squared, "method": self.method}
        if self.oracle_value is not None:
            out["oracle_value"] = self.oracle_value
            out["oracle_discrepancy"] = self.oracle_discrepancy
        if self.inputs_digest:
            out["inputs_digest"] = self.inputs_digest
        out.update(self.extra)
        return out


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, np.ndarray):
            h.update(np.ascontiguousarray(p, dtype=complex).tobytes())
        else:
            h.update(repr(p).encode())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------- oracle

def seminorm_bruteforce(o, ens: UnitaryEnsemble, e: QuantumChannel,
                        shadow: ShadowChannel | None = None, chunk: int = 2048) -> SeminormResult:
    """max over states of E_U sum_b <b|E(U s U^dag)|b> c(U, b)^2, by an eigenvalue problem.

    The objective is tr(s Q) with
    Q = E_U sum_b c(U,b)^2 U^dag E^dd(|b><b|) U and c(U,b) = <b|U M^{-1,dag}(O) U^dag|b>,
    linear in the state s, so the maximum over density matrices is lambda_max(Q).
    """
    o = as_hermitian(o)
    if not ens.enumerable:
        raise UnsupportedError("brute-force seminorm needs an enumerable ensemble")
    if o.shape[0] != ens.d or e.d != ens.d:
        raise ContractViolationError("observable, ensemble and channel dimensions differ")
    sc = shadow if shadow is not None else shadow_superop_bruteforce(ens, e)
    if not is_invertible(sc):
        raise NotInvertibleError("shadow channel not invertible", beta=ch_beta(e))
    bmat = sc.apply_inverse_adjoint(o)
    d = ens.d
    dd = ddagger(e)
    G = np.stack([dd.apply(np.diag(np.eye(d)[b]).astype(complex)) for b in range(d)])
    els = ens.elements()
    Q = np.zeros((d, d), dtype=complex)
    for s in range(0, els.shape[0], chunk):
        u = els[s:s + chunk]
        c = np.einsum("kbj,jl,kbl->kb", u, bmat, u.conj(), optimize=True)
        w = np.einsum("kb,bij->kij", c**2, G)
        Q += (u.conj().transpose(0, 2, 1) @ w @ u).sum(axis=0)
    Q /= els.shape[0]
    lam = lambda_max(Q)
    return SeminormResult(float(np.sqrt(max(lam, 0.0))), "bruteforce",
                          _digest(o, ens.kind, ens.n, e.superop.mat), extra={"lambda_max": lam})


# ---------------------------------------------------------------- closed forms

def seminorm_global_traceless(o_o, n: int, alpha, beta) -> SeminormResult:
    """Closed form for a traceless observable under a global 3-design.

    value^2 = d(d^2-1)/((d+2)(d beta - alpha)) * (((1+d) alpha - 2 beta)/(d beta - alpha) tr(O^2)
              + 2 ||O^2||_sp)
    """
    o_o = as_hermitian(o_o)
    d = 2**n
    if o_o.shape[0] != d:
        raise ContractViolationError("observable dimension does not match n")
    if abs(np.trace(o_o)) > TRACE_TOL:
        raise ContractViolationError("global closed form needs a traceless observable")
    den = d * beta - alpha
    if abs(den) < 1e-12:
        raise NotInvertibleError("shadow channel not invertible", beta=beta)
    o2 = o_o @ o_o
    tr2 = float(np.trace(o2).real)
    sp = spectral_norm(o2)
    sq = d * (d * d - 1) / ((d + 2) * den) * (((1 + d) * alpha - 2 * beta) / den * tr2 + 2 * sp)
    sq = float(np.real(sq))
    return SeminormResult(float(np.sqrt(max(sq, 0.0))), "global_closed",
                          _digest(o_o, n, alpha, beta), extra={"raw_value_squared": sq})


def seminorm_global(o_o, e: QuantumChannel) -> SeminormResult:
    return seminorm_global_traceless(o_o, e.n, ch_alpha(e), ch_beta(e))


def seminorm_global_bounds(o, n: int, beta: float) -> tuple[float, float, float]:
    """Squared-seminorm chain (lower, upper in tr(O_o^2), upper in tr(O^2)).

    lower = (2^n-1)^2/(beta-1)^2 tr(O_o^2) <= value^2 <= 3(2^n-1)^2/(beta-1)^2 tr(O_o^2)
          <= 3(2^n-1)^2/(beta-1)^2 tr(O^2)
    """
    o = as_hermitian(o)
    if abs(beta - 1) < 1e-12:
        raise NotInvertibleError("shadow channel not invertible", beta=beta)
    oo = traceless_part(o, n)
    k = (2**n - 1) ** 2 / (beta - 1) ** 2
    t_oo = float(np.trace(oo @ oo).real)
    t_o = float(np.trace(o @ o).real)
    return k * t_oo, 3 * k * t_oo, 3 * k * t_o


def seminorm_pauli_product(p, f_single) -> SeminormResult:
    """(1/(sqrt(3) f))^wt for a Pauli string under product Clifford with product noise.

    :param p: Pauli string or an integer weight
    :param f_single: single-qubit shadow parameter (beta_1 - 1)/3, or one per
        non-identity position of ``p``
    """
    wt = p if isinstance(p, (int, np.integer)) else pauli_weight(p)
    fs = list(f_single) if np.ndim(f_single) else [f_single] * wt
    if len(fs) != wt:
        raise ParameterError("need one f per non-identity position")
    if any(abs(f) <= 1e-12 for f in fs):
        raise NotInvertibleError("shadow channel not invertible (f = 0)")
    sq = float(np.prod([1 / (3 * abs(f) ** 2) for f in fs])) if wt else 1.0
    return SeminormResult(float(np.sqrt(sq)), "pauli", _digest(p, tuple(fs)))


def _ftilde(p: int, q: int, f: float, table: str) -> float:
    if p == 0 and q == 0:
        return 1 / f if table == "printed" else 1.0
    if (p == 0) != (q == 0):
        return 1.0
    if p == q:
        return 3 / f**2
    return 0.0


def klocal_matrix(coeffs, f: float, table: str = "printed") -> np.ndarray:
    """sum_{p,q} alpha_p alpha_q F(p,q) P_p P_q for coefficients indexed by Pauli labels."""
    if table not in ("printed", "derived"):
        raise ParameterError("table must be 'printed' or 'derived'")
    items = [(lab, a) for lab, a in _coeff_items(coeffs) if abs(a) > 1e-14]
    k = len(next(iter(_coeff_items(coeffs)))[0])
    d = 2**k
    idx = {"I": 0, "X": 1, "Y": 2, "Z": 3}
    H = np.zeros((d, d), dtype=complex)
    mats = {lab: pauli_matrix(lab) for lab, _ in items}
    for (lp, ap), (lq, aq) in itertools.product(items, repeat=2):
        F = 1.0
        for cp, cq in zip(lp, lq):
            F *= _ftilde(idx[cp], idx[cq], f, table)
            if F == 0:
                break
        if F:
            H += ap * aq * F * (mats[lp] @ mats[lq])
    return H


def _coeff_items(coeffs):
    if isinstance(coeffs, dict):
        return [(k.upper(), complex(v)) for k, v in coeffs.items()]
    arr = np.asarray(coeffs, dtype=complex).ravel()
    k = int(round(np.log(arr.size) / np.log(4)))
    if 4**k != arr.size:
        raise ParameterError("coefficient vector length must be a power of 4")
    return list(zip(pauli_labels(k), arr))


def seminorm_klocal_depolarizing(coeffs, f: float, table: str = "printed") -> SeminormResult:
    """k-local seminorm under product Clifford with D_{1,f} noise on every qubit.

    :param coeffs: dict Pauli label -> alpha_p, or a length-4^k vector in
        ``pauli_labels`` order
    :param table: ``"printed"`` uses F(0,0) = 1/f; ``"derived"`` uses F(0,0) = 1
    """
    if not 0 < f <= 1:
        raise ParameterError("f must lie in (0, 1]")
    H = klocal_matrix(coeffs, f, table)
    H = (H + H.conj().T) / 2
    sp = spectral_norm(H)
    return SeminormResult(float(np.sqrt(sp)), "klocal_depolarizing", _digest(str(coeffs), f, table),
                          extra={"table": table, "lambda_max": lambda_max(H)})


# ---------------------------------------------------------------- locality

def locality_reduce(o, n: int | None = None, tol: float = 1e-10):
    """Minimal qubit set outside which ``o`` acts as the identity.

    Returns ``(reduced_operator, support)``; with empty support the reduced
    operator is the 1x1 matrix holding the identity coefficient.
    """
    o = as_hermitian(o)
    n = num_qubits(o.shape[0]) if n is None else n
    coeffs = pauli_coefficients(o, n)
    support = sorted({q for lab, a in coeffs.items() if abs(a) > tol
                      for q, ch in enumerate(lab) if ch != "I"})
    if not support:
        return np.array([[coeffs["I" * n]]], dtype=complex), ()
    k = len(support)
    red = np.zeros((2**k, 2**k), dtype=complex)
    for lab, a in coeffs.items():
        if abs(a) <= tol:
            continue
        red += a * pauli_matrix("".join(lab[q] for q in support))
    return red, tuple(support)


def _restricted_channel(e: QuantumChannel, support):
    if e.n == 1:
        return e
    if e.factors is None:
        return None
    return tensor([e.factors[q] for q in support])


def seminorm_auto(o, ens: UnitaryEnsemble, e: QuantumChannel, oracle: bool = False,
                  max_bruteforce_qubits: int = 3) -> SeminormResult:
    """Pick the cheapest exact method available for the ensemble/channel pair.

    Global 3-design ensembles use the closed form for traceless inputs; product
    ensembles with product noise reduce to the support of ``o`` and use the
    Pauli formula for Pauli strings, the oracle otherwise.
    """
    o = as_hermitian(o)
    n = ens.n
    if ens.kind in ("clifford_global", "haar"):
        if abs(np.trace(o)) <= TRACE_TOL:
            res = seminorm_global(o, e)
            if oracle and ens.enumerable:
                res.oracle_value = seminorm_bruteforce(o, ens, e).value
            return res
        if ens.enumerable:
            return seminorm_bruteforce(o, ens, e)
        raise UnsupportedError("no closed form for a traceful observable beyond n = 2")
    if ens.kind == "clifford_product" and (e.n == 1 or e.factors is not None):
        red, support = locality_reduce(o, n)
        if not support:
            return SeminormResult(float(abs(red[0, 0])), "locality_trivial")
        coeffs = pauli_coefficients(red, len(support))
        nz = [(lab, a) for lab, a in coeffs.items() if abs(a) > 1e-12]
        sub_e = _restricted_channel(e, support)
        if len(nz) == 1 and "I" not in nz[0][0]:
            lab, a = nz[0]
            facs = [sub_e] if len(support) == 1 else list(sub_e.factors)
            fs = [(ch_beta(c) - ch_alpha(c) / 2) / 3 for c in facs]
            res = seminorm_pauli_product(lab, fs)
            res.value *= abs(a)
            if oracle and len(support) <= max_bruteforce_qubits:
                res.oracle_value = seminorm_bruteforce(red, product_clifford(len(support)), sub_e).value
            return res
        if len(support) <= max_bruteforce_qubits:
            res = seminorm_bruteforce(red, product_clifford(len(support)), sub_e)
            res.extra["support"] = list(support)
            return res
        raise UnsupportedError("no closed form for this observable; supply N explicitly")
    if ens.enumerable and n <= min(2, max_bruteforce_qubits):
        return seminorm_bruteforce(o, ens, e)
    raise UnsupportedError("no seminorm method for this ensemble/channel combination")


# ---------------------------------------------------------------- k-local table report

KLOCAL_CASES = (
    {"X": 1.0},
    {"X": 1.0, "Z": 1.0},
    {"X": 0.6, "Y": -0.3, "Z": 0.8},
    {"XZ": 1.0, "ZY": 0.5},
    {"XX": 0.7, "YZ": -0.4, "ZI": 0.3, "IX": 0.2},
    {"I": 1.0, "X": 1.0},
    {"I": 0.3, "X": 1.0, "Y": -0.4},
    {"II": 0.5, "XZ": 1.0, "ZI": 0.7},
)


def klocal_table_report(fs=(1.0, 0.8, 0.5), cases=KLOCAL_CASES, tol: float = 1e-8) -> dict:
    """Compare both f-tilde conventions with the brute-force oracle.

    A term with an identity factor on some qubit brings the per-qubit
    p = q = 0 cell into F(p, q); cases without any such factor do not touch it.
    """
    from .channels import make_depolarizing
    rows = []
    for f in fs:
        for coeffs in cases:
            k = len(next(iter(coeffs)))
            o = sum(a * pauli_matrix(lab) for lab, a in coeffs.items())
            ch = make_depolarizing(1, f) if k == 1 else tensor([make_depolarizing(1, f)] * k)
            bf = seminorm_bruteforce(o, product_clifford(k), ch).value
            pr = seminorm_klocal_depolarizing(coeffs, f, "printed").value
            de = seminorm_klocal_depolarizing(coeffs, f, "derived").value
            rows.append({"coeffs": coeffs, "f": f, "has_identity_factor": any("I" in lab for lab in coeffs),
                         "bruteforce": bf, "printed": pr, "derived": de,
                         "printed_discrepancy": abs(pr - bf), "derived_discrepancy": abs(de - bf)})
    no_id = [r for r in rows if not r["has_identity_factor"]]
    with_id = [r for r in rows if r["has_identity_factor"]]
    return {
        "cases": rows,
        "no_identity_max_discrepancy": max(max(r["printed_discrepancy"], r["derived_discrepancy"]) for r in no_id),
        "no_identity_passed": all(r["printed_discrepancy"] <= tol and r["derived_discrepancy"] <= tol
                                  for r in no_id),
        "identity_cell": {
            "printed_matches_oracle": all(r["printed_discrepancy"] <= tol for r in with_id),
            "derived_matches_oracle": all(r["derived_discrepancy"] <= tol for r in with_id),
            "printed_max_discrepancy": max(r["printed_discrepancy"] for r in with_id),
            "derived_max_discrepancy": max(r["derived_discrepancy"] for r in with_id),
        },
    }
