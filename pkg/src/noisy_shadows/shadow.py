"""Shadow channels, their inverses, and classical-shadow snapshots."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channels import (QuantumChannel, Superoperator, alpha as ch_alpha, beta as ch_beta,
                       superop_tensor)
from .clifford import gates_to_unitary
from .ensembles import ProductEnsemble, UnitaryEnsemble
from .errors import (DimensionMismatchError, NotInvertibleError, ParameterError,
                     UnsupportedError)
from .linalg import as_operator, kron, vec

F_FLOOR = 1e-12
SINGULAR_FLOOR = 1e-10


def depolarizing_superop(n: int, f: float) -> Superoperator:
    d = 2**n
    vi = vec(np.eye(d))
    return Superoperator(f * np.eye(d * d) + (1 - f) / d * np.outer(vi, vi))


def _apply_depolarizing(a: np.ndarray, f: float) -> np.ndarray:
    d = a.shape[-1]
    return f * a + (1 - f) * np.trace(a, axis1=-2, axis2=-1)[..., None, None] * np.eye(d) / d


def _apply_local_depolarizing(a: np.ndarray, fs) -> np.ndarray:
    """Apply D_{1,f_i} on qubit i of an operator (or a stack of operators)."""
    n = len(fs)
    lead = a.shape[:-2]
    t = a.reshape(lead + (2,) * (2 * n))
    off = len(lead)
    for q, f in enumerate(fs):
        ax_r, ax_c = off + q, off + n + q
        tr = np.trace(t, axis1=ax_r, axis2=ax_c)
        tr = np.expand_dims(np.expand_dims(tr, ax_r), ax_c)
        eye = np.eye(2).reshape([2 if k in (ax_r, ax_c) else 1 for k in range(t.ndim)])
        t = f * t + (1 - f) * tr * eye / 2
    return t.reshape(a.shape)


@dataclass
class ShadowChannel:
    """Shadow channel M for an ensemble and noise channel.

    ``form`` is ``"depolarizing"`` (parameter ``f``), ``"product"`` (one
    single-qubit parameter per qubit in ``f_factors``) or ``"generic"``
    (explicit ``matrix``).
    """

    n: int
    form: str
    f: float | None = None
    f_factors: tuple | None = None
    matrix: Superoperator | None = None
    beta: float | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def superop(self) -> Superoperator:
        if self.form == "depolarizing":
            return depolarizing_superop(self.n, self.f)
        if self.form == "product":
            return superop_tensor([depolarizing_superop(1, g) for g in self.f_factors])
        return self.matrix

    def apply(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        if self.form == "depolarizing":
            return _apply_depolarizing(a, self.f)
        if self.form == "product":
            return _apply_local_depolarizing(a, self.f_factors)
        return self.matrix.apply(a)

    def apply_inverse(self, a) -> np.ndarray:
        """M^{-1}(a); accepts a single operator or a stack."""
        if not is_invertible(self):
            raise NotInvertibleError("shadow channel not invertible", beta=self.beta)
        a = np.asarray(a, dtype=complex)
        if self.form == "depolarizing":
            return _apply_depolarizing(a, 1 / self.f)
        if self.form == "product":
            return _apply_local_depolarizing(a, [1 / g for g in self.f_factors])
        inv = self.matrix.inverse(SINGULAR_FLOOR).mat
        d = 2**self.n
        if a.ndim == 2:
            return Superoperator(inv).apply(a)
        flat = a.transpose(0, 2, 1).reshape(a.shape[0], -1)
        return (flat @ inv.T).reshape(a.shape[0], d, d).transpose(0, 2, 1)

    def apply_inverse_adjoint(self, o) -> np.ndarray:
        """(M^{-1})^dag(o) under the Hilbert-Schmidt inner product."""
        o = as_operator(o)
        if self.form == "depolarizing":
            return _apply_depolarizing(o, np.conj(1 / self.f))
        if self.form == "product":
            return _apply_local_depolarizing(o, [np.conj(1 / g) for g in self.f_factors])
        inv = self.matrix.inverse(SINGULAR_FLOOR)
        return inv.adjoint().apply(o)

    def header(self) -> dict:
        h = {"n": self.n, "form": self.form}
        if self.form == "depolarizing":
            h["f"] = _real_or_pair(self.f)
        elif self.form == "product":
            h["f_factors"] = [_real_or_pair(g) for g in self.f_factors]
        if self.beta is not None:
            h["beta"] = _real_or_pair(self.beta)
        return h


def _real_or_pair(x):
    x = complex(x)
    return float(x.real) if abs(x.imag) < 1e-14 else [float(x.real), float(x.imag)]


# ---------------------------------------------------------------- construction

def _batched_vecop(us: np.ndarray) -> np.ndarray:
    """conj(U) (x) U for a stack of unitaries: the superoperator of A -> U A U^dag."""
    k, d, _ = us.shape
    return np.einsum("kab,kij->kaibj", us.conj(), us).reshape(k, d * d, d * d)


def _bruteforce_matrix(els: np.ndarray, e: QuantumChannel, chunk: int = 2048) -> np.ndarray:
    d = els.shape[1]
    diag_proj = np.zeros(d * d)
    diag_proj[[x + d * x for x in range(d)]] = 1
    core = diag_proj[:, None] * e.superop.mat  # Delta o E
    acc = np.zeros((d * d, d * d), dtype=complex)
    for s in range(0, els.shape[0], chunk):
        v = _batched_vecop(els[s:s + chunk])
        acc += (v.conj().transpose(0, 2, 1) @ (core @ v)).sum(axis=0)
    return acc / els.shape[0]


def shadow_superop_bruteforce(ens: UnitaryEnsemble, e: QuantumChannel,
                              factorize: bool = True) -> ShadowChannel:
    """Exact E_U sum_b <b|E(U . U^dag)|b> U^dag|b><b|U as a generic superoperator.

    Product ensembles with a product channel are handled factor by factor
    when ``factorize`` is set.
    """
    if ens.d != e.d:
        raise DimensionMismatchError(f"ensemble acts on {ens.n} qubits, channel on {e.n}")
    prov = {"ensemble": ens.descriptor(), "channel": e.to_descriptor(), "method": "bruteforce"}
    if factorize and isinstance(ens, ProductEnsemble) and len(ens.factors) > 1:
        chans = _channel_factors(e, [f.n for f in ens.factors])
        if chans is not None:
            parts = [shadow_superop_bruteforce(f, c, factorize=False).matrix
                     for f, c in zip(ens.factors, chans)]
            return ShadowChannel(ens.n, "generic", matrix=superop_tensor(parts),
                                 beta=ch_beta(e), provenance=prov)
    if not ens.enumerable:
        raise UnsupportedError("brute-force shadow channel needs an enumerable ensemble")
    mat = _bruteforce_matrix(ens.elements(), e)
    return ShadowChannel(ens.n, "generic", matrix=Superoperator(mat), beta=ch_beta(e), provenance=prov)


def _channel_factors(e: QuantumChannel, sizes):
    if all(s == 1 for s in sizes):
        if e.n == 1 and len(sizes) == 1:
            return [e]
        if e.factors is not None and len(e.factors) == len(sizes):
            return list(e.factors)
    return None


def f_of_E(e: QuantumChannel, n: int | None = None):
    """(Tr(E o diag) - tr(E(I)) / 2^n) / (2^{2n} - 1)."""
    n = e.n if n is None else n
    if 2**n != e.d:
        raise DimensionMismatchError(f"channel acts on {e.n} qubits, not {n}")
    d = 2**n
    val = (ch_beta(e) - ch_alpha(e) / d) / (d * d - 1)
    return float(np.real(val)) if abs(np.imag(val)) < 1e-12 else complex(val)


def f_bounds(n: int) -> tuple[float, float]:
    return -1 / (4**n - 1), 1 / (2**n + 1)


def check_f_bounds(e: QuantumChannel, n: int | None = None, tol: float = 1e-10) -> bool:
    n = e.n if n is None else n
    f = f_of_E(e, n)
    if isinstance(f, complex):
        return False
    lo, hi = f_bounds(n)
    return bool(lo - tol <= f <= hi + tol)


def shadow_channel_closed_form(kind, e: QuantumChannel, n: int | None = None) -> ShadowChannel:
    """Analytic shadow channel for 2-design ensembles.

    :param kind: ``"clifford_global"``/``"haar"`` (global 2-design),
        ``"clifford_product"`` (product of single-qubit 2-designs with product
        noise), or an ensemble object of one of those kinds
    """
    if isinstance(kind, UnitaryEnsemble):
        kind = kind.kind
    n = e.n if n is None else n
    if 2**n != e.d:
        raise DimensionMismatchError(f"channel acts on {e.n} qubits, not {n}")
    prov = {"ensemble": {"kind": kind, "n": n}, "channel": e.to_descriptor(), "method": "closed_form"}
    if kind in ("clifford_global", "haar"):
        return ShadowChannel(n, "depolarizing", f=f_of_E(e, n), beta=ch_beta(e), provenance=prov)
    if kind == "clifford_product":
        chans = _channel_factors(e, [1] * n)
        if chans is None:
            raise UnsupportedError("product closed form needs a product of single-qubit channels")
        if n == 1:
            return ShadowChannel(1, "depolarizing", f=f_of_E(e, 1), beta=ch_beta(e), provenance=prov)
        fs = tuple(f_of_E(c, 1) for c in chans)
        return ShadowChannel(n, "product", f_factors=fs, beta=ch_beta(e), provenance=prov)
    raise UnsupportedError(f"no closed form for ensemble kind {kind!r}")


def shadow_channel(ens: UnitaryEnsemble, e: QuantumChannel) -> ShadowChannel:
    """Closed form when the ensemble is a recognised 2-design composite, else brute force."""
    if ens.kind in ("clifford_global", "haar"):
        return shadow_channel_closed_form(ens.kind, e, ens.n)
    if ens.kind == "clifford_product" and _channel_factors(e, [1] * ens.n) is not None:
        return shadow_channel_closed_form("clifford_product", e, ens.n)
    return shadow_superop_bruteforce(ens, e)


def is_invertible(sc: ShadowChannel) -> bool:
    if sc.form == "depolarizing":
        return bool(abs(sc.f) > F_FLOOR)
    if sc.form == "product":
        return all(abs(g) > F_FLOOR for g in sc.f_factors)
    s = np.linalg.svd(sc.matrix.mat, compute_uv=False)
    return bool(s[-1] > SINGULAR_FLOOR)


def inverse_shadow(sc: ShadowChannel) -> Superoperator:
    """Superoperator of M^{-1} (D_{n,1/f} for the depolarizing form)."""
    if not is_invertible(sc):
        raise NotInvertibleError("shadow channel not invertible", beta=sc.beta)
    if sc.form == "depolarizing":
        return depolarizing_superop(sc.n, 1 / sc.f)
    if sc.form == "product":
        return superop_tensor([depolarizing_superop(1, 1 / g) for g in sc.f_factors])
    return sc.matrix.inverse(SINGULAR_FLOOR)


def inverse_parameter(sc: ShadowChannel):
    """1/f for the depolarizing form, per-qubit 1/f for the product form."""
    if not is_invertible(sc):
        raise NotInvertibleError("shadow channel not invertible", beta=sc.beta)
    if sc.form == "depolarizing":
        return 1 / sc.f
    if sc.form == "product":
        return tuple(1 / g for g in sc.f_factors)
    raise UnsupportedError("generic shadow channels have no scalar inverse parameter")


# ---------------------------------------------------------------- snapshots

@dataclass
class Snapshot:
    u: object  # gate tags, ensemble index, per-qubit list, or None
    b: str
    rho_hat: np.ndarray


def _bits(b, n: int) -> str:
    if isinstance(b, str):
        if len(b) != n or set(b) - {"0", "1"}:
            raise ParameterError(f"bitstring {b!r} is not {n} bits")
        return b
    return format(int(b), f"0{n}b")


def measured_projector(u, b) -> np.ndarray:
    """U^dag |b><b| U."""
    u = as_operator(u)
    idx = int(b, 2) if isinstance(b, str) else int(b)
    v = u[idx].conj()
    return np.outer(v, v.conj())


def snapshot_global(u, b, f: float, n: int) -> Snapshot:
    """(1/f) U^dag|b><b|U + (1 - 1/f) I / 2^n."""
    if abs(f) <= F_FLOOR:
        raise NotInvertibleError("shadow channel not invertible (f = 0)")
    u = as_operator(u)
    if u.shape[0] != 2**n:
        raise DimensionMismatchError("unitary dimension does not match n")
    p = measured_projector(u, b)
    return Snapshot(None, _bits(b, n), p / f + (1 - 1 / f) * np.eye(2**n) / 2**n)


def snapshot_product(us, bs, f_single) -> Snapshot:
    """Tensor product of single-qubit snapshot factors.

    :param f_single: one parameter for all qubits, or a sequence with one per qubit
    """
    us = [as_operator(u) for u in us]
    n = len(us)
    fs = list(f_single) if np.ndim(f_single) else [f_single] * n
    bits = _bits(bs if isinstance(bs, str) else "".join(str(int(x)) for x in bs), n)
    factors = []
    for u, bit, f in zip(us, bits, fs):
        if abs(f) <= F_FLOOR:
            raise NotInvertibleError("shadow channel not invertible (f = 0)")
        p = measured_projector(u, bit)
        factors.append(p / f + (1 - 1 / f) * np.eye(2) / 2)
    return Snapshot(None, bits, kron(*factors))


def snapshot_generic(u, b, inv: Superoperator) -> Snapshot:
    u = as_operator(u)
    n = int(round(np.log2(u.shape[0])))
    return Snapshot(None, _bits(b, n), inv.apply(measured_projector(u, b)))


def snapshot_with_input_noise(u, b, inv_M: Superoperator, inv_K: Superoperator) -> Snapshot:
    """(K^{-1} o M^{-1})(U^dag|b><b|U)."""
    s = snapshot_generic(u, b, inv_M)
    s.rho_hat = inv_K.apply(s.rho_hat)
    return s


def snapshots_from_inverse(us: np.ndarray, bs: np.ndarray, sc: ShadowChannel,
                           inv_K: Superoperator | None = None) -> np.ndarray:
    """Vectorised rho_hat = K^{-1} M^{-1}(U^dag|b><b|U) for stacks of unitaries and outcomes."""
    rows = us[np.arange(len(us)), bs].conj()  # U^dag |b>
    proj = np.einsum("ki,kj->kij", rows, rows.conj())
    out = sc.apply_inverse(proj)
    if inv_K is not None:
        d = out.shape[-1]
        flat = out.transpose(0, 2, 1).reshape(len(out), -1)
        out = (flat @ inv_K.mat.T).reshape(len(out), d, d).transpose(0, 2, 1)
    return out


class ShadowSet:
    """Ordered snapshots with provenance metadata."""

    def __init__(self, n: int, us: list, bits: list[str], rho_hats: np.ndarray, meta: dict | None = None):
        if len(bits) == 0:
            raise ParameterError("a shadow set cannot be empty")
        if rho_hats.shape != (len(bits), 2**n, 2**n):
            raise DimensionMismatchError("snapshot matrices do not match n and count")
        self.n = n
        self.us = list(us)
        self.bits = list(bits)
        self.rho_hats = rho_hats
        self.meta = dict(meta or {})

    def __len__(self):
        return len(self.bits)

    def __getitem__(self, i) -> Snapshot:
        return Snapshot(self.us[i], self.bits[i], self.rho_hats[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def expectations(self, o) -> np.ndarray:
        """tr(O rho_hat_i) for every snapshot (real part)."""
        o = as_operator(o)
        return np.einsum("ij,kji->k", o, self.rho_hats).real

    def mean(self) -> np.ndarray:
        return self.rho_hats.mean(axis=0)

    def write_jsonl(self, path, include_rho: bool | None = None) -> None:
        """One header line then one line per snapshot.

        ``rho_hat`` is omitted when the header carries closed-form inverse
        parameters and every ``u`` is a gate list, unless ``include_rho`` is set.
        """
        inv = self.meta.get("inverse", {})
        reconstructible = inv.get("form") in ("depolarizing", "product") \
            and not self.meta.get("input_channel") and all(isinstance(u, list) for u in self.us)
        if include_rho is None:
            include_rho = not reconstructible
        with open(path, "w") as fh:
            fh.write(json.dumps({"header": {"n": self.n, **self.meta}}, sort_keys=True) + "\n")
            for u, b, r in zip(self.us, self.bits, self.rho_hats):
                rec = {"u": u, "b": b}
                if include_rho:
                    rec["rho_hat"] = [[[float(x.real), float(x.imag)] for x in row] for row in r]
                fh.write(json.dumps(rec) + "\n")

    @classmethod
    def read_jsonl(cls, path) -> "ShadowSet":
        with open(path) as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if not lines or "header" not in lines[0]:
            raise ParameterError("shadow file lacks a header line")
        meta = dict(lines[0]["header"])
        n = meta.pop("n")
        us, bits, rhos = [], [], []
        inv = meta.get("inverse", {})
        for rec in lines[1:]:
            us.append(rec["u"])
            bits.append(rec["b"])
            if "rho_hat" in rec:
                arr = np.asarray(rec["rho_hat"], dtype=float)
                rhos.append(arr[..., 0] + 1j * arr[..., 1])
            else:
                rhos.append(_rebuild(rec["u"], rec["b"], n, inv))
        return cls(n, us, bits, np.stack(rhos), meta)


def _unitary_from_descriptor(u, n: int) -> np.ndarray:
    if isinstance(u, list) and all(isinstance(g, str) for g in u):
        return gates_to_unitary(u, n)
    if isinstance(u, list) and all(isinstance(g, list) for g in u) and len(u) == n:
        return kron(*[gates_to_unitary(g, 1) for g in u])
    raise ParameterError("snapshot unitary descriptor cannot be rebuilt without rho_hat")


def _rebuild(u, b, n, inv) -> np.ndarray:
    U = _unitary_from_descriptor(u, n)
    p = measured_projector(U, b)
    if inv.get("form") == "depolarizing":
        return _apply_depolarizing(p, 1 / inv["f"])
    if inv.get("form") == "product":
        return _apply_local_depolarizing(p, [1 / g for g in inv["f_factors"]])
    raise ParameterError("header has no closed-form inverse parameters")
