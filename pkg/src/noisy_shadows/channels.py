"""Quantum channels as Kraus pairs with a cached superoperator matrix.

A channel is stored as pairs ``(J_a, K_a)`` acting as ``A -> sum_a J_a A K_a^dag``,
which covers every linear map.  CPTP channels are canonicalised to ``J_a == K_a``.
The superoperator matrix uses column stacking: ``sum_a conj(K_a) (x) J_a``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DimensionMismatchError, NotInvertibleError, ParameterError
from .linalg import as_operator, dagger, kron, num_qubits, spectral_norm, unvec, vec

TP_TOL = 1e-9
CHOI_TOL = 1e-9
SINGULAR_FLOOR = 1e-10


def _transpose_perm(d: int) -> np.ndarray:
    """Index permutation p with vec(A.T) == vec(A)[p]."""
    idx = np.arange(d * d).reshape(d, d, order="F")
    return idx.T.reshape(-1, order="F")


def _tensor_perm(dims) -> np.ndarray:
    """Permutation mapping kron(vec(A_1), ..., vec(A_m)) onto vec(A_1 (x) ... (x) A_m)."""
    dims = list(dims)
    m = len(dims)
    # kron-of-vecs index order: (c_1, r_1, c_2, r_2, ...) with r fastest inside each factor
    shape = []
    for dk in dims:
        shape += [dk, dk]
    # tensor-of-vecs axis layout per factor: (col, row)
    axes = np.indices(shape).reshape(2 * m, -1)
    cols = axes[0::2]
    rows = axes[1::2]
    D = int(np.prod(dims))
    r = np.zeros(axes.shape[1], dtype=int)
    c = np.zeros(axes.shape[1], dtype=int)
    for k, dk in enumerate(dims):
        r = r * dk + rows[k]
        c = c * dk + cols[k]
    big = r + D * c
    perm = np.empty_like(big)
    perm[big] = np.arange(big.size)
    return perm


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on d x d operators, as a d^2 x d^2 column-stacking matrix."""

    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError("superoperator matrix must be square")
        d = int(round(np.sqrt(mat.shape[0])))
        if d * d != mat.shape[0]:
            raise DimensionMismatchError("superoperator size must be a perfect square")
        object.__setattr__(self, "mat", mat)

    @property
    def d(self) -> int:
        return int(round(np.sqrt(self.mat.shape[0])))

    @classmethod
    def identity(cls, d: int) -> "Superoperator":
        return cls(np.eye(d * d, dtype=complex))

    @classmethod
    def from_function(cls, fn, d: int) -> "Superoperator":
        cols = []
        for k in range(d * d):
            e = np.zeros(d * d, dtype=complex)
            e[k] = 1
            cols.append(vec(fn(unvec(e, d))))
        return cls(np.stack(cols, axis=1))

    def apply(self, a) -> np.ndarray:
        a = as_operator(a)
        if a.shape[0] != self.d:
            raise DimensionMismatchError(f"operator dim {a.shape[0]} != {self.d}")
        return unvec(self.mat @ vec(a), self.d)

    __call__ = apply

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        if other.d != self.d:
            raise DimensionMismatchError("cannot compose superoperators of different size")
        return Superoperator(self.mat @ other.mat)

    def inverse(self, floor: float = SINGULAR_FLOOR) -> "Superoperator":
        s = np.linalg.svd(self.mat, compute_uv=False)
        if s[-1] <= floor:
            raise NotInvertibleError(f"superoperator is singular (smallest singular value {s[-1]:.3g})")
        return Superoperator(np.linalg.inv(self.mat))

    def adjoint(self) -> "Superoperator":
        """Hilbert-Schmidt adjoint."""
        return Superoperator(self.mat.conj().T)

    def ddagger(self) -> "Superoperator":
        """The map A -> (E*(A^dag))^dag."""
        p = _transpose_perm(self.d)
        return Superoperator(self.mat.T[np.ix_(p, p)])

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ij |i><j| (x) E(|i><j|)."""
        d = self.d
        s4 = self.mat.reshape(d, d, d, d)  # [l, k, j, i] for E(E_ij)[k, l]
        return s4.transpose(3, 1, 2, 0).reshape(d * d, d * d)

    def tensor(self, other: "Superoperator") -> "Superoperator":
        return superop_tensor([self, other])

    def allclose(self, other: "Superoperator", atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.mat, other.mat, atol=atol, rtol=0))


def superop_tensor(ops) -> Superoperator:
    """Superoperator of E_1 (x) ... (x) E_m from the factor matrices."""
    ops = list(ops)
    dims = [o.d for o in ops]
    big = reduce(np.kron, [o.mat for o in ops])
    # p[v] is the kron-of-vecs coordinate of vec index v
    p = _tensor_perm(dims)
    return Superoperator(big[np.ix_(p, p)])


@dataclass(frozen=True)
class CPTPReport:
    is_cptp: bool
    tp_residual: float
    choi_min_eig: float
    hermitian_residual: float

    def __bool__(self) -> bool:
        return self.is_cptp


def _choi_kraus(choi: np.ndarray, d: int):
    """Kraus pairs (J, K) reproducing a Choi matrix; J == K when PSD."""
    herm = np.max(np.abs(choi - choi.conj().T)) <= 1e-10
    pairs = []
    if herm:
        w, v = np.linalg.eigh((choi + choi.conj().T) / 2)
        for lam, col in zip(w, v.T):
            if abs(lam) <= 1e-13:
                continue
            k = col.reshape(d, d).T
            if lam > 0:
                pairs.append((np.sqrt(lam) * k, np.sqrt(lam) * k))
            else:
                pairs.append((lam * k, k))
    else:
        u, s, vh = np.linalg.svd(choi)
        for sa, ucol, vcol in zip(s, u.T, vh.conj()):
            if sa <= 1e-13:
                continue
            pairs.append((sa * ucol.reshape(d, d).T, vcol.reshape(d, d).T))
    if not pairs:
        z = np.zeros((d, d), dtype=complex)
        pairs.append((z, z))
    return pairs


class QuantumChannel:
    """Linear map on n-qubit operators given by Kraus pairs.

    :param kraus: list of matrices (J = K) or of ``(J, K)`` pairs
    :param kind: descriptor tag used for serialization
    :param params: descriptor parameters
    :param factors: single-qubit channels when this is a known product channel
    """

    def __init__(self, kraus, kind: str = "kraus", params: dict | None = None, factors=None):
        pairs = []
        for item in kraus:
            if isinstance(item, (tuple, list)) and len(item) == 2 and np.ndim(item[0]) == 2:
                j, k = as_operator(item[0]), as_operator(item[1])
            else:
                j = k = as_operator(item)
            pairs.append((j, k))
        if not pairs:
            raise ParameterError("a channel needs at least one Kraus pair")
        d = pairs[0][0].shape[0]
        if any(j.shape != (d, d) or k.shape != (d, d) for j, k in pairs):
            raise DimensionMismatchError("Kraus operators have inconsistent dimensions")
        self.n = num_qubits(d)
        self.d = d
        self.kind = kind
        self.params = dict(params or {})
        self.factors = tuple(factors) if factors is not None else None
        mat = sum(np.kron(k.conj(), j) for j, k in pairs)
        self._superop = Superoperator(mat)
        self._report = _cptp_report(self._superop, pairs)
        needs_canon = any(j is not k and not np.array_equal(j, k) for j, k in pairs)
        if (self._report.is_cptp and needs_canon) or len(pairs) > d * d:
            pairs = _choi_kraus(self._superop.choi(), d)
        self._J = np.stack([j for j, _ in pairs])
        self._K = np.stack([k for _, k in pairs])

    @classmethod
    def from_superop(cls, s: Superoperator, kind: str = "kraus", params: dict | None = None):
        return cls(_choi_kraus(s.choi(), s.d), kind=kind, params=params)

    @property
    def kraus(self):
        return tuple(zip(self._J, self._K))

    @property
    def superop(self) -> Superoperator:
        return self._superop

    @property
    def cptp(self) -> bool:
        return self._report.is_cptp

    @property
    def cptp_report(self) -> CPTPReport:
        return self._report

    def apply(self, a) -> np.ndarray:
        a = as_operator(a)
        if a.shape[0] != self.d:
            raise DimensionMismatchError(f"operator dim {a.shape[0]} != {self.d}")
        return np.einsum("aij,jk,alk->il", self._J, a, self._K.conj(), optimize=True)

    __call__ = apply

    def to_descriptor(self) -> dict:
        if self.kind == "product":
            return {"kind": "product", "n": self.n, "factors": self.params["factors"]}
        if self.kind in ("depolarizing", "amplitude_damping", "dephasing", "identity", "reset"):
            return {"kind": self.kind, "n": self.n, "params": dict(self.params)}
        desc = {"kind": "kraus", "n": self.n, "params": dict(self.params),
                "kraus": [_encode_matrix(j) for j in self._J]}
        if not all(np.array_equal(j, k) for j, k in zip(self._J, self._K)):
            desc["kraus_right"] = [_encode_matrix(k) for k in self._K]
        return desc

    def __repr__(self) -> str:
        return f"QuantumChannel(kind={self.kind!r}, n={self.n}, params={self.params}, cptp={self.cptp})"


def _cptp_report(s: Superoperator, pairs) -> CPTPReport:
    d = s.d
    tp = sum(k.conj().T @ j for j, k in pairs)
    tp_res = float(np.max(np.abs(tp - np.eye(d))))
    choi = s.choi()
    herm_res = float(np.max(np.abs(choi - choi.conj().T)))
    min_eig = float(np.linalg.eigvalsh((choi + choi.conj().T) / 2)[0])
    ok = tp_res <= TP_TOL and herm_res <= CHOI_TOL and min_eig >= -CHOI_TOL
    return CPTPReport(ok, tp_res, min_eig, herm_res)


def _encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def _decode_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ParameterError("complex matrices must be nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


# ---------------------------------------------------------------- constructors

def make_identity(n: int) -> QuantumChannel:
    factors = [make_identity(1)] * n if n > 1 else None
    return QuantumChannel([np.eye(2**n, dtype=complex)], kind="identity", factors=factors)


def make_depolarizing(n: int, f: float) -> QuantumChannel:
    """D_{n,f}(A) = f A + (1 - f) tr(A) I / 2^n, for any real f."""
    d = 2**n
    f = float(f)
    units = []
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1
            units.append(e)
    if 0 <= f <= 1:
        pairs = [np.sqrt(f) * np.eye(d)] + [np.sqrt((1 - f) / d) * e for e in units]
    else:
        pairs = [(f * np.eye(d), np.eye(d))] + [((1 - f) / d * e, e) for e in units]
    return QuantumChannel(pairs, kind="depolarizing", params={"f": f})


def _ad_single(p: float):
    k0 = np.diag([1, np.sqrt(p)]).astype(complex)
    k1 = np.array([[0, np.sqrt(1 - p)], [0, 0]], dtype=complex)
    return [k0, k1]


def make_amplitude_damping(n: int, p: float) -> QuantumChannel:
    """AD_{1,p}^{(x)n}; p = 1 is the identity and p = 0 fully damps to |0>."""
    p = float(p)
    if not 0 <= p <= 1:
        raise ParameterError(f"amplitude damping parameter p={p} outside [0, 1]")
    single = _ad_single(p)
    ops = [kron(*combo) for combo in _product(single, n)]
    factor = QuantumChannel(single, kind="amplitude_damping", params={"p": p}) if n > 1 else None
    return QuantumChannel(ops, kind="amplitude_damping", params={"p": p},
                          factors=[factor] * n if factor else None)


def _product(ops, n):
    return itertools.product(ops, repeat=n)


def make_dephasing(n: int) -> QuantumChannel:
    d = 2**n
    ops = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1
        ops.append(e)
    factors = [make_dephasing(1)] * n if n > 1 else None
    return QuantumChannel(ops, kind="dephasing", factors=factors)


def make_reset(n: int) -> QuantumChannel:
    """A -> tr(A) |0...0><0...0|."""
    d = 2**n
    ops = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[0, i] = 1
        ops.append(e)
    return QuantumChannel(ops, kind="reset")


def make_kraus(ops, right=None) -> QuantumChannel:
    if right is None:
        return QuantumChannel(list(ops))
    return QuantumChannel(list(zip(ops, right)))


def random_cptp(n: int, rng: np.random.Generator, rank: int | None = None) -> QuantumChannel:
    """Random CPTP channel from a Haar-random Stinespring isometry."""
    from .linalg import haar_unitary
    d = 2**n
    r = rank or d
    u = haar_unitary(d * r, rng)
    iso = u[:, :d]
    ops = [iso[a * d:(a + 1) * d, :] for a in range(r)]
    return QuantumChannel(ops)


def random_linear_map(n: int, rng: np.random.Generator, terms: int = 3) -> QuantumChannel:
    """Random linear (generally neither CP nor TP) superoperator."""
    d = 2**n
    g = lambda: rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return QuantumChannel([(g() / d, g() / d) for _ in range(terms)])


# ---------------------------------------------------------------- algebra

def compose(e2: QuantumChannel, e1: QuantumChannel) -> QuantumChannel:
    """The channel e2 o e1."""
    if e1.d != e2.d:
        raise DimensionMismatchError("cannot compose channels of different dimension")
    pairs = [(j2 @ j1, k2 @ k1) for j2, k2 in e2.kraus for j1, k1 in e1.kraus]
    return QuantumChannel(pairs)


def tensor(channels) -> QuantumChannel:
    """Product channel E_1 (x) ... (x) E_m (first factor acts on the leftmost qubits)."""
    channels = list(channels)
    if len(channels) == 1:
        return channels[0]
    pairs = []
    for combo in itertools.product(*[c.kraus for c in channels]):
        pairs.append((kron(*[j for j, _ in combo]), kron(*[k for _, k in combo])))
    singles = []
    for c in channels:
        if c.n == 1:
            singles.append(c)
        elif c.factors is not None:
            singles.extend(c.factors)
        else:
            singles = None
            break
    ch = QuantumChannel(pairs, factors=singles)
    ch.kind = "product"
    ch.params = {"factors": [c.to_descriptor() for c in channels]}
    return ch


def tensor_power(e: QuantumChannel, n: int) -> QuantumChannel:
    return tensor([e] * n)


def super_trace(e) -> complex:
    """sum_ij <i|E(|i><j|)|j>, the trace of the superoperator matrix."""
    s = e.superop if isinstance(e, QuantumChannel) else e
    return s.trace()


def diagonal_probe(e, x: int) -> complex:
    """E_xxxx = <x|E(|x><x|)|x>."""
    s = e.superop if isinstance(e, QuantumChannel) else e
    d = s.d
    k = x + d * x
    return complex(s.mat[k, k])


def output_trace_probe(e, x: int) -> complex:
    """t_{E,x} = tr E(|x><x|)."""
    s = e.superop if isinstance(e, QuantumChannel) else e
    d = s.d
    col = s.mat[:, x + d * x]
    return complex(sum(col[i + d * i] for i in range(d)))


def beta(e) -> float:
    """Tr(E o diag) = sum_b <b|E(|b><b|)|b>."""
    s = e.superop if isinstance(e, QuantumChannel) else e
    val = sum(diagonal_probe(s, b) for b in range(s.d))
    return float(val.real) if abs(val.imag) < 1e-10 else val


def alpha(e) -> float:
    """tr E(I)."""
    s = e.superop if isinstance(e, QuantumChannel) else e
    val = sum(output_trace_probe(s, b) for b in range(s.d))
    return float(val.real) if abs(val.imag) < 1e-10 else val


def adjoint(e: QuantumChannel) -> QuantumChannel:
    """Hilbert-Schmidt adjoint A -> sum J^dag A K."""
    return QuantumChannel([(dagger(j), dagger(k)) for j, k in e.kraus])


def ddagger(e: QuantumChannel) -> QuantumChannel:
    """A -> (E*(A^dag))^dag, i.e. sum K^dag A J for pairs (J, K)."""
    return QuantumChannel([(dagger(k), dagger(j)) for j, k in e.kraus])


def is_cptp(e: QuantumChannel, tol: float = TP_TOL) -> CPTPReport:
    rep = e.cptp_report
    ok = rep.tp_residual <= tol and rep.hermitian_residual <= tol and rep.choi_min_eig >= -tol
    return CPTPReport(ok, rep.tp_residual, rep.choi_min_eig, rep.hermitian_residual)


def in_lambda_n(e: QuantumChannel, tol: float = 1e-10) -> bool:
    """True iff every outcome b has some state with nonzero probability.

    Uses the equivalent test that E^dd(|b><b|) is a nonzero operator.
    """
    dd = ddagger(e)
    for b in range(e.d):
        pb = np.zeros((e.d, e.d), dtype=complex)
        pb[b, b] = 1
        h = dd.apply(pb)
        h = (h + h.conj().T) / 2
        if spectral_norm(h) <= tol:
            return False
    return True


def lambda_n_failures(e: QuantumChannel, tol: float = 1e-10) -> list[int]:
    """Outcomes b for which no state gives a nonzero probability."""
    dd = ddagger(e)
    bad = []
    for b in range(e.d):
        pb = np.zeros((e.d, e.d), dtype=complex)
        pb[b, b] = 1
        h = dd.apply(pb)
        if spectral_norm((h + h.conj().T) / 2) <= tol:
            bad.append(b)
    return bad


def is_inconsequential(e: QuantumChannel, n: int | None = None, tol: float = 1e-10) -> bool:
    """True iff <b|E(|b><b|)|b> = 1 for every b."""
    if n is not None and 2**n != e.d:
        raise DimensionMismatchError(f"channel acts on {e.n} qubits, not {n}")
    return all(abs(diagonal_probe(e, b) - 1) <= tol for b in range(e.d))


# ---------------------------------------------------------------- descriptors

CHANNEL_KINDS = ("depolarizing", "amplitude_damping", "dephasing", "identity", "kraus", "reset", "product")


def channel_from_descriptor(desc: dict) -> QuantumChannel:
    """Build a channel from ``{kind, n, params, kraus?}``.

    ``kind = "product"`` takes a ``factors`` list of descriptors (leftmost first).

    ``params.per_qubit = true`` on a depolarizing descriptor gives D_{1,f}^{(x)n}.
    """
    if not isinstance(desc, dict):
        raise ParameterError("channel descriptor must be a JSON object")
    kind = desc.get("kind")
    if kind not in CHANNEL_KINDS:
        raise ParameterError(f"unknown channel kind {kind!r}")
    n = desc.get("n")
    if not isinstance(n, int) or n < 1:
        raise ParameterError("channel descriptor needs a positive integer n")
    params = desc.get("params") or {}
    if kind == "product":
        facs = desc.get("factors")
        if not isinstance(facs, list) or not facs:
            raise ParameterError("product descriptor needs a non-empty 'factors' list")
        ch = tensor([channel_from_descriptor(f) for f in facs])
        if ch.n != n:
            raise DimensionMismatchError(f"factors act on {ch.n} qubits, descriptor says {n}")
        return ch
    if kind == "identity":
        return make_identity(n)
    if kind == "dephasing":
        return make_dephasing(n)
    if kind == "reset":
        return make_reset(n)
    if kind == "amplitude_damping":
        if "p" not in params:
            raise ParameterError("amplitude_damping needs params.p")
        return make_amplitude_damping(n, params["p"])
    if kind == "depolarizing":
        if "f" not in params:
            raise ParameterError("depolarizing needs params.f")
        if params.get("per_qubit") and n > 1:
            single = make_depolarizing(1, params["f"])
            ch = tensor([single] * n)
            ch.kind, ch.params = "depolarizing", {"f": float(params["f"]), "per_qubit": True}
            return ch
        return make_depolarizing(n, params["f"])
    ops = desc.get("kraus")
    if not ops:
        raise ParameterError("kraus descriptor needs a non-empty 'kraus' list")
    left = [_decode_matrix(m) for m in ops]
    right = desc.get("kraus_right")
    ch = make_kraus(left, None if right is None else [_decode_matrix(m) for m in right])
    if ch.n != n:
        raise DimensionMismatchError(f"Kraus operators act on {ch.n} qubits, descriptor says {n}")
    return ch
