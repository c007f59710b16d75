"""Unitary ensembles, twirls and design checks."""
from __future__ import annotations

import itertools
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import clifford
from .errors import DimensionMismatchError, ParameterError, UnsupportedError
from .linalg import as_operator, haar_unitary, vec

UNITARY_TOL = 1e-10


class UnitaryEnsemble:
    """Base class.  Enumerable ensembles are uniform over ``elements()``."""

    n: int
    kind: str = "explicit"
    enumerable: bool = True

    @property
    def d(self) -> int:
        return 2**self.n

    def elements(self) -> np.ndarray:
        raise UnsupportedError(f"{type(self).__name__} is not enumerable")

    def sample(self, rng: np.random.Generator, count: int):
        """Draw ``count`` elements.  Returns ``(unitaries, descriptors)``."""
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"kind": self.kind, "n": self.n}


class ExplicitEnsemble(UnitaryEnsemble):
    """Uniform distribution over a finite list of unitaries.

    :param elements: array of shape ``(m, d, d)``
    :param words: optional gate sequence for each element (used for serialization)
    """

    def __init__(self, elements, words=None, kind: str = "explicit", check: bool = True):
        els = np.asarray(elements, dtype=complex)
        if els.ndim == 2:
            els = els[None]
        if els.ndim != 3 or els.shape[1] != els.shape[2]:
            raise DimensionMismatchError("ensemble elements must have shape (m, d, d)")
        if check:
            eye = np.eye(els.shape[1])
            err = np.max(np.abs(np.einsum("mji,mjk->mik", els.conj(), els) - eye))
            if err > UNITARY_TOL:
                raise ParameterError(f"ensemble element is not unitary (residual {err:.2e})")
        self._els = els
        self.words = None if words is None else tuple(tuple(w) for w in words)
        self.n = int(round(np.log2(els.shape[1])))
        if 2**self.n != els.shape[1]:
            raise DimensionMismatchError("ensemble dimension must be a power of two")
        self.kind = kind

    def __len__(self):
        return self._els.shape[0]

    def elements(self) -> np.ndarray:
        return self._els

    def sample(self, rng, count):
        idx = rng.integers(0, len(self), size=count)
        if self.words is not None:
            desc = [list(self.words[i]) for i in idx]
        else:
            desc = [int(i) for i in idx]
        return self._els[idx], desc


class ProductEnsemble(UnitaryEnsemble):
    """Tensor product of independent sub-ensembles (first factor = leftmost qubits)."""

    kind = "clifford_product"

    def __init__(self, factors, kind: str = "clifford_product"):
        self.factors = tuple(factors)
        if not self.factors:
            raise ParameterError("product ensemble needs at least one factor")
        self.n = sum(f.n for f in self.factors)
        self.kind = kind
        self.enumerable = all(f.enumerable for f in self.factors)

    def elements(self) -> np.ndarray:
        if not self.enumerable:
            raise UnsupportedError("product of non-enumerable ensembles")
        return _product_elements(tuple(id(f) for f in self.factors), self.factors)

    def sample(self, rng, count):
        mats, descs = [], []
        for f in self.factors:
            m, dsc = f.sample(rng, count)
            mats.append(m)
            descs.append(dsc)
        out = mats[0]
        for m in mats[1:]:
            out = np.einsum("kij,kab->kiajb", out, m).reshape(count, out.shape[1] * m.shape[1], -1)
        return out, [list(t) for t in zip(*descs)]


_PRODUCT_CACHE: dict = {}


def _product_elements(key, factors):
    if key in _PRODUCT_CACHE:
        return _PRODUCT_CACHE[key]
    out = factors[0].elements()
    for f in factors[1:]:
        e = f.elements()
        out = np.einsum("kij,lab->kliajb", out, e).reshape(
            out.shape[0] * e.shape[0], out.shape[1] * e.shape[1], -1)
    if out.shape[0] <= 400_000:
        _PRODUCT_CACHE[key] = out
    return out


class CliffordSampler(UnitaryEnsemble):
    """Uniform global Clifford group, sampled through random tableaux."""

    kind = "clifford_global"
    enumerable = False

    def __init__(self, n: int):
        if n < 1 or n > 6:
            raise UnsupportedError("global Clifford sampling supports 1 <= n <= 6")
        self.n = n

    def sample(self, rng, count):
        els = [clifford.sample_global_clifford(self.n, rng) for _ in range(count)]
        return np.stack([e.dense for e in els]), [list(e.gates) for e in els]


class HaarSampler(UnitaryEnsemble):
    kind = "haar"
    enumerable = False

    def __init__(self, n: int, d: int | None = None):
        self.n = n
        self._d = d

    @property
    def d(self) -> int:
        return self._d or 2**self.n

    def sample(self, rng, count):
        u = haar_unitary(self.d, rng, size=count)
        return u, [None] * count


# ---------------------------------------------------------------- constructors

@lru_cache(maxsize=None)
def single_qubit_clifford_group() -> ExplicitEnsemble:
    words, mats = clifford.enumerate_group(1)
    return ExplicitEnsemble(mats, words=words, kind="clifford_global")


@lru_cache(maxsize=None)
def enumerate_clifford(n: int) -> ExplicitEnsemble:
    """Exhaustive Clifford group modulo phase; n must be 1 or 2."""
    words, mats = clifford.enumerate_group(n)
    return ExplicitEnsemble(mats, words=words, kind="clifford_global")


def product_clifford(n: int) -> ProductEnsemble:
    return ProductEnsemble([single_qubit_clifford_group()] * n)


def global_clifford(n: int) -> UnitaryEnsemble:
    """Exhaustive group for n <= 2, tableau sampler beyond."""
    return enumerate_clifford(n) if n <= 2 else CliffordSampler(n)


def trivial_ensemble(n: int) -> ExplicitEnsemble:
    return ExplicitEnsemble(np.eye(2**n, dtype=complex)[None])


def sample_global_clifford(n: int, rng: np.random.Generator) -> clifford.CliffordElement:
    return clifford.sample_global_clifford(n, rng)


def ensemble_from_descriptor(desc: dict) -> UnitaryEnsemble:
    if not isinstance(desc, dict):
        raise ParameterError("ensemble descriptor must be a JSON object")
    kind, n = desc.get("kind"), desc.get("n")
    if not isinstance(n, int) or n < 1:
        raise ParameterError("ensemble descriptor needs a positive integer n")
    if kind == "clifford_global":
        return global_clifford(n)
    if kind == "clifford_product":
        return product_clifford(n)
    if kind == "haar":
        return HaarSampler(n)
    if kind == "explicit":
        from .channels import _decode_matrix
        els = desc.get("elements")
        if not els:
            raise ParameterError("explicit ensemble needs 'elements'")
        ens = ExplicitEnsemble([_decode_matrix(e) for e in els])
        if ens.n != n:
            raise DimensionMismatchError(f"elements act on {ens.n} qubits, descriptor says {n}")
        return ens
    raise ParameterError(f"unknown ensemble kind {kind!r}")


# ---------------------------------------------------------------- twirls

class MonteCarloTwirl(NamedTuple):
    mean: np.ndarray
    stderr: np.ndarray  # entrywise, for real and imaginary parts combined via abs
    samples: int


def _tpow(u: np.ndarray, t: int) -> np.ndarray:
    out = u
    for _ in range(t - 1):
        if out.ndim == 3:
            out = np.einsum("kij,kab->kiajb", out, u).reshape(u.shape[0], out.shape[1] * u.shape[1], -1)
        else:
            out = np.kron(out, u)
    return out


def twirl(ens: UnitaryEnsemble, t: int, a, rng: np.random.Generator | None = None,
          samples: int = 100_000, chunk: int = 2000):
    """E_U U^{(x)t} A U^{dag (x)t}.

    Exact for enumerable ensembles; otherwise a Monte Carlo estimate with
    standard errors (requires ``rng``).
    """
    a = as_operator(a)
    if t < 1:
        raise ParameterError("t must be positive")
    if a.shape[0] != ens.d**t:
        raise DimensionMismatchError(f"operator dim {a.shape[0]} != d^t = {ens.d ** t}")
    if ens.enumerable:
        acc = np.zeros_like(a)
        els = ens.elements()
        for s in range(0, els.shape[0], chunk):
            ut = _tpow(els[s:s + chunk], t)
            acc += np.einsum("kij,jl,kml->im", ut, a, ut.conj(), optimize=True)
        return acc / els.shape[0]
    if rng is None:
        raise UnsupportedError("sampled ensembles need an rng for a Monte Carlo twirl")
    s1 = np.zeros_like(a)
    s2r = np.zeros(a.shape)
    s2i = np.zeros(a.shape)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        u, _ = ens.sample(rng, m)
        ut = _tpow(u, t)
        vals = np.einsum("kij,jl,kml->kim", ut, a, ut.conj(), optimize=True)
        s1 += vals.sum(0)
        s2r += (vals.real**2).sum(0)
        s2i += (vals.imag**2).sum(0)
        done += m
    mean = s1 / samples
    var_r = (s2r - samples * mean.real**2) / (samples - 1)
    var_i = (s2i - samples * mean.imag**2) / (samples - 1)
    se = np.sqrt(np.maximum(var_r, 0) + np.maximum(var_i, 0)) / np.sqrt(samples)
    return MonteCarloTwirl(mean, se, samples)


def haar_twirl_2(a, d: int) -> np.ndarray:
    """Closed-form two-fold Haar twirl."""
    from .identities import swap_operator
    a = as_operator(a)
    if a.shape[0] != d * d:
        raise DimensionMismatchError("haar_twirl_2 needs a d^2 x d^2 operator")
    w = swap_operator(d)
    eye = np.eye(d * d)
    return (np.trace(a) * (eye - w / d) + np.trace(w @ a) * (w - eye / d)) / (d * d - 1)


def haar_twirl_3(a, d: int) -> np.ndarray:
    """Closed-form three-fold Haar twirl in terms of the R operators.

    At d = 2 the antisymmetric projector vanishes and its 0/0 term is dropped.
    """
    from .identities import build_r_operators
    a = as_operator(a)
    if a.shape[0] != d**3:
        raise DimensionMismatchError("haar_twirl_3 needs a d^3 x d^3 operator")
    r = build_r_operators(d)
    out = 6 * np.trace(r.r_plus @ a) / (d * (d + 1) * (d + 2)) * r.r_plus
    if d >= 3:
        out = out + 6 * np.trace(r.r_minus @ a) / (d * (d - 1) * (d - 2)) * r.r_minus
    for ri in (r.r0, r.r1, r.r2, r.r3):
        out = out + 3 / (2 * d * (d * d - 1)) * np.trace(ri @ a) * ri
    return out


def haar_twirl(a, d: int, t: int) -> np.ndarray:
    """General t-fold Haar twirl: projection onto the span of permutation operators."""
    from .identities import permutation_operator
    a = as_operator(a)
    if a.shape[0] != d**t:
        raise DimensionMismatchError("haar_twirl needs a d^t x d^t operator")
    perms = [permutation_operator(p, d) for p in itertools.permutations(range(t))]
    gram = np.array([[np.trace(p.conj().T @ q) for q in perms] for p in perms])
    rhs = np.array([np.trace(p.conj().T @ a) for p in perms])
    coef = np.linalg.pinv(gram, hermitian=True) @ rhs
    return sum(c * p for c, p in zip(coef, perms))


def twirl_superop(ens: UnitaryEnsemble, t: int) -> np.ndarray:
    """Superoperator matrix of the exact t-fold twirl of an enumerable ensemble."""
    els = ens.elements()
    D = ens.d**t
    acc = np.zeros((D * D, D * D), dtype=complex)
    for s in range(0, els.shape[0], 500):
        ut = _tpow(els[s:s + 500], t)
        # column stacking: conj(U) (x) U per element
        acc += np.einsum("kab,kij->aibj", ut.conj(), ut).reshape(D * D, D * D)
    return acc / els.shape[0]


def haar_twirl_superop(d: int, t: int) -> np.ndarray:
    """HS-orthogonal projector onto span{vec(W_pi)}."""
    from .identities import permutation_operator
    vs = np.stack([vec(permutation_operator(p, d)) for p in itertools.permutations(range(t))], axis=1)
    # pinv projector is robust to the linear dependence that appears when t > d
    return vs @ np.linalg.pinv(vs)


def is_t_design(ens: UnitaryEnsemble, t: int, tol: float = 1e-9) -> bool:
    """Compare the ensemble twirl with the Haar twirl on a full operator basis."""
    if not ens.enumerable:
        raise UnsupportedError("t-design check needs an enumerable ensemble")
    if ens.d**t > 64:
        raise UnsupportedError("t-design check limited to d^t <= 64")
    diff = twirl_superop(ens, t) - haar_twirl_superop(ens.d, t)
    return bool(np.max(np.abs(diff)) <= tol)


def is_tomographically_complete(ens: UnitaryEnsemble, tol: float = 1e-9) -> bool:
    """Do the measured projectors U^dag|b><b|U span all Hermitian matrices?"""
    els = ens.elements()
    d = ens.d
    rows = []
    for u in els:
        for b in range(d):
            v = u.conj()[b]  # U^dag |b> = conj of row b of U
            p = np.outer(v, v.conj())
            rows.append(np.concatenate([p.real.ravel(), p.imag.ravel()]))
    rank = np.linalg.matrix_rank(np.array(rows), tol=tol)
    return bool(rank == d * d)
