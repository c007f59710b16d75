"""Dense complex matrix helpers.

Operators are plain ``numpy.ndarray`` objects of shape ``(d, d)``.
Vectorization is column-stacking throughout, so that
``vec(X @ A @ Y) == kron(Y.T, X) @ vec(A)``.
"""
from __future__ import annotations

import itertools
from functools import reduce

import numpy as np
from scipy.stats import unitary_group

from .errors import ContractViolationError, DimensionMismatchError, ParameterError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-9

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def as_operator(a) -> np.ndarray:
    """Return ``a`` as a square complex matrix, raising on bad shape."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    return a


def num_qubits(d: int) -> int:
    n = int(round(np.log2(d)))
    if 2**n != d:
        raise DimensionMismatchError(f"dimension {d} is not a power of two")
    return n


def kron(*ops) -> np.ndarray:
    """Kronecker product of any number of operators (or vectors)."""
    if not ops:
        return np.eye(1, dtype=complex)
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_operator(a)
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def as_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a Hermitian observable and return it as a complex matrix."""
    a = as_operator(a)
    if not is_hermitian(a, tol):
        raise ContractViolationError("operator is not Hermitian")
    return a


def is_density_matrix(rho, tol: float = TRACE_TOL) -> bool:
    rho = as_operator(rho)
    if not is_hermitian(rho, tol):
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0] >= PSD_TOL)


def as_density_matrix(rho) -> np.ndarray:
    rho = as_operator(rho)
    if not is_density_matrix(rho):
        raise ContractViolationError("operator is not a density matrix")
    return rho


def spectral_norm(h) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    h = as_hermitian(h)
    w = np.linalg.eigvalsh((h + h.conj().T) / 2)
    return float(max(abs(w[0]), abs(w[-1])))


def lambda_max(h) -> float:
    """Largest eigenvalue of a Hermitian matrix (symmetrized first)."""
    h = as_operator(h)
    return float(np.linalg.eigvalsh((h + h.conj().T) / 2)[-1])


def traceless_part(o, n: int) -> np.ndarray:
    o = as_operator(o)
    d = 2**n
    if o.shape[0] != d:
        raise DimensionMismatchError(f"observable has dim {o.shape[0]}, expected {d}")
    return o - np.trace(o) / d * np.eye(d)


def partial_trace(a, dims, keep) -> np.ndarray:
    """Trace out every subsystem whose index is not in ``keep``.

    :param a: operator on the tensor product of subsystems with sizes ``dims``
    :param dims: list of subsystem dimensions, first factor first
    :param keep: indices of the subsystems to keep (order is preserved)
    """
    a = as_operator(a)
    dims = [int(x) for x in dims]
    if int(np.prod(dims)) != a.shape[0]:
        raise DimensionMismatchError(f"subsystem dims {dims} do not multiply to {a.shape[0]}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatchError(f"keep indices {keep} out of range")
    m = len(dims)
    t = a.reshape(dims + dims)
    traced = [i for i in range(m) if i not in keep]
    # trace pairs from the highest index down so axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = m - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(dk, dk)


def vec(a) -> np.ndarray:
    """Column-stacking vectorization."""
    a = np.asarray(a, dtype=complex)
    return a.reshape(-1, order="F")


def unvec(v, d: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if v.size != d * d:
        raise DimensionMismatchError(f"vector of length {v.size} cannot be a {d}x{d} matrix")
    return v.reshape(d, d, order="F")


def ket(bits, d: int | None = None) -> np.ndarray:
    """Computational basis vector from an int index or a bitstring."""
    if isinstance(bits, str):
        idx, d0 = int(bits, 2), 2 ** len(bits)
        d = d or d0
    else:
        idx = int(bits)
    if d is None:
        raise ParameterError("dimension required for an integer basis index")
    v = np.zeros(d, dtype=complex)
    v[idx] = 1
    return v


def projector(bits, d: int | None = None) -> np.ndarray:
    v = ket(bits, d)
    return np.outer(v, v.conj())


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli string such as ``"XIZ"`` (qubit 0 leftmost)."""
    label = label.strip().upper()
    if not label or any(ch not in PAULI for ch in label):
        raise ParameterError(f"invalid Pauli string {label!r}")
    return kron(*[PAULI[ch] for ch in label])


def pauli_weight(label: str) -> int:
    return sum(ch != "I" for ch in label.upper())


def pauli_labels(n: int) -> list[str]:
    return ["".join(t) for t in itertools.product("IXYZ", repeat=n)]


def pauli_coefficients(o, n: int | None = None) -> dict[str, complex]:
    """Expansion coefficients ``o = sum_p alpha_p P_p``."""
    o = as_operator(o)
    n = num_qubits(o.shape[0]) if n is None else n
    d = 2**n
    return {p: complex(np.trace(pauli_matrix(p) @ o) / d) for p in pauli_labels(n)}


def haar_unitary(d: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random unitary (or a stack of them when ``size`` is given)."""
    if d == 1:
        ph = np.exp(2j * np.pi * rng.random(size or 1))
        return ph.reshape(-1, 1, 1) if size else ph.reshape(1, 1)
    u = unitary_group.rvs(d, size=size or 1, random_state=rng)
    if size is None:
        return np.asarray(u).reshape(d, d)
    return np.asarray(u).reshape(size, d, d)


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state from a Ginibre matrix."""
    r = rank or d
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (g + g.conj().T) / 2


def random_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
