"""Clifford group utilities: gate sequences, stabilizer tableaux, uniform sampling.

Gate tags are strings ``"H:q"``, ``"S:q"`` and ``"CX:c:t"``; qubit 0 is the
leftmost tensor factor.  A tableau stores the images of ``X_0..X_{n-1}`` and
``Z_0..Z_{n-1}`` under conjugation, as rows ``(x | z | r)`` with a sign bit.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError, UnsupportedError

H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_MAT = np.array([[1, 0], [0, 1j]], dtype=complex)


def parse_gate(tag: str):
    parts = tag.split(":")
    name = parts[0].upper()
    try:
        qubits = tuple(int(p) for p in parts[1:])
    except ValueError as exc:
        raise ParameterError(f"bad gate tag {tag!r}") from exc
    if (name in ("H", "S") and len(qubits) != 1) or (name == "CX" and len(qubits) != 2) \
            or name not in ("H", "S", "CX"):
        raise ParameterError(f"bad gate tag {tag!r}")
    if name == "CX" and qubits[0] == qubits[1]:
        raise ParameterError(f"CNOT control equals target in {tag!r}")
    return name, qubits


def apply_gate(u: np.ndarray, tag: str, n: int) -> np.ndarray:
    """Return ``G @ u`` for the gate ``tag`` on ``n`` qubits."""
    name, qs = parse_gate(tag)
    d = 2**n
    t = u.reshape((2,) * n + (-1,))
    if name in ("H", "S"):
        g = H_MAT if name == "H" else S_MAT
        t = np.moveaxis(np.tensordot(g, t, axes=([1], [qs[0]])), 0, qs[0])
    else:
        c, tg = qs
        t = t.copy()
        idx = [slice(None)] * (n + 1)
        idx[c] = 1
        sub = t[tuple(idx)]
        # target axis index shifts down by one if it sits after the control
        ax = tg if tg < c else tg - 1
        t[tuple(idx)] = np.flip(sub, axis=ax)
    return t.reshape(d, -1)


@lru_cache(maxsize=4096)
def gate_matrix(tag: str, n: int) -> np.ndarray:
    m = apply_gate(np.eye(2**n, dtype=complex), tag, n)
    m.flags.writeable = False
    return m


def gates_to_unitary(gates, n: int) -> np.ndarray:
    """Dense matrix of a gate sequence applied first-to-last."""
    u = np.eye(2**n, dtype=complex)
    for g in gates:
        u = gate_matrix(g, n) @ u
    return u


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Multiply by a global phase so the first nonzero entry is real positive."""
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-9))
    ph = flat[k] / abs(flat[k])
    return u / ph


def phase_key(u: np.ndarray) -> bytes:
    c = canonical_phase(u)
    arr = np.round(np.concatenate([c.real.ravel(), c.imag.ravel()]) * 1e8).astype(np.int64)
    arr[arr == 0] = 0
    return arr.tobytes()


def generators(n: int) -> list[str]:
    gens = [f"H:{q}" for q in range(n)] + [f"S:{q}" for q in range(n)]
    gens += [f"CX:{a}:{b}" for a in range(n) for b in range(n) if a != b]
    return gens


@lru_cache(maxsize=None)
def enumerate_group(n: int):
    """Breadth-first closure of {H, S, CNOT} modulo global phase.

    Returns ``(words, unitaries)`` where ``words[i]`` is a gate sequence producing
    ``unitaries[i]`` (already phase-canonical).
    """
    if n not in (1, 2):
        raise UnsupportedError("exhaustive Clifford enumeration is limited to n <= 2; use the sampler")
    gens = generators(n)
    ident = np.eye(2**n, dtype=complex)
    seen = {phase_key(ident): 0}
    words = [()]
    mats = [canonical_phase(ident)]
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for g in gens:
            m = apply_gate(mats[i], g, n)
            key = phase_key(m)
            if key not in seen:
                seen[key] = len(mats)
                words.append(words[i] + (g,))
                mats.append(canonical_phase(m))
                queue.append(len(mats) - 1)
    return tuple(words), np.stack(mats)


def group_order(n: int) -> int:
    """|C_n / U(1)| = 2^{n^2 + 2n} prod_j (4^j - 1)."""
    out = 2 ** (n * n + 2 * n)
    for j in range(1, n + 1):
        out *= 4**j - 1
    return out


# ---------------------------------------------------------------- tableau


@dataclass
class Tableau:
    x: np.ndarray  # (2n, n) uint8
    z: np.ndarray  # (2n, n) uint8
    r: np.ndarray  # (2n,) uint8

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def copy(self) -> "Tableau":
        return Tableau(self.x.copy(), self.z.copy(), self.r.copy())

    def apply(self, tag: str) -> None:
        """Conjugate every row by the gate (left-multiply the Clifford)."""
        name, qs = parse_gate(tag)
        x, z, r = self.x, self.z, self.r
        if name == "H":
            a = qs[0]
            r ^= x[:, a] & z[:, a]
            x[:, a], z[:, a] = z[:, a].copy(), x[:, a].copy()
        elif name == "S":
            a = qs[0]
            r ^= x[:, a] & z[:, a]
            z[:, a] ^= x[:, a]
        else:
            a, b = qs
            r ^= x[:, a] & z[:, b] & (x[:, b] ^ z[:, a] ^ 1)
            x[:, b] ^= x[:, a]
            z[:, a] ^= z[:, b]

    def row_pauli(self, i: int) -> tuple[int, str]:
        """Sign and Pauli string of row ``i``."""
        lab = "".join("IXZY"[int(xb) + 2 * int(zb)] for xb, zb in zip(self.x[i], self.z[i]))
        return (-1 if self.r[i] else 1), lab

    @classmethod
    def from_gates(cls, gates, n: int) -> "Tableau":
        eye = np.eye(n, dtype=np.uint8)
        zero = np.zeros((n, n), dtype=np.uint8)
        t = cls(np.vstack([eye, zero]), np.vstack([zero, eye]), np.zeros(2 * n, dtype=np.uint8))
        for g in gates:
            t.apply(g)
        return t


def _symp(a: np.ndarray, b: np.ndarray, n: int) -> int:
    return int((a[:n] @ b[n:] + a[n:] @ b[:n]) % 2)


def _gf2_basis(rows: list[np.ndarray]) -> list[np.ndarray]:
    """Linearly independent subset spanning the same GF(2) space."""
    basis, pivots = [], []
    reduced = []
    for v in rows:
        w = v.copy()
        for b, p in zip(reduced, pivots):
            if w[p]:
                w ^= b
        nz = np.flatnonzero(w)
        if nz.size:
            reduced.append(w)
            pivots.append(nz[0])
            basis.append(v)
    return basis


def random_symplectic(n: int, rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Uniform symplectic basis (v_i, w_i) of GF(2)^{2n}, coordinates (x | z).

    Each v_i is uniform among nonzero vectors of the current symplectic
    complement and w_i is uniform among its partners with <v_i, w_i> = 1, so the
    resulting symplectic matrix is uniform.
    """
    basis = [row for row in np.eye(2 * n, dtype=np.uint8)]
    pairs = []
    for _ in range(n):
        m = len(basis)
        B = np.array(basis, dtype=np.uint8)
        while True:
            c = rng.integers(0, 2, m, dtype=np.uint8)
            if c.any():
                break
        v = (c @ B) % 2
        while True:
            c = rng.integers(0, 2, m, dtype=np.uint8)
            w = (c @ B) % 2
            if _symp(v, w, n) == 1:
                break
        v, w = v.astype(np.uint8), w.astype(np.uint8)
        pairs.append((v, w))
        proj = [(u + _symp(u, w, n) * v + _symp(u, v, n) * w) % 2 for u in B]
        basis = _gf2_basis([p.astype(np.uint8) for p in proj])
        assert len(basis) == m - 2
    return pairs


def random_tableau(n: int, rng: np.random.Generator) -> Tableau:
    pairs = random_symplectic(n, rng)
    x = np.zeros((2 * n, n), dtype=np.uint8)
    z = np.zeros((2 * n, n), dtype=np.uint8)
    for i, (v, w) in enumerate(pairs):
        x[i], z[i] = v[:n], v[n:]
        x[n + i], z[n + i] = w[:n], w[n:]
    r = rng.integers(0, 2, 2 * n, dtype=np.uint8)
    return Tableau(x, z, r)


def synthesize(tab: Tableau) -> list[str]:
    """Gate sequence (first-to-last) whose unitary has tableau ``tab``."""
    n = tab.n
    t = tab.copy()
    applied: list[str] = []

    def do(g):
        t.apply(g)
        applied.append(g)

    for i in range(n):
        # reduce the X_i image to X_i
        for k in range(i, n):
            if t.x[i, k] and t.z[i, k]:
                do(f"S:{k}")
            elif t.z[i, k]:
                do(f"H:{k}")
        if not t.x[i, i]:
            k = next(k for k in range(i + 1, n) if t.x[i, k])
            do(f"CX:{k}:{i}")
        for k in range(i + 1, n):
            if t.x[i, k]:
                do(f"CX:{i}:{k}")
        # reduce the Z_i image to Z_i while fixing X_i
        row = n + i
        if t.x[row, i]:
            for g in (f"H:{i}", f"S:{i}", f"H:{i}"):
                do(g)
        for k in range(i + 1, n):
            if t.x[row, k] and t.z[row, k]:
                do(f"S:{k}")
                do(f"H:{k}")
            elif t.x[row, k]:
                do(f"H:{k}")
            if t.z[row, k]:
                do(f"CX:{k}:{i}")
    # remaining Pauli frame, then invert everything
    pauli: list[str] = []
    for i in range(n):
        if t.r[i]:
            pauli += [f"S:{i}", f"S:{i}"]
        if t.r[n + i]:
            pauli += [f"H:{i}", f"S:{i}", f"S:{i}", f"H:{i}"]
    out = list(pauli)
    for g in reversed(applied):
        if g.startswith("S"):
            out += [g, g, g]
        else:
            out.append(g)
    return out


@dataclass(frozen=True)
class CliffordElement:
    gates: tuple[str, ...]
    dense: np.ndarray
    n: int


def sample_global_clifford(n: int, rng: np.random.Generator) -> CliffordElement:
    """Uniformly random n-qubit Clifford (modulo phase), as gates plus dense matrix."""
    if n < 1 or n > 6:
        raise UnsupportedError("global Clifford sampling supports 1 <= n <= 6")
    gates = tuple(synthesize(random_tableau(n, rng)))
    return CliffordElement(gates, gates_to_unitary(gates, n), n)
