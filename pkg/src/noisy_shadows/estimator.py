"""Noisy randomized measurements, shadow collection and median-of-means estimation."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import QuantumChannel, beta as ch_beta, make_identity
from .ensembles import UnitaryEnsemble
from .errors import ChannelValidityError, NotInvertibleError, ParameterError, UnsupportedError
from .linalg import as_density_matrix, as_hermitian, as_operator, traceless_part
from .planner import bucket_size, num_buckets
from .seminorm import seminorm_auto
from .shadow import ShadowChannel, ShadowSet, is_invertible, shadow_channel, snapshots_from_inverse

PROB_TOL = 1e-9
CHUNK = 1024


@dataclass
class MeasurementOutcome:
    u: object
    b: str
    prob: float


# ---------------------------------------------------------------- Born rule

def _vec_stack(a: np.ndarray) -> np.ndarray:
    return a.transpose(0, 2, 1).reshape(a.shape[0], -1)


def born_probabilities(rho, us, e: QuantumChannel, input_channel: QuantumChannel | None = None) -> np.ndarray:
    """<b|E(U K(rho) U^dag)|b> for a single unitary or a stack; rows sum to one.

    Probabilities within ``PROB_TOL`` of the simplex are clipped and
    renormalised; anything further off raises :class:`ChannelValidityError`.
    """
    rho = as_operator(rho)
    if input_channel is not None:
        rho = input_channel.apply(rho)
    us = np.asarray(us, dtype=complex)
    single = us.ndim == 2
    if single:
        us = us[None]
    d = us.shape[-1]
    states = us @ rho @ us.conj().transpose(0, 2, 1)
    diag_rows = e.superop.mat[np.arange(d) * (d + 1)]
    p = (_vec_stack(states) @ diag_rows.T).real
    if p.min() < -PROB_TOL:
        raise ChannelValidityError(f"negative outcome probability {p.min():.3e}")
    tot = p.sum(axis=1)
    if np.max(np.abs(tot - 1)) > PROB_TOL:
        raise ChannelValidityError(f"outcome probabilities sum to {tot[np.argmax(np.abs(tot - 1))]:.12f}")
    p = np.clip(p, 0, None)
    p /= p.sum(axis=1, keepdims=True)
    return p[0] if single else p


def _draw(p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(p, axis=1)
    r = rng.random(p.shape[0])[:, None]
    return np.minimum((r >= cdf).sum(axis=1), p.shape[1] - 1)


def born_sample(rho, u, e: QuantumChannel, rng: np.random.Generator,
                descriptor=None) -> MeasurementOutcome:
    rho = as_density_matrix(rho)
    u = as_operator(u)
    p = born_probabilities(rho, u, e)
    b = int(_draw(p[None], rng)[0])
    n = int(round(np.log2(u.shape[0])))
    return MeasurementOutcome(descriptor, format(b, f"0{n}b"), float(p[b]))


# ---------------------------------------------------------------- shadows

def _resolve_inverse(inverse, ens: UnitaryEnsemble, e: QuantumChannel) -> ShadowChannel:
    if isinstance(inverse, ShadowChannel):
        return inverse
    if inverse == "corrected":
        return shadow_channel(ens, e)
    if inverse == "naive":
        return shadow_channel(ens, make_identity(ens.n))
    raise ParameterError("inverse must be 'corrected', 'naive' or a ShadowChannel")


def _seed_int(seed) -> int:
    if isinstance(seed, np.random.Generator):
        return int(seed.integers(0, 2**63))
    if seed is None:
        raise ParameterError("a seed is required for reproducible collection")
    return int(seed)


def collect_shadows(rho, ens: UnitaryEnsemble, e: QuantumChannel, count: int, seed=0,
                    inverse="corrected", input_channel: QuantumChannel | None = None,
                    threads: int = 1, chunk: int = CHUNK, state_descriptor=None,
                    stream: int = 0) -> ShadowSet:
    """Simulate ``count`` noisy randomized measurements of fresh copies of ``rho``.

    Chunk ``c`` draws from ``SeedSequence(seed, spawn_key=(stream, c))``, so the
    result depends only on ``(seed, stream, count, chunk)``, not on ``threads``.

    :param inverse: ``"corrected"`` inverts the noisy shadow channel,
        ``"naive"`` the noiseless one, or pass a :class:`ShadowChannel`
    :param input_channel: optional state-preparation noise K, undone by K^{-1}
    """
    if count < 1:
        raise ParameterError("count must be at least 1")
    rho = as_density_matrix(rho)
    if rho.shape[0] != ens.d or e.d != ens.d:
        raise ParameterError("state, ensemble and channel dimensions differ")
    seed = _seed_int(seed)
    sc = _resolve_inverse(inverse, ens, e)
    if not is_invertible(sc):
        raise NotInvertibleError("shadow channel not invertible", beta=ch_beta(e))
    inv_K = input_channel.superop.inverse() if input_channel is not None else None

    def work(c: int):
        m = min(chunk, count - c * chunk)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, c)))
        us, desc = ens.sample(rng, m)
        p = born_probabilities(rho, us, e, input_channel)
        bs = _draw(p, rng)
        return desc, bs, snapshots_from_inverse(us, bs, sc, inv_K)

    n_chunks = -(-count // chunk)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    else:
        parts = [work(c) for c in range(n_chunks)]
    descs = [x for p in parts for x in p[0]]
    bits = [format(int(b), f"0{ens.n}b") for p in parts for b in p[1]]
    rhos = np.concatenate([p[2] for p in parts])
    meta = {"seed": seed, "stream": stream, "chunk": chunk, "ensemble": ens.descriptor(), "channel": e.to_descriptor(),
            "inverse": sc.header()}
    if input_channel is not None:
        meta["input_channel"] = input_channel.to_descriptor()
    if state_descriptor is not None:
        meta["state"] = state_descriptor
    return ShadowSet(ens.n, descs, bits, rhos, meta)


# ---------------------------------------------------------------- median of means

def median_of_means(values, k: int) -> float:
    """Median of ``k`` consecutive bucket means of size ``len(values) // k``.

    Trailing values beyond ``k * (len // k)`` are dropped; for even ``k`` the
    median is the midpoint of the central pair.
    """
    return float(np.median(bucket_means(values, k)))


def bucket_means(values, k: int) -> np.ndarray:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ParameterError("median of means needs at least one value")
    if k < 1 or v.size < k:
        raise ParameterError(f"need 1 <= k <= len(values), got k={k}, len={v.size}")
    size = v.size // k
    return v[:k * size].reshape(k, size).mean(axis=1)


# ---------------------------------------------------------------- estimation

@dataclass
class EstimateReport:
    estimates: list
    seed: int
    N: int
    K: int
    snapshot_count: int
    meta: dict = field(default_factory=dict)

    @property
    def values(self) -> list[float]:
        return [e["value"] for e in self.estimates]

    def to_dict(self) -> dict:
        return {"estimates": self.estimates, "seed": self.seed, "N": self.N, "K": self.K,
                "snapshot_count": self.snapshot_count, **self.meta}


def _effective_observable(o, input_channel):
    # tr(O K^{-1}(X)) = tr((K^{-1})^dag(O) X)
    if input_channel is None:
        return o
    return input_channel.superop.inverse().adjoint().apply(o)


def estimate(rho, observables, ens: UnitaryEnsemble, e: QuantumChannel, epsilon: float, delta: float,
             seed=0, n_override: int | None = None, inverse="corrected",
             input_channel: QuantumChannel | None = None, threads: int = 1,
             observable_ids=None, return_shadows: bool = False, stream: int = 0):
    """Median-of-means shadow estimates of tr(O_i rho).

    K = ceil(2 ln(2M/delta)) buckets of N = ceil(34 max ||O_i - tr(O_i) I/2^n||^2 / eps^2)
    snapshots each.  ``n_override`` replaces N when no seminorm method applies.
    """
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ParameterError("epsilon and delta must lie in (0, 1)")
    obs = [as_hermitian(o) for o in observables]
    if not obs:
        raise ParameterError("at least one observable is required")
    ids = list(observable_ids) if observable_ids is not None else [str(i) for i in range(len(obs))]
    m = len(obs)
    K = num_buckets(m, delta)
    seminorms = []
    if n_override is None:
        try:
            for o in obs:
                oo = traceless_part(_effective_observable(o, input_channel), ens.n)
                oo = (oo + oo.conj().T) / 2
                seminorms.append(seminorm_auto(oo, ens, e).value_squared)
        except UnsupportedError as exc:
            raise UnsupportedError(f"{exc}; pass an explicit N") from exc
        N = bucket_size(max(seminorms), epsilon)
    else:
        if n_override < 1:
            raise ParameterError("N must be at least 1")
        N = int(n_override)
    shadows = collect_shadows(rho, ens, e, N * K, seed=seed, inverse=inverse,
                              input_channel=input_channel, threads=threads, stream=stream)
    out = []
    for i, (oid, o) in enumerate(zip(ids, obs)):
        vals = shadows.expectations(o)
        bm = bucket_means(vals, K)
        rec = {"observable_id": oid, "value": float(np.median(bm)), "N": N, "K": K,
               "bucket_means": [float(x) for x in bm]}
        if seminorms:
            rec["seminorm_squared"] = float(seminorms[i])
        out.append(rec)
    rep = EstimateReport(out, shadows.meta["seed"], N, K, N * K,
                         {"epsilon": epsilon, "delta": delta, "inverse": shadows.meta["inverse"]})
    return (rep, shadows) if return_shadows else rep


def empirical_variance(rho, o, ens: UnitaryEnsemble, e: QuantumChannel, samples: int, seed=0,
                       inverse="corrected") -> float:
    """Unbiased sample variance of tr(O rho_hat) over independent snapshots."""
    if samples < 2:
        raise ParameterError("need at least two samples for a variance")
    vals = collect_shadows(rho, ens, e, samples, seed=seed, inverse=inverse).expectations(o)
    return float(np.var(vals, ddof=1))


# ---------------------------------------------------------------- exhaustive oracles

def _exhaustive(rho, ens: UnitaryEnsemble, e: QuantumChannel, inverse, input_channel):
    us = ens.elements()
    p = born_probabilities(rho, us, e, input_channel)
    sc = _resolve_inverse(inverse, ens, e)
    m, d = p.shape
    uu = np.repeat(us, d, axis=0)
    bs = np.tile(np.arange(d), m)
    inv_K = input_channel.superop.inverse() if input_channel is not None else None
    rh = snapshots_from_inverse(uu, bs, sc, inv_K).reshape(m, d, d, d)
    return p, rh


def exact_snapshot_mean(rho, ens: UnitaryEnsemble, e: QuantumChannel, inverse="corrected",
                        input_channel: QuantumChannel | None = None) -> np.ndarray:
    """E[rho_hat] summed over every (U, b) with exact Born weights."""
    p, rh = _exhaustive(as_density_matrix(rho), ens, e, inverse, input_channel)
    return np.einsum("kb,kbij->ij", p, rh) / p.shape[0]


def exact_moments(rho, o, ens: UnitaryEnsemble, e: QuantumChannel, inverse="corrected",
                  input_channel: QuantumChannel | None = None) -> tuple[float, float]:
    """Exact mean and variance of tr(O rho_hat) over the enumerable ensemble."""
    o = as_hermitian(o)
    p, rh = _exhaustive(as_density_matrix(rho), ens, e, inverse, input_channel)
    v = np.einsum("ij,kbji->kb", o, rh).real
    w = p / p.shape[0]
    mean = float((w * v).sum())
    return mean, float((w * v**2).sum() - mean**2)
