"""Sample-complexity calculators for noisy classical shadows."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .channels import QuantumChannel, beta as ch_beta
from .errors import NotInvertibleError, ParameterError
from .shadow import F_FLOOR, f_bounds, f_of_E

BOUND_SOURCES = ("general", "global_3design", "pauli_product", "depolarizing", "amplitude_damping")


def ceil_slack(x: float, rel: float = 1e-9) -> int:
    """Ceiling that ignores floating-point overshoot of an exact integer."""
    return math.ceil(x - rel * max(1.0, abs(x)))


@dataclass
class Plan:
    N: int
    K: int
    bound_source: str
    inputs: dict = field(default_factory=dict)
    max_seminorm_sq: float | None = None
    n_total_bound: float | None = None

    @property
    def N_total(self) -> int:
        return self.N * self.K

    def to_dict(self) -> dict:
        out = {"N": self.N, "K": self.K, "N_total": self.N_total, "bound_source": self.bound_source,
               "inputs": self.inputs}
        if self.max_seminorm_sq is not None:
            out["max_seminorm_sq"] = self.max_seminorm_sq
        if self.n_total_bound is not None:
            out["n_total_bound"] = self.n_total_bound
        return out


def _check(m, eps, delta):
    if not isinstance(m, int) or m < 1:
        raise ParameterError("the number of observables M must be a positive integer")
    if not 0 < eps <= 1:
        raise ParameterError("epsilon must lie in (0, 1]")
    if not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")


def num_buckets(m: int, delta: float) -> int:
    """K = ceil(2 ln(2M/delta))."""
    return max(1, ceil_slack(2 * math.log(2 * m / delta)))


def bucket_size(max_seminorm_sq: float, eps: float) -> int:
    """N = ceil(34 max ||O_o||^2 / eps^2)."""
    return max(1, ceil_slack(34 * max_seminorm_sq / eps**2))


def plan_general(max_seminorm_sq: float, m: int, eps: float, delta: float,
                 bound_source: str = "general", inputs: dict | None = None) -> Plan:
    _check(m, eps, delta)
    if max_seminorm_sq < 0:
        raise ParameterError("squared seminorm must be nonnegative")
    K = num_buckets(m, delta)
    N = bucket_size(max_seminorm_sq, eps)
    base = {"M": m, "eps": eps, "delta": delta, "max_seminorm_sq": max_seminorm_sq}
    base.update(inputs or {})
    return Plan(N, K, bound_source, base, max_seminorm_sq,
                68 * math.log(2 * m / delta) * max_seminorm_sq / eps**2)


def plan_global(max_trO2: float, n: int, beta: float, m: int, eps: float, delta: float) -> Plan:
    """Global 3-design bound 204 (2^n-1)^2 ln(2M/delta) / ((beta-1)^2 eps^2) max tr(O^2).

    The (N, K) split uses the squared-seminorm upper bound 3(2^n-1)^2/(beta-1)^2 max tr(O^2).
    """
    _check(m, eps, delta)
    if abs(beta - 1) < 1e-12:
        raise NotInvertibleError("shadow channel not invertible", beta=beta)
    sq = 3 * (2**n - 1) ** 2 / (beta - 1) ** 2 * max_trO2
    p = plan_general(sq, m, eps, delta, "global_3design",
                     {"n": n, "beta": beta, "max_trO2": max_trO2})
    p.n_total_bound = 204 * (2**n - 1) ** 2 * math.log(2 * m / delta) / ((beta - 1) ** 2 * eps**2) * max_trO2
    return p


def pauli_factor(weight: int, f_single: float) -> float:
    """(1/(3 f^2))^wt."""
    return (1 / (3 * f_single**2)) ** weight


def plan_pauli(weights, f_single: float | None, m: int | None, eps: float, delta: float,
               beta: float | None = None, bound_source: str = "pauli_product") -> Plan:
    """Product-Clifford bound 68 ln(2M/delta)/eps^2 max (1/(3 f^2))^wt.

    Pass the single-qubit shadow parameter ``f_single`` or the single-qubit ``beta``
    (then f = (beta - 1)/3).  ``m`` defaults to the number of weights.
    """
    weights = [int(w) for w in weights]
    if not weights or min(weights) < 0:
        raise ParameterError("weights must be a nonempty list of nonnegative integers")
    m = len(weights) if m is None else m
    _check(m, eps, delta)
    if f_single is None:
        if beta is None:
            raise ParameterError("give f_single or beta")
        f_single = (beta - 1) / 3
    if abs(f_single) <= F_FLOOR:
        raise NotInvertibleError("shadow channel not invertible (f = 0)", beta=beta)
    factor = max(pauli_factor(w, f_single) for w in weights)
    p = plan_general(factor, m, eps, delta, bound_source,
                     {"weights": weights, "f_single": f_single})
    p.n_total_bound = 68 * math.log(2 * m / delta) / eps**2 * factor
    return p


def plan_depolarizing(weights, f_channel: float, m: int | None, eps: float, delta: float) -> Plan:
    """Product Clifford with D_{1,f} noise per qubit: factor (3/f^2)^wt."""
    p = plan_pauli(weights, f_channel / 3, m, eps, delta, bound_source="depolarizing")
    p.inputs["f_channel"] = f_channel
    return p


def plan_amplitude_damping(weights, p_damp: float, m: int | None, eps: float, delta: float) -> Plan:
    """Product Clifford with AD_{1,p} noise per qubit: factor (3/p^2)^wt."""
    p = plan_pauli(weights, p_damp / 3, m, eps, delta, bound_source="amplitude_damping")
    p.inputs["p"] = p_damp
    return p


def advisory_f_bounds(e: QuantumChannel, n: int | None = None) -> dict:
    """f(E), its admissible interval, severity ratio f/f(identity) and invertibility."""
    n = e.n if n is None else n
    f = f_of_E(e, n)
    lo, hi = f_bounds(n)
    fr = float(f.real) if isinstance(f, complex) else float(f)
    return {"f": fr, "f_identity": hi, "interval": [lo, hi],
            "within_bounds": bool(lo - 1e-10 <= fr <= hi + 1e-10),
            "severity_ratio": fr / hi, "beta": ch_beta(e),
            "invertible": bool(abs(fr) > F_FLOOR), "inverse_parameter": (1 / fr) if abs(fr) > F_FLOOR else None}
