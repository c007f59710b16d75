"""Command-line front end: ``noisy-shadows {estimate,plan,seminorm,verify,channel-info}``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channels as ch
from .ensembles import ensemble_from_descriptor
from .errors import (ChannelValidityError, ConfigError, DimensionMismatchError, NotInvertibleError,
                     ParameterError, ShadowError, UnsupportedError)
from .estimator import estimate
from .identities import run_battery
from .linalg import (as_hermitian, is_density_matrix, kron, pauli_matrix, pauli_weight,
                     random_density_matrix, random_pure_state)
from .planner import advisory_f_bounds, plan_general, plan_global
from .seminorm import (klocal_table_report, seminorm_auto, seminorm_bruteforce,
                       seminorm_klocal_depolarizing, seminorm_pauli_product)
from .shadow import check_f_bounds, f_of_E

log = logging.getLogger("noisy_shadows")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_INVERTIBLE, EXIT_NUMERICAL = 0, 2, 3, 4

_ONE_QUBIT_STATES = {
    "zero": np.array([1, 0], dtype=complex),
    "one": np.array([0, 1], dtype=complex),
    "plus": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "minus": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "plus_i": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "minus_i": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}


# ---------------------------------------------------------------- config parsing

def load_json(path) -> dict:
    """Read JSON, turning syntax errors into ConfigError with file:line:column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _matrix(data, base: Path | None) -> np.ndarray:
    """Dense matrix from inline data or a file path (``.npy`` or JSON)."""
    if isinstance(data, dict) and "path" in data:
        data = str(data["path"])
    if isinstance(data, str):
        p = Path(data)
        if base is not None and not p.is_absolute():
            p = base / p
        if p.suffix == ".npy":
            try:
                return np.asarray(np.load(p), dtype=complex)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"{p}: {exc}") from exc
        return _matrix(load_json(p), None)
    if isinstance(data, dict) and "matrix" in data:
        return _matrix(data["matrix"], base)
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrix data is not numeric: {exc}") from exc
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise ConfigError("matrix must be a 2-D list of reals or [re, im] pairs")


def _encode(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def build_state(desc, n: int, base: Path | None = None) -> np.ndarray:
    """State from ``{"kind": "named"|"basis"|"matrix"|"random", ...}`` or a bare name."""
    if isinstance(desc, str):
        desc = {"kind": "named", "name": desc}
    if not isinstance(desc, dict):
        raise ConfigError("state must be a name or an object")
    kind = desc.get("kind", "named")
    d = 2**n
    if kind == "named":
        name = desc.get("name")
        if name == "maximally_mixed":
            return np.eye(d, dtype=complex) / d
        if name == "ghz":
            v = np.zeros(d, dtype=complex)
            v[0] = v[-1] = 1 / np.sqrt(2)
            return np.outer(v, v.conj())
        if name not in _ONE_QUBIT_STATES:
            raise ConfigError(f"unknown state name {name!r}")
        v = kron(*[_ONE_QUBIT_STATES[name]] * n)
        return np.outer(v, v.conj())
    if kind == "basis":
        bits = str(desc.get("bits", ""))
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise ConfigError(f"basis state needs {n} bits")
        v = np.zeros(d, dtype=complex)
        v[int(bits, 2)] = 1
        return np.outer(v, v.conj())
    if kind == "random":
        rng = np.random.default_rng(int(desc.get("seed", 0)))
        if desc.get("pure"):
            return random_pure_state(d, rng)
        return random_density_matrix(d, rng, desc.get("rank"))
    if kind == "matrix":
        rho = _matrix(desc, base)
        if rho.shape != (d, d) or not is_density_matrix(rho):
            raise ConfigError(f"state matrix is not a valid {d}x{d} density matrix")
        return rho
    raise ConfigError(f"unknown state kind {kind!r}")


def build_observable(desc, n: int, base: Path | None = None) -> tuple[str, np.ndarray, str | None]:
    """Returns ``(id, matrix, pauli_label_or_None)``."""
    if isinstance(desc, str):
        desc = {"pauli": desc}
    if not isinstance(desc, dict):
        raise ConfigError("observable must be a Pauli string or an object")
    if "pauli" in desc:
        lab = str(desc["pauli"]).upper()
        if len(lab) != n:
            raise ConfigError(f"Pauli string {lab!r} does not act on {n} qubits")
        coeff = float(desc.get("coeff", 1.0))
        oid = desc.get("id", lab if coeff == 1.0 else f"{coeff}*{lab}")
        return oid, coeff * pauli_matrix(lab), lab if coeff == 1.0 else None
    m = _matrix(desc, base)
    if m.shape != (2**n, 2**n):
        raise DimensionMismatchError(f"observable is {m.shape}, expected {(2**n, 2**n)}")
    return desc.get("id", "matrix"), as_hermitian(m), None


@dataclass
class ExperimentConfig:
    n: int
    state: object
    ensemble: dict
    channel: dict
    observables: list
    epsilon: float
    delta: float
    seed: int = 0
    input_channel: dict | None = None
    inverse: str = "corrected"
    N: int | None = None
    trials: int = 1
    base_dir: Path | None = field(default=None, compare=False)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        need = ["n", "state", "channel", "observables", "epsilon", "delta"]
        missing = [k for k in need if k not in raw]
        if missing:
            raise ConfigError(f"config is missing {', '.join(missing)}")
        n = raw["n"]
        if not isinstance(n, int) or n < 1:
            raise ConfigError("n must be a positive integer")
        ens = raw.get("ensemble", {"kind": "clifford_global", "n": n})
        ens = {"n": n, **ens} if isinstance(ens, dict) else {"kind": ens, "n": n}
        chan = raw["channel"]
        chan = {"n": n, **chan} if isinstance(chan, dict) else {"kind": chan, "n": n}
        inp = raw.get("input_channel")
        if inp is not None:
            inp = {"n": n, **inp} if isinstance(inp, dict) else {"kind": inp, "n": n}
        eps, delta = float(raw["epsilon"]), float(raw["delta"])
        if not (0 < eps < 1 and 0 < delta < 1):
            raise ConfigError("epsilon and delta must lie in (0, 1)")
        obs = raw["observables"]
        if not isinstance(obs, list) or not obs:
            raise ConfigError("observables must be a nonempty list")
        for key in ("ensemble", "channel", "input_channel"):
            d = {"ensemble": ens, "channel": chan, "input_channel": inp}[key]
            if d is not None and d.get("n") != n:
                raise ConfigError(f"{key}.n = {d.get('n')} disagrees with n = {n}")
        inverse = raw.get("inverse", "corrected")
        if inverse not in ("corrected", "naive"):
            raise ConfigError("inverse must be 'corrected' or 'naive'")
        N = raw.get("N")
        if N is not None and (not isinstance(N, int) or N < 1):
            raise ConfigError("N must be a positive integer")
        trials = raw.get("trials", 1)
        if not isinstance(trials, int) or trials < 1:
            raise ConfigError("trials must be a positive integer")
        return cls(n, raw["state"], ens, chan, list(obs), eps, delta, int(raw.get("seed", 0)), inp,
                   inverse, N, trials, base_dir)

    def to_dict(self) -> dict:
        out = {"n": self.n, "state": self.state, "ensemble": self.ensemble, "channel": self.channel,
               "observables": self.observables, "epsilon": self.epsilon, "delta": self.delta,
               "seed": self.seed, "inverse": self.inverse, "trials": self.trials}
        if self.input_channel is not None:
            out["input_channel"] = self.input_channel
        if self.N is not None:
            out["N"] = self.N
        return out

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------- subcommands

def _write_json(obj, path: Path | None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    print(text)


def cmd_estimate(args) -> int:
    raw = load_json(args.config)
    cfg = ExperimentConfig.from_dict(raw, Path(args.config).resolve().parent)
    if args.seed is not None:
        cfg.seed = args.seed
    rho = build_state(cfg.state, cfg.n, cfg.base_dir)
    ens = ensemble_from_descriptor(cfg.ensemble)
    e = ch.channel_from_descriptor(cfg.channel)
    k_in = ch.channel_from_descriptor(cfg.input_channel) if cfg.input_channel else None
    obs = [build_observable(o, cfg.n, cfg.base_dir) for o in cfg.observables]
    rows, shadows0, first = [], None, None
    for t in range(cfg.trials):
        rep, shadows = estimate(rho, [o for _, o, _ in obs], ens, e, cfg.epsilon, cfg.delta,
                                seed=cfg.seed, n_override=cfg.N, inverse=cfg.inverse,
                                input_channel=k_in, threads=args.threads,
                                observable_ids=[i for i, _, _ in obs], return_shadows=True, stream=t)
        if t == 0:
            first, shadows0 = rep, shadows
        for est in rep.estimates:
            rows.append({"trial": t, "observable_id": est["observable_id"], "value": est["value"],
                         "N": est["N"], "K": est["K"]})
    report = {
        "estimates": [{k: r[k] for k in ("observable_id", "value", "N", "K")} for r in rows if r["trial"] == 0],
        "trials": rows,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "config_digest": cfg.digest(),
        "inverse": first.meta["inverse"],
        "snapshot_count_per_trial": first.snapshot_count,
    }
    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "estimates.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["trial", "observable_id", "value", "N", "K"])
            w.writeheader()
            w.writerows(rows)
    if args.shadows_out:
        shadows0.meta["state"] = cfg.state
        shadows0.write_jsonl(args.shadows_out)
    _write_json(report, out_dir / "report.json" if out_dir else None)
    return EXIT_OK


def _f_single(c) -> float:
    return float(np.real((ch.beta(c) - ch.alpha(c) / 2) / 3))


def _factors(e, n):
    if n == 1:
        return [e]
    if e.factors is None:
        raise ConfigError("Pauli planning needs a product (per-qubit) noise channel")
    return list(e.factors)


def cmd_plan(args) -> int:
    sc = load_json(args.config)
    for k in ("n", "channel", "observables", "eps", "delta"):
        if k not in sc:
            raise ConfigError(f"plan scenario is missing {k}")
    n = sc["n"]
    chan = sc["channel"]
    e = ch.channel_from_descriptor({"n": n, **chan} if isinstance(chan, dict) else {"kind": chan, "n": n})
    ens_kind = sc.get("ensemble", "clifford_product")
    ens_kind = ens_kind.get("kind") if isinstance(ens_kind, dict) else ens_kind
    obs = sc["observables"]
    m = int(sc.get("M", len(obs)))
    eps, delta = float(sc["eps"]), float(sc["delta"])
    rows = []
    if ens_kind == "clifford_product":
        facs = _factors(e, n)
        fs = [_f_single(c) for c in facs]
        sqs = []
        for lab in obs:
            if not isinstance(lab, str) or len(lab) != n:
                raise ConfigError("product planning takes Pauli strings on n qubits")
            sub = [fs[q] for q, c in enumerate(lab.upper()) if c != "I"]
            sq = seminorm_pauli_product(lab.upper(), sub).value_squared
            sqs.append(sq)
            rows.append({"observable": lab, "weight": pauli_weight(lab), "factor": sq})
        kinds = {c.kind for c in facs}
        source = kinds.pop() if len(kinds) == 1 else "pauli_product"
        source = source if source in ("depolarizing", "amplitude_damping") else "pauli_product"
        plan = plan_general(max(sqs), m, eps, delta, source, {"n": n, "f_single": fs})
        plan.n_total_bound = 68 * np.log(2 * m / delta) / eps**2 * max(sqs)
    elif ens_kind in ("clifford_global", "haar"):
        tr = []
        for o in obs:
            if isinstance(o, str):
                tr.append(2.0**n)
                rows.append({"observable": o, "trO2": 2.0**n})
            elif isinstance(o, dict) and "trO2" in o:
                tr.append(float(o["trO2"]))
                rows.append({"observable": o.get("id", "trO2"), "trO2": float(o["trO2"])})
            else:
                raise ConfigError("global planning takes Pauli strings or {trO2: value}")
        plan = plan_global(max(tr), n, float(np.real(ch.beta(e))), m, eps, delta)
    else:
        raise ConfigError(f"no planner for ensemble kind {ens_kind!r}")
    out = {"plan": plan.to_dict(), "observables": rows}
    print_table(out, sys.stderr)
    _write_json(out, Path(args.out) / "plan.json" if args.out else None)
    return EXIT_OK


def print_table(out: dict, fh) -> None:
    p = out["plan"]
    fh.write(f"bound source: {p['bound_source']}\n")
    fh.write(f"{'observable':<16}{'factor / trO2':>16}\n")
    for r in out["observables"]:
        val = r.get("factor", r.get("trO2"))
        fh.write(f"{str(r['observable']):<16}{val:>16.6g}\n")
    fh.write(f"N = {p['N']}  K = {p['K']}  N_total = {p['N_total']}\n")


def cmd_seminorm(args) -> int:
    cfg = load_json(args.config) if args.config else {}
    if args.pauli:
        cfg["observable"] = args.pauli
    if args.channel:
        cfg["channel"] = json.loads(args.channel)
    if args.ensemble:
        cfg["ensemble"] = args.ensemble
    if "observable" not in cfg:
        raise ConfigError("seminorm needs an observable (--pauli or config.observable)")
    obs_desc = cfg["observable"]
    n = cfg.get("n") or (len(obs_desc) if isinstance(obs_desc, str) else None)
    if n is None:
        raise ConfigError("seminorm config needs n for matrix observables")
    base = Path(args.config).resolve().parent if args.config else None
    _, o, _ = build_observable(obs_desc, n, base)
    chan = cfg.get("channel", {"kind": "identity"})
    e = ch.channel_from_descriptor({"n": n, **chan} if isinstance(chan, dict) else {"kind": chan, "n": n})
    ens_d = cfg.get("ensemble", "clifford_global")
    ens = ensemble_from_descriptor({"n": n, **ens_d} if isinstance(ens_d, dict) else {"kind": ens_d, "n": n})
    method = cfg.get("method", "auto")
    if method == "auto":
        res = seminorm_auto(o, ens, e, oracle=bool(cfg.get("oracle", True)))
    elif method == "bruteforce":
        res = seminorm_bruteforce(o, ens, e)
    elif method == "klocal_depolarizing":
        if e.kind != "depolarizing":
            raise ConfigError("klocal_depolarizing needs depolarizing noise")
        from .linalg import pauli_coefficients
        coeffs = {k: v.real for k, v in pauli_coefficients(o, n).items() if abs(v) > 1e-12}
        res = seminorm_klocal_depolarizing(coeffs, e.params["f"], cfg.get("table", "printed"))
        if cfg.get("oracle", True) and n <= 3:
            res.oracle_value = seminorm_bruteforce(o, ens, e).value
    else:
        raise ConfigError(f"unknown seminorm method {method!r}")
    _write_json(res.to_dict(), Path(args.out) / "seminorm.json" if args.out else None)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = 0 if args.seed is None else args.seed
    checks = run_battery(seed, monte_carlo=not args.quick, samples=args.samples)
    table = klocal_table_report()
    report = {
        "identities": [c.to_dict() for c in checks],
        "all_passed": all(c.passed for c in checks) and table["no_identity_passed"],
        "klocal_depolarizing": {k: v for k, v in table.items() if k != "cases"},
        "klocal_cases": table["cases"],
    }
    _write_json(report, Path(args.out) / "verify.json" if args.out else None)
    return EXIT_OK if report["all_passed"] else EXIT_NUMERICAL


def channel_info(e: ch.QuantumChannel) -> dict:
    rep = e.cptp_report
    info = {
        "descriptor": e.to_descriptor(),
        "n": e.n,
        "cptp": bool(rep.is_cptp),
        "tp_residual": rep.tp_residual,
        "choi_min_eig": rep.choi_min_eig,
        "beta": float(np.real(ch.beta(e))),
        "alpha": float(np.real(ch.alpha(e))),
        "f": float(np.real(f_of_E(e))),
        "f_bounds_ok": check_f_bounds(e),
        "in_lambda_n": ch.in_lambda_n(e),
        "lambda_n_failures": [format(b, f"0{e.n}b") for b in ch.lambda_n_failures(e)],
        "inconsequential": ch.is_inconsequential(e),
    }
    info["advisory"] = advisory_f_bounds(e)
    return info


def cmd_channel_info(args) -> int:
    if args.channel:
        desc = json.loads(args.channel)
    elif args.config:
        raw = load_json(args.config)
        desc = raw.get("channel", raw)
        if "n" not in desc and "n" in raw:
            desc = {"n": raw["n"], **desc}
    else:
        raise ConfigError("channel-info needs --channel JSON or --config PATH")
    e = ch.channel_from_descriptor(desc)
    _write_json(channel_info(e), Path(args.out) / "channel_info.json" if args.out else None)
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="noisy-shadows", description="Classical shadows under noisy measurement.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=False):
        sp.add_argument("--config", required=config_required, help="JSON config path")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("estimate", help="run the noisy shadow estimation pipeline")
    common(sp, True)
    sp.add_argument("--shadows-out", help="write the first trial's shadow set as JSON lines")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("plan", help="sample-complexity plan for a scenario")
    common(sp, True)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("seminorm", help="shadow seminorm of an observable")
    common(sp)
    sp.add_argument("--pauli", help="Pauli string observable")
    sp.add_argument("--channel", help="channel descriptor as inline JSON")
    sp.add_argument("--ensemble", help="ensemble kind")
    sp.set_defaults(func=cmd_seminorm)

    sp = sub.add_parser("verify", help="run the identity battery")
    common(sp)
    sp.add_argument("--quick", action="store_true", help="skip the d = 3 Haar Monte Carlo")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("channel-info", help="diagnostics for a noise channel")
    common(sp)
    sp.add_argument("--channel", help="channel descriptor as inline JSON")
    sp.set_defaults(func=cmd_channel_info)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NotInvertibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_INVERTIBLE
    except (ChannelValidityError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ParameterError, DimensionMismatchError, UnsupportedError, KeyError,
            json.JSONDecodeError, ShadowError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
