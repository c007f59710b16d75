import csv
import json

import numpy as np
import pytest

from noisy_shadows.cli import ExperimentConfig, build_observable, build_state, main
from noisy_shadows.errors import ConfigError
from noisy_shadows.shadow import ShadowSet


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


BASE = {
    "n": 1,
    "state": "zero",
    "ensemble": "clifford_global",
    "channel": {"kind": "identity"},
    "observables": ["Z", {"pauli": "X", "id": "x"}],
    "epsilon": 0.2,
    "delta": 0.05,
    "seed": 17,
}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_estimate_end_to_end(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", BASE)
    code, out, _ = run(capsys, "estimate", "--config", cfg, "--out", str(tmp_path / "o"),
                       "--shadows-out", str(tmp_path / "s.jsonl"))
    assert code == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert json.loads(out) == rep
    z = rep["estimates"][0]
    assert z["observable_id"] == "Z" and abs(z["value"] - 1) <= 0.2
    assert rep["estimates"][1]["observable_id"] == "x"
    rows = list(csv.DictReader(open(tmp_path / "o" / "estimates.csv")))
    assert [r["observable_id"] for r in rows] == ["Z", "x"]
    s = ShadowSet.read_jsonl(tmp_path / "s.jsonl")
    assert len(s) == rep["snapshot_count_per_trial"]


def test_estimate_deterministic(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {**BASE, "trials": 2})
    run(capsys, "estimate", "--config", cfg, "--out", str(tmp_path / "a"))
    run(capsys, "estimate", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "3")
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    assert (tmp_path / "a" / "estimates.csv").read_bytes() == (tmp_path / "b" / "estimates.csv").read_bytes()
    run(capsys, "estimate", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "18")
    c = json.loads((tmp_path / "c" / "report.json").read_text())
    assert c["seed"] == 18 and c["estimates"] != json.loads(a)["estimates"]
    trials = json.loads(a)["trials"]
    assert {r["trial"] for r in trials} == {0, 1}


def test_config_digest_round_trip(tmp_path):
    cfg = ExperimentConfig.from_dict(BASE)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg and again.digest() == cfg.digest()


def test_config_validation():
    for bad in ({**BASE, "epsilon": 1.5}, {**BASE, "n": 0}, {k: v for k, v in BASE.items() if k != "state"},
                {**BASE, "channel": {"kind": "identity", "n": 2}}, {**BASE, "observables": []},
                {**BASE, "inverse": "other"}):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(bad)


def test_build_state_and_observable(tmp_path):
    assert np.allclose(build_state("plus", 1), np.full((2, 2), 0.5))
    ghz = build_state("ghz", 2)
    assert ghz[0, 3] == pytest.approx(0.5)
    assert np.allclose(build_state({"kind": "basis", "bits": "10"}, 2), np.diag([0, 0, 1, 0]))
    with pytest.raises(ConfigError):
        build_state({"kind": "basis", "bits": "1"}, 2)
    np.save(tmp_path / "o.npy", np.diag([1.0, -1.0]))
    oid, m, lab = build_observable({"matrix": "o.npy", "id": "zz"}, 1, tmp_path)
    assert oid == "zz" and np.allclose(m, np.diag([1, -1])) and lab is None
    with pytest.raises(ConfigError):
        build_observable("XX", 1)


def test_malformed_json_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"n": 1,\n  "state": }')
    code, _, err = run(capsys, "estimate", "--config", str(p))
    assert code == 2
    assert "bad.json:2:" in err


def test_non_invertible_exit_3(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {**BASE, "channel": {"kind": "depolarizing", "params": {"f": 0.0}}})
    code, _, err = run(capsys, "estimate", "--config", cfg)
    assert code == 3
    assert "not invertible" in err and "beta" in err


def test_channel_info_dephasing(capsys):
    code, out, _ = run(capsys, "channel-info", "--channel", '{"kind": "dephasing", "n": 2}')
    info = json.loads(out)
    assert code == 0 and info["inconsequential"] is True and info["cptp"] is True
    code, out, _ = run(capsys, "channel-info", "--channel",
                       '{"kind": "amplitude_damping", "n": 1, "params": {"p": 0.5}}')
    info = json.loads(out)
    assert info["f"] == pytest.approx(1 / 6) and info["advisory"]["severity_ratio"] == pytest.approx(0.5)


def test_plan_depolarizing_factors(tmp_path, capsys):
    f = 0.5
    sc = write(tmp_path / "p.json", {"n": 3, "channel": {"kind": "depolarizing", "params": {"f": f, "per_qubit": True}},
                                     "observables": ["XII", "XZI", "XYZ"], "eps": 0.1, "delta": 0.05})
    code, out, err = run(capsys, "plan", "--config", sc)
    assert code == 0
    res = json.loads(out)
    factors = [r["factor"] for r in res["observables"]]
    assert factors == pytest.approx([(3 / f**2) ** w for w in (1, 2, 3)])
    assert res["plan"]["bound_source"] == "depolarizing"
    assert "N_total" in err


def test_plan_global(tmp_path, capsys):
    sc = write(tmp_path / "p.json", {"n": 2, "ensemble": "clifford_global", "channel": "identity",
                                     "observables": [{"trO2": 4.0}], "M": 5, "eps": 0.2, "delta": 0.05})
    code, out, _ = run(capsys, "plan", "--config", sc)
    assert code == 0 and json.loads(out)["plan"]["bound_source"] == "global_3design"


def test_seminorm_subcommand(capsys):
    code, out, _ = run(capsys, "seminorm", "--pauli", "XZ", "--ensemble", "clifford_product",
                       "--channel", '{"kind": "amplitude_damping", "params": {"p": 0.5}}')
    res = json.loads(out)
    assert code == 0 and res["value_squared"] == pytest.approx(144)
    assert res["oracle_discrepancy"] < 1e-8
    code, out, _ = run(capsys, "seminorm", "--pauli", "Z")
    assert json.loads(out)["value_squared"] == pytest.approx(3)


def test_verify_quick(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "--quick", "--out", str(tmp_path))
    rep = json.loads(out)
    assert code == 0 and rep["all_passed"]
    assert rep["klocal_depolarizing"]["no_identity_passed"]
    assert (tmp_path / "verify.json").exists()
