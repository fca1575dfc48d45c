import json
import time

import pytest

from stochqm import suite
from stochqm.config import CHECK_IDS, parse_config
from stochqm.errors import CheckFailure


def test_check_registry_covers_every_id():
    assert tuple(suite.CHECKS) == CHECK_IDS
    assert [suite.CHECKS[k][0] for k in CHECK_IDS[:12]] == list(range(1, 13))


def test_brackets_only_run_is_fast(tmp_path):
    t0 = time.perf_counter()
    summary = suite.run_suite(parse_config({"checks": ["brackets"]}), tmp_path)
    assert time.perf_counter() - t0 < 1.0
    assert summary["all_passed"]
    assert list(summary["checks"]) == ["brackets"]


def test_summary_schema(tmp_path):
    suite.run_suite(parse_config({"checks": ["wigner", "uncertainty"]}), tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary) == {"schema_version", "all_passed", "checks", "config"}
    assert summary["schema_version"] == suite.SCHEMA_VERSION
    assert summary["checks"]["wigner"]["criterion"] == 7
    assert set(summary["checks"]["wigner"]) == {"criterion", "passed", "metrics"}
    assert "output_dir" not in summary["config"] and "threads" not in summary["config"]
    timings = json.loads((tmp_path / "timings.json").read_text())
    assert set(timings) == {"wigner", "uncertainty", "total"}
    assert (tmp_path / "uncertainty.csv").read_text().startswith("state,product,heisenberg,route_spread")


def test_summary_is_byte_identical(tmp_path):
    cfg = parse_config({"checks": ["brackets", "compatibility"]})
    suite.run_suite(cfg, tmp_path / "a")
    suite.run_suite(cfg, tmp_path / "b")
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_failures_are_named(tmp_path, monkeypatch):
    def broken(cfg):
        return suite.CheckResult("wigner", False, {"reason": 1.0})

    monkeypatch.setitem(suite.CHECKS, "wigner", (7, broken))
    cfg = parse_config({"checks": ["brackets", "wigner"]})
    with pytest.raises(CheckFailure) as info:
        suite.run_suite(cfg, tmp_path)
    assert info.value.failing == ["wigner"]
    summary = suite.run_suite(cfg, tmp_path, raise_on_failure=False)
    assert not summary["all_passed"] and summary["checks"]["brackets"]["passed"]


def test_propagation_follows_the_configuration(tmp_path):
    cfg = parse_config({"checks": ["propagation"], "grid": {"points": 128},
                        "potential": {"kind": "quartic"}, "evolution": {"dt": 0.02, "n_steps": 50},
                        "state": {"kind": "gaussian", "sigma": 0.8}})
    summary = suite.run_suite(cfg, tmp_path)
    metrics = summary["checks"]["propagation"]["metrics"]
    assert 3.5 <= metrics["halving_factor"] <= 4.5
    assert (tmp_path / "propagation_final.npz").exists()


def test_propagation_with_nonlinearity(tmp_path):
    cfg = parse_config({"checks": ["propagation"], "evolution": {"b": -0.5, "dt": 0.02, "n_steps": 50},
                        "state": {"kind": "gausson", "b": -0.5}, "potential": {"kind": "free"}})
    assert suite.run_suite(cfg, tmp_path)["all_passed"]


def test_unknown_check_id():
    with pytest.raises(KeyError):
        suite.run_check("nope")
