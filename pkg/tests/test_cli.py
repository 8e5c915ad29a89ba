import json
import subprocess
import sys

import pytest

from delivchain.cli import main
from delivchain.contract import MSG_RECEIVED
from delivchain.simulator import canonical_scenario


@pytest.fixture
def run_dir(tmp_path):
    out = tmp_path / "run"
    assert main(["run", "happy_path", "--out", str(out)]) == 0
    return out


def flip_hex(line: str, key: str) -> str:
    raw = json.loads(line)
    value = raw[key]
    raw[key] = ("0" if value[0] != "0" else "1") + value[1:]
    return json.dumps(raw)


def test_run_writes_outputs(run_dir, capsys):
    assert (run_dir / "ledger.ndjson").is_file()
    report = json.loads((run_dir / "report.json").read_text())
    assert report["scenario"] == "happy_path"
    assert report["completed"]


def test_run_from_file(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(canonical_scenario("tardy_cook").to_dict()))
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 0
    assert "1 food / 0 delivery warnings" in capsys.readouterr().out


def test_bundled_scenario_by_file_name(tmp_path, capsys):
    assert main(["run", "tardy_cook.json", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["violations"]["food"] == 1
    assert [r["penalty_pct"] for r in report["receipts"] if r["role"] == "Restaurant"] == [10]


def test_run_missing_config(tmp_path):
    assert main(["run", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


def test_run_invalid_config(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"seed": "x"}')
    assert main(["run", str(path), "--out", str(tmp_path)]) == 2


def test_run_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["run", "greedy_rider", "--out", str(tmp_path / name)]) == 0
    for file in ("ledger.ndjson", "report.json"):
        assert (tmp_path / "a" / file).read_bytes() == (tmp_path / "b" / file).read_bytes()


def test_seed_override_changes_addresses(tmp_path, monkeypatch):
    assert main(["run", "happy_path", "--out", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("DELIVCHAIN_SEED", "77")
    assert main(["run", "happy_path", "--out", str(tmp_path / "b")]) == 0
    a = json.loads((tmp_path / "a" / "report.json").read_text())
    b = json.loads((tmp_path / "b" / "report.json").read_text())
    assert b["seed"] == 77
    assert a["head_hash"] != b["head_hash"]


def test_bad_seed_override(tmp_path, monkeypatch):
    monkeypatch.setenv("DELIVCHAIN_SEED", "seven")
    assert main(["run", "happy_path", "--out", str(tmp_path)]) == 2


def test_verify_ok(run_dir, capsys):
    assert main(["verify-ledger", str(run_dir / "ledger.ndjson")]) == 0
    assert capsys.readouterr().out.strip() == "ok"


@pytest.mark.parametrize("key", ["tx_root", "prev_hash", "block_hash"])
def test_verify_reports_tampered_block(run_dir, capsys, key):
    path = run_dir / "ledger.ndjson"
    lines = path.read_text().splitlines()
    lines[4] = flip_hex(lines[4], key)
    path.write_text("\n".join(lines) + "\n")
    assert main(["verify-ledger", str(path)]) == 1
    assert capsys.readouterr().out.startswith("FAIL block 4:")


def test_verify_empty_file(tmp_path):
    path = tmp_path / "empty.ndjson"
    path.write_text("")
    assert main(["verify-ledger", str(path)]) == 2


def test_verify_not_json(tmp_path):
    path = tmp_path / "junk.ndjson"
    path.write_text("not json\n")
    assert main(["verify-ledger", str(path)]) == 2


def test_verify_missing_file(tmp_path):
    assert main(["verify-ledger", str(tmp_path / "nope")]) == 2


def test_dump_ledger(run_dir, capsys):
    assert main(["dump-ledger", str(run_dir / "ledger.ndjson")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("block 0")
    assert "deliver_food" in out and MSG_RECEIVED in out


def test_report(run_dir, capsys):
    assert main(["report", str(run_dir)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["violations"] == {"food": 0, "delivery": 0}
    assert {s["role"] for s in summary["settlements"]} == {"Restaurant", "Deliveryman"}


def test_report_missing_dir(tmp_path):
    assert main(["report", str(tmp_path / "nope")]) == 2


def test_replay(run_dir, capsys):
    assert main(["replay", str(run_dir / "ledger.ndjson")]) == 0
    state = json.loads(capsys.readouterr().out)
    assert state["orders"] == {"1": 5}
    report = json.loads((run_dir / "report.json").read_text())
    assert state["head_hash"] == report["head_hash"]


def test_replay_tampered(run_dir):
    path = run_dir / "ledger.ndjson"
    lines = path.read_text().splitlines()
    lines[-1] = flip_hex(lines[-1], "block_hash")
    path.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(path)]) == 1


def test_usage_errors():
    assert main([]) == 2
    assert main(["frobnicate"]) == 2


def test_module_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "delivchain", "run", "tardy_rider", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert result.returncode == 0, result.stderr
    assert "0 food / 1 delivery warnings" in result.stdout


@pytest.mark.parametrize("name", ["happy_path", "tardy_cook", "tardy_rider", "greedy_rider"])
def test_verify_roundtrip_every_scenario(tmp_path, name):
    assert main(["run", name, "--out", str(tmp_path)]) == 0
    assert main(["verify-ledger", str(tmp_path / "ledger.ndjson")]) == 0
