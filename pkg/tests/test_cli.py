import json
import os
import subprocess
import sys

import pytest

from mailsignal import cli
from mailsignal.learn.design import read_rows

SMALL = {"n_actors": 40, "n_weeks": 4, "base_rate": 1.0}


def run(tmp_path, *args, cfg=None):
    cfg = {"seed": 3, "synth": SMALL, "model": {"lda_iterations": 50, "rounds": 10}, **(cfg or {})}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return cli.main([args[0], "--config", str(path), *args[1:]])


def test_train_before_indicators_exits_2(tmp_path, capsys):
    code = run(tmp_path, "train", "--out", str(tmp_path / "o"))
    err = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert code == 2 and err["requires"] == "indicators" and err["status"] == "error"


def test_ingest_without_inputs_names_synth(tmp_path, capsys):
    assert run(tmp_path, "ingest", "--out", str(tmp_path / "o")) == 2
    assert "synth" in capsys.readouterr().out


def test_missing_seed_and_missing_input(tmp_path, capsys):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"output": str(tmp_path / "o")}))
    assert cli.main(["synth", "--config", str(cfgp)]) == 2
    cfgp.write_text(json.dumps({"seed": 1, "inputs": {"events": "nope.jsonl"}}))
    assert cli.main(["ingest", "--config", str(cfgp)]) == 2
    assert "not found" in capsys.readouterr().out


@pytest.mark.slow
def test_full_pipeline_and_determinism(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run(tmp_path, "all", "--out", str(out)) == 0
        outs.append(out)
    lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    hashes = [l["manifest_hash"] for l in lines if l["stage"] == "report"]
    assert len(hashes) == 2 and hashes[0] == hashes[1]
    manifest = json.loads((outs[0] / "manifest.json").read_text())
    assert set(manifest["stages"]) == set(cli.STAGES)
    assert all(s["status"] == "ok" for s in manifest["stages"].values())
    declared = {f for s in manifest["stages"].values() for f in s["files"]}
    on_disk = {os.path.relpath(os.path.join(d, f), outs[0]) for d, _, fs in os.walk(outs[0]) for f in fs}
    assert on_disk - declared == {"manifest.json"}
    for rel in sorted(on_disk):
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel


def test_flags_override_config(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"seed": 1, "model": {"rounds": 7}}))
    cfg = cli.load_config(str(cfgp), {"seed": 9, "model": {"rounds": 12, "weak": None}})
    assert cfg["seed"] == 9 and cfg["model"]["rounds"] == 12 and cfg["model"]["weak"] == "stump"


def test_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "mailsignal.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "indicators" in res.stdout


def test_mbox_ingest_through_cli(tmp_path):
    from datetime import datetime, timedelta, timezone
    from email.utils import format_datetime
    t0 = datetime(2017, 1, 2, tzinfo=timezone.utc)
    msgs = []
    for i in range(12):
        s, r = ("a@x.org", "b@x.org") if i % 2 else ("b@x.org", "a@x.org")
        msgs.append(f"From {s} Mon Jan  2 00:00:00 2017\nFrom: {s}\nTo: {r}\n"
                    f"Date: {format_datetime(t0 + timedelta(days=i))}\nMessage-ID: <{i}@x>\n\n"
                    f"great plan number {i}\n\n")
    (tmp_path / "box.mbox").write_text("".join(msgs))
    (tmp_path / "hr.csv").write_text("actor,age,band,tenure,tslp,label_p1,label_p2\n"
                                     "a@x.org,40,0,10,2,1,0\nb@x.org,50,1,20,3,0,1\n")
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps({"seed": 1, "output": str(tmp_path / "o"), "periods": {"count": 2},
                                "inputs": {"mbox": "box.mbox", "attributes": "hr.csv"},
                                "model": {"lda_iterations": 20}}))
    assert cli.main(["ingest", "--config", str(cfgp)]) == 0
    assert cli.main(["indicators", "--config", str(cfgp)]) == 0
    rows = read_rows(tmp_path / "o" / "indicators" / "indicators.csv")
    assert len(rows) == 4
    assert not any("@" in r["actor"] for r in rows)  # addresses hashed
    assert all(r["has_attributes"] == "1" and r["label"] in ("0", "1") for r in rows)
