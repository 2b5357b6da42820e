import json

from zkowf.cli import main
from zkowf.zoo import data_path

DIAL = str(data_path("dial_nizk.cfg"))
GI = str(data_path("gi_k2.cfg"))


def test_measure(capsys):
    assert main(["measure", "--config", DIAL]) == 0
    assert json.loads(capsys.readouterr().out)["eps_z"] == "1/4"


def test_construct(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["construct", "--config", GI, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "u0,u1,u2,output" and len(lines) == 1 + 2 * 2 * 24


def test_invert(capsys):
    assert main(["invert", "--config", GI, "--mode", "exact"]) == 0
    assert json.loads(capsys.readouterr().out)["distributional_deviation"] == "0"


def test_reduce_decide_report(tmp_path, capsys):
    assert main(["reduce", "--config", DIAL, "--out", str(tmp_path), "--format", "tsv-table"]) == 0
    assert "bound-holds" in capsys.readouterr().out
    [result_dir] = list(tmp_path.iterdir())
    assert main(["report", str(result_dir), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "bound-holds"
    assert main(["decide", "--config", GI, "--trials", "200", "--seed", "3", "--out", str(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "bound-holds"


def test_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("run.trials = many\n")
    assert main(["measure", "--config", str(bad)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_relative_instance_paths(tmp_path, capsys):
    (tmp_path / "a.graphs").write_text(data_path("c4_pair.graphs").read_text())
    (tmp_path / "b.graphs").write_text(data_path("c4_paw.graphs").read_text())
    cfg = tmp_path / "x.cfg"
    cfg.write_text("protocol.kind = graph-iso\ninstances.yes = a.graphs\ninstances.no = b.graphs\n")
    assert main(["measure", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["eps_s"] == "1/2"
