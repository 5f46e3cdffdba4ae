import csv
import json

import pytest

from cpfire import cli

SIM = """
[process]
variant = two-type-fire
beta1 = 2
beta2 = 1.5
delta1 = 1
delta2 = 1
delta0 = 0.01
F = 4
size = 16

[initial]
kind = {kind}
p1 = 0.3
p2 = 0.3

[simulate]
t_max = 3
samples = 4
"""


def _run(tmp_path, command, text, *extra, name="out"):
    cfg = tmp_path / f"{name}.ini"
    cfg.write_text(text)
    out = tmp_path / name
    code = cli.run([command, "--config", str(cfg), "--out", str(out), "--workers", "1", *extra])
    return code, out


def _csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_empty_start_gives_zeros(tmp_path):
    code, out = _run(tmp_path, "simulate", SIM.format(kind="empty"), "--seed", "1", "--replicates", "2",
                     "--snapshot-every", "1.5")
    assert code == 0
    rows = _csv(out / "series.csv")
    assert len(rows) == 8
    assert all(r["n1"] == "0" and r["n2"] == "0" for r in rows)
    assert sorted(p.name for p in (out / "snapshots").iterdir())
    assert (out / "density.png").stat().st_size > 0
    assert all(float(r["value"]) == 0 for r in _csv(out / "plotdata.csv"))


def test_simulate_is_byte_identical(tmp_path):
    text = SIM.format(kind="random")
    a = _run(tmp_path, "simulate", text, "--seed", "9", "--replicates", "3", name="a")[1]
    b = _run(tmp_path, "simulate", text, "--seed", "9", "--replicates", "3", "--workers", "2", name="b")[1]
    names = sorted(p.name for p in a.iterdir() if p.is_file() and p.name != "run.log")
    assert names == sorted(p.name for p in b.iterdir() if p.is_file() and p.name != "run.log")
    assert {"result.json", "series.csv", "plotdata.csv", "density.png"} <= set(names)
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n
    assert "start simulate" in (a / "run.log").read_text()


def test_formulas_without_fires(tmp_path):
    code, out = _run(tmp_path, "formulas", "[formulas]\ndelta0 = 0\nF = 10\nW = 20\nL = 5\nT = 3\n", "--seed", "0")
    assert code == 0
    vals = json.loads((out / "result.json").read_text())["result"]["values"]
    assert vals["block_unaffected"] == 1.0 and vals["fire_gap"] == 0.0
    rows = _csv(out / "plotdata.csv")
    assert [r["formula"] for r in rows] == ["block_unaffected", "fire_gap", "spread_success"]
    assert list(rows[0]) == ["formula", "value", "ci_lo", "ci_hi"]


def test_formulas_reference_point(tmp_path):
    code, out = _run(tmp_path, "formulas", "[formulas]\ndelta0 = 1e-6\nF = 100\nW = 200\nT = 10\n", "--seed", "0")
    vals = json.loads((out / "result.json").read_text())["result"]["values"]
    assert vals["fire_gap"] == pytest.approx(0.012027, abs=5e-7)


def test_unknown_key_is_config_error(tmp_path, capsys):
    code, out = _run(tmp_path, "simulate", "[process]\nbeta9 = 1\n", "--seed", "1")
    assert code == 2
    assert "beta9" in capsys.readouterr().err
    assert not (out / "result.json").exists()


def test_unknown_section_and_bad_value(tmp_path):
    assert _run(tmp_path, "simulate", "[gap]\nL = 3\n", "--seed", "1")[0] == 2
    assert _run(tmp_path, "simulate", "[process]\nbeta1 = fast\n", "--seed", "1")[0] == 2
    assert _run(tmp_path, "simulate", "[process]\nvariant = nope\n", "--seed", "1")[0] == 2
    assert _run(tmp_path, "simulate", "[process]\nbeta1 = -1\n", "--seed", "1")[0] == 2


def test_seed_is_mandatory(tmp_path, capsys):
    code, _ = _run(tmp_path, "formulas", "[formulas]\nF = 2\nW = 4\n")
    assert code == 2 and "seed" in capsys.readouterr().err
    code, _ = _run(tmp_path, "formulas", "[run]\nseed = 4\n[formulas]\nF = 2\nW = 4\n", name="b")
    assert code == 0


def test_missing_config_file(tmp_path):
    assert cli.run(["formulas", "--config", str(tmp_path / "nope.ini"), "--seed", "1",
                    "--out", str(tmp_path / "o")]) == 2


def test_runtime_error_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("kaput")
    monkeypatch.setitem(cli.COMMANDS, "formulas", boom)
    code, out = _run(tmp_path, "formulas", "[formulas]\nF = 2\nW = 4\n", "--seed", "1")
    assert code == 3
    assert "kaput" in (out / "run.log").read_text()
    assert not (out / "result.json").exists()


SWEEP = """
[process]
variant = contact
beta1 = 3
delta1 = 1
F = 2
size = 12

[initial]
kind = full

[sweep]
parameter = process.delta0
values = {values}
T = 2
"""


def test_sweep_three_delta0_rows(tmp_path):
    code, out = _run(tmp_path, "sweep", SWEEP.format(values="0 1e-4 1e-3"), "--seed", "3", "--replicates", "4")
    assert code == 0
    rows = _csv(out / "plotdata.csv")
    assert [float(r["process.delta0"]) for r in rows] == [0.0, 1e-4, 1e-3]
    assert list(rows[0]) == ["process.delta0", "measure", "value", "ci_lo", "ci_hi"]
    assert (out / "sweep.png").exists()


def test_empty_sweep_writes_header_only(tmp_path):
    code, out = _run(tmp_path, "sweep", SWEEP.format(values=""), "--seed", "3", "--replicates", "2")
    assert code == 0
    lines = (out / "plotdata.csv").read_text().splitlines()
    assert lines == ["process.delta0,measure,value,ci_lo,ci_hi"]
    assert "header-only" in (out / "run.log").read_text()


def test_sweep_rejects_non_numeric_parameter(tmp_path):
    text = SWEEP.format(values="1 2").replace("process.delta0", "process.variant")
    assert _run(tmp_path, "sweep", text, "--seed", "3")[0] == 2


def test_config_echo_round_trip(tmp_path):
    text = SIM.format(kind="random") + "\n[kernel1]\nw_short = 0.5\nw_long = 0.5\nrho = 1.5\nM = 6\n"
    code, out = _run(tmp_path, "simulate", text, "--seed", "5", "--replicates", "1")
    assert code == 0
    echo = json.loads((out / "result.json").read_text())["config_echo"]
    assert echo["config_text"] == text and echo["seed"] == 5
    again = cli.read_config(cli.echo_to_ini(echo["config"]), "simulate")
    assert again == cli.read_config(text, "simulate")


def test_block_prob_and_gap_commands(tmp_path):
    text = "[process]\nbeta1 = 3\ndelta1 = 1\n[block-prob]\nn = 1\nL = 2\nT = 2\n"
    code, out = _run(tmp_path, "block-prob", text, "--seed", "1", "--replicates", "5")
    assert code == 0
    assert [r["event"] for r in _csv(out / "plotdata.csv")] == ["top", "side", "fire-free-factor"]
    text = "[process]\nbeta1 = 3\ndelta1 = 1\nbeta2 = 0\ndelta2 = 1\n[gap]\nL = 2\nr1 = 1.5\nr2 = 3\nT = 1\n"
    code, out = _run(tmp_path, "gap", text, "--seed", "1", "--replicates", "3", name="g")
    assert code == 0
    res = json.loads((out / "result.json").read_text())["result"]
    assert res["no_invasion"]["value"] == 1.0


def test_shape_command(tmp_path):
    text = "[process]\nvariant = richardson\nbeta1 = 1\nsize = 41\n[shape]\nhorizon = 8\nsamples = 9\n"
    code, out = _run(tmp_path, "shape", text, "--seed", "2")
    assert code == 0
    assert len(_csv(out / "plotdata.csv")) == 8
    assert (out / "shape.png").exists()


def test_gap_geometry_error_before_run(tmp_path):
    text = "[gap]\nL = 2\nr1 = 2\nr2 = 1.5\nT = 1\n"
    code, out = _run(tmp_path, "gap", text, "--seed", "1")
    assert code == 2 and not (out / "result.json").exists()
