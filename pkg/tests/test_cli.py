import json

import numpy as np
import pytest

from mdiq import __version__
from mdiq.cli import dumps, main
from mdiq.numerics import format_matrix
from mdiq.quantum import max_entangled


def run(tmp_path, *args, config=None, name="out"):
    argv = list(args)
    if config is not None:
        cfg = tmp_path / f"{name}.ini"
        cfg.write_text(config)
        argv += ["--config", str(cfg)]
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    rep = out / "report.json"
    return code, (json.loads(rep.read_text()) if rep.exists() else None), out


def test_witness_scenario_accepts_phi_plus(tmp_path):
    code, rep, out = run(tmp_path, "witness")
    assert code == 0
    assert rep["c_mdi"] == pytest.approx(-0.5) and rep["verdict"] == "accept"
    assert rep["version"] == __version__ and len(rep["config_sha256"]) == 64
    assert (out / "table.csv").read_text().startswith("k1,k2,i1,i2,p")


def test_witness_scenario_from_files(tmp_path):
    (tmp_path / "rho.txt").write_text(format_matrix(np.eye(4) / 4, (2, 2)))
    w = np.eye(4) / 2 - max_entangled(2).matrix
    (tmp_path / "w.txt").write_text(format_matrix(w, (2, 2)))
    cfg = "[state]\npath = rho.txt\n[witness]\npath = w.txt\n"
    code, rep, _ = run(tmp_path, "witness", config=cfg)
    assert code == 0 and rep["verdict"] == "reject" and rep["c_mdi"] == pytest.approx(0.25)


def test_selftest_passes(tmp_path):
    code, rep, _ = run(tmp_path, "selftest")
    assert code == 0 and rep["passed"] and rep["fixture_max_error"] < 1e-12


def test_qkd_scenario(tmp_path):
    code, rep, out = run(tmp_path, "qkd")
    assert code == 0
    assert rep["outcomes"][0]["bound"] == pytest.approx(0.25, abs=1e-9)
    assert len((out / "qkd_table.csv").read_text().splitlines()) == 65


def test_memory_and_quantify_scenarios(tmp_path):
    code, rep, _ = run(tmp_path, "memory", name="m")
    assert code == 0 and rep["negativity_bound"] > 0.4
    code, rep, _ = run(tmp_path, "quantify", name="q")
    assert code == 0 and 0.4 < rep["negativity_bound"] <= 0.5 + 1e-6


def test_decompose_scenario(tmp_path):
    code, rep, _ = run(tmp_path, "decompose", config="[system]\ndims = 3 3\n")
    assert code == 0 and len(rep["decomposition"]["beta"]) == 81


def test_simulate_is_deterministic_across_jobs(tmp_path):
    cfg = "[run]\ntrials = 12\n"
    c1, r1, o1 = run(tmp_path, "simulate", "--seed", "9", "--jobs", "3", config=cfg, name="a")
    c2, r2, o2 = run(tmp_path, "simulate", "--seed", "9", config=cfg, name="b")
    assert c1 == c2 == 0 and r1["false_accepts"] == 0
    assert (o1 / "report.json").read_bytes() == (o2 / "report.json").read_bytes()
    assert (o1 / "sweep.csv").read_bytes() == (o2 / "sweep.csv").read_bytes()


def test_sampled_witness_needs_seed(tmp_path):
    code, _, _ = run(tmp_path, "witness", "--shots", "100")
    assert code == 2
    code, rep, _ = run(tmp_path, "witness", "--shots", "5000", "--seed", "1", name="s")
    assert code == 0 and rep["c_mdi"] == pytest.approx(-0.5, abs=0.1)


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "witness", config="[state\n", name="bad")[0] == 2
    assert run(tmp_path, "witness", config="[state]\npreset = cat\n", name="unk")[0] == 2
    assert run(tmp_path, "witness", config="[system]\ndims = 2 3\n", name="dim")[0] == 3
    code, rep, _ = run(tmp_path, "quantify", config="[solver]\nmax_iter = 10\n", name="slow")
    assert code == 4 and rep["status"] == "unconverged"
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_dumps_writes_seventeen_digits():
    text = dumps({"x": 0.1, "v": [1.0 / 3, 2], "ok": True, "none": None, "s": 'a"b'})
    obj = json.loads(text)
    assert "0.10000000000000001" in text and obj["v"][0] == 1.0 / 3 and obj["s"] == 'a"b'


def test_config_inline_comments(tmp_path):
    cfg = "[state]\npreset = werner   ; two-qubit Werner\np = 0.8  # visibility\n"
    code, rep, _ = run(tmp_path, "witness", config=cfg)
    assert code == 0
    assert rep["c_mdi"] == pytest.approx(0.5 - (1 + 3 * 0.8) / 4)
