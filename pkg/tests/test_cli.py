import csv
import io
import json
import math

import pytest

from vqm import __version__
from vqm import cli
from vqm.config import ExperimentConfig, parse_config
from vqm.errors import ConfigError
from vqm.experiments import RUNNERS, Table

FAST = """
train:
  max_iters: 4
  patience: 3
"""


def read_csv(path):
    text = open(path, encoding="utf-8").read()
    meta = {}
    body = []
    for line in text.splitlines(keepends=True):
        if line.startswith("# "):
            k, _, v = line[2:].rstrip("\n").partition(": ")
            meta[k] = v
        else:
            body.append(line)
    rows = list(csv.DictReader(io.StringIO("".join(body))))
    return meta, rows


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


# -- config -------------------------------------------------------------------


def test_defaults():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert cfg.phi == pytest.approx((math.pi / 6,) * 3)
    assert cfg.n_qubits == 3 and cfg.noise.gamma == 0.1 and cfg.noise.tau_c == 20.0
    assert cfg.lambda_grid == pytest.approx([0.1 * i for i in range(10)])
    assert cfg.t_grid == pytest.approx([0.5 * i for i in range(1, 21)])


def test_range_and_nested_sections():
    cfg = parse_config("lambda_grid: {start: 0.1, stop: 0.3, step: 0.1}\nnoise:\n  kind: ou\n  markovian: false\n"
                       "train:\n  alpha: 0.1\n  cost_kind: tradeoff\n")
    assert cfg.lambda_grid == pytest.approx((0.1, 0.2, 0.3))
    assert cfg.noise.kind == "ou" and cfg.noise.markovian is False
    assert cfg.train.alpha == 0.1 and cfg.train.cost_kind == "tradeoff"


@pytest.mark.parametrize("text,line", [
    ("seed: 1\nbogus: 2\n", 2),
    ("seed: 1\nn_qubits: three\n", 2),
    ("seed: 0\n\nlambda_grid: []\n", 3),
    ("t_grid: [0.0, 1.0]\n", 1),
    ("train:\n  alpha: 0.2\n  cost_kind: banana\n", 3),
    ("noise:\n  lambda: 1.5\n", 2),
    ("seed: 1\nseed: 2\n", 2),
    ("phi: [0.1, .nan, 0.2]\n", 1),
])
def test_config_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == line
    assert str(err.value).startswith(f"line {line}: ")


def test_digest_ignores_threads_and_output():
    a = parse_config("seed: 3\nthreads: 1\nout: a.csv\n")
    b = parse_config("seed: 3\nthreads: 2\nout: b.csv\n")
    assert a.digest() == b.digest() != parse_config("seed: 4\n").digest()


# -- CLI ------------------------------------------------------------------------


def test_empty_grid_exits_2_without_output(workdir, capsys):
    cfg = write(workdir / "c.yaml", "experiment: sweep-dephasing\nlambda_grid: []\n")
    code = cli.main(["sweep-dephasing", "--config", cfg, "--out", "sweep.csv"])
    assert code == 2
    assert "line 2" in capsys.readouterr().err
    assert not (workdir / "sweep.csv").exists()


def test_missing_config_exits_2(workdir):
    assert cli.main(["train", "--config", "nope.yaml"]) == 2


def test_entanglement_reference(workdir):
    assert cli.main(["entanglement", "--state", "ghz", "--n-qubits", "4", "--out", "e.csv"]) == 0
    meta, rows = read_csv("e.csv")
    assert meta["experiment"] == "entanglement" and meta["tool_version"] == __version__
    assert set(meta) >= {"experiment", "seed", "config_hash", "tool_version"}
    assert float(rows[0]["xi"]) == pytest.approx(0.4375, abs=1e-12)
    assert float(rows[0]["xi_swap_test"]) == pytest.approx(0.4375, abs=1e-10)
    assert float(rows[0]["xi_ame"]) == pytest.approx(0.53125, abs=1e-12)


def test_train_then_entanglement_of_probe(workdir):
    cfg = write(workdir / "c.yaml", FAST)
    assert cli.main(["train", "--config", cfg, "--n-qubits", "2", "--out", "run/t.csv", "--plot-script"]) == 0
    meta, rows = read_csv("run/t.csv")
    assert [int(r["iter"]) for r in rows] == list(range(len(rows)))
    assert meta["best_cost"] == format(min(float(r["cost"]) for r in rows), ".17g")
    params = json.load(open("run/t.params.json"))
    assert params["n_qubits"] == 2 and len(params["theta"]) == 2 * (2 * 2 - 2)
    assert (workdir / "run" / "t_plot.py").exists()
    assert cli.main(["entanglement", "--params", "run/t.params.json", "--out", "ce.csv"]) == 0
    _, rows = read_csv("ce.csv")
    assert rows[0]["source"] == "star-probe" and 0.0 <= float(rows[0]["xi"]) < 1.0


def test_full_precision_floats(workdir):
    cfg = write(workdir / "c.yaml", FAST)
    cli.main(["train", "--config", cfg, "--n-qubits", "2", "--out", "t.csv"])
    _, rows = read_csv("t.csv")
    for r in rows:
        assert float(format(float(r["cost"]), ".17g")) == float(r["cost"])


def test_sweep_threads_byte_identical(workdir):
    cfg = write(workdir / "c.yaml", FAST + "lambda_grid: [0.0, 0.2]\nrestarts: 2\nn_qubits: 2\n")
    assert cli.main(["sweep-dephasing", "--config", cfg, "--threads", "1", "--out", "one.csv"]) == 0
    assert cli.main(["sweep-dephasing", "--config", cfg, "--threads", "2", "--out", "two.csv"]) == 0
    assert open("one.csv", "rb").read() == open("two.csv", "rb").read()
    _, rows = read_csv("one.csv")
    assert list(rows[0]) == ["lambda", "cost", "C_F", "C_S", "T", "CE"] and len(rows) == 2


def test_barren_plateau_rows(workdir):
    cfg = write(workdir / "c.yaml", "n_qubits: 3\nn_runs: 3\nlambda_grid: [0.1, 0.5, 0.9]\nansatzes: [star, ring]\n")
    assert cli.main(["barren-plateau", "--config", cfg, "--out", "bp.csv"]) == 0
    meta, rows = read_csv("bp.csv")
    assert meta["n_runs"] == "3"
    assert len(rows) == 2 * (3 + 1)
    fits = [r for r in rows if r["lambda"] == "fit"]
    assert len(fits) == 2 and all(r["slope"] for r in fits)


def test_ou_sweep_layout(workdir):
    cfg = write(workdir / "c.yaml", FAST + "t_grid: [1.0, 2.0]\nn_qubits_list: [2]\nrestarts: 1\n")
    assert cli.main(["ou-sweep", "--config", cfg, "--out", "ou.csv"]) == 0
    meta, rows = read_csv("ou.csv")
    part_a = [r for r in rows if r["part"] == "a"]
    part_b = [r for r in rows if r["part"] == "b"]
    assert len(part_a) == 4 and len(part_b) == 2
    assert {r["mode"] for r in rows} == {"markovian", "non-markovian"}
    assert "reference_anchor" in meta
    for r in part_b:
        assert float(r["SQL_F"]) == pytest.approx(float(r["C_F"]))


def test_layer_scan_and_cost_variant(workdir):
    cfg = write(workdir / "c.yaml", FAST + "n_qubits: 2\nrestarts: 1\nprep_layers_range: [1, 2]\n"
                "povm_layers_range: [1]\nansatzes: [star]\nlambda_grid: [0.1]\n")
    assert cli.main(["layer-scan", "--config", cfg, "--out", "ls.csv"]) == 0
    meta, rows = read_csv("ls.csv")
    assert len(rows) == 2 and "argmin" in meta
    assert cli.main(["cost-variant", "--config", cfg, "--out", "cv.csv"]) == 0
    _, rows = read_csv("cv.csv")
    iters = [r for r in rows if r["row"] == "iter"]
    final = [r for r in rows if r["row"] == "final"][0]
    its = [int(r["iter"]) for r in iters]
    assert all(b > a for a, b in zip(its, its[1:]))
    assert float(final["C_F"]) <= float(iters[0]["C_F"])
    assert float(final["gap"]) >= -1e-8


def test_nan_exits_3_without_output(workdir, monkeypatch):
    def broken(cfg):
        return Table(["x"], [[float("nan")]])

    monkeypatch.setitem(RUNNERS, "entanglement", broken)
    assert cli.main(["entanglement", "--out", "bad.csv"]) == 3
    assert not (workdir / "bad.csv").exists()
