import csv
import io
import math

import pytest

from entrocert.cli import main
from entrocert.certification import werner_randomness


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def summary(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line and "," not in line.split("=")[0])


def rows(text):
    return list(csv.DictReader(line for line in text.splitlines() if not line.startswith("#")))


def test_curves_schema_and_values():
    code, text = run("curves", "--z-min", "0.34", "--z-max", "1.0", "--steps", "34", "--no-optimize")
    assert code == 0
    assert text.splitlines()[0].startswith("# generated:")
    table = rows(text)
    assert list(table[0]) == ["z", "h_analytic", "h_numeric", "h_chsh"]
    assert len(table) == 34
    last = table[-1]
    assert float(last["z"]) == 1.0
    assert float(last["h_analytic"]) == pytest.approx(0.5764, abs=1e-3)
    assert float(last["h_chsh"]) == 1.0
    assert all(r["h_numeric"] == "" for r in table)
    h = [float(r["h_analytic"]) for r in table]
    assert h == sorted(h)


def test_curves_boundary_row():
    _, text = run("curves", "--z-min", str(1 / 3), "--z-max", "1", "--steps", "2", "--no-optimize", "--reproducible")
    first = rows(text)[0]
    assert float(first["h_analytic"]) == 0.0 and float(first["h_chsh"]) == 0.0


def test_curves_with_optimizer(tmp_path):
    path = tmp_path / "c.csv"
    code, _ = run("curves", "--z-min", "0.5", "--z-max", "1", "--steps", "3", "--restarts", "3",
                  "--out", str(path), "--reproducible")
    assert code == 0
    table = rows(path.read_text())
    assert [float(r["z"]) for r in table] == [0.5, 0.75, 1.0]
    assert float(table[-1]["h_numeric"]) == pytest.approx(-math.log2(7 / 12), abs=1e-6)


def test_csv_formatting_has_12_significant_digits():
    _, text = run("curves", "--z-min", "0.5", "--z-max", "1", "--steps", "2", "--no-optimize", "--reproducible")
    value = rows(text)[0]["h_analytic"]
    assert value == format(werner_randomness(0.5), ".12g")


def test_simulate_writes_records(tmp_path):
    path = tmp_path / "r.csv"
    code, text = run("simulate", "--z", "0.8", "--trials", "2000", "--seed", "3", "--out", str(path), "--reproducible")
    assert code == 0
    table = rows(path.read_text())
    assert list(table[0]) == ["round", "s", "t", "a", "b"]
    assert len(table) == 2000
    s = summary(text)
    assert float(s["I_hat"]) == pytest.approx((1 - 3 * 0.8) / 16, abs=6 * float(s["I_hat_stderr"]))


def test_attack_defaults_and_debug_column(tmp_path):
    path = tmp_path / "a.csv"
    code, text = run("attack", "--trials", "50000", "--seed", "0", "--out", str(path), "--debug-export", "--reproducible")
    assert code == 0
    s = summary(text)
    assert float(s["fake_fraction"]) == pytest.approx(0.99)
    for key in ("I_hat", "p_guess_true", "h_certified_per_round"):
        assert key in s
    assert list(rows(path.read_text())[0]) == ["round", "s", "t", "a", "b", "faked"]


def test_attack_without_faking_is_honest():
    code, text = run("attack", "--fake-fraction", "0", "--trials", "100000", "--seed", "2")
    assert code == 0
    s = summary(text)
    # the Bell resource gives the same statistics as an honest run on it
    assert float(s["I_hat"]) == pytest.approx(-1 / 8, abs=5 * float(s["I_hat_stderr"]))
    assert float(s["p_guess_true"]) == pytest.approx(9 / 16, abs=5 * float(s["p_guess_true_stderr"]))


def test_decompose_outputs():
    code, text = run("decompose", "--format", "csv")
    assert code == 0
    s = summary(text)
    assert float(s["residual"]) <= 1e-10
    assert float(s["I(I/4)_direct"]) == pytest.approx(0.0625, abs=1e-12)
    assert abs(float(s["I(I/4)_direct"]) - float(s["I(I/4)_correlations"])) <= 1e-10
    _, text = run("decompose", "--witness", "identity")
    betas = [float(r["beta"]) for r in rows("\n".join(l for l in text.splitlines() if "=" not in l))]
    assert betas == pytest.approx([0.25] * 16, abs=1e-12)
    code, text = run("decompose", "--format", "table", "--reproducible")
    assert code == 0 and text.startswith("beta[s,t]")


def test_maxcorr_summary():
    code, text = run("maxcorr", "--restarts", "4", "--seed", "1")
    assert code == 0
    s = summary(text)
    assert float(s["analytic"]) == pytest.approx(0.670753, abs=1e-6)
    assert float(s["oracle"]) >= 7 / 12 - 1e-6
    assert s["verdict"] in ("PASS", "VIOLATION")
    assert run("maxcorr", "--restarts", "4", "--seed", "1")[1] == text


@pytest.mark.parametrize("argv", [
    ["curves", "--z-min", "0.9", "--z-max", "0.5"],
    ["curves", "--steps", "1"],
    ["simulate", "--trials", "0"],
    ["simulate", "--z", "2"],
    ["attack", "--fake-fraction", "1.5"],
    ["attack", "--z", "0.2"],
    ["bogus"],
    ["curves", "--steps", "many"],
])
def test_usage_errors_exit_1(argv):
    assert run(*argv)[0] == 1


def test_unwritable_path_exits_2(tmp_path):
    bad = tmp_path / "missing" / "out.csv"
    assert run("curves", "--steps", "2", "--no-optimize", "--out", str(bad))[0] == 2
    assert run("--config", str(tmp_path / "nope.cfg"), "curves")[0] == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# grid\nz_min = 0.5\nsteps=3\n")
    _, text = run("--config", str(cfg), "curves", "--no-optimize", "--reproducible")
    assert [float(r["z"]) for r in rows(text)] == [0.5, 0.75, 1.0]
    _, text = run("--config", str(cfg), "curves", "--no-optimize", "--steps", "2", "--reproducible")
    assert len(rows(text)) == 2


def test_seed_environment_fallback(monkeypatch):
    monkeypatch.setenv("ENTROCERT_SEED", "7")
    env = run("simulate", "--z", "0.9", "--trials", "3000")[1]
    monkeypatch.delenv("ENTROCERT_SEED")
    assert run("simulate", "--z", "0.9", "--trials", "3000", "--seed", "7")[1] == env
    assert run("simulate", "--z", "0.9", "--trials", "3000", "--seed", "8")[1] != env


def test_reproducible_flag_gives_identical_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        run("attack", "--trials", "5000", "--seed", "4", "--out", str(p), "--reproducible")
    assert a.read_bytes() == b.read_bytes()
    assert not a.read_text().startswith("#")
