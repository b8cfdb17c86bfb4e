import json
import math

import numpy as np
import pytest

from lzscatter.cli import main
from lzscatter.laxflow import smatrix_spin
from lzscatter.models import model_from_descriptor


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def matrix_from_pairs(blob):
    return np.array([[complex(re, im) for re, im in row] for row in blob])


def test_model_show_round_trip(tmp_path, capsys):
    ledger = tmp_path / "ledger.jsonl"
    code, out, _ = run(
        capsys, "model", "show", "--family", "bowtie3",
        "--delta", "0.3", "--slope", "1.1", "--eps", "0.8",
        "--ledger", str(ledger),
    )
    assert code == 0
    payload = json.loads(out)
    rebuilt = model_from_descriptor(payload["descriptor"])
    assert np.array_equal(matrix_from_pairs(payload["a"]), rebuilt.a_of(0.8))
    assert np.array_equal(matrix_from_pairs(payload["b"]), rebuilt.b)
    assert np.array_equal(matrix_from_pairs(payload["e1"]), rebuilt.e1)
    assert np.array_equal(matrix_from_pairs(payload["e0"]), rebuilt.partner_constant())


def test_model_show_lz2_values(tmp_path, capsys):
    code, out, _ = run(
        capsys, "model", "show", "--family", "lz2", "--delta", "1", "--slope", "1",
        "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 0
    payload = json.loads(out)
    assert matrix_from_pairs(payload["b"]).real.tolist() == [[1.0, 0.0], [0.0, -1.0]]
    assert matrix_from_pairs(payload["a"]).real.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_unknown_family_exit_2(tmp_path, capsys):
    code, _, err = run(
        capsys, "model", "show", "--family", "nope", "--delta", "1", "--slope", "1",
        "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 2
    assert "valid families" in err


def test_smatrix_algebraic_values(tmp_path, capsys):
    code, out, _ = run(
        capsys, "smatrix", "--family", "spin", "--k", "3",
        "--delta", "1", "--slope", "1", "--method", "algebraic",
        "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 0
    payload = json.loads(out)
    expect = smatrix_spin(3, 1.0, 1.0)
    assert np.abs(np.array(payload["matrix"]) - expect).max() < 1e-14
    u = math.exp(-math.pi)
    assert payload["matrix"][0][0] == pytest.approx(u * u, rel=1e-12)


def test_smatrix_crossings_bowtie(tmp_path, capsys):
    code, out, _ = run(
        capsys, "smatrix", "--family", "bowtie3",
        "--delta", "0.3", "--slope", "1", "--eps", "1",
        "--method", "crossings", "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 0
    payload = json.loads(out)
    p = math.exp(-2 * math.pi * 0.09)
    assert payload["matrix"][0][0] == pytest.approx(p, rel=1e-12)
    assert payload["matrix"][1][0] == pytest.approx(0.0, abs=1e-15)
    assert payload["events"] == 2


def test_smatrix_unsupported_method(tmp_path, capsys):
    code, _, err = run(
        capsys, "smatrix", "--family", "bowtie3",
        "--delta", "0.3", "--slope", "1", "--eps", "1",
        "--method", "algebraic", "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 2
    assert "unsupported" in err


def test_compare_pass_and_corrupt(tmp_path, capsys):
    base = [
        "compare", "--family", "spin", "--k", "2", "--delta", "0.8", "--slope", "1",
        "--methods", "algebraic", "numeric", "--T", "120", "--rtol", "1e-7",
        "--ledger", str(tmp_path / "l.jsonl"),
    ]
    code, out, _ = run(capsys, *base)
    assert code == 0
    payload = json.loads(out)
    assert payload["pass"] is True
    assert payload["pairs"][0]["max_deviation"] < payload["tolerance"]

    code_bad, out_bad, err = run(capsys, *base, "--corrupt")
    assert code_bad == 1
    assert json.loads(out_bad)["pass"] is False
    assert "FAIL" in err


def test_spectrum_csv(tmp_path, capsys):
    out_file = tmp_path / "spec.csv"
    code, _, _ = run(
        capsys, "spectrum", "--family", "lz2", "--delta", "0.5", "--slope", "1",
        "--t-min", "-4", "--t-max", "4", "--steps", "5", "--out", str(out_file),
        "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 0
    lines = out_file.read_text().strip().splitlines()
    assert lines[0] == "t,e1,e2"
    assert len(lines) == 6
    row = [float(x) for x in lines[1].split(",")]
    gap = math.sqrt(16 + 0.25)
    assert row == pytest.approx([-4.0, -gap, gap])


def test_spectrum_minimum_steps(tmp_path, capsys):
    code, _, err = run(
        capsys, "spectrum", "--family", "lz2", "--delta", "0.5", "--slope", "1",
        "--steps", "1", "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 2
    assert "steps" in err


def test_zero_curvature_cli(tmp_path, capsys):
    code, out, _ = run(
        capsys, "zero-curvature", "--family", "bowtie3",
        "--delta", "0.3", "--slope", "1", "--eps", "1",
        "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 0
    assert json.loads(out)["pass"] is True

    code2, _, err = run(
        capsys, "zero-curvature", "--family", "lz2", "--delta", "1", "--slope", "1",
        "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code2 == 2
    assert "partner" in err


def test_zero_curvature_custom_grid(tmp_path, capsys):
    code, out, _ = run(
        capsys, "zero-curvature", "--family", "su3adj8",
        "--delta", "0.2", "--slope", "0.4", "--eps", "1",
        "--grid", "t=-5,0,5;eps=0.5,2",
        "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 0
    assert json.loads(out)["pass"] is True


def test_sweep_entry_column(tmp_path, capsys):
    out_file = tmp_path / "sweep.csv"
    code, _, _ = run(
        capsys, "sweep", "--family", "spin", "--k", "3",
        "--delta", "0.2:0.8:0.2", "--slope", "1",
        "--method", "algebraic", "--entries", "1,1",
        "--out", str(out_file), "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 0
    lines = out_file.read_text().strip().splitlines()
    assert lines[0] == "delta,S_1_1"
    assert len(lines) == 4
    for line in lines[1:]:
        d, s11 = (float(x) for x in line.split(","))
        u = math.exp(-math.pi * d * d)
        assert s11 == pytest.approx(u * u, rel=1e-12)


def test_sweep_empty_range(tmp_path, capsys):
    out_file = tmp_path / "sweep.csv"
    code, _, _ = run(
        capsys, "sweep", "--family", "lz2", "--delta", "1:1:0.5", "--slope", "1",
        "--method", "algebraic", "--out", str(out_file),
        "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 0
    assert out_file.read_text().strip() == "delta"


def test_sweep_requires_exactly_one_range(tmp_path, capsys):
    code, _, err = run(
        capsys, "sweep", "--family", "lz2",
        "--delta", "0.1:1:0.1", "--slope", "0.5:2:0.5",
        "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 2
    assert "exactly one" in err


def test_ledger_appends_one_record_per_success(tmp_path, capsys):
    ledger = tmp_path / "ledger.jsonl"
    commands = [
        ["model", "show", "--family", "lz2", "--delta", "1", "--slope", "1"],
        ["smatrix", "--family", "lz2", "--delta", "1", "--slope", "1",
         "--method", "algebraic"],
        ["zero-curvature", "--family", "bowtie3", "--delta", "0.2",
         "--slope", "1", "--eps", "1"],
    ]
    for argv in commands:
        assert run(capsys, *argv, "--ledger", str(ledger))[0] == 0
    # a failing invocation must not append
    run(capsys, "smatrix", "--family", "zzz", "--delta", "1", "--slope", "1",
        "--ledger", str(ledger))
    records = [json.loads(line) for line in ledger.read_text().splitlines()]
    assert len(records) == len(commands)
    for record in records:
        assert set(record) == {"timestamp", "argv", "descriptor", "method", "digest", "pass"}


def test_ledger_env_override(tmp_path, capsys, monkeypatch):
    target = tmp_path / "env_ledger.jsonl"
    monkeypatch.setenv("LZSCATTER_LEDGER", str(target))
    monkeypatch.chdir(tmp_path)
    code, _, _ = run(capsys, "smatrix", "--family", "lz2", "--delta", "0.5",
                     "--slope", "1", "--method", "algebraic")
    assert code == 0
    assert len(target.read_text().splitlines()) == 1


def test_bowtien_descriptor_lists(tmp_path, capsys):
    code, out, _ = run(
        capsys, "smatrix", "--family", "bowtieN",
        "--delta", "0.2,0.3", "--slope", "1.0,-2.0", "--eps", "1",
        "--method", "crossings", "--ledger", str(tmp_path / "l.jsonl"),
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["params"]["delta"] == [0.2, 0.3]
    assert payload["params"]["slope"] == [1.0, -2.0]
    rebuilt = model_from_descriptor(payload["params"])
    assert rebuilt.k == 4
