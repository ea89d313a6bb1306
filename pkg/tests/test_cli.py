import csv
import json

import numpy as np
import pytest

from harmonica import fixtures
from harmonica.cli import main
from harmonica.decomposition import extract_potential, is_harmonic, random_game
from harmonica.experiments import worker_count
from harmonica.game import game_from_dict, is_non_strategic, load_game, loads_game, save_game


@pytest.fixture
def game_file(tmp_path):
    def write(game, name="game.json"):
        path = tmp_path / name
        save_game(game, path)
        return str(path)

    return write


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestDecompose:
    def test_matching_pennies(self, game_file, capsys):
        code, out, _ = run(["decompose", game_file(fixtures.matching_pennies())], capsys)
        assert code == 0
        d = json.loads(out)
        assert d["phi"] == [0.0] * 4
        assert d["harmonic_game"]["payoffs"] == [[1, -1, -1, 1], [-1, 1, 1, -1]]

    def test_potential_table(self, game_file, tmp_path, capsys):
        out = tmp_path / "dec.json"
        code, _, _ = run(["decompose", game_file(fixtures.mixture_potential_222()), "--out", str(out)], capsys)
        assert code == 0
        d = json.loads(out.read_text())
        assert is_non_strategic(game_from_dict(d["harmonic_game"]), 1e-8)

    def test_truncated_file(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"players": 2, "actions": [2, 2],\n "payoffs": [[1, 2')
        code, _, err = run(["decompose", str(path)], capsys)
        assert code == 2
        assert "line 2 column" in err

    def test_shape_mismatch(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"players": 2, "actions": [2, 2], "payoffs": [[1, 2, 3], [1, 2, 3, 4]]}')
        assert run(["decompose", str(path)], capsys)[0] == 2

    def test_missing_file(self, tmp_path, capsys):
        assert run(["decompose", str(tmp_path / "none.json")], capsys)[0] == 2

    def test_solver_failure(self, game_file, capsys):
        path = game_file(random_game((5, 5, 5), seed=0))
        code, _, err = run(["decompose", path, "--method", "cg", "--max-iter", "1", "--solver-tol", "1e-14"], capsys)
        assert code == 1 and "failure" in err


class TestGenerate:
    def test_deterministic_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for p in (a, b):
            assert run(["generate", "--shape", "2,2,2", "--class", "harmonic", "--seed", "7", "--out", str(p)], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_round_trip(self, tmp_path, capsys):
        p, q = tmp_path / "a.json", tmp_path / "b.json"
        run(["generate", "--shape", "3,2", "--seed", "1", "--out", str(p)], capsys)
        save_game(load_game(p), q)
        assert p.read_bytes() == q.read_bytes()

    def test_classes(self, capsys):
        code, out, _ = run(["generate", "--shape", "2,2", "--class", "harmonic", "--seed", "3"], capsys)
        assert code == 0 and is_harmonic(loads_game(out), 1e-9)
        code, out, _ = run(["generate", "--shape", "2,2,2", "--class", "potential", "--seed", "3"], capsys)
        assert code == 0 and extract_potential(loads_game(out))[0] is not None

    def test_bad_shape(self, capsys):
        assert run(["generate", "--shape", "2,1"], capsys)[0] == 2
        assert run(["generate", "--shape", "a,b"], capsys)[0] == 2


class TestSimulate:
    def test_matching_pennies(self, game_file, tmp_path, capsys):
        csv_path, rep_path = tmp_path / "traj.csv", tmp_path / "rep.json"
        code, _, _ = run(
            ["simulate", game_file(fixtures.matching_pennies()), "--t-end", "100",
             "--csv", str(csv_path), "--report", str(rep_path)],
            capsys,
        )
        assert code == 0
        with open(csv_path) as fh:
            rows = list(csv.DictReader(fh))
        energy = np.array([float(r["energy"]) for r in rows])
        assert len(rows) == 1001
        assert np.abs(energy - energy[0]).max() < 1e-7
        rep = json.loads(rep_path.read_text())
        assert rep["energy_drift"] < 1e-7

    def test_prisoners_dilemma(self, game_file, capsys):
        code, out, _ = run(["simulate", game_file(fixtures.prisoners_dilemma()), "--t-end", "50"], capsys)
        assert code == 0
        assert json.loads(out)["final_vertex_distance"] < 1e-3

    def test_recurrence(self, game_file, capsys):
        path = game_file(fixtures.mixture_harmonic_222())
        code, out, _ = run(["simulate", path, "--t-end", "200", "--recurrence", "--eps", "1e-2"], capsys)
        assert code == 0
        assert json.loads(out)["recurrence"]["verdict"] == "recurrent"

    def test_deterministic(self, game_file, capsys):
        path = game_file(fixtures.harmonic_2x3())
        outs = [run(["simulate", path, "--t-end", "5", "--seed", "4"], capsys)[1] for _ in range(2)]
        assert outs[0] == outs[1]

    def test_explicit_x0(self, game_file, capsys):
        path = game_file(fixtures.matching_pennies())
        code, out, _ = run(["simulate", path, "--t-end", "1", "--x0", "0.3,0.7;0.6,0.4"], capsys)
        assert code == 0 and json.loads(out)["x0"] == [0.3, 0.7, 0.6, 0.4]
        assert run(["simulate", path, "--x0", "0.3,0.7"], capsys)[0] == 2
        assert run(["simulate", path, "--x0", "1,0;0.5,0.5"], capsys)[0] == 2


def test_mixture(tmp_path, capsys):
    code, out, _ = run(["mixture", "--lambdas", "0,1", "--t-end", "100", "--out-dir", str(tmp_path), "--workers", "1"], capsys)
    assert code == 0
    rows = json.loads((tmp_path / "mixture.json").read_text())["rows"]
    assert rows[0]["recurrent"] and rows[1]["converged_to_pure"]
    assert "lambda" in out.splitlines()[0]


def test_mixture_bad_lambda(tmp_path, capsys):
    assert run(["mixture", "--lambdas", "1.5", "--out-dir", str(tmp_path)], capsys)[0] == 2


def test_div(game_file, capsys):
    code, out, _ = run(["div", game_file(fixtures.prisoners_dilemma()), "--points", "5", "--seed", "1"], capsys)
    assert code == 0
    d = json.loads(out)
    assert len(d["samples"]) == 5 and d["max_abs_difference"] < 1e-6


def test_volume(capsys):
    code, out, _ = run(["volume", "--max-m", "3"], capsys)
    assert code == 0
    rows = json.loads(out)["volumes"]
    assert [r["closed_form"] for r in rows] == pytest.approx([np.pi, 2 * np.pi, np.pi**2])
    assert rows[0]["abs_error"] < 1e-6 and rows[1]["abs_error"] < 1e-3


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["simulate", "--help"])
    out = capsys.readouterr().out
    for flag in ("--tol", "--seed", "--rtol", "--atol"):
        assert flag in out
    assert "1e-09" in out


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("HARMONICA_THREADS", "2")
    assert worker_count(8) == 2
    monkeypatch.delenv("HARMONICA_THREADS")
    assert worker_count(3) == 3
