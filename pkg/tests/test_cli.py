import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from toeplitz_omt import cli
from toeplitz_omt.errors import ConvergenceError, InfeasibleError, SchemaError, SolverError
from toeplitz_omt.io import io_read, io_write
from toeplitz_omt.spectral import ToeplitzCov

GOLDEN = Path(__file__).parent / "golden" / "cli_help.txt"


def render_help():
    """Main help followed by the help of every subcommand, at a fixed width."""
    old = os.environ.get("COLUMNS")
    os.environ["COLUMNS"] = "100"
    try:
        parser = cli.build_parser()
        sub = next(a for a in parser._actions if a.dest == "command")
        parts = [parser.format_help()]
        for name, sp in sub.choices.items():
            parts.append(f"==== {name} ====\n" + sp.format_help())
        return "\n".join(parts)
    finally:
        if old is None:
            del os.environ["COLUMNS"]
        else:
            os.environ["COLUMNS"] = old


@pytest.fixture(autouse=True)
def isolated_config(tmp_path_factory, monkeypatch):
    # never pick up a config file from the machine running the tests
    monkeypatch.delenv(cli.CONFIG_ENV, raising=False)
    monkeypatch.setenv("HOME", str(tmp_path_factory.mktemp("home")))


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    R = ToeplitzCov([1.0, 0.4 + 0.2j, 0.1])
    S = ToeplitzCov([1.0, -0.3j, 0.2])
    paths = {}
    for name, X in (("R", R), ("S", S), ("small", ToeplitzCov([1.0, 0.2]))):
        paths[name] = str(tmp_path / f"{name}.json")
        io_write(paths[name], X)
    paths["one"] = str(tmp_path / "one.json")
    io_write(paths["one"], ToeplitzCov([1.0, 1.0]))
    paths["turn"] = str(tmp_path / "turn.json")
    io_write(paths["turn"], ToeplitzCov([1.0, np.exp(5j * np.pi / 6)]))
    return paths


class TestHelp:
    def test_golden(self):
        assert render_help() == GOLDEN.read_text()

    def test_every_flag_shows_default(self):
        parser = cli.build_parser()
        sub = next(a for a in parser._actions if a.dest == "command")
        for p in [parser, *sub.choices.values()]:
            fmt = p._get_formatter()
            for action in p._actions:
                if not action.option_strings or action.dest == "help" or action.required:
                    continue
                assert "(default:" in fmt._get_help_string(action), (p.prog, action.dest)

    def test_help_exits_zero(self, capsys):
        code, out, _ = run(["--help"], capsys)
        assert code == 0 and "distance" in out


class TestDistance:
    def test_identical_files(self, files, capsys):
        code, out, _ = run(["distance", files["R"], files["R"], "-N", "64"], capsys)
        assert code == 0
        assert json.loads(out)["value"] == pytest.approx(0.0, abs=1e-7)

    def test_rank_one_closed_form(self, files, capsys):
        code, out, _ = run(["distance", files["one"], files["turn"], "-N", "24", "--feas-tol", "0"], capsys)
        assert code == 0
        assert json.loads(out)["value"] == pytest.approx(2 * np.pi * (2 + np.sqrt(3)), rel=1e-7)

    def test_kappa_selects_unbalanced(self, files, capsys, tmp_path):
        out_file = tmp_path / "d.json"
        code, out, _ = run(["distance", files["R"], files["S"], "-N", "32", "--kappa", "0.5",
                            "-o", str(out_file)], capsys)
        assert code == 0
        res = io_read(out_file, "distance")
        assert res.kappa == 0.5
        assert res.value == pytest.approx(json.loads(out)["value"])

    def test_text_format(self, files, capsys):
        code, out, _ = run(["distance", files["R"], files["R"], "-N", "16", "--format", "text"], capsys)
        assert code == 0 and out.startswith("command=distance value=") and out.count("\n") == 1

    def test_mismatched_dimension_is_usage_error(self, files, capsys):
        code, _, err = run(["distance", files["R"], files["small"], "-N", "16"], capsys)
        assert code == 2
        assert json.loads(err)["exit_code"] == 2

    def test_infeasible_exit_code(self, files, capsys, tmp_path):
        off = tmp_path / "off.json"
        io_write(off, ToeplitzCov([1.0, np.exp(-0.3j)]))
        code, _, err = run(["distance", str(off), str(off), "-N", "4", "--feas-tol", "0"], capsys)
        assert code == 4
        assert json.loads(err)["error"] == "InfeasibleError"

    @pytest.mark.parametrize("argv", [
        ["distance", "missing.json", "missing.json"],
        ["distance", "a", "b", "--kappa", "-1"],
        ["distance", "a", "b", "--cost", "euclid"],
        ["frobnicate"],
        [],
    ])
    def test_usage_errors(self, argv, capsys):
        code, out, err = run(argv, capsys)
        assert code == 2 and out == ""
        assert set(json.loads(err)) >= {"error", "message", "exit_code"}

    def test_schema_error_is_usage(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"n": 2, "lags": [[1, 0]]}')
        code, _, err = run(["distance", str(bad), str(bad)], capsys)
        assert code == 2 and "lags" in json.loads(err)["message"]


def test_exit_code_mapping():
    assert cli.exit_code(InfeasibleError("x")) == 4
    assert cli.exit_code(SolverError("x")) == 3
    assert cli.exit_code(ConvergenceError("x")) == 3
    assert cli.exit_code(np.linalg.LinAlgError("x")) == 3
    assert cli.exit_code(SchemaError("x")) == 2


class TestConfig:
    def test_env_file_sets_defaults(self, files, capsys, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"grid_size": 24, "feas_tol": 0.0, "format": "text"}))
        monkeypatch.setenv(cli.CONFIG_ENV, str(cfg))
        code, out, _ = run(["distance", files["one"], files["turn"]], capsys)
        assert code == 0
        value = float(out.split("value=")[1].split()[0])
        assert value == pytest.approx(2 * np.pi * (2 + np.sqrt(3)), rel=1e-7)

    def test_flag_beats_config(self, files, capsys, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"format": "text"}))
        monkeypatch.setenv(cli.CONFIG_ENV, str(cfg))
        code, out, _ = run(["distance", files["R"], files["R"], "-N", "16", "--format", "json"], capsys)
        assert code == 0 and json.loads(out)["command"] == "distance"

    @pytest.mark.parametrize("content", ['{"grid_size": [1]}', '{"colour": 1}', "not json"])
    def test_bad_config(self, content, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(content)
        with pytest.raises(cli.UsageError):
            cli.load_config(cfg)

    def test_missing_explicit_config(self, tmp_path):
        with pytest.raises(cli.UsageError):
            cli.load_config(tmp_path / "nope.json")


class TestCommands:
    def test_interpolate_writes_csv(self, files, capsys, tmp_path):
        csv_path = tmp_path / "spec.csv"
        code, out, _ = run(["interpolate", files["R"], files["S"], "-N", "32", "--n-tau", "5",
                            "--n-theta", "8", "--spectrum-csv", str(csv_path)], capsys)
        assert code == 0
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "tau,theta,value" and len(lines) == 1 + 5 * 8

    def test_sos_below_distance(self, files, capsys):
        _, out_sos, _ = run(["sos", files["R"], files["S"], "-m", "4"], capsys)
        _, out_t, _ = run(["distance", files["R"], files["S"], "-N", "128", "--feas-tol", "0"], capsys)
        assert json.loads(out_sos)["value"] <= json.loads(out_t)["value"] + 1e-6

    def test_barycenter_and_kmeans(self, files, capsys):
        code, out, _ = run(["barycenter", files["R"], files["S"], "-N", "16"], capsys)
        assert code == 0 and "objective" in json.loads(out)
        code, out, _ = run(["kmeans", files["R"], files["S"], "-K", "2", "-N", "16", "--restarts", "1"],
                           capsys)
        assert code == 0 and sorted(json.loads(out)["assignments"]) == [0, 1]
        code, out, _ = run(["kmeans", files["R"], files["S"], "-K", "1", "--metric", "log_euclidean"], capsys)
        assert code == 0

    def test_track(self, files, capsys):
        code, out, _ = run(["track", files["R"], files["S"], files["R"], "-N", "16", "--n-tau", "3"], capsys)
        assert code == 0

    def test_demo_trajectory(self, capsys, tmp_path):
        code, out, _ = run(["demo", "trajectory", "-o", str(tmp_path)], capsys)
        assert code == 0 and json.loads(out)["passed"]
        assert (tmp_path / "trajectory_path.csv").exists()
        assert json.loads((tmp_path / "trajectory_summary.json").read_text())["passed"]

    def test_idempotent(self, files, capsys, tmp_path):
        target = tmp_path / "d.json"
        argv = ["distance", files["R"], files["S"], "-N", "32", "-o", str(target)]

        def result():
            run(argv, capsys)
            data = json.loads(target.read_text())
            del data["report"]["seconds"]  # wall-clock time is the only varying field
            return data

        assert result() == result()
        # nothing but the declared output appears
        assert {p.name for p in tmp_path.iterdir()} == {Path(f).name for f in files.values()} | {"d.json"}


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "toeplitz_omt", "distance", files["R"], files["R"],
                           "-N", "16", "--format", "text"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("command=distance")


if __name__ == "__main__":
    GOLDEN.write_text(render_help())
