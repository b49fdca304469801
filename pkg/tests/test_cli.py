# tests/test_cli.py

import pandas as pd
import pytest

import app.cli as cli
from app.boot.load_settings import AppConfigLoader
from app.errors import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, DegenerateGeometryError


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    """Fresh settings and a private working directory (log file included)."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("OVERLAPMESH_SETTINGS", raising=False)
    monkeypatch.delenv("OVERLAPMESH_OUT", raising=False)
    AppConfigLoader.reset()
    yield
    AppConfigLoader.reset()


def test_intersect_command(tmp_path, capsys):
    code = cli.run(["intersect", "--n", "4", "--out", str(tmp_path / "res")])
    assert code == EXIT_OK
    assert "Overlap report" in capsys.readouterr().out
    df = pd.read_csv(tmp_path / "res" / "intersect.csv")
    assert df.loc[0, "background_cells"] == 4**3 * 6
    assert (tmp_path / "logs" / "overlapmesh.log").exists()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("OVERLAPMESH_OUT", str(tmp_path / "env_out"))
    assert cli.run(["intersect", "--n", "4"]) == EXIT_OK
    assert (tmp_path / "env_out" / "intersect.csv").exists()


def test_settings_file_from_environment(tmp_path, monkeypatch):
    settings = tmp_path / "custom.yaml"
    settings.write_text("run:\n  n_list: [4]\n  out_dir: custom_out\n", encoding="utf-8")
    monkeypatch.setenv("OVERLAPMESH_SETTINGS", str(settings))
    assert cli.run(["intersect"]) == EXIT_OK
    assert (tmp_path / "custom_out" / "intersect.csv").exists()


def test_resolution_below_minimum(tmp_path, capsys):
    assert cli.run(["poisson", "--n", "3", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "Configuration error" in capsys.readouterr().out


def test_unreadable_mesh(tmp_path):
    bad = tmp_path / "bad.tetmesh"
    bad.write_text("tetmesh 4 1\n0 0 0\n1 0 0\n", encoding="utf-8")
    code = cli.run(["intersect", "--mesh0", str(bad), "--mesh2", str(bad), "--out", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_intersect_needs_both_meshes(tmp_path):
    assert cli.run(["intersect", "--mesh0", "a.tetmesh", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise DegenerateGeometryError("ray test stayed degenerate", entities=[3])

    monkeypatch.setattr(cli, "intersect_report", broken)
    assert cli.run(["intersect", "--n", "4", "--out", str(tmp_path)]) == EXIT_NUMERICAL


def test_parser_rejects_bad_flags():
    with pytest.raises(SystemExit):
        cli.run(["bench", "--phases", "collision,teleport"])
    with pytest.raises(SystemExit):
        cli.run(["poisson", "--n", "eight"])
    args = cli.build_parser().parse_args(["bench", "--n", "4,6", "--reps", "2", "--phases", "solve"])
    assert args.n == [4, 6] and args.reps == 2 and args.phases == ["solve"]
