import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from relsim.cli import main
from relsim.dynamics import kernel_matrix
from relsim.relgraph import build_lattice, to_edge_list


@pytest.fixture
def c100(tmp_path):
    path = tmp_path / "c100.edges"
    assert main(["lattice", "--dims", "100", "--periodic", "--out", str(path)]) == 0
    return path


def test_lattice_writes_edge_list(c100):
    text = c100.read_text()
    assert text.startswith("# vertices 100\n")
    assert len(text.splitlines()) == 101


def test_distance(c100, capsys):
    assert main(["distance", "--graph", str(c100), "--pair", "0", "50", "--metric", "resistance"]) == 0
    assert capsys.readouterr().out.strip() == "25.0"
    assert main(["distance", "--graph", str(c100), "--pair", "0", "50"]) == 0
    assert capsys.readouterr().out.strip() == "50"


def test_kernel_column_and_oracle(tmp_path, capsys):
    graph = tmp_path / "p4.edges"
    graph.write_text(to_edge_list(build_lattice([4])))
    out = tmp_path / "k.csv"
    code = main(["kernel", "--graph", str(graph), "--mu", "0.3", "--t", "3",
                 "--source", "1", "--oracle", "path-sum", "--out", str(out)])
    assert code == 0
    dev = float(capsys.readouterr().out.split()[1])
    assert dev <= 1e-12
    table = list(csv.DictReader(io.StringIO(out.read_text())))
    column = np.array([complex(float(r["re"]), float(r["im"])) for r in table])
    np.testing.assert_allclose(column, kernel_matrix(build_lattice([4]), 0.3, 3)[:, 1], atol=1e-15)


def test_kernel_oracle_too_large(c100):
    assert main(["kernel", "--graph", str(c100), "--t", "2", "--oracle", "path-sum"]) == 3


def test_evolve_is_unitary(c100, tmp_path):
    out = tmp_path / "psi.csv"
    assert main(["evolve", "--graph", str(c100), "--t", "40", "--scheme", "cayley", "--out", str(out)]) == 0
    table = list(csv.DictReader(io.StringIO(out.read_text())))
    norm2 = sum(float(r["re"]) ** 2 + float(r["im"]) ** 2 for r in table)
    assert norm2 == pytest.approx(1.0, abs=1e-12)
    # feed the state back in as an initial condition
    out2 = tmp_path / "psi2.csv"
    assert main(["evolve", "--graph", str(c100), "--state", str(out), "--t", "1", "--out", str(out2)]) == 0


def test_scenarios_write_manifest(tmp_path):
    for cmd in (["epr", "--seed", "4"], ["dispersion", "--n", "32"], ["shortcut", "--w", "0", "0.001"]):
        target = tmp_path / cmd[0]
        assert main(cmd + ["--out", str(target)]) == 0
        if cmd[0] != "shortcut":
            assert (target / "manifest.txt").read_text().startswith(f"scenario={cmd[0]} ")


def test_config_file_and_flag_precedence(tmp_path, caplog):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 16\nm = 1\nmu = 0.05\n")
    out = tmp_path / "disp"
    assert main(["dispersion", "--config", str(cfg), "--mu", "0.1", "--out", str(out)]) == 0
    assert "using the flag" in caplog.text
    report = dict(csv.reader(io.StringIO((out / "dispersion_report.csv").read_text())))
    assert float(report["discrete_theory"]) == pytest.approx(0.1 * (2 - 2 * np.cos(2 * np.pi / 16)))


def test_doubleslit_config(tmp_path):
    cfg = tmp_path / "ds.cfg"
    cfg.write_text("nx = 31\nny = 21\nbarrier_x = 10\nslit_y = 7 13\nsource_x = 3\nscreen_x = 27\n")
    out = tmp_path / "ds"
    assert main(["doubleslit", "--config", str(cfg), "--t", "60", "--out", str(out)]) == 0
    assert len(list(csv.DictReader(io.StringIO((out / "double_slit.csv").read_text())))) == 21
    bad = tmp_path / "bad.cfg"
    bad.write_text("slit_y = 7 7\n")
    assert main(["doubleslit", "--config", str(bad)]) == 2


@pytest.mark.parametrize(
    "argv, code",
    [
        (["distance", "--bogus"], 64),
        (["teleport"], 64),
        ([], 64),
        (["distance", "--graph", "/nonexistent/g.edges", "--pair", "0", "1"], 2),
        (["lattice", "--dims", "0"], 2),
        (["lattice", "--dims", "2000", "2000"], 3),
        (["epr", "--config", "/nonexistent.cfg"], 2),
    ],
)
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code


def test_bad_edge_list_exit_code(tmp_path):
    graph = tmp_path / "bad.edges"
    graph.write_text("0 1\n1 1\n")
    assert main(["distance", "--graph", str(graph), "--pair", "0", "1"]) == 2


def test_check_passes(capsys):
    assert main(["check"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_version(capsys):
    assert main(["--version"]) == 0
    assert capsys.readouterr().out.startswith("relsim 0.1.0")


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "relsim", "shortcut", "--n", "20", "--w", "0.001"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.startswith("w,pair,metric,before,after,rel_change\n")
