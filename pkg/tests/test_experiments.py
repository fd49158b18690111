import csv
import io
import math
from pathlib import Path

import numpy as np
import pytest

from relsim.errors import ConfigError, InvalidGeometry, ValidationError
from relsim.experiments import (
    DoubleSlitConfig,
    outcome_frequency,
    parse_config,
    run_dispersion,
    run_double_slit,
    run_epr_scenario,
    run_shortcut,
    slit_graph,
    write_outputs,
)

GOLDEN = Path(__file__).parent / "golden"


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# --- config files ---------------------------------------------------------------


def test_parse_config():
    cfg = parse_config("# run settings\nmu = 0.3\n\nticks=10  # short\nmu = 0.25\n")
    assert cfg == {"mu": "0.25", "ticks": "10"}
    with pytest.raises(ConfigError):
        parse_config("mu 0.3\n")
    with pytest.raises(ConfigError):
        parse_config("= 3\n")


def test_double_slit_config_from_mapping():
    cfg = DoubleSlitConfig.from_mapping({"slit_y": "10, 30", "mu": "0.1", "ticks": "5"})
    assert cfg.slit_y == (10, 30) and cfg.mu == 0.1 and cfg.ticks == 5
    with pytest.raises(ConfigError):
        DoubleSlitConfig.from_mapping({"slits": "1 2"})
    with pytest.raises(ConfigError):
        DoubleSlitConfig.from_mapping({"ticks": "many"})


@pytest.mark.parametrize(
    "changes",
    [
        {"slit_y": (14, 14)},
        {"slit_y": (14,)},
        {"slit_y": (14, 99)},
        {"barrier_x": 60},
        {"ticks": 0},
    ],
)
def test_double_slit_geometry_errors(changes):
    cfg = DoubleSlitConfig(**changes)
    with pytest.raises(InvalidGeometry):
        run_double_slit(cfg)


def test_barrier_blocks_everything_but_the_slits():
    cfg = DoubleSlitConfig(nx=7, ny=5, barrier_x=3, slit_y=(1, 3), source_x=1, screen_x=5)
    g = slit_graph(cfg, (1, 3))
    barrier = [3 * 5 + y for y in range(5)]
    # a slit keeps only its two horizontal relations; its vertical neighbours are wall
    assert [int(g.degrees[v]) for v in barrier] == [0, 2, 0, 2, 0]


# --- dispersion -----------------------------------------------------------------


def test_dispersion_report():
    res = run_dispersion()
    rep = res.report
    assert rep["k"] == pytest.approx(2 * math.pi * 2 / 64)
    assert rep["discrete_deviation"] < 1e-12
    assert rep["continuum_rel_deviation"] < 0.02
    assert abs(rep["norm_growth"]) < 1e-12
    assert all(type(v) is float for v in rep.values())
    assert len(rows(res.artifacts["dispersion.csv"])) == 51


def test_dispersion_cayley_follows_arctan_law():
    rep = run_dispersion(n=32, m=3, mu=0.4, ticks=30, scheme="cayley").report
    lam = 2 - 2 * math.cos(2 * math.pi * 3 / 32)
    assert rep["phase_per_tick"] == pytest.approx(2 * math.atan(0.2 * lam), abs=1e-12)


def test_euler_norm_grows_on_high_mode():
    with pytest.warns(UserWarning):
        rep = run_dispersion(n=8, m=4, mu=0.4, ticks=5, scheme="euler").report
    # |1 - 4 i mu| per tick
    assert rep["norm_growth"] == pytest.approx((1 + 1.6**2) ** 2.5 - 1, rel=1e-12)


@pytest.mark.parametrize("kwargs", [{"n": 4}, {"m": 64}, {"ticks": 0}, {"scheme": "rk4"}])
def test_dispersion_rejects(kwargs):
    with pytest.raises(ValidationError):
        run_dispersion(**kwargs)


# --- double slit ----------------------------------------------------------------


@pytest.mark.slow
def test_double_slit_matches_golden():
    text = run_double_slit().artifacts["double_slit.csv"]
    got, ref = rows(text), rows((GOLDEN / "double_slit.csv").read_text())
    assert [r["y"] for r in got] == [r["y"] for r in ref]
    for a, b in zip(got, ref):
        for key in ("both", "slit1", "slit2", "residual"):
            assert float(a[key]) == pytest.approx(float(b[key]), rel=1e-9, abs=1e-18)


def test_small_double_slit_shows_interference():
    cfg = DoubleSlitConfig(nx=31, ny=21, barrier_x=10, slit_y=(7, 13), source_x=3, ticks=60, screen_x=27)
    rep = run_double_slit(cfg).report
    assert rep["symmetry_error"] < 1e-12
    assert rep["residual_ratio"] > 0.05


# --- EPR ------------------------------------------------------------------------


def test_epr_scenario_artifacts():
    res = run_epr_scenario(seed=3)
    measures = rows(res.artifacts["epr_measures.csv"])
    assert len(measures) == 9
    first = measures[0]
    assert (first["tick"], first["a"], first["b"]) == ("0", "e1", "e2")
    assert float(first["mutual_information"]) == pytest.approx(2 * math.log(2), abs=1e-12)
    events = rows(res.artifacts["epr_events.csv"])
    assert [(e["tick"], e["kind"], e["cause"]) for e in events][:2] == [
        ("1", "Created", "Interaction"),
        ("2", "Created", "Propagation"),
    ]
    assert res.report["locality"] == "pass"
    assert res.report["outcome"] in "+-"


def test_outcome_frequency_is_seeded():
    assert outcome_frequency(1000, seed=9) == outcome_frequency(1000, seed=9)
    with pytest.raises(ValidationError):
        outcome_frequency(0)


# --- shortcut -------------------------------------------------------------------


def test_shortcut_scenario():
    res = run_shortcut()
    changes = res.report["rel_change"]
    assert changes[0] == 0.0
    assert changes == sorted(changes)
    assert res.report["hops_after"] == [50, 1, 1, 1, 1, 1]
    table = rows(res.artifacts["shortcut.csv"])
    resistance = [r for r in table if r["metric"] == "resistance" and r["w"] == "0.001"]
    assert float(resistance[0]["rel_change"]) == pytest.approx(0.025 / 1.025, abs=1e-12)
    with pytest.raises(ValidationError):
        run_shortcut(n=7)


# --- outputs --------------------------------------------------------------------


def test_write_outputs_and_manifest(tmp_path):
    res = run_shortcut(n=10, w_list=[0.0, 1.0])
    paths = write_outputs(res, tmp_path / "out")
    assert sorted(p.name for p in paths) == ["manifest.txt", "shortcut.csv"]
    line = (tmp_path / "out" / "manifest.txt").read_text()
    assert line.startswith("scenario=shortcut config_sha256=")
    assert line.endswith("seed=none version=relsim-0.1.0\n")
    other = run_shortcut(n=10, w_list=[0.0, 2.0])
    assert other.config_hash() != res.config_hash()
    assert run_shortcut(n=10, w_list=[0.0, 1.0]).config_hash() == res.config_hash()
    assert np.isclose(float(rows(res.artifacts["shortcut.csv"])[-1]["after"]), 2.5 / 3.5)
