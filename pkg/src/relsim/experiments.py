"""Scenario harnesses producing CSV artifacts.

Each ``run_*`` function returns a :class:`ScenarioResult` holding the CSV
texts and a small report dictionary.  :func:`write_outputs` stores the
artifacts in a directory together with a one-line manifest.  All outputs are
byte-reproducible for a given configuration and seed.

Configuration files use ``key = value`` lines with ``#`` comments.  Keys per
scenario are the keyword arguments of the ``run_*`` function (for the double
slit, the fields of :class:`DoubleSlitConfig`).
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from ._io import to_csv
from .dynamics import Scheme, Stepper, WaveState, laplacian
from .entangle import (
    RelationEventLog,
    apply_measurement_interaction,
    collapse,
    locality_check,
    make_epr_with_apparatus,
    pointer_probabilities,
    pair_relation_measures,
    propagate_relations,
    related_pairs,
    DEFAULT_EPS,
)
from .errors import ConfigError, InvalidGeometry, LocalityViolation, ValidationError
from .geometry import shortcut_impact
from .relgraph import build_lattice, graph_from_edges

EPR_NAMES = ("e1", "e2", "app")


@dataclass
class ScenarioResult:
    name: str
    artifacts: dict[str, str]
    report: dict
    config: dict = field(default_factory=dict)
    seed: int | None = None
    extras: dict = field(default_factory=dict, repr=False)

    def config_hash(self) -> str:
        text = "".join(f"{k}={self.config[k]}\n" for k in sorted(self.config))
        return hashlib.sha256(text.encode()).hexdigest()

    def manifest_line(self) -> str:
        seed = "none" if self.seed is None else str(self.seed)
        return (
            f"scenario={self.name} config_sha256={self.config_hash()} "
            f"seed={seed} version=relsim-{__version__}\n"
        )


def write_outputs(result: ScenarioResult, out_dir) -> list[Path]:
    """Write every artifact plus ``manifest.txt`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in sorted(result.artifacts.items()):
        path = out / name
        path.write_text(text, newline="")
        written.append(path)
    manifest = out / "manifest.txt"
    manifest.write_text(result.manifest_line(), newline="")
    written.append(manifest)
    return written


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; later keys override earlier ones."""
    config = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        config[key] = value
    return config


def load_config(path) -> dict[str, str]:
    try:
        return parse_config(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _coerce(value, kind, key):
    if not isinstance(value, str):
        return value
    try:
        if kind is bool:
            low = value.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
        if kind is tuple:
            return tuple(int(v) for v in value.replace(",", " ").split())
        if kind is float:
            return float(value)
        return kind(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}")


# --- dispersion ---------------------------------------------------------------


def ring(n: int):
    return build_lattice([n], periodic=True)


def plane_wave(n: int, m: int) -> np.ndarray:
    x = np.arange(n)
    return np.exp(2j * np.pi * m * x / n) / np.sqrt(n)


def run_dispersion(
    n: int = 64, m: int = 2, mu: float = 0.1, ticks: int = 50, scheme="exact"
) -> ScenarioResult:
    """Phase advance of a plane wave on the ring ``C_n``.

    A mode with wave number ``k = 2 pi m / n`` is a Laplacian eigenvector with
    eigenvalue ``-(2 - 2 cos k)``; under exact evolution its overlap with the
    initial state turns by ``mu (2 - 2 cos k)`` per tick, which tends to the
    free-particle value ``mu k^2`` for small ``k``.
    """
    scheme = Scheme.parse(scheme)
    if n < 8:
        raise ValidationError(f"ring size must be >= 8, got {n}")
    if not 0 <= m < n:
        raise ValidationError(f"mode must satisfy 0 <= m < n, got {m}")
    if ticks < 1:
        raise ValidationError("at least one tick is required")
    k = 2 * np.pi * m / n
    # report the equivalent mode in (-pi, pi]
    k_eff = k if k <= np.pi else k - 2 * np.pi
    mode = plane_wave(n, m)
    stepper = Stepper(scheme, mu, laplacian(ring(n)))

    prev = complex(np.vdot(mode, mode))
    cumulative = 0.0
    rows = [(0, 0.0, 0.0, 1.0)]
    phases = [0.0]
    for state in stepper.iterate(WaveState(mode), ticks):
        c = complex(np.vdot(mode, state.amplitudes))
        step = float(np.angle(c / prev))
        cumulative += step
        prev = c
        rows.append((state.tick, cumulative, step, state.norm))
        phases.append(cumulative)

    t = np.arange(ticks + 1)
    slope = float(np.polyfit(t, phases, 1)[0])
    per_tick = abs(slope)
    lam = 2.0 - 2.0 * math.cos(k)
    discrete = float(mu * lam)
    continuum = float(mu * k_eff**2)
    report = {
        "k": float(k_eff),
        "phase_per_tick": per_tick,
        "phase_sign": float(np.sign(slope)),
        "discrete_theory": discrete,
        "continuum_theory": continuum,
        "discrete_deviation": abs(per_tick - discrete),
        "continuum_rel_deviation": abs(per_tick - continuum) / continuum if continuum else 0.0,
        "norm_growth": rows[-1][3] - 1.0,
    }
    config = {"n": n, "m": m, "mu": repr(float(mu)), "ticks": ticks, "scheme": scheme.value}
    artifacts = {
        "dispersion.csv": to_csv(["tick", "phase", "phase_step", "norm"], rows),
        "dispersion_report.csv": _report_csv(report),
    }
    return ScenarioResult("dispersion", artifacts, report, config)


def _report_csv(report: Mapping) -> str:
    return to_csv(["key", "value"], ((k, report[k]) for k in report))


# --- double slit --------------------------------------------------------------


@dataclass(frozen=True)
class DoubleSlitConfig:
    """Geometry of the double-slit run on an open ``nx`` by ``ny`` lattice.

    The barrier is the column ``x = barrier_x``; its points have no
    relations except at the slit rows.  The source is a Gaussian of width
    ``width`` centred at ``(source_x, source_y)`` carrying wave number
    ``momentum`` along ``+x``.  ``source_y`` defaults to the middle row.
    """

    nx: int = 61
    ny: int = 41
    barrier_x: int = 20
    slit_y: tuple = (14, 26)
    source_x: int = 5
    source_y: int | None = None
    width: float = 3.0
    momentum: float = math.pi / 2
    mu: float = 0.2
    ticks: int = 120
    screen_x: int = 55

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "DoubleSlitConfig":
        kinds = {
            "nx": int, "ny": int, "barrier_x": int, "slit_y": tuple, "source_x": int,
            "source_y": int, "width": float, "momentum": float, "mu": float,
            "ticks": int, "screen_x": int,
        }
        unknown = set(mapping) - set(kinds)
        if unknown:
            raise ConfigError(f"unknown double-slit keys: {sorted(unknown)}")
        values = {key: _coerce(val, kinds[key], key) for key, val in mapping.items()}
        return cls(**values)

    @property
    def centre_y(self) -> int:
        return (self.ny - 1) // 2 if self.source_y is None else self.source_y

    def validate(self):
        if len(self.slit_y) != 2:
            raise InvalidGeometry(f"exactly two slits are required, got {self.slit_y}")
        s1, s2 = self.slit_y
        if s1 == s2:
            raise InvalidGeometry("slits coincide")
        for y in (s1, s2, self.centre_y):
            if not 0 <= y < self.ny:
                raise InvalidGeometry(f"row {y} outside 0..{self.ny - 1}")
        if not 0 <= self.source_x < self.barrier_x < self.screen_x < self.nx:
            raise InvalidGeometry("need 0 <= source_x < barrier_x < screen_x < nx")
        if self.width <= 0 or self.mu <= 0 or self.ticks < 1:
            raise InvalidGeometry("width, mu and ticks must be positive")

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["slit_y"] = " ".join(str(v) for v in self.slit_y)
        d["source_y"] = self.centre_y
        return {k: repr(v) if isinstance(v, float) else v for k, v in d.items()}


def slit_graph(cfg: DoubleSlitConfig, open_slits: Sequence[int]):
    lattice = build_lattice([cfg.nx, cfg.ny])
    blocked = {cfg.barrier_x * cfg.ny + y for y in range(cfg.ny) if y not in open_slits}
    edges = [(u, v) for u, v in lattice.edges() if u not in blocked and v not in blocked]
    return graph_from_edges(lattice.n_spatial, edges, allow_disconnected=True)


def _source(cfg: DoubleSlitConfig) -> np.ndarray:
    x, y = np.meshgrid(np.arange(cfg.nx), np.arange(cfg.ny), indexing="ij")
    r2 = (x - cfg.source_x) ** 2 + (y - cfg.centre_y) ** 2
    amp = np.exp(-r2 / (2 * cfg.width**2)) * np.exp(1j * cfg.momentum * x)
    amp = amp.ravel()
    return amp / np.linalg.norm(amp)


def screen_intensity(cfg: DoubleSlitConfig, open_slits: Sequence[int]) -> np.ndarray:
    g = slit_graph(cfg, open_slits)
    stepper = Stepper(Scheme.CAYLEY, cfg.mu, laplacian(g, sparse=True))
    final = stepper.evolve(WaveState(_source(cfg)), cfg.ticks)
    return final.probabilities().reshape(cfg.nx, cfg.ny)[cfg.screen_x]


def local_maxima(profile: np.ndarray, floor: float = 1e-3) -> list[int]:
    """Strict interior maxima at least ``floor`` times the global peak."""
    cut = floor * profile.max()
    return [
        i
        for i in range(1, profile.size - 1)
        if profile[i] > profile[i - 1] and profile[i] > profile[i + 1] and profile[i] >= cut
    ]


def run_double_slit(config: DoubleSlitConfig | Mapping | None = None) -> ScenarioResult:
    """Screen intensity with both slits open and with each slit alone.

    The interference residual is ``both - slit1 - slit2``; a purely additive
    (particle-like) picture would make it vanish.
    """
    if config is None:
        cfg = DoubleSlitConfig()
    elif isinstance(config, DoubleSlitConfig):
        cfg = config
    else:
        cfg = DoubleSlitConfig.from_mapping(config)
    cfg.validate()
    s1, s2 = cfg.slit_y
    both = screen_intensity(cfg, (s1, s2))
    one = screen_intensity(cfg, (s1,))
    two = screen_intensity(cfg, (s2,))
    residual = both - one - two
    peak = float(both.max())
    maxima = local_maxima(both)
    mirrored = both[::-1] if cfg.centre_y * 2 == cfg.ny - 1 else None
    sym = float(np.abs(both - mirrored).max()) if mirrored is not None else float("nan")
    report = {
        "peak": peak,
        "n_maxima": len(maxima),
        "maxima": " ".join(str(i) for i in maxima),
        "max_abs_residual": float(np.abs(residual).max()),
        "residual_ratio": float(np.abs(residual).max()) / peak,
        "symmetry_error": sym,
        "symmetry_rel_error": sym / peak,
    }
    rows = [(y, both[y], one[y], two[y], residual[y]) for y in range(cfg.ny)]
    artifacts = {
        "double_slit.csv": to_csv(["y", "both", "slit1", "slit2", "residual"], rows),
        "double_slit_report.csv": _report_csv(report),
    }
    return ScenarioResult("doubleslit", artifacts, report, cfg.as_dict())


# --- EPR ----------------------------------------------------------------------


def _measure_rows(state):
    rows = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        m = pair_relation_measures(state, i, j)
        rows.append((state.tick, EPR_NAMES[i], EPR_NAMES[j], m.mutual_information, m.negativity))
    return rows


def run_epr_scenario(seed: int = 0, eps: float = DEFAULT_EPS) -> ScenarioResult:
    """Singlet, measurement interaction with electron 2, then read-out.

    Tick 0 is the singlet with the apparatus ready, tick 1 the state after
    the apparatus couples to electron 2, tick 2 the collapsed product state.
    """
    s0 = make_epr_with_apparatus()
    s1 = apply_measurement_interaction(s0, electron=1, apparatus=2)
    outcome, s2 = collapse(s1, 2, seed)
    log = propagate_relations(s0, s1, (1, 2), RelationEventLog(), eps)
    log = propagate_relations(s1, s2, (2,), log, eps, collapse=True)
    verdict = locality_check(log, initial=related_pairs(s0, eps))
    if not verdict:
        raise LocalityViolation(f"locality check failed: {verdict.reason}")
    rows = _measure_rows(s0) + _measure_rows(s1) + _measure_rows(s2)
    report = {"outcome": outcome, "events": len(log), "locality": "pass"}
    artifacts = {
        "epr_measures.csv": to_csv(["tick", "a", "b", "mutual_information", "negativity"], rows),
        "epr_events.csv": log.to_csv(EPR_NAMES),
    }
    config = {"eps": repr(float(eps))}
    extras = {"states": (s0, s1, s2), "log": log}
    return ScenarioResult("epr", artifacts, report, config, seed=int(seed), extras=extras)


def outcome_frequency(trials: int, seed: int = 0) -> float:
    """Fraction of ``+`` read-outs over repeated collapses of the coupled state.

    One Philox stream seeded with ``seed`` drives all trials.  Each
    :func:`collapse` consumes exactly one uniform draw, so the draws are taken
    in one batch; the outcomes equal those of ``trials`` sequential calls.
    """
    if int(trials) < 1:
        raise ValidationError("at least one trial is required")
    state = apply_measurement_interaction(make_epr_with_apparatus(), 1, 2)
    p_plus, _ = pointer_probabilities(state, 2)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    return float(np.count_nonzero(rng.random(int(trials)) < p_plus)) / int(trials)


# --- shortcut -----------------------------------------------------------------

DEFAULT_W = (0.0, 0.0001, 0.001, 0.01, 0.1, 1.0)


def run_shortcut(n: int = 100, w_list: Sequence[float] = DEFAULT_W) -> ScenarioResult:
    """Antipodal pair of ``C_n`` with one chord joining it, for each ``w``."""
    if n < 8 or n % 2:
        raise ValidationError(f"ring size must be even and >= 8, got {n}")
    w_list = [float(w) for w in w_list]
    if not w_list:
        raise ValidationError("w_list is empty")
    g = ring(n)
    x, y = 0, n // 2
    reports = [shortcut_impact(g, x, y, (x, y), w) for w in w_list]
    rows = [(rep.w,) + row for rep in reports for row in rep.rows()]
    report = {
        "rel_change": [rep.rel_change for rep in reports],
        "hops_after": [rep.d_sp_after for rep in reports],
        "res_before": reports[0].d_res_before,
    }
    config = {"n": n, "w_list": " ".join(repr(w) for w in w_list)}
    artifacts = {
        "shortcut.csv": to_csv(["w", "pair", "metric", "before", "after", "rel_change"], rows),
    }
    return ScenarioResult("shortcut", artifacts, report, config)
