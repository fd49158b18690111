"""Command-line front end.

Exit codes: 0 success, 1 failed check, 2 invalid input or configuration,
3 capability limit exceeded, 64 usage error.
"""
from __future__ import annotations

import argparse
import itertools
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._io import fmt, read_vector_csv, to_csv, vector_csv
from .dynamics import (
    Scheme,
    Stepper,
    WaveState,
    kernel_matrix,
    laplacian,
    path_sum_kernels,
)
from .entangle import (
    apply_measurement_interaction,
    make_epr_with_apparatus,
)
from .errors import CapabilityError, NotConnected, RelsimError, ValidationError
from .experiments import (
    DEFAULT_W,
    DoubleSlitConfig,
    load_config,
    run_dispersion,
    run_double_slit,
    run_epr_scenario,
    run_shortcut,
    write_outputs,
)
from .geometry import report_csv, resistance_distance, shortcut_impact, shortest_path_distance
from .relgraph import build_lattice, from_edge_list, graph_from_edges, to_edge_list

log = logging.getLogger("relsim")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_CAPABILITY, EXIT_USAGE = 0, 1, 2, 3, 64
BUILD_ID = f"relsim {__version__}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p, *names):
    if "graph" in names:
        p.add_argument("--graph", help="edge-list file")
    if "mu" in names:
        p.add_argument("--mu", type=float, help="per-tick coupling (default 0.2)")
    if "t" in names:
        p.add_argument("--t", type=int, help="number of ticks")
    if "scheme" in names:
        p.add_argument("--scheme", choices=[s.value for s in Scheme])
    if "seed" in names:
        p.add_argument("--seed", type=int, help="64-bit RNG seed")
    if "eps" in names:
        p.add_argument("--eps", type=float, help="relation threshold on mutual information")
    if "out" in names:
        p.add_argument("--out", help="output file or directory")
    p.add_argument("--config", help="key = value file; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=BUILD_ID)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="write a nearest-neighbour lattice as an edge list")
    p.add_argument("--dims", type=int, nargs="+")
    p.add_argument("--periodic", action="store_true", default=None)
    _add_common(p, "out")

    p = sub.add_parser("evolve", help="evolve a particle on a graph")
    p.add_argument("--source", type=int, help="start localized on this vertex (default 0)")
    p.add_argument("--state", help="initial state CSV (vertex,re,im)")
    _add_common(p, "graph", "mu", "t", "scheme", "out")

    p = sub.add_parser("kernel", help="propagator column, optionally checked by path sums")
    p.add_argument("--source", type=int, help="column of the kernel to dump (default 0)")
    p.add_argument("--oracle", choices=["path-sum"])
    _add_common(p, "graph", "mu", "t", "scheme", "out")

    p = sub.add_parser("distance", help="distance between two spatial points")
    p.add_argument("--pair", type=int, nargs=2, metavar=("X", "Y"))
    p.add_argument("--metric", choices=["hops", "resistance"])
    _add_common(p, "graph")

    p = sub.add_parser("shortcut", help="distance change caused by one chord")
    p.add_argument("--n", type=int, help="ring size when no --graph is given (default 100)")
    p.add_argument("--pair", type=int, nargs=2, metavar=("X", "Y"))
    p.add_argument("--chord", type=int, nargs=2, metavar=("U", "V"))
    p.add_argument("--w", type=float, nargs="+", help="chord conductances")
    _add_common(p, "graph", "out")

    p = sub.add_parser("epr", help="EPR measurement scenario")
    _add_common(p, "seed", "eps", "out")

    p = sub.add_parser("doubleslit", help="double-slit interference run")
    _add_common(p, "mu", "t", "out")

    p = sub.add_parser("dispersion", help="plane-wave phase advance on a ring")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    _add_common(p, "mu", "t", "scheme", "out")

    sub.add_parser("check", help="run the built-in invariant suite")
    return parser


def _merge_config(args, known: dict[str, type]) -> dict:
    """Fill unset flags from ``--config``; explicit flags win."""
    config = load_config(args.config) if getattr(args, "config", None) else {}
    extra = {}
    for key, raw in config.items():
        dest = key.replace("-", "_")
        if dest not in known:
            extra[key] = raw
            continue
        current = getattr(args, dest, None)
        try:
            kind = known[dest]
            value = [kind(v) for v in raw.split()] if kind in (list,) else kind(raw)
        except ValueError:
            raise ValidationError(f"config key {key}: bad value {raw!r}")
        if current is None:
            setattr(args, dest, value)
        elif current != value:
            log.warning("config sets %s=%s but flag gives %s; using the flag", key, raw, current)
    return extra


def _ints(raw):
    return [int(v) for v in str(raw).split()]


def _floats(raw):
    return [float(v) for v in str(raw).split()]


def _read_graph(path, allow_disconnected=False):
    if path is None:
        raise ValidationError("--graph is required")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read graph {path}: {exc}") from exc
    return from_edge_list(text, allow_disconnected=allow_disconnected)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text, newline="")
    else:
        sys.stdout.write(text)


def cmd_lattice(args):
    _merge_config(args, {"dims": _ints, "periodic": lambda s: s.lower() in ("1", "true", "yes"), "out": str})
    if not args.dims:
        raise ValidationError("--dims is required")
    _emit(to_edge_list(build_lattice(args.dims, periodic=bool(args.periodic))), args.out)
    return EXIT_OK


_DYN = {"graph": str, "mu": float, "t": int, "scheme": str, "out": str, "source": int}


def cmd_evolve(args):
    _merge_config(args, dict(_DYN, state=str))
    g = _read_graph(args.graph, allow_disconnected=True)
    mu = 0.2 if args.mu is None else args.mu
    ticks = 1 if args.t is None else args.t
    if args.state:
        psi = WaveState(read_vector_csv(Path(args.state).read_text()))
    else:
        psi = WaveState.localized(g.n_spatial, g._check_vertex(args.source or 0))
    final = Stepper(args.scheme or "cayley", mu, laplacian(g)).evolve(psi, ticks)
    _emit(vector_csv(final.amplitudes), args.out)
    return EXIT_OK


def cmd_kernel(args):
    _merge_config(args, dict(_DYN, oracle=str))
    g = _read_graph(args.graph, allow_disconnected=True)
    mu = 0.2 if args.mu is None else args.mu
    t = 1 if args.t is None else args.t
    source = g._check_vertex(args.source or 0)
    k = kernel_matrix(g, mu, t, args.scheme or "euler")
    if args.out or not args.oracle:
        _emit(vector_csv(k[:, source]), args.out)
    if args.oracle == "path-sum":
        if Scheme.parse(args.scheme or "euler") is not Scheme.EULER:
            raise ValidationError("the path-sum oracle applies to the euler scheme")
        ref = path_sum_kernels(g, mu, t)[-1]
        print(f"max_deviation {fmt(float(np.abs(k - ref).max()))}")
    return EXIT_OK


def cmd_distance(args):
    _merge_config(args, {"graph": str, "pair": _ints, "metric": str})
    g = _read_graph(args.graph, allow_disconnected=True)
    if not args.pair:
        raise ValidationError("--pair is required")
    x, y = args.pair
    if (args.metric or "hops") == "hops":
        print(shortest_path_distance(g, x, y))
    else:
        # twelve significant digits hide the last-ulp noise of the linear solve
        print(repr(float(f"{resistance_distance(g, x, y):.12g}")))
    return EXIT_OK


def cmd_shortcut(args):
    _merge_config(args, {"graph": str, "n": int, "pair": _ints, "chord": _ints, "w": _floats, "out": str})
    w_list = args.w or list(DEFAULT_W)
    if args.graph is None:
        text = run_shortcut(args.n or 100, w_list).artifacts["shortcut.csv"]
    else:
        g = _read_graph(args.graph)
        if not args.pair:
            raise ValidationError("--pair is required with --graph")
        x, y = args.pair
        chord = tuple(args.chord) if args.chord else (x, y)
        reports = [shortcut_impact(g, x, y, chord, w) for w in w_list]
        text = report_csv(reports)
    _emit(text, args.out)
    return EXIT_OK


def _scenario_out(result, out):
    if not out:
        for name, text in sorted(result.artifacts.items()):
            sys.stdout.write(f"# {name}\n{text}")
        sys.stdout.write(result.manifest_line())
        return
    for path in write_outputs(result, out):
        log.info("wrote %s", path)


def cmd_epr(args):
    _merge_config(args, {"seed": int, "eps": float, "out": str})
    kwargs = {"seed": 0 if args.seed is None else args.seed}
    if args.eps is not None:
        kwargs["eps"] = args.eps
    _scenario_out(run_epr_scenario(**kwargs), args.out)
    return EXIT_OK


def cmd_doubleslit(args):
    extra = _merge_config(args, {"mu": float, "t": int, "out": str})
    if "ticks" in extra and args.t is not None:
        log.warning("config sets ticks=%s but flag gives %s; using the flag", extra["ticks"], args.t)
    if args.mu is not None:
        extra["mu"] = args.mu
    if args.t is not None:
        extra["ticks"] = args.t
    extra = {k: v if isinstance(v, str) else repr(v) for k, v in extra.items()}
    _scenario_out(run_double_slit(DoubleSlitConfig.from_mapping(extra)), args.out)
    return EXIT_OK


def cmd_dispersion(args):
    _merge_config(args, {"n": int, "m": int, "mu": float, "t": int, "scheme": str, "out": str})
    kwargs = {
        key: val
        for key, val in (("n", args.n), ("m", args.m), ("mu", args.mu), ("ticks", args.t), ("scheme", args.scheme))
        if val is not None
    }
    _scenario_out(run_dispersion(**kwargs), args.out)
    return EXIT_OK


def run_checks() -> list[tuple[str, bool, str]]:
    """Quick invariant suite: path-sum oracle, unitarity, locality."""
    results = []

    worst = 0.0
    for n in range(1, 5):
        pairs = list(itertools.combinations(range(n), 2))
        for mask in range(1 << len(pairs)):
            try:
                g = graph_from_edges(n, [p for k, p in enumerate(pairs) if mask >> k & 1])
            except NotConnected:
                continue
            for t, ref in enumerate(path_sum_kernels(g, 0.3, 4)):
                worst = max(worst, float(np.abs(kernel_matrix(g, 0.3, t) - ref).max()))
    results.append(("path-sum == matrix power (n<=4, t<=4)", worst <= 1e-12, f"max deviation {worst:.3g}"))

    ring = build_lattice([32], periodic=True)
    lap = laplacian(ring)
    rng = np.random.Generator(np.random.Philox(7))
    amp = rng.normal(size=32) + 1j * rng.normal(size=32)
    psi = WaveState(amp / np.linalg.norm(amp))
    for scheme in ("cayley", "exact"):
        stepper = Stepper(scheme, 0.2, lap)
        out = psi
        for _ in range(1000):
            out = stepper.step(out)
        drift = abs(out.norm - 1.0)
        results.append((f"{scheme} unitarity (C32, 1000 steps)", drift <= 1e-12, f"norm drift {drift:.3g}"))

    try:
        result = run_epr_scenario(seed=0)
        ok, detail = result.report["locality"] == "pass", f"{result.report['events']} events"
    except RelsimError as exc:
        ok, detail = False, str(exc)
    results.append(("EPR locality", ok, detail))

    s1 = apply_measurement_interaction(make_epr_with_apparatus(), 1, 2)
    results.append(("measurement interaction unitary", abs(np.linalg.norm(s1.amplitudes) - 1) <= 1e-12, ""))
    return results


def cmd_check(args):
    failed = 0
    for name, ok, detail in run_checks():
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
        failed += not ok
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


COMMANDS = {
    "lattice": cmd_lattice,
    "evolve": cmd_evolve,
    "kernel": cmd_kernel,
    "distance": cmd_distance,
    "shortcut": cmd_shortcut,
    "epr": cmd_epr,
    "doubleslit": cmd_doubleslit,
    "dispersion": cmd_dispersion,
    "check": cmd_check,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="relsim: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except CapabilityError as exc:
        log.error("%s", exc)
        return EXIT_CAPABILITY
    except RelsimError as exc:
        log.error("%s", exc)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
