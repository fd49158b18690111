"""Intrinsic distances on relational graphs.

Two metrics are provided.  Hop distance counts the lines of the shortest
path and collapses to 1 as soon as any shortcut joins two points.
Resistance distance treats every relation as a unit conductor and measures
the effective resistance between two points; it depends on all paths, so a
single weak shortcut barely moves it.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ._io import to_csv
from .errors import Unreachable, ValidationError
from .relgraph import RelationalGraph


def shortest_path_distance(g: RelationalGraph, x: int, y: int) -> int:
    """Breadth-first hop count between two spatial points.

    Raises
    ------
    Unreachable
        If ``x`` and ``y`` lie in different components.
    """
    x, y = g._check_vertex(x), g._check_vertex(y)
    if x == y:
        return 0
    indptr, indices = g.adjacency.indptr, g.adjacency.indices
    dist = {x: 0}
    queue = deque([x])
    while queue:
        v = queue.popleft()
        for w in indices[indptr[v]:indptr[v + 1]]:
            w = int(w)
            if w not in dist:
                dist[w] = dist[v] + 1
                if w == y:
                    return dist[w]
                queue.append(w)
    raise Unreachable(f"no path between {x} and {y}")


def conductance_matrix(g: RelationalGraph, edge_weights=None) -> np.ndarray:
    """Dense symmetric conductance matrix.

    ``edge_weights`` may be ``None`` (unit conductance on every relation), a
    mapping ``{(u, v): c}`` overriding or adding individual conductances, or a
    full symmetric matrix.
    """
    n = g.n_spatial
    if edge_weights is None:
        return g.dense()
    if isinstance(edge_weights, Mapping):
        cond = g.dense()
        for (u, v), c in edge_weights.items():
            if not float(c) > 0:
                raise ValidationError(f"conductance of ({u}, {v}) must be positive, got {c}")
            u, v = g._check_vertex(u), g._check_vertex(v)
            if u == v:
                raise ValidationError("a conductance needs two distinct endpoints")
            cond[u, v] = cond[v, u] = float(c)
    else:
        cond = np.array(edge_weights, dtype=np.float64)
        if cond.shape != (n, n):
            raise ValidationError(f"conductance matrix must be {n}x{n}, got {cond.shape}")
        if not np.allclose(cond, cond.T, rtol=0, atol=0):
            raise ValidationError("conductance matrix must be symmetric")
        np.fill_diagonal(cond, 0.0)
    if not np.isfinite(cond).all() or (cond < 0).any():
        raise ValidationError("conductances must be finite and non-negative")
    return cond


def _components(cond: np.ndarray) -> np.ndarray:
    n = cond.shape[0]
    label = np.full(n, -1)
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = s
        stack = [s]
        while stack:
            v = stack.pop()
            for w in np.flatnonzero(cond[v] > 0):
                if label[w] < 0:
                    label[w] = s
                    stack.append(w)
    return label


def resistance_matrix(cond: np.ndarray) -> np.ndarray:
    """All-pairs effective resistance from a connected conductance matrix."""
    label = _components(cond)
    if (label != label[0]).any():
        raise Unreachable("resistance distance needs a connected graph")
    lap = np.diag(cond.sum(axis=1)) - cond
    pinv = np.linalg.pinv(lap, hermitian=True)
    diag = np.diag(pinv)
    res = diag[:, None] + diag[None, :] - 2.0 * pinv
    np.fill_diagonal(res, 0.0)
    return res


def _pair_resistance(cond: np.ndarray, x: int, y: int) -> float:
    if x == y:
        return 0.0
    label = _components(cond)
    if label[x] != label[y]:
        raise Unreachable(f"no path between {x} and {y}")
    keep = np.flatnonzero(label == label[x])
    sub = cond[np.ix_(keep, keep)]
    lap = np.diag(sub.sum(axis=1)) - sub
    pos = {int(v): k for k, v in enumerate(keep)}
    current = np.zeros(keep.size)
    current[pos[x]], current[pos[y]] = 1.0, -1.0
    # ground y and solve the reduced system for the potentials
    free = np.array([k for k in range(keep.size) if k != pos[y]])
    potential = np.linalg.solve(lap[np.ix_(free, free)], current[free])
    return float(potential[np.flatnonzero(free == pos[x])[0]])


def resistance_distance(g: RelationalGraph, x: int, y: int, edge_weights=None) -> float:
    """Effective resistance between ``x`` and ``y``.

    >>> from relsim.relgraph import from_edge_list
    >>> resistance_distance(from_edge_list("0 1\\n1 2"), 0, 2)
    2.0
    """
    x, y = g._check_vertex(x), g._check_vertex(y)
    return _pair_resistance(conductance_matrix(g, edge_weights), x, y)


@dataclass(frozen=True)
class ShortcutReport:
    pair: tuple[int, int]
    chord: tuple[int, int]
    w: float
    d_sp_before: int
    d_sp_after: int
    d_res_before: float
    d_res_after: float

    @property
    def rel_change(self) -> float:
        """Relative drop of the resistance distance."""
        if self.d_res_before == 0:
            return 0.0
        return (self.d_res_before - self.d_res_after) / self.d_res_before

    @property
    def hop_rel_change(self) -> float:
        if self.d_sp_before == 0:
            return 0.0
        return (self.d_sp_before - self.d_sp_after) / self.d_sp_before

    def rows(self) -> list[tuple]:
        label = f"{self.pair[0]}-{self.pair[1]}"
        return [
            (label, "hops", self.d_sp_before, self.d_sp_after, self.hop_rel_change),
            (label, "resistance", self.d_res_before, self.d_res_after, self.rel_change),
        ]


def shortcut_impact(
    g: RelationalGraph,
    x: int,
    y: int,
    chord: tuple[int, int],
    w: float,
    mode: str = "chord",
) -> ShortcutReport:
    """Distances between ``x`` and ``y`` before and after adding a shortcut.

    Parameters
    ----------
    chord : (u, v)
        Endpoints of the shortcut.
    w : float
        Conductance of the shortcut.  ``w = 0`` means no shortcut at all.
    mode : {"chord", "two_hop"}
        ``"chord"`` adds a single line ``u - v`` of conductance ``w``.
        ``"two_hop"`` models the particle-mediated route ``u - e1 - e2 - v``
        collapsed to an effective chord: two links of conductance ``w`` in
        series give ``w / 2``, and the hop count through it is 2.
    """
    x, y = g._check_vertex(x), g._check_vertex(y)
    u, v = g._check_vertex(chord[0]), g._check_vertex(chord[1])
    if u == v:
        raise ValidationError("chord endpoints must differ")
    w = float(w)
    if not np.isfinite(w) or w < 0:
        raise ValidationError(f"chord conductance must be finite and >= 0, got {w}")
    if mode not in ("chord", "two_hop"):
        raise ValidationError(f"unknown shortcut mode {mode!r}")

    cond = g.dense()
    sp_before = shortest_path_distance(g, x, y)
    res_before = _pair_resistance(cond, x, y)
    if w == 0:
        return ShortcutReport((x, y), (u, v), w, sp_before, sp_before, res_before, res_before)

    length = 1 if mode == "chord" else 2
    eff = w if mode == "chord" else w / 2.0
    after = cond.copy()
    after[u, v] += eff
    after[v, u] += eff
    via = []
    for a, b in ((u, v), (v, u)):
        try:
            via.append(shortest_path_distance(g, x, a) + length + shortest_path_distance(g, b, y))
        except Unreachable:
            pass
    sp_after = min([sp_before] + via)
    return ShortcutReport((x, y), (u, v), w, sp_before, sp_after, res_before, _pair_resistance(after, x, y))


def report_csv(reports) -> str:
    """CSV with columns pair, metric, before, after, rel_change."""
    return to_csv(
        ["pair", "metric", "before", "after", "rel_change"],
        (row for rep in reports for row in rep.rows()),
    )
