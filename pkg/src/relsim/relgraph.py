"""Relational graphs and the generalized adjacency matrix.

Space is a set of points joined by symmetric 0/1 relations.  Quantum objects
attach to that space through a complex row of amplitudes (their wave
function) and to each other through a real entanglement strength in [0, 1].
The three blocks assemble into one Hermitian matrix::

    [ entangle_block      wave_block   ]
    [ wave_block^H        spatial_block]

with quantum objects ordered first, spatial points second.
"""
from __future__ import annotations

import enum
import itertools
import math
import os
import struct
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import (
    InvalidAmplitude,
    InvalidDimension,
    InvalidStrength,
    NotConnected,
    ParseError,
    SelfLoopRejected,
    TooLarge,
    UnknownVertex,
    ValidationError,
)

DEFAULT_MAX_VERTICES = 10**6
MAGIC = b"RELADJ01"
QUANTUM = 1e-12
# row-permutation search is exhaustive inside groups of tied rows
_MAX_TIE_PERMUTATIONS = 40320


def max_vertices() -> int:
    """Size cap for graphs, overridable through ``RELSIM_MAX_VERTICES``."""
    raw = os.environ.get("RELSIM_MAX_VERTICES")
    if raw is None:
        return DEFAULT_MAX_VERTICES
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"RELSIM_MAX_VERTICES must be an integer, got {raw!r}")
    if value < 1:
        raise ValidationError("RELSIM_MAX_VERTICES must be positive")
    return value


class Kind(enum.Enum):
    SPATIAL_POINT = "SpatialPoint"
    QUANTUM_OBJECT = "QuantumObject"


@dataclass(frozen=True, order=True)
class VertexId:
    index: int
    kind: Kind = Kind.SPATIAL_POINT

    def __post_init__(self):
        if int(self.index) != self.index or self.index < 0:
            raise ValidationError(f"vertex index must be a non-negative integer, got {self.index!r}")


_DENSE_CHECK = 256


def _validate_dense(adj: np.ndarray):
    if not np.isin(adj, (0.0, 1.0)).all():
        raise ValidationError("spatial relations must be 0/1")
    if np.diagonal(adj).any():
        raise SelfLoopRejected("spatial relations must not relate a point to itself")
    if not np.array_equal(adj, adj.T):
        raise ValidationError("spatial adjacency must be symmetric")


def _validate_sparse(adj: sp.csr_matrix):
    adj.eliminate_zeros()
    if adj.nnz and not np.all(adj.data == 1.0):
        raise ValidationError("spatial relations must be 0/1")
    if adj.diagonal().any():
        raise SelfLoopRejected("spatial relations must not relate a point to itself")
    if (adj != adj.T).nnz:
        raise ValidationError("spatial adjacency must be symmetric")


def _is_connected(adj: sp.csr_matrix) -> bool:
    n = adj.shape[0]
    if n > _DENSE_CHECK:
        return connected_components(adj, directed=False)[0] == 1
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = [0]
    indptr, indices = adj.indptr, adj.indices
    while frontier:
        nxt = []
        for v in frontier:
            for w in indices[indptr[v]:indptr[v + 1]]:
                if not seen[w]:
                    seen[w] = True
                    nxt.append(w)
        frontier = nxt
    return bool(seen.all())


def _freeze(matrix: sp.csr_matrix) -> sp.csr_matrix:
    matrix.sum_duplicates()
    matrix.sort_indices()
    for arr in (matrix.data, matrix.indices, matrix.indptr):
        arr.flags.writeable = False
    return matrix


@dataclass(frozen=True, eq=False)
class RelationalGraph:
    """Spatial points and their symmetric 0/1 relations.

    Parameters
    ----------
    adjacency : scipy.sparse matrix or array_like
        Square symmetric 0/1 matrix with zero diagonal.
    allow_disconnected : bool
        Skip the connectivity check.  Graphs are required to be connected
        unless this flag is set.
    """

    adjacency: sp.csr_matrix
    allow_disconnected: bool = False

    def __post_init__(self):
        adj = self.adjacency
        n, m = adj.shape
        if n != m:
            raise ValidationError(f"adjacency must be square, got {adj.shape}")
        if n == 0:
            raise InvalidDimension("a relational graph needs at least one spatial point")
        if n > max_vertices():
            raise TooLarge(f"{n} vertices exceeds the cap of {max_vertices()}")
        if n <= _DENSE_CHECK:
            dense = adj.toarray() if sp.issparse(adj) else np.asarray(adj, dtype=np.float64)
            _validate_dense(dense)
            adj = sp.csr_matrix(dense)
        else:
            adj = sp.csr_matrix(adj, dtype=np.float64, copy=True)
            _validate_sparse(adj)
        if not self.allow_disconnected and n > 1 and not _is_connected(adj):
            raise NotConnected("graph is disconnected; pass allow_disconnected=True to accept it")
        object.__setattr__(self, "adjacency", _freeze(adj))

    @property
    def n_spatial(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr).astype(np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        self._check_vertex(v)
        a = self.adjacency
        return a.indices[a.indptr[v]:a.indptr[v + 1]].copy()

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(u, v)`` with ``u < v``, sorted."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k])) for k in order]

    def dense(self) -> np.ndarray:
        return self.adjacency.toarray()

    def _check_vertex(self, v):
        if isinstance(v, VertexId):
            if v.kind is not Kind.SPATIAL_POINT:
                raise UnknownVertex(f"{v} is not a spatial point")
            v = v.index
        if not isinstance(v, (int, np.integer)) or not 0 <= v < self.n_spatial:
            raise UnknownVertex(f"spatial vertex {v!r} not in 0..{self.n_spatial - 1}")
        return int(v)

    def __eq__(self, other):
        if not isinstance(other, RelationalGraph):
            return NotImplemented
        return (
            self.n_spatial == other.n_spatial
            and (self.adjacency != other.adjacency).nnz == 0
        )

    __hash__ = None


def graph_from_edges(
    n: int, edges: Iterable[tuple[int, int]], allow_disconnected: bool = False
) -> RelationalGraph:
    """Build a graph on ``n`` points from an iterable of pairs (deduplicated)."""
    pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs[:, 0] == pairs[:, 1]).any():
        raise SelfLoopRejected("edge list contains a self-loop")
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise UnknownVertex(f"edge endpoint outside 0..{n - 1}")
    if n <= _DENSE_CHECK:
        adj = np.zeros((n, n))
        adj[pairs[:, 0], pairs[:, 1]] = 1.0
        adj[pairs[:, 1], pairs[:, 0]] = 1.0
        return RelationalGraph(adj, allow_disconnected=allow_disconnected)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    adj = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    adj.data[:] = 1.0  # duplicates were summed
    return RelationalGraph(adj, allow_disconnected=allow_disconnected)


def build_lattice(dims: Sequence[int], periodic: bool = False) -> RelationalGraph:
    """Hypercubic nearest-neighbour lattice, vertices numbered in C order.

    >>> build_lattice([3], periodic=True).degrees.tolist()
    [2, 2, 2]
    """
    dims = list(dims)
    if not dims:
        raise InvalidDimension("at least one extent is required")
    for d in dims:
        if int(d) != d or d < 1:
            raise InvalidDimension(f"extent must be a positive integer, got {d!r}")
    dims = [int(d) for d in dims]
    n = int(np.prod(dims, dtype=object))
    if n > max_vertices():
        raise TooLarge(f"lattice of {n} vertices exceeds the cap of {max_vertices()}")
    index = np.arange(n, dtype=np.int64).reshape(dims)
    chunks = []
    for axis, extent in enumerate(dims):
        if extent < 2:
            continue
        lo = np.take(index, range(extent - 1), axis=axis)
        hi = np.take(index, range(1, extent), axis=axis)
        chunks.append(np.stack([lo.ravel(), hi.ravel()], axis=1))
        if periodic and extent > 2:
            last = np.take(index, [extent - 1], axis=axis)
            first = np.take(index, [0], axis=axis)
            chunks.append(np.stack([last.ravel(), first.ravel()], axis=1))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return graph_from_edges(n, edges)


def from_edge_list(
    text: str, n_vertices: int | None = None, allow_disconnected: bool = False
) -> RelationalGraph:
    """Parse the ``u v`` per line edge-list format.

    Blank lines and ``#`` comments are ignored, except for an optional
    ``# vertices N`` line that fixes the vertex count (so trailing isolated
    points survive a round trip).  Without it the graph spans
    ``max(index) + 1`` vertices.
    """
    pairs = []
    declared = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if "#" in line:
            line, comment = line.split("#", 1)
            words = comment.split()
            if len(words) == 2 and words[0] == "vertices":
                try:
                    declared = int(words[1])
                except ValueError:
                    raise ParseError(f"bad vertex count {words[1]!r}", lineno)
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 2:
            raise ParseError(f"expected two indices, got {len(tokens)} tokens", lineno)
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ParseError(f"non-integer token in {line.strip()!r}", lineno)
        if u < 0 or v < 0:
            raise ParseError("indices must be non-negative", lineno)
        if u == v:
            raise SelfLoopRejected(f"line {lineno}: self-loop {u} {v}")
        pairs.append((u, v))
    n = max((max(p) for p in pairs), default=-1) + 1
    for extra in (declared, n_vertices):
        if extra is not None:
            if extra < n:
                raise ParseError(f"declared {extra} vertices but edges reference {n - 1}")
            n = extra
    if n == 0:
        raise ParseError("edge list declares no vertices")
    return graph_from_edges(n, pairs, allow_disconnected=allow_disconnected)


def to_edge_list(g: RelationalGraph) -> str:
    lines = [f"# vertices {g.n_spatial}"]
    lines += [f"{u} {v}" for u, v in g.edges()]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class GeneralizedAdjacency:
    """Spatial graph plus quantum objects attached by amplitude rows.

    ``wave_block[e, x]`` is the relation between object ``e`` and spatial
    point ``x``; ``entangle_block[e1, e2]`` is a normalized entanglement
    strength.  Instances are immutable; the helpers below return new ones.
    """

    graph: RelationalGraph
    wave_block: np.ndarray = field(default=None)
    entangle_block: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.graph.n_spatial
        wave = self.wave_block
        wave = np.zeros((0, n), complex) if wave is None else np.array(wave, dtype=complex)
        if wave.ndim != 2 or wave.shape[1] != n:
            raise ValidationError(f"wave_block must have shape (k, {n}), got {wave.shape}")
        if not np.isfinite(wave).all():
            raise InvalidAmplitude("wave_block has non-finite entries")
        k = wave.shape[0]
        ent = self.entangle_block
        ent = np.zeros((k, k)) if ent is None else np.array(ent, dtype=np.float64)
        if ent.shape != (k, k):
            raise ValidationError(f"entangle_block must have shape ({k}, {k}), got {ent.shape}")
        if not np.array_equal(ent, ent.T):
            raise ValidationError("entangle_block must be symmetric")
        if np.diagonal(ent).any():
            raise ValidationError("entangle_block must have a zero diagonal")
        if ((ent < 0) | (ent > 1)).any() or not np.isfinite(ent).all():
            raise InvalidStrength("entangle_block entries must lie in [0, 1]")
        wave.flags.writeable = False
        ent.flags.writeable = False
        object.__setattr__(self, "wave_block", wave)
        object.__setattr__(self, "entangle_block", ent)

    @property
    def spatial_block(self) -> sp.csr_matrix:
        return self.graph.adjacency

    @property
    def n_objects(self) -> int:
        return self.wave_block.shape[0]

    @property
    def n_spatial(self) -> int:
        return self.graph.n_spatial

    def vertex_ids(self) -> list[VertexId]:
        """Row labels of :meth:`assemble`: quantum objects, then spatial points."""
        return [VertexId(i, Kind.QUANTUM_OBJECT) for i in range(self.n_objects)] + [
            VertexId(i, Kind.SPATIAL_POINT) for i in range(self.n_spatial)
        ]

    def assemble(self) -> np.ndarray:
        """Dense Hermitian block matrix, objects first."""
        k, n = self.n_objects, self.n_spatial
        if (k + n) ** 2 > 64 * max_vertices():
            raise TooLarge(f"dense assembly of {k + n} rows is too large")
        full = np.zeros((k + n, k + n), dtype=complex)
        full[:k, :k] = self.entangle_block
        full[:k, k:] = self.wave_block
        full[k:, :k] = self.wave_block.conj().T
        full[k:, k:] = self.spatial_block.toarray()
        return full

    def _check_object(self, e):
        if isinstance(e, VertexId):
            if e.kind is not Kind.QUANTUM_OBJECT:
                raise UnknownVertex(f"{e} is not a quantum object")
            e = e.index
        if not isinstance(e, (int, np.integer)) or not 0 <= e < self.n_objects:
            raise UnknownVertex(f"quantum object {e!r} not in 0..{self.n_objects - 1}")
        return int(e)

    def permute_objects(self, perm: Sequence[int]) -> "GeneralizedAdjacency":
        """Relabel objects so that new object ``i`` is old object ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.n_objects)):
            raise ValidationError(f"{perm.tolist()} is not a permutation of the objects")
        return GeneralizedAdjacency(
            self.graph,
            self.wave_block[perm],
            self.entangle_block[np.ix_(perm, perm)],
        )


def _amplitude_row(g: RelationalGraph, amplitudes) -> np.ndarray:
    n = g.n_spatial
    if isinstance(amplitudes, Mapping):
        row = np.zeros(n, dtype=complex)
        for key, value in amplitudes.items():
            row[g._check_vertex(key)] = complex(value)
    else:
        row = np.array(amplitudes, dtype=complex)
        if row.shape != (n,):
            raise ValidationError(f"amplitude vector must have length {n}, got shape {row.shape}")
    if not np.isfinite(row).all():
        raise InvalidAmplitude("amplitudes must be finite")
    return row


def attach_particle(
    target: RelationalGraph | GeneralizedAdjacency, amplitudes, normalize: bool = True
) -> GeneralizedAdjacency:
    """Add one quantum object related to space through ``amplitudes``.

    Parameters
    ----------
    target : RelationalGraph or GeneralizedAdjacency
        A bare graph starts a new structure; an existing structure gains a row.
    amplitudes : mapping or array_like
        ``{vertex: amplitude}`` (missing vertices get 0) or a full vector.
    normalize : bool
        Scale the row to unit L2 norm.
    """
    ga = target if isinstance(target, GeneralizedAdjacency) else GeneralizedAdjacency(target)
    row = _amplitude_row(ga.graph, amplitudes)
    if normalize:
        norm = np.linalg.norm(row)
        if norm == 0:
            raise InvalidAmplitude("cannot normalize an all-zero amplitude row")
        row = row / norm
    k = ga.n_objects
    ent = np.zeros((k + 1, k + 1))
    ent[:k, :k] = ga.entangle_block
    return GeneralizedAdjacency(ga.graph, np.vstack([ga.wave_block, row[None, :]]), ent)


def add_entanglement_edge(
    ga: GeneralizedAdjacency, e1, e2, strength: float
) -> GeneralizedAdjacency:
    """Set the symmetric entanglement strength between two objects (last write wins)."""
    i, j = ga._check_object(e1), ga._check_object(e2)
    if i == j:
        raise ValidationError("an object cannot be entangled with itself")
    strength = float(strength)
    if not 0.0 <= strength <= 1.0:
        raise InvalidStrength(f"strength must lie in [0, 1], got {strength}")
    ent = ga.entangle_block.copy()
    ent[i, j] = ent[j, i] = strength
    return GeneralizedAdjacency(ga.graph, ga.wave_block, ent)


def _quantize(values: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(values, dtype=np.float64) / QUANTUM).astype(np.int64)


def canonical_form(ga: GeneralizedAdjacency) -> bytes:
    """Byte encoding invariant under relabelling of the quantum objects.

    Rows are sorted by their quantized amplitudes and the sorted multiset of
    their entanglement strengths.  Rows that tie on that key are resolved by
    picking, among all orderings of each tie group, the one whose quantized
    entanglement block encodes smallest.

    Layout (little endian): ``RELADJ01``, uint32 n_objects, uint32 n_spatial,
    uint64 n_edges, n_edges pairs of uint32 ``u < v``, then the wave block as
    int64 (re, im) pairs in row-major order, then the upper triangle
    (excluding the diagonal) of the entanglement block as int64.  Floats are
    quantized to multiples of 1e-12.
    """
    k, n = ga.n_objects, ga.n_spatial
    wave_q = np.empty((k, 2 * n), dtype=np.int64)
    wave_q[:, 0::2] = _quantize(ga.wave_block.real)
    wave_q[:, 1::2] = _quantize(ga.wave_block.imag)
    ent_q = _quantize(ga.entangle_block)

    keys = [tuple(wave_q[i].tolist()) + tuple(sorted(ent_q[i].tolist())) for i in range(k)]
    order = sorted(range(k), key=lambda i: keys[i])
    groups = [list(grp) for _, grp in itertools.groupby(order, key=lambda i: keys[i])]

    n_candidates = 1
    for grp in groups:
        n_candidates *= math.factorial(len(grp))
    if n_candidates > _MAX_TIE_PERMUTATIONS:
        raise TooLarge(f"{n_candidates} tied orderings to search; too many identical objects")

    upper = np.triu_indices(k, 1)
    best = None
    for choice in itertools.product(*(itertools.permutations(g) for g in groups)):
        perm = [i for grp in choice for i in grp]
        enc = ent_q[np.ix_(perm, perm)][upper].astype("<i8").tobytes()
        if best is None or enc < best[0]:
            best = (enc, perm)
    ent_bytes, perm = best if best is not None else (b"", [])

    edges = np.asarray(ga.graph.edges(), dtype="<u4").reshape(-1, 2)
    return b"".join(
        [
            MAGIC,
            struct.pack("<IIQ", k, n, len(edges)),
            edges.tobytes(),
            wave_q[perm].astype("<i8").tobytes(),
            ent_bytes,
        ]
    )

