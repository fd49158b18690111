"""Discrete Schrodinger evolution of particle-space relations.

The amplitude row of a particle evolves under the graph Laplacian
``lap = A - V`` (adjacency minus degree matrix) with one of three schemes:

euler
    ``psi <- (I + i mu lap) psi``.  The explicit iteration itself; it is not
    norm preserving (every non-constant mode grows).
cayley
    ``psi <- (I - i mu lap/2)^-1 (I + i mu lap/2) psi``.  Unitary.
exact
    ``psi <- exp(i mu lap) psi`` through a dense eigendecomposition.

``mu`` is a dimensionless per-tick coupling; one tick is one time unit.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    CapabilityError,
    ShapeError,
    SolverError,
    TooLargeForEnumeration,
    ValidationError,
)
from .relgraph import RelationalGraph

DENSE_CAP = 4096
ENUMERATION_MAX_T = 12
ENUMERATION_MAX_VERTICES = 12
ENUMERATION_MAX_WALKS = 1 << 20
EULER_STABILITY_LIMIT = 0.5


class Scheme(enum.Enum):
    EULER = "euler"
    CAYLEY = "cayley"
    EXACT = "exact"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown scheme {value!r}; expected euler, cayley or exact")


class EulerStabilityWarning(UserWarning):
    """Euler step large enough to inflate the worst mode by more than ~12% per tick."""


@dataclass(frozen=True)
class WaveState:
    """Amplitudes of one particle over the spatial vertices at a given tick."""

    amplitudes: np.ndarray
    tick: int = 0

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.ndim != 1:
            raise ShapeError(f"amplitudes must be a vector, got shape {amp.shape}")
        if not np.isfinite(amp).all():
            raise ValidationError("amplitudes must be finite")
        if int(self.tick) != self.tick or self.tick < 0:
            raise ValidationError(f"tick must be a non-negative integer, got {self.tick!r}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "tick", int(self.tick))

    @classmethod
    def localized(cls, n: int, vertex: int, tick: int = 0) -> "WaveState":
        amp = np.zeros(n, dtype=complex)
        amp[vertex] = 1.0
        return cls(amp, tick)

    def __len__(self):
        return self.amplitudes.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def laplacian(g: RelationalGraph, sparse: bool | None = None):
    """Graph Laplacian ``A - diag(degree)``.

    Dense ``ndarray`` up to ``DENSE_CAP`` vertices, CSR matrix beyond, unless
    ``sparse`` forces one or the other.
    """
    if sparse is None:
        sparse = g.n_spatial > DENSE_CAP
    if not sparse:
        adj = g.dense()
        return adj - np.diag(adj.sum(axis=1))
    return (g.adjacency - sp.diags(g.degrees.astype(np.float64))).tocsr()


def _check_mu(mu) -> float:
    mu = float(mu)
    if not np.isfinite(mu) or mu <= 0:
        raise ValidationError(f"mu must be finite and positive, got {mu}")
    return mu


def _check_shapes(psi: WaveState, lap):
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise ShapeError(f"Laplacian must be square, got {lap.shape}")
    if len(psi) != lap.shape[0]:
        raise ShapeError(f"state has {len(psi)} entries but the Laplacian is {lap.shape}")


def _identity_like(lap):
    n = lap.shape[0]
    return sp.identity(n, dtype=complex, format="csc") if sp.issparse(lap) else np.eye(n)


def euler_step(psi: WaveState, lap, mu: float) -> WaveState:
    mu = _check_mu(mu)
    _check_shapes(psi, lap)
    amp = psi.amplitudes
    return WaveState(amp + 1j * mu * (lap @ amp), psi.tick + 1)


def cayley_step(psi: WaveState, lap, mu: float) -> WaveState:
    mu = _check_mu(mu)
    _check_shapes(psi, lap)
    amp = psi.amplitudes
    rhs = amp + 0.5j * mu * (lap @ amp)
    lhs = _identity_like(lap) - 0.5j * mu * lap
    try:
        if sp.issparse(lhs):
            out = spla.spsolve(sp.csc_matrix(lhs), rhs)
        else:
            out = sla.solve(lhs, rhs)
    except (np.linalg.LinAlgError, RuntimeError) as exc:
        raise SolverError(f"Cayley solve failed: {exc}") from exc
    if not np.isfinite(out).all():
        raise SolverError("Cayley solve produced non-finite values")
    return WaveState(out, psi.tick + 1)


def _dense(lap) -> np.ndarray:
    if lap.shape[0] > DENSE_CAP:
        raise CapabilityError(
            f"exact evolution needs a dense eigendecomposition; {lap.shape[0]} vertices "
            f"exceeds the cap of {DENSE_CAP}"
        )
    return lap.toarray() if sp.issparse(lap) else np.asarray(lap, dtype=np.float64)


def _eigh(lap):
    try:
        return np.linalg.eigh(_dense(lap))
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"eigendecomposition failed: {exc}") from exc


def exact_evolve(psi: WaveState, lap, mu: float, t: int) -> WaveState:
    """``exp(i mu t lap) psi`` by spectral decomposition."""
    mu = _check_mu(mu)
    _check_shapes(psi, lap)
    if int(t) != t or t < 0:
        raise ValidationError(f"t must be a non-negative integer, got {t!r}")
    if t == 0:
        return psi
    evals, evecs = _eigh(lap)
    coeff = evecs.T @ psi.amplitudes
    return WaveState(evecs @ (np.exp(1j * mu * t * evals) * coeff), psi.tick + int(t))


def spectral_radius(lap) -> float:
    if lap.shape[0] <= DENSE_CAP:
        evals = np.linalg.eigvalsh(_dense(lap))
        return float(np.abs(evals).max())
    val = spla.eigsh(sp.csr_matrix(lap, dtype=np.float64), k=1, which="LM", return_eigenvectors=False)
    return float(abs(val[0]))


@dataclass(eq=False)
class Stepper:
    """Repeated evolution under a fixed Laplacian, caching factorizations.

    ``exact``, and ``cayley`` given a dense Laplacian, run many ticks in the
    Laplacian eigenbasis, where each tick multiplies every coefficient by
    a unimodular factor; this keeps the norm to rounding level over long runs.
    Single :meth:`step` calls use an LU solve (cayley) or a cached, unitarity
    polished propagator (exact).
    """

    scheme: Scheme
    mu: float
    lap: object = field(repr=False)

    def __post_init__(self):
        self.scheme = Scheme.parse(self.scheme)
        self.mu = _check_mu(self.mu)
        if self.lap.ndim != 2 or self.lap.shape[0] != self.lap.shape[1]:
            raise ShapeError(f"Laplacian must be square, got {self.lap.shape}")
        # exact always goes through the spectrum; cayley only for dense input
        if self.scheme is Scheme.EXACT:
            _dense(self.lap)  # raises CapabilityError above the cap
            self._spectral = True
        else:
            self._spectral = self.scheme is Scheme.CAYLEY and not sp.issparse(self.lap)
        self._cache = {}
        if self.scheme is Scheme.EULER:
            rho = spectral_radius(self.lap)
            if self.mu * rho > EULER_STABILITY_LIMIT:
                warnings.warn(
                    f"Euler step mu*|eig|max = {self.mu * rho:.3g} > {EULER_STABILITY_LIMIT}; "
                    "high modes inflate quickly",
                    EulerStabilityWarning,
                    stacklevel=2,
                )

    @property
    def n(self) -> int:
        return self.lap.shape[0]

    def _spectrum(self):
        if "eig" not in self._cache:
            self._cache["eig"] = _eigh(self.lap)
        return self._cache["eig"]

    def _phase_per_tick(self, evals):
        if self.scheme is Scheme.EXACT:
            return self.mu * evals
        # arg((1 + i a)/(1 - i a)) = 2 atan(a)
        return 2.0 * np.arctan(0.5 * self.mu * evals)

    def _cayley_solver(self):
        if "lu" not in self._cache:
            lhs = _identity_like(self.lap) - 0.5j * self.mu * self.lap
            try:
                if sp.issparse(lhs):
                    self._cache["lu"] = spla.splu(sp.csc_matrix(lhs)).solve
                else:
                    factors = sla.lu_factor(lhs)
                    self._cache["lu"] = lambda b: sla.lu_solve(factors, b)
            except (np.linalg.LinAlgError, RuntimeError) as exc:
                raise SolverError(f"Cayley factorization failed: {exc}") from exc
        return self._cache["lu"]

    def _exact_unitary(self):
        if "U" not in self._cache:
            evals, evecs = self._spectrum()
            u = (evecs * np.exp(1j * self.mu * evals)) @ evecs.T
            left, _, right = np.linalg.svd(u)
            self._cache["U"] = left @ right
        return self._cache["U"]

    def _apply(self, amp: np.ndarray) -> np.ndarray:
        if self.scheme is Scheme.EULER:
            return amp + 1j * self.mu * (self.lap @ amp)
        if self.scheme is Scheme.CAYLEY:
            return self._cayley_solver()(amp + 0.5j * self.mu * (self.lap @ amp))
        return self._exact_unitary() @ amp

    def step(self, psi: WaveState) -> WaveState:
        _check_shapes(psi, self.lap)
        return WaveState(self._apply(psi.amplitudes), psi.tick + 1)

    def iterate(self, psi: WaveState, ticks: int) -> Iterator[WaveState]:
        """Yield the state after each of ``ticks`` ticks."""
        _check_shapes(psi, self.lap)
        if int(ticks) != ticks or ticks < 0:
            raise ValidationError(f"ticks must be a non-negative integer, got {ticks!r}")
        if self._spectral:
            evals, evecs = self._spectrum()
            rotation = np.exp(1j * self._phase_per_tick(evals))
            coeff = evecs.T @ psi.amplitudes
            for k in range(1, int(ticks) + 1):
                coeff = coeff * rotation
                yield WaveState(evecs @ coeff, psi.tick + k)
            return
        amp = psi.amplitudes
        for k in range(1, int(ticks) + 1):
            amp = self._apply(amp)
            yield WaveState(amp, psi.tick + k)

    def evolve(self, psi: WaveState, ticks: int) -> WaveState:
        _check_shapes(psi, self.lap)
        if int(ticks) != ticks or ticks < 0:
            raise ValidationError(f"ticks must be a non-negative integer, got {ticks!r}")
        if ticks == 0:
            return psi
        if self._spectral:
            evals, evecs = self._spectrum()
            phase = np.exp(1j * int(ticks) * self._phase_per_tick(evals))
            return WaveState(evecs @ (phase * (evecs.T @ psi.amplitudes)), psi.tick + int(ticks))
        out = psi
        for out in self.iterate(psi, ticks):
            pass
        return out


def kernel_matrix(g: RelationalGraph, mu: float, t: int, scheme="euler") -> np.ndarray:
    """Dense propagator ``K`` with ``psi(t) = K psi(0)``; column ``y`` starts at ``y``."""
    mu = _check_mu(mu)
    scheme = Scheme.parse(scheme)
    if int(t) != t or t < 0:
        raise ValidationError(f"t must be a non-negative integer, got {t!r}")
    lap = _dense(laplacian(g))
    n = lap.shape[0]
    if t == 0:
        return np.eye(n, dtype=complex)
    if scheme is Scheme.EULER:
        return np.linalg.matrix_power(np.eye(n) + 1j * mu * lap, int(t))
    evals, evecs = _eigh(lap)
    if scheme is Scheme.EXACT:
        phase = np.exp(1j * mu * t * evals)
    else:
        phase = np.exp(2j * t * np.arctan(0.5 * mu * evals))
    return (evecs * phase) @ evecs.T


def _walk_table(g: RelationalGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per vertex: itself followed by its neighbours, padded with -1."""
    n = g.n_spatial
    deg = g.degrees
    table = np.full((n, int(deg.max(initial=0)) + 1), -1, dtype=np.int64)
    table[:, 0] = np.arange(n)
    for v in range(n):
        nb = g.neighbors(v)
        table[v, 1:1 + nb.size] = nb
    return table, deg


def _count_walks(g: RelationalGraph, t: int, starts: np.ndarray) -> int:
    # walks of length t from the starts, allowing stays: row sums of (I + A)^t
    a = g.adjacency.toarray() + np.eye(g.n_spatial)
    counts = np.zeros(g.n_spatial)
    counts[starts] = 1.0
    for _ in range(t):
        counts = a @ counts
    return int(counts.sum())


def path_sum_kernels(g: RelationalGraph, mu: float, t_max: int, starts=None) -> list[np.ndarray]:
    """Kernels for ``t = 0..t_max`` by explicit enumeration of walks.

    Every walk ``y = v0, v1, ..., vt = x`` either stays (``v_{k+1} = v_k``)
    or hops to a neighbour.  A stay at ``v`` contributes ``1 - i mu deg(v)``,
    a hop contributes ``i mu``; the walk's weight is the product and
    ``K[x, y]`` is the sum over all walks.  Only columns in ``starts`` are
    filled (all by default).
    """
    mu = _check_mu(mu)
    n = g.n_spatial
    if int(t_max) != t_max or t_max < 0:
        raise ValidationError(f"t must be a non-negative integer, got {t_max!r}")
    if t_max > ENUMERATION_MAX_T or n > ENUMERATION_MAX_VERTICES:
        raise TooLargeForEnumeration(
            f"path enumeration is limited to t <= {ENUMERATION_MAX_T} and "
            f"{ENUMERATION_MAX_VERTICES} vertices (got t={t_max}, n={n})"
        )
    starts = np.arange(n) if starts is None else np.atleast_1d(np.asarray(starts, dtype=np.int64))
    total = _count_walks(g, int(t_max), starts)
    if total > ENUMERATION_MAX_WALKS:
        raise TooLargeForEnumeration(f"{total} walks to enumerate exceeds {ENUMERATION_MAX_WALKS}")

    table, deg = _walk_table(g)
    stay = 1.0 - 1j * mu * deg
    hop = 1j * mu

    origin = starts.copy()
    current = starts.copy()
    weight = np.ones(starts.size, dtype=complex)
    kernels = []
    for t in range(int(t_max) + 1):
        if t > 0:
            nxt = table[current]
            walk, choice = np.nonzero(nxt >= 0)
            factor = np.where(choice == 0, stay[current[walk]], hop)
            weight = weight[walk] * factor
            origin = origin[walk]
            current = nxt[walk, choice]
        flat = current * n + origin
        kernels.append((_exact_bincount(flat, weight.real, n * n)
                        + 1j * _exact_bincount(flat, weight.imag, n * n)).reshape(n, n))
    return kernels


def _exact_bincount(keys: np.ndarray, values: np.ndarray, size: int) -> np.ndarray:
    """Per-key sums without accumulation error from cancelling terms.

    Each value is split into a part on a coarse binary grid, whose partial
    sums are exact in float64, plus a small remainder summed normally.
    """
    if values.size == 0:
        return np.zeros(size)
    top = np.abs(values).max()
    if top == 0:
        return np.zeros(size)
    # grid leaves >= 10 bits of headroom for partial sums of up to 2**20 terms
    exponent = np.frexp(top)[1]
    grid = np.ldexp(1.0, int(exponent) + 31 - 53)
    coarse = np.round(values / grid) * grid
    fine = values - coarse
    return np.bincount(keys, weights=coarse, minlength=size) + np.bincount(
        keys, weights=fine, minlength=size
    )


def kernel_path_sum(g: RelationalGraph, mu: float, t: int, x: int, y: int) -> complex:
    """Single kernel entry ``K[x, y]`` as a sum over walks from ``y`` to ``x``."""
    x = g._check_vertex(x)
    y = g._check_vertex(y)
    return complex(path_sum_kernels(g, mu, t, starts=[y])[-1][x, y])
