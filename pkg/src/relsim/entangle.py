"""Small pure-state qubit engine for the EPR measurement scenario.

Conventions
-----------
* Qubit ``q`` is bit ``q`` of the basis index (little endian: qubit 0 is the
  least significant bit).
* Spin up is ``|0>``, spin down is ``|1>``.
* Apparatus pointer states are ``|+> = (|0> + |1>)/sqrt(2)`` and
  ``|-> = (|0> - |1>)/sqrt(2)``; the ready state is ``|0>``.

Relations between parties are read off the quantum mutual information of the
two-party reduced state: a pair is *related* when it exceeds ``eps``.
Negativity is reported alongside.  For three-party states of the kind
produced by the measurement interaction the pairwise negativity vanishes
while the mutual information does not, so mutual information is what tracks
a relation being handed on to the apparatus.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ._io import to_csv
from .errors import (
    ApparatusNotInitialized,
    InvalidState,
    InvalidSubset,
    LocalityViolation,
    ValidationError,
)

MAX_QUBITS = 12
NORM_TOL = 1e-12
DEFAULT_EPS = 1e-9
UP, DOWN = 0, 1
SQRT_HALF = np.sqrt(0.5)
PLUS = np.array([SQRT_HALF, SQRT_HALF], dtype=complex)
MINUS = np.array([SQRT_HALF, -SQRT_HALF], dtype=complex)


@dataclass(frozen=True)
class PureState:
    """Unit-norm state of ``n_qubits`` qubits."""

    amplitudes: np.ndarray
    tick: int = 0

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size < 2 or amp.size & (amp.size - 1):
            raise InvalidState(f"amplitude vector length must be a power of two >= 2, got {amp.shape}")
        n = amp.size.bit_length() - 1
        if n > MAX_QUBITS:
            raise InvalidState(f"{n} qubits exceeds the limit of {MAX_QUBITS}")
        if not np.isfinite(amp).all():
            raise InvalidState("amplitudes must be finite")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidState(f"state norm {norm!r} differs from 1 by more than {NORM_TOL}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "tick", int(self.tick))

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @classmethod
    def product(cls, *factors, tick: int = 0) -> "PureState":
        """Tensor product of single-qubit states, qubit 0 first."""
        vec = np.ones(1, dtype=complex)
        for f in factors:
            vec = np.kron(np.asarray(f, dtype=complex), vec)
        return cls(vec, tick)

    def amplitude(self, *bits: int) -> complex:
        """Amplitude of the basis state with qubit ``q`` set to ``bits[q]``."""
        if len(bits) != self.n_qubits:
            raise ValidationError(f"expected {self.n_qubits} bits, got {len(bits)}")
        return complex(self.amplitudes[sum(b << q for q, b in enumerate(bits))])

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(other.amplitudes, self.amplitudes))

    def tensor(self) -> np.ndarray:
        """View as an array with one axis per qubit, axis ``q`` = qubit ``q``."""
        n = self.n_qubits
        return self.amplitudes.reshape((2,) * n).transpose(range(n - 1, -1, -1))

    def with_tick(self, tick: int) -> "PureState":
        return PureState(self.amplitudes, tick)


def _from_tensor(tensor: np.ndarray, tick: int) -> PureState:
    n = tensor.ndim
    return PureState(tensor.transpose(range(n - 1, -1, -1)).reshape(-1), tick)


def make_epr_with_apparatus() -> PureState:
    """Singlet on qubits 0 and 1, apparatus qubit 2 ready in ``|0>``."""
    amp = np.zeros(8, dtype=complex)
    amp[UP | DOWN << 1] = SQRT_HALF
    amp[DOWN | UP << 1] = -SQRT_HALF
    return PureState(amp, 0)


def _check_qubit(s: PureState, q) -> int:
    if int(q) != q or not 0 <= q < s.n_qubits:
        raise InvalidSubset(f"qubit {q!r} not in 0..{s.n_qubits - 1}")
    return int(q)


def apply_measurement_interaction(s: PureState, electron: int, apparatus: int) -> PureState:
    """Couple the apparatus to one electron.

    ``|up>|0> -> |up>|+>`` and ``|down>|0> -> |down>|->``, i.e. a Hadamard on
    the apparatus followed by a controlled-Z from the electron.  The result
    carries ``tick + 1``.
    """
    e, a = _check_qubit(s, electron), _check_qubit(s, apparatus)
    if e == a:
        raise ValidationError("electron and apparatus must be different qubits")
    psi = s.tensor()
    if np.linalg.norm(np.take(psi, 1, axis=a)) > NORM_TOL:
        raise ApparatusNotInitialized(f"apparatus qubit {a} is not in its ready state |0>")
    ready = np.take(psi, 0, axis=a)
    # the electron axis index shifts down by one once the apparatus axis is gone
    e_axis = e if e < a else e - 1
    up = np.take(ready, UP, axis=e_axis)
    down = np.take(ready, DOWN, axis=e_axis)
    out = np.zeros_like(psi)
    index = [slice(None)] * s.n_qubits
    for e_val, branch, pointer in ((UP, up, PLUS), (DOWN, down, MINUS)):
        for a_val in (0, 1):
            index[e], index[a] = e_val, a_val
            out[tuple(index)] = pointer[a_val] * branch
    return _from_tensor(out, s.tick + 1)


def pointer_probabilities(s: PureState, apparatus: int) -> tuple[float, float]:
    """Born probabilities of reading ``+`` and ``-`` on the apparatus."""
    a = _check_qubit(s, apparatus)
    psi = s.tensor()
    p = []
    for pointer in (PLUS, MINUS):
        proj = np.tensordot(pointer.conj(), psi, axes=([0], [a]))
        p.append(float(np.vdot(proj, proj).real))
    return p[0], p[1]


def _generator(rng_seed) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.Generator(np.random.Philox(int(rng_seed)))


def collapse(s: PureState, apparatus: int, rng_seed) -> tuple[str, PureState]:
    """Projective read-out of the apparatus in the ``+/-`` basis.

    ``rng_seed`` is an integer seed for a Philox (counter based) generator or
    an existing ``numpy.random.Generator``.  A single uniform draw ``u`` picks
    ``+`` when ``u < P(+)``, so a zero-probability branch is never chosen.
    Returns the outcome and the renormalized post-measurement state
    (``tick + 1``).
    """
    a = _check_qubit(s, apparatus)
    p_plus, p_minus = pointer_probabilities(s, a)
    u = _generator(rng_seed).random()
    outcome, pointer = ("+", PLUS) if u < p_plus else ("-", MINUS)
    psi = s.tensor()
    rest = np.tensordot(pointer.conj(), psi, axes=([0], [a]))
    post = np.moveaxis(np.multiply.outer(pointer, rest), 0, a)
    post = post / np.linalg.norm(post)
    return outcome, _from_tensor(post, s.tick + 1)


def reduced_density(s: PureState, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of the qubits in ``keep``.

    The result is indexed little endian in the order given: ``keep[0]`` is
    the least significant bit of the row/column index.
    """
    keep = list(keep)
    if not keep:
        raise InvalidSubset("keep must name at least one qubit")
    if len(set(keep)) != len(keep):
        raise InvalidSubset(f"duplicate qubits in {keep}")
    keep = [_check_qubit(s, q) for q in keep]
    traced = [q for q in range(s.n_qubits) if q not in keep]
    # axes ordered most significant kept qubit first so reshape is little endian
    psi = s.tensor().transpose(keep[::-1] + traced)
    mat = psi.reshape(2 ** len(keep), -1)
    return mat @ mat.conj().T


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in nats."""
    evals = np.linalg.eigvalsh(rho)
    evals = evals[evals > 1e-15]
    return float(-np.sum(evals * np.log(evals)))


def partial_transpose(rho: np.ndarray, dims: tuple[int, int] = (2, 2)) -> np.ndarray:
    """Transpose the second factor of a two-party density matrix.

    ``rho`` is indexed with the first party as the fast (least significant)
    digit, matching :func:`reduced_density` with ``keep=[i, j]``.
    """
    da, db = dims
    r = rho.reshape(db, da, db, da)  # (b, a, b', a')
    return r.transpose(2, 1, 0, 3).reshape(da * db, da * db)


def negativity(rho: np.ndarray) -> float:
    evals = np.linalg.eigvalsh(partial_transpose(rho))
    return max(0.0, float(-evals[evals < 0].sum()))


class RelationMeasures(NamedTuple):
    mutual_information: float
    negativity: float


def pair_relation_measures(s: PureState, i: int, j: int) -> RelationMeasures:
    """Mutual information (nats) and negativity of the pair ``(i, j)``."""
    i, j = _check_qubit(s, i), _check_qubit(s, j)
    if i == j:
        raise ValidationError("a relation needs two distinct parties")
    rho_ij = reduced_density(s, [i, j])
    mi = (
        von_neumann_entropy(reduced_density(s, [i]))
        + von_neumann_entropy(reduced_density(s, [j]))
        - von_neumann_entropy(rho_ij)
    )
    return RelationMeasures(max(mi, 0.0), negativity(rho_ij))


def related_pairs(s: PureState, eps: float = DEFAULT_EPS) -> frozenset[tuple[int, int]]:
    return frozenset(
        (i, j)
        for i, j in itertools.combinations(range(s.n_qubits), 2)
        if pair_relation_measures(s, i, j).mutual_information > eps
    )


class EventKind(enum.Enum):
    CREATED = "Created"
    REMOVED = "Removed"


class Cause(enum.Enum):
    INTERACTION = "Interaction"
    PROPAGATION = "Propagation"
    COLLAPSE = "Collapse"


@dataclass(frozen=True)
class RelationEvent:
    tick: int
    kind: EventKind
    pair: tuple[int, int]
    cause: Cause
    witness: int | None = None

    def __post_init__(self):
        a, b = self.pair
        if a == b:
            raise ValidationError("a relation needs two distinct parties")
        object.__setattr__(self, "pair", (min(a, b), max(a, b)))


@dataclass(frozen=True)
class RelationEventLog:
    events: tuple[RelationEvent, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def extend(self, events: Iterable[RelationEvent]) -> "RelationEventLog":
        return RelationEventLog(self.events + tuple(events))

    def to_csv(self, names: Sequence[str] | None = None) -> str:
        """Columns tick, kind, a, b, witness, cause."""
        label = (lambda q: q) if names is None else (lambda q: names[q])
        return to_csv(
            ["tick", "kind", "a", "b", "witness", "cause"],
            (
                (
                    ev.tick,
                    ev.kind.value,
                    label(ev.pair[0]),
                    label(ev.pair[1]),
                    None if ev.witness is None else label(ev.witness),
                    ev.cause.value,
                )
                for ev in self.events
            ),
        )


def _pair(a, b):
    return (a, b) if a < b else (b, a)


def propagate_relations(
    s_before: PureState,
    s_after: PureState,
    interacting_pair: Sequence[int] | None,
    log: RelationEventLog,
    eps: float = DEFAULT_EPS,
    collapse: bool = False,
) -> RelationEventLog:
    """Append the relation changes between two consecutive states.

    With ``t = s_after.tick``: a new relation between two parties that both
    took part in the interaction is stamped ``Created`` at ``t`` (cause
    Interaction).  Any other new relation, including one between an
    interacting party and a bystander, is stamped at ``t + 1`` (cause
    Propagation) and must name a witness ``b`` related to both ends at tick
    ``t``; otherwise :class:`LocalityViolation` is raised.  Relations that
    vanished are stamped ``Removed`` at ``t``, with cause Collapse when
    ``collapse`` is set.
    """
    if s_after.tick != s_before.tick + 1:
        raise ValidationError(
            f"states must be one tick apart, got {s_before.tick} -> {s_after.tick}"
        )
    if s_before.n_qubits != s_after.n_qubits:
        raise ValidationError("states have different numbers of qubits")
    t = s_after.tick
    parties = set() if interacting_pair is None else {int(q) for q in interacting_pair}
    before = related_pairs(s_before, eps)
    after = related_pairs(s_after, eps)

    removed = sorted(before - after)
    created = sorted(after - before)
    direct = [p for p in created if set(p) <= parties]
    remote = [p for p in created if not set(p) <= parties]

    events = [
        RelationEvent(t, EventKind.REMOVED, p, Cause.COLLAPSE if collapse else Cause.INTERACTION)
        for p in removed
    ]
    events += [RelationEvent(t, EventKind.CREATED, p, Cause.INTERACTION) for p in direct]

    established = (before & after) | set(direct)
    for a, c in remote:
        witness = next(
            (
                b
                for b in range(s_after.n_qubits)
                if b not in (a, c) and _pair(a, b) in established and _pair(b, c) in established
            ),
            None,
        )
        if witness is None:
            raise LocalityViolation(
                f"relation {(a, c)} appeared at tick {t + 1} with no related witness",
                pair=(a, c),
                tick=t + 1,
            )
        events.append(RelationEvent(t + 1, EventKind.CREATED, (a, c), Cause.PROPAGATION, witness))
    return log.extend(events)


class LocalityVerdict(NamedTuple):
    ok: bool
    offending: RelationEvent | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def locality_check(
    log: RelationEventLog, initial: Iterable[tuple[int, int]] = ()
) -> LocalityVerdict:
    """Replay ``log`` and confirm every propagated relation had a witness.

    ``initial`` lists relations already present before the first event.  A
    Propagation event at tick ``T`` with witness ``b`` passes when both
    ``(a, b)`` and ``(b, c)`` were established at a tick ``<= T - 1`` and not
    removed since.  Ticks must be non-decreasing.
    """
    since = {_pair(*p): -1 for p in initial}
    last_tick = None
    for ev in log:
        if last_tick is not None and ev.tick < last_tick:
            return LocalityVerdict(False, ev, "tick decreased")
        last_tick = ev.tick
        if ev.kind is EventKind.REMOVED:
            since.pop(ev.pair, None)
            continue
        if ev.cause is Cause.PROPAGATION:
            a, c = ev.pair
            b = ev.witness
            if b is None:
                return LocalityVerdict(False, ev, "propagated relation without a witness")
            legs = [since.get(_pair(a, b)), since.get(_pair(b, c))] if b not in (a, c) else [None]
            if any(leg is None or leg > ev.tick - 1 for leg in legs):
                return LocalityVerdict(False, ev, f"witness {b} was not related to both ends in time")
        since.setdefault(ev.pair, ev.tick)
    return LocalityVerdict(True)
