import warnings

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from relsim.dynamics import (
    EulerStabilityWarning,
    Scheme,
    Stepper,
    WaveState,
    cayley_step,
    euler_step,
    exact_evolve,
    kernel_matrix,
    kernel_path_sum,
    laplacian,
    path_sum_kernels,
    spectral_radius,
)
from relsim.errors import ShapeError, TooLargeForEnumeration, ValidationError
from relsim.relgraph import build_lattice, graph_from_edges


def ring(n):
    return build_lattice([n], periodic=True)


def walk_oracle(g, mu, t, x, y):
    """Recursive sum over walks from y to x; independent of the vectorized code."""
    adj = g.dense()
    deg = adj.sum(axis=1)

    def go(v, steps):
        if steps == 0:
            return 1.0 + 0j if v == x else 0j
        total = (1 - 1j * mu * deg[v]) * go(v, steps - 1)
        for w in np.flatnonzero(adj[v]):
            total += 1j * mu * go(int(w), steps - 1)
        return total

    return go(y, t)


# --- Laplacian ------------------------------------------------------------------


def test_ring_spectrum():
    evals = np.sort(np.linalg.eigvalsh(laplacian(ring(100))))
    k = 2 * np.pi * np.arange(100) / 100
    np.testing.assert_allclose(evals, np.sort(-(2 - 2 * np.cos(k))), atol=1e-12)


def test_laplacian_sparse_and_dense_agree():
    g = build_lattice([4, 5])
    dense = laplacian(g)
    sparse = laplacian(g, sparse=True)
    np.testing.assert_array_equal(dense, sparse.toarray())
    np.testing.assert_array_equal(dense.sum(axis=1), 0)


def test_spectral_radius_path():
    assert spectral_radius(laplacian(graph_from_edges(2, [(0, 1)]))) == pytest.approx(2.0)


# --- single steps ---------------------------------------------------------------


def test_euler_on_two_point_path():
    g = graph_from_edges(2, [(0, 1)])
    out = euler_step(WaveState.localized(2, 0), laplacian(g), 0.1)
    np.testing.assert_allclose(out.amplitudes, [1 - 0.1j, 0.1j], atol=1e-15)
    assert out.norm**2 == pytest.approx(1.02, abs=1e-14)
    assert out.tick == 1


def test_cayley_preserves_ring_mode():
    n, m, mu = 8, 1, 0.3
    x = np.arange(n)
    mode = np.exp(2j * np.pi * m * x / n) / np.sqrt(n)
    lam = -(2 - 2 * np.cos(2 * np.pi * m / n))
    out = cayley_step(WaveState(mode), laplacian(ring(n)), mu)
    factor = (1 + 0.5j * mu * lam) / (1 - 0.5j * mu * lam)
    np.testing.assert_allclose(out.amplitudes, factor * mode, atol=1e-14)
    assert abs(factor) == pytest.approx(1.0, abs=1e-15)


def test_cayley_sparse_matches_dense():
    g = build_lattice([5, 5])
    psi = WaveState.localized(25, 12)
    a = cayley_step(psi, laplacian(g), 0.4)
    b = cayley_step(psi, laplacian(g, sparse=True), 0.4)
    np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 2.0), st.integers(0, 7))
def test_exact_evolve_matches_expm(seed, mu, t):
    rng = np.random.default_rng(seed)
    lap = laplacian(build_lattice([3, 3]))
    amp = rng.normal(size=9) + 1j * rng.normal(size=9)
    psi = WaveState(amp)
    ref = sla.expm(1j * mu * t * lap) @ amp
    np.testing.assert_allclose(exact_evolve(psi, lap, mu, t).amplitudes, ref, atol=1e-12)


def test_bad_inputs():
    lap = laplacian(ring(4))
    with pytest.raises(ValidationError):
        euler_step(WaveState.localized(4, 0), lap, 0.0)
    with pytest.raises(ShapeError):
        cayley_step(WaveState.localized(3, 0), lap, 0.1)
    with pytest.raises(ShapeError):
        WaveState(np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        Scheme.parse("leapfrog")
    with pytest.raises(ValidationError):
        exact_evolve(WaveState.localized(4, 0), lap, 0.1, -1)


# --- stepper --------------------------------------------------------------------


def test_euler_stability_warning():
    lap = laplacian(ring(8))
    with pytest.warns(EulerStabilityWarning):
        Stepper("euler", 0.2, lap)  # 0.2 * 4 > 0.5
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        Stepper("euler", 0.1, lap)


@pytest.mark.parametrize("scheme", ["euler", "cayley", "exact"])
@pytest.mark.parametrize("sparse", [False, True])
def test_stepper_matches_single_steps(scheme, sparse):
    g = build_lattice([6])
    lap = laplacian(g, sparse=sparse)
    psi = WaveState.localized(6, 2)
    if scheme == "exact" and sparse:
        ref = exact_evolve(psi, lap, 0.1, 5)
    else:
        ref = psi
        one = {"euler": euler_step, "cayley": cayley_step}.get(scheme)
        for _ in range(5):
            ref = one(ref, lap, 0.1) if one else exact_evolve(ref, lap, 0.1, 1)
    stepper = Stepper(scheme, 0.1, lap)
    states = list(stepper.iterate(psi, 5))
    assert [s.tick for s in states] == [1, 2, 3, 4, 5]
    np.testing.assert_allclose(states[-1].amplitudes, ref.amplitudes, atol=1e-13)
    np.testing.assert_allclose(stepper.evolve(psi, 5).amplitudes, ref.amplitudes, atol=1e-13)
    np.testing.assert_allclose(stepper.step(psi).amplitudes, states[0].amplitudes, atol=1e-13)


def test_exact_step_is_unitary_to_rounding():
    stepper = Stepper("exact", 0.37, laplacian(build_lattice([4, 4], periodic=True)))
    u = stepper._exact_unitary()
    assert np.abs(u.conj().T @ u - np.eye(16)).max() < 1e-14


def test_euler_norm_grows():
    stepper = Stepper("euler", 0.05, laplacian(ring(16)))
    assert stepper.evolve(WaveState.localized(16, 0), 20).norm > 1.0


# --- kernels and path sums ------------------------------------------------------


def test_kernel_columns_propagate_localized_states():
    g = build_lattice([5])
    k = kernel_matrix(g, 0.2, 4, "cayley")
    out = Stepper("cayley", 0.2, laplacian(g)).evolve(WaveState.localized(5, 3), 4)
    np.testing.assert_allclose(k[:, 3], out.amplitudes, atol=1e-14)
    np.testing.assert_array_equal(kernel_matrix(g, 0.2, 0), np.eye(5))


def test_exact_kernel_is_symmetric_and_unitary():
    k = kernel_matrix(build_lattice([3, 3]), 0.5, 3, "exact")
    np.testing.assert_allclose(k, k.T, atol=1e-14)
    np.testing.assert_allclose(k.conj().T @ k, np.eye(9), atol=1e-13)


@pytest.mark.parametrize(
    "n, edges",
    [
        (1, []),
        (2, [(0, 1)]),
        (4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]),
        (5, [(0, 1), (0, 2), (0, 3), (0, 4)]),
    ],
)
def test_path_sum_against_recursive_oracle(n, edges):
    g = graph_from_edges(n, edges)
    kernels = path_sum_kernels(g, 0.3, 4)
    for t, k in enumerate(kernels):
        for x in range(n):
            for y in range(n):
                assert k[x, y] == pytest.approx(walk_oracle(g, 0.3, t, x, y), abs=1e-14)


def test_kernel_path_sum_single_entry():
    g = build_lattice([4], periodic=True)
    assert kernel_path_sum(g, 0.3, 3, 1, 0) == pytest.approx(walk_oracle(g, 0.3, 3, 1, 0), abs=1e-14)
    # by hand: one hop with two stays (3 orderings) plus the 4 three-hop walks,
    # 3 h s^2 + 4 h^3 with s = 1 - 0.6i, h = 0.3i
    assert kernel_path_sum(g, 0.3, 3, 1, 0) == pytest.approx(1.08 + 0.468j, abs=1e-12)


def test_path_sum_enumeration_limits():
    with pytest.raises(TooLargeForEnumeration):
        path_sum_kernels(ring(13), 0.1, 1)
    with pytest.raises(TooLargeForEnumeration):
        path_sum_kernels(ring(4), 0.1, 13)
    with pytest.raises(TooLargeForEnumeration):
        path_sum_kernels(build_lattice([3, 4], periodic=True), 0.1, 12)


def test_path_sum_cancellation_is_exact():
    # complete graph K6 at t = 5: large cancelling walk weights
    edges = [(u, v) for u in range(6) for v in range(u + 1, 6)]
    g = graph_from_edges(6, edges)
    walks = path_sum_kernels(g, 0.3, 5)[-1]
    assert np.abs(walks - kernel_matrix(g, 0.3, 5)).max() <= 1e-13
