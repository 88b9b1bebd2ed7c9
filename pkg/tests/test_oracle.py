import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cstraj import (
    ModelParams,
    NoConvergence,
    PropagatorLabels,
    TruncationWarning,
    WidthMismatch,
    build_hamiltonian_matrix,
    diagonalize,
    exact_csp,
    exact_csp_series,
    harmonic_closed_form,
    husimi_overlap,
    solve_spectrum,
)
from cstraj.oracle import SpectralBasis, coherent_overlap, converged_levels, husimi_overlaps
from oracles import grid_ground_energy, harmonic_propagator, harmonic_propagator_by_sum

WEAK = ModelParams(lam=1.0, beta=0.01)
PURE = ModelParams(lam=0.0, beta=0.1)


@pytest.fixture(scope="module")
def harmonic_eig():
    return solve_spectrum(ModelParams(lam=1.0, beta=0.0), 200)


@pytest.fixture(scope="module")
def weak_eig():
    return solve_spectrum(WEAK, 200)


def test_operator_band_structure():
    basis = SpectralBasis.build(ModelParams(hbar=1.0, b=1.3), 30)
    m, n = np.indices((30, 30))
    for mat, allowed in ((basis.q2, {0, 2}), (basis.p2, {0, 2}), (basis.q4, {0, 2, 4})):
        np.testing.assert_array_equal(mat, mat.T)
        assert np.all(mat[~np.isin(np.abs(m - n), list(allowed))] == 0)


def test_quartic_elements_explicit():
    b, N = 1.3, 40
    q4 = SpectralBasis.build(ModelParams(b=b), N).q4
    k = np.arange(N)
    np.testing.assert_allclose(np.diag(q4), b ** 4 * (6 * k * k + 6 * k + 3) / 4, rtol=1e-13)
    j = np.arange(N - 2)
    np.testing.assert_allclose(np.diag(q4, 2), b ** 4 * (2 * j + 3) * np.sqrt((j + 1) * (j + 2)) / 2, rtol=1e-13)
    j = np.arange(N - 4)
    np.testing.assert_allclose(np.diag(q4, 4), b ** 4 * np.sqrt((j + 1) * (j + 2) * (j + 3) * (j + 4)) / 4,
                               rtol=1e-13)
    assert q4[0, 0] == pytest.approx(3 * b ** 4 / 4)


def test_matrix_examples():
    H = build_hamiltonian_matrix(ModelParams(lam=1.0, beta=0.0), 12)
    np.testing.assert_allclose(H, np.diag(np.arange(12) + 0.5), atol=1e-14)
    free = build_hamiltonian_matrix(ModelParams(hbar=1.0, b=0.5, lam=0.0, beta=0.0), 6)
    assert free[0, 0] == pytest.approx(0.5 * 4.0 / 2)
    with pytest.raises(ValueError):
        build_hamiltonian_matrix(ModelParams(), 1)


def test_diagonal_input():
    d = np.diag([3.0, -1.0, 2.0])
    eig = diagonalize(d)
    np.testing.assert_array_equal(eig.energies, [-1.0, 2.0, 3.0])
    np.testing.assert_array_equal(np.abs(eig.vectors), np.eye(3)[:, [1, 2, 0]])


def test_rejects_bad_matrices():
    with pytest.raises(ValueError):
        diagonalize(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        diagonalize(np.ones((2, 3)))


def test_zero_matrix():
    eig = diagonalize(np.zeros((4, 4)))
    assert not np.any(eig.energies)


@given(arrays(np.float64, (7, 7), elements=st.floats(-10, 10)))
def test_jacobi_matches_lapack(a):
    a = a + a.T
    eig = diagonalize(a)
    ref = np.linalg.eigvalsh(a)
    scale = max(1.0, np.abs(ref).max())
    np.testing.assert_allclose(eig.energies, ref, atol=1e-12 * scale)
    v = eig.vectors
    assert np.max(np.abs(v.T @ v - np.eye(7))) <= 1e-10
    assert np.max(np.linalg.norm(a @ v - v * eig.energies, axis=0)) <= 1e-8 * scale


def test_weak_eigensystem_quality(weak_eig):
    H = build_hamiltonian_matrix(WEAK, 200)
    v, e = weak_eig.vectors, weak_eig.energies
    assert np.max(np.abs(v.T @ v - np.eye(200))) <= 1e-10
    assert np.max(np.linalg.norm(H @ v - v * e, axis=0)) <= 1e-8 * np.abs(e).max()
    np.testing.assert_allclose(e, np.linalg.eigvalsh(H), atol=1e-10 * np.abs(e).max())
    assert np.all(np.diff(e) > 0)


def test_harmonic_spectrum_exact(harmonic_eig):
    np.testing.assert_allclose(harmonic_eig.energies, np.arange(200) + 0.5, atol=1e-12)
    assert harmonic_eig.n_levels == 200


def test_quartic_ground_state_against_grid():
    ref = grid_ground_energy(lambda x: x ** 4)
    assert ref == pytest.approx(0.667986259, abs=1e-9)
    e0 = diagonalize(build_hamiltonian_matrix(ModelParams(lam=0.0, beta=1.0), 100)).energies[0]
    assert abs(e0 - ref) < 1e-5


def test_converged_level_count(weak_eig):
    assert 20 < weak_eig.n_levels < 200
    assert converged_levels(weak_eig, weak_eig) == 200


def test_no_convergence_signalled(monkeypatch):
    monkeypatch.setattr("cstraj.oracle.JACOBI_MAX_SWEEPS", 1)
    with pytest.raises(NoConvergence):
        diagonalize(build_hamiltonian_matrix(WEAK, 30))


def test_husimi_simple_cases(harmonic_eig, weak_eig):
    z = 0.7 - 0.4j
    assert husimi_overlap(harmonic_eig, 0, z) == pytest.approx(math.exp(-abs(z) ** 2 / 2))
    np.testing.assert_allclose(husimi_overlaps(weak_eig, 0.0), weak_eig.vectors[0], atol=1e-15)


@given(st.floats(0, 3), st.floats(0, 2 * math.pi))
def test_completeness(r, theta):
    eig = _quartic_eig()
    w = husimi_overlaps(eig, r * complex(math.cos(theta), math.sin(theta)))
    assert abs(np.sum(np.abs(w) ** 2) - 1) <= 1e-10


_CACHE = {}


def _quartic_eig():
    if "q" not in _CACHE:
        _CACHE["q"] = solve_spectrum(PURE, 200, check_levels=False)
    return _CACHE["q"]


def test_truncation_warning():
    eig = diagonalize(build_hamiltonian_matrix(WEAK, 20))
    with pytest.warns(TruncationWarning):
        husimi_overlaps(eig, 4.0 + 2.0j)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        husimi_overlaps(eig, 0.1)


def test_exact_csp_at_zero_time(weak_eig):
    lab = PropagatorLabels.make(0.5, -0.3, -0.2, 1.1, 0.0, WEAK)
    assert exact_csp(weak_eig, lab, WEAK) == pytest.approx(coherent_overlap(lab), abs=1e-12)
    same = PropagatorLabels.make(0, 1, 0, 1, 0.0, WEAK)
    assert exact_csp(weak_eig, same, WEAK) == pytest.approx(1.0, abs=1e-12)


def test_exact_csp_harmonic_half_period(harmonic_eig):
    prm = ModelParams(lam=1.0, beta=0.0)
    lab = PropagatorLabels.make(0, 1, 0, 1, math.pi, prm)
    assert abs(exact_csp(harmonic_eig, lab, prm) - (-1j / math.e)) < 1e-12


def test_exact_csp_harmonic_series(harmonic_eig):
    prm = ModelParams(lam=1.0, beta=0.0)
    lab = PropagatorLabels.make(1.5, -0.5, -1.0, 2.0, 0.0, prm)
    T = np.linspace(0, 10, 200)
    K = exact_csp_series(harmonic_eig, lab, prm, T)
    ref = np.array([harmonic_propagator(1.5, -0.5, -1.0, 2.0, t) for t in T])
    assert np.max(np.abs(K - ref)) <= 1e-10
    with pytest.raises(ValueError):
        exact_csp_series(harmonic_eig, lab, prm, T, n_levels=201)


@pytest.mark.parametrize("params", [WEAK, PURE])
def test_basis_size_converged(params):
    lab = PropagatorLabels.make(0, 1, 0, 1, 0.0, params)
    T = np.linspace(0, 10, 101)
    a = exact_csp_series(solve_spectrum(params, 200, check_levels=False), lab, params, T, n_levels=60)
    b = exact_csp_series(solve_spectrum(params, 400, check_levels=False), lab, params, T, n_levels=60)
    assert np.max(np.abs(a - b)) <= 1e-8


def test_diagonal_element_bounded(weak_eig):
    lab = PropagatorLabels.make(0.4, 1.2, 0.4, 1.2, 0.0, WEAK)
    K = exact_csp_series(weak_eig, lab, WEAK, np.linspace(0, 30, 600))
    assert np.max(np.abs(K)) <= 1 + 1e-10


def test_closed_form_examples():
    prm = ModelParams(lam=1.0, beta=0.0)
    lab = PropagatorLabels.make(0, 1, 0, 1, math.pi, prm)
    assert harmonic_closed_form(lab, prm) == pytest.approx(-1j / math.e, abs=1e-15)
    assert harmonic_closed_form(lab.at(0.0), prm) == pytest.approx(1.0)
    other = PropagatorLabels.make(0.3, -1.0, 1.0, 0.5, 2 * math.pi, prm)
    assert harmonic_closed_form(other, prm) == pytest.approx(-coherent_overlap(other), abs=1e-14)


@given(st.floats(0.2, 4.0), st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 10))
def test_closed_form_matches_level_sum(omega, q, p, T):
    prm = ModelParams(hbar=1.0, b=1 / math.sqrt(omega), lam=omega * omega, beta=0.0)
    lab = PropagatorLabels.make(q, p, -p, q, T, prm)
    assert harmonic_closed_form(lab, prm) == pytest.approx(harmonic_propagator(q, p, -p, q, T, omega), abs=1e-12)
    if omega == 1.0:
        assert harmonic_closed_form(lab, prm) == pytest.approx(harmonic_propagator_by_sum(q, p, -p, q, T))


def test_closed_form_preconditions():
    lab = PropagatorLabels.make(0, 1, 0, 1, 1.0, ModelParams())
    with pytest.raises(WidthMismatch):
        harmonic_closed_form(lab, ModelParams(lam=4.0, b=1.0))
    with pytest.raises(ValueError):
        harmonic_closed_form(lab, ModelParams(lam=1.0, beta=0.1))
