"""Exact coherent-state propagator from diagonalising the quantum Hamiltonian.

The Hamiltonian is written in the harmonic-oscillator basis whose width equals
the coherent-state width ``b``, diagonalised by cyclic Jacobi rotations, and
the propagator is summed over eigenstates.  Independent of every classical
routine in the package.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from .errors import NoConvergence, TruncationWarning, WidthMismatch
from .model import ModelParams, PropagatorLabels

JACOBI_MAX_SWEEPS = 100
LEVEL_TOL = 1e-10
TAIL_TOL = 1e-12


def _q2_matrix(n, b):
    m = np.zeros((n, n))
    k = np.arange(n)
    m[k, k] = b * b * (k + 0.5)
    j = np.arange(n - 2)
    off = 0.5 * b * b * np.sqrt((j + 1.0) * (j + 2.0))
    m[j, j + 2] = off
    m[j + 2, j] = off
    return m


def _p2_matrix(n, c):
    m = np.zeros((n, n))
    k = np.arange(n)
    m[k, k] = c * c * (k + 0.5)
    j = np.arange(n - 2)
    off = -0.5 * c * c * np.sqrt((j + 1.0) * (j + 2.0))
    m[j, j + 2] = off
    m[j + 2, j] = off
    return m


@dataclass(frozen=True)
class SpectralBasis:
    """Matrices of ``q**2``, ``q**4`` and ``p**2`` in the first ``N`` oscillator states."""

    N: int
    q2: np.ndarray
    q4: np.ndarray
    p2: np.ndarray

    @classmethod
    def build(cls, params: ModelParams, N: int) -> "SpectralBasis":
        if N < 2:
            raise ValueError("basis size must be >= 2")
        big = _q2_matrix(N + 4, params.b)
        # q^4 = (q^2)^2 needs the states two levels above the cut
        q4 = (big @ big)[:N, :N]
        return cls(N, big[:N, :N], q4, _p2_matrix(N, params.c))


def build_hamiltonian_matrix(params: ModelParams, N: int) -> np.ndarray:
    """``P2/2 + lam Q2/2 + beta Q4`` at unit mass."""
    basis = SpectralBasis.build(params, N)
    return 0.5 * basis.p2 + 0.5 * params.lam * basis.q2 + params.beta * basis.q4


@numba.njit(cache=True)
def _jacobi(a, max_sweeps):
    n = a.shape[0]
    v = np.eye(n)
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    scale = math.sqrt(scale)
    if scale == 0.0:
        return np.zeros(n), v, 0
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if math.sqrt(2.0 * off) <= 1e-15 * scale:
            return np.diag(a).copy(), v, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return np.diag(a).copy(), v, -1


@dataclass(frozen=True)
class Eigensystem:
    """Ascending energies and orthonormal eigenvector columns.

    ``n_levels`` is the number of low levels trusted by :func:`exact_csp` when
    the caller does not ask for a specific count.
    """

    energies: np.ndarray
    vectors: np.ndarray
    n_levels: int | None = None
    sweeps: int = 0

    @property
    def N(self) -> int:
        return len(self.energies)


def diagonalize(H) -> Eigensystem:
    """Full eigendecomposition of a real symmetric matrix by cyclic Jacobi."""
    H = np.array(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("matrix must be square")
    if np.max(np.abs(H - H.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(H), initial=0.0)):
        raise ValueError("matrix is not symmetric")
    w, v, sweeps = _jacobi(0.5 * (H + H.T), JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    order = np.argsort(w, kind="stable")
    return Eigensystem(w[order], v[:, order], sweeps=sweeps)


def converged_levels(small: Eigensystem, large: Eigensystem, tol=LEVEL_TOL) -> int:
    """Leading levels whose energies agree between two basis sizes."""
    n = min(small.N, large.N)
    bad = np.nonzero(np.abs(small.energies[:n] - large.energies[:n]) >= tol)[0]
    return int(bad[0]) if len(bad) else n


def solve_spectrum(params: ModelParams, N: int, check_levels=True) -> Eigensystem:
    """Diagonalise at ``N``; with ``check_levels`` also at ``2N`` to set ``n_levels``."""
    eig = diagonalize(build_hamiltonian_matrix(params, N))
    if not check_levels:
        return eig
    ref = diagonalize(build_hamiltonian_matrix(params, 2 * N))
    return Eigensystem(eig.energies, eig.vectors, converged_levels(eig, ref), eig.sweeps)


def coherent_amplitudes(z: complex, N: int) -> np.ndarray:
    """``<z|m>`` for the first ``N`` oscillator states, by recurrence."""
    out = np.empty(N, dtype=complex)
    zc = complex(z).conjugate()
    term = complex(math.exp(-0.5 * abs(z) ** 2))
    for m in range(N):
        out[m] = term
        term = term * zc / math.sqrt(m + 1)
    return out


def _check_tail(amps):
    total = np.sqrt(np.sum(np.abs(amps) ** 2))
    if abs(amps[-1]) > TAIL_TOL * max(total, 1e-300):
        warnings.warn(
            f"coherent-state expansion not converged at basis edge: |tail| = {abs(amps[-1]):.2e}",
            TruncationWarning,
            stacklevel=3,
        )


def husimi_overlaps(eig: Eigensystem, z: complex) -> np.ndarray:
    """``<z|n>`` for every eigenstate ``n``."""
    amps = coherent_amplitudes(z, eig.vectors.shape[0])
    _check_tail(amps)
    return eig.vectors.T @ amps


def husimi_overlap(eig: Eigensystem, n: int, z) -> complex:
    z = getattr(z, "z", z)
    return complex(husimi_overlaps(eig, z)[n])


def exact_csp(eig: Eigensystem, labels: PropagatorLabels, params: ModelParams, n_levels=None) -> complex:
    """Eigen-expansion of the propagator at ``labels.T``."""
    return complex(exact_csp_series(eig, labels, params, [labels.T], n_levels)[0])


def exact_csp_series(eig: Eigensystem, labels: PropagatorLabels, params: ModelParams, T_grid, n_levels=None):
    """Same sum evaluated on a grid of times (the labels' own ``T`` is ignored)."""
    n = n_levels or eig.n_levels or eig.N
    if n > eig.N:
        raise ValueError(f"n_levels={n} exceeds basis size {eig.N}")
    bra = husimi_overlaps(eig, labels.final.z)[:n]
    ket = husimi_overlaps(eig, labels.initial.z)[:n].conj()
    phases = np.exp(-1j * np.multiply.outer(np.asarray(T_grid, dtype=float), eig.energies[:n]) / params.hbar)
    return phases @ (bra * ket)


def coherent_overlap(labels: PropagatorLabels) -> complex:
    """``<z''|z'>`` for equal widths."""
    zi, zf = labels.initial.z, labels.final.z
    return cmath.exp(-0.5 * abs(zi) ** 2 - 0.5 * abs(zf) ** 2 + zf.conjugate() * zi)


def harmonic_closed_form(labels: PropagatorLabels, params: ModelParams, T=None):
    """Closed-form propagator of the harmonic oscillator with matched width."""
    if params.beta != 0 or params.lam <= 0:
        raise ValueError("closed form needs beta == 0 and lam > 0")
    w = math.sqrt(params.lam)
    b_match = math.sqrt(params.hbar / w)
    if abs(params.b - b_match) > 1e-12 * b_match:
        raise WidthMismatch(f"b = {params.b} differs from the matched width {b_match}")
    zi, zf = labels.initial.z, labels.final.z
    T = labels.T if T is None else np.asarray(T, dtype=float)
    out = np.exp(-0.5 * abs(zi) ** 2 - 0.5 * abs(zf) ** 2
                 + zf.conjugate() * zi * np.exp(-1j * w * T) - 0.5j * w * T)
    return complex(out) if np.ndim(out) == 0 else out
