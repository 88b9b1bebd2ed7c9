import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cstraj import DegenerateInput, DiscontinuityError, ModelParams, PrefactorResult, amplitude_delta
from cstraj.phase import quadrant_phase, sqrt_branch_phases, track_sigma, unwrap_half_phase

PI = math.pi


@pytest.mark.parametrize("a,b,alpha,case,phi", [
    (1, 0, 0.0, 1, 0.0),
    (-1, 1, -PI / 4, 2, 3 * PI / 4),
    (-1, -1, PI / 4, 3, 5 * PI / 4),
    (1, -1, -PI / 4, 4, 7 * PI / 4),
    (0, 2, PI / 2, 1, PI / 2),
    (0, -2, PI / 2, 3, 3 * PI / 2),
])
def test_quadrant_table(a, b, alpha, case, phi):
    got = quadrant_phase(a, b)
    assert got[1] == case
    assert got[0] == pytest.approx(alpha) and got[2] == pytest.approx(phi)


def test_origin_rejected():
    with pytest.raises(DegenerateInput):
        quadrant_phase(0.0, 0.0)


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_quadrant_phase_is_argument(a, b):
    assume(a != 0 or b != 0)
    _, _, phi = quadrant_phase(a, b)
    assert 0 <= phi < 2 * PI
    assert abs(cmath.exp(1j * phi) - complex(a, b) / abs(complex(a, b))) < 1e-9


def _sigmas(values):
    return np.array([s.sigma for s in track_sigma(values)])


def test_harmonic_tracked_number():
    T = np.linspace(0, 10, 1000)
    sig = _sigmas(-1j * np.exp(-1j * T))
    np.testing.assert_allclose(sig, 3 * PI / 4 - T / 2, atol=1e-12)
    states = track_sigma(-1j * np.exp(-1j * T))
    assert states[0].r == 0 and states[-1].r < 0


def test_constant_never_winds():
    states = track_sigma([1 + 0j] * 50)
    assert all(s.sigma == 0 and s.r == 0 for s in states)


def test_one_clockwise_turn():
    t = np.linspace(0, 1, 200)
    sig = _sigmas(0.3 * np.exp(-2j * PI * t + 0.4j))
    assert sig[-1] - sig[0] == pytest.approx(-PI)


def test_counterclockwise_turns_accumulate():
    t = np.linspace(0, 3, 900)
    sig = _sigmas(np.exp(2j * PI * t))
    assert sig[-1] - sig[0] == pytest.approx(3 * PI)


def test_open_system_keeps_r_zero():
    T = np.linspace(0, 20, 500)
    assert all(s.r == 0 for s in track_sigma(1j + 0.6 * np.sin(T)))


def test_r_is_signed_branch_index():
    # dipping below the positive real axis borrows one branch and returns it
    T = np.linspace(0, 20, 500)
    states = track_sigma(1 + 0.6j * np.sin(T))
    assert {s.r for s in states} == {0, -1}
    assert abs(states[-1].sigma - 0.5 * math.atan2(0.6 * math.sin(20), 1)) < 1e-12


def test_jump_raises():
    with pytest.raises(DiscontinuityError):
        track_sigma([1.0, -0.01 + 1j, -1.0])
    with pytest.raises(DiscontinuityError):
        track_sigma([1.0, -1.0])


def test_accepts_prefactor_objects():
    prs = [PrefactorResult(d2S=cmath.exp(-0.1j * k), phase_integral=0, delta=1) for k in range(5)]
    np.testing.assert_allclose(_sigmas(prs), [-0.05 * k for k in range(5)], atol=1e-12)


@given(st.floats(0.5, 3.0), st.floats(-4.0, 4.0), st.floats(-PI, PI))
def test_half_phase_agrees_with_unwrapper(amp, rate, offset):
    T = np.linspace(0, 5, 600)
    z = amp * (1 + 0.3 * np.cos(T)) * np.exp(1j * (rate * T + offset))
    sig = _sigmas(z)
    ref = unwrap_half_phase(z)
    shift = sig - ref
    # same continuous function up to a constant multiple of pi
    assert np.ptp(shift) < 1e-9
    assert abs(shift[0] / PI - round(shift[0] / PI)) < 1e-9
    np.testing.assert_allclose(np.exp(2j * sig), z / np.abs(z), atol=1e-9)


def test_grid_refinement_stable():
    f = lambda t: (1 + 0.5 * t) * np.exp(-1.3j * t ** 1.5 + 2.0j)
    coarse = _sigmas(f(np.linspace(0, 6, 301)))
    fine = _sigmas(f(np.linspace(0, 6, 601)))
    assert np.max(np.abs(fine[::2] - coarse)) <= 1e-6


def _synthetic(T, hbar):
    prm = ModelParams(hbar=hbar)
    out = []
    for t in T:
        d2S = hbar * (1 + 0.3 * t) * cmath.exp(-1.7j * t + 0.1j)
        phi = complex(0.8 * t, 0.05 * t)
        out.append(PrefactorResult(d2S, phi, amplitude_delta(d2S, phi, prm), t))
    return out


@pytest.mark.parametrize("hbar", [1.0, 0.5])
def test_branch_squares_to_inverse_delta(hbar):
    prs = _synthetic(np.linspace(0, 8, 800), hbar)
    sig = sqrt_branch_phases(prs, hbar)
    for s, p in zip(sig, prs):
        root = abs(p.delta) ** -0.5 * cmath.exp(1j * s)
        assert abs(root * root - 1 / p.delta) < 1e-10 * abs(1 / p.delta)
    assert np.max(np.abs(np.diff(sig))) < PI / 2


def test_harmonic_branch_is_trivial():
    T = np.linspace(0, 10, 1000)
    prs = [PrefactorResult(-1j * cmath.exp(-1j * t), t, 1.0 + 0j, t) for t in T]
    np.testing.assert_allclose(sqrt_branch_phases(prs, 1.0), 0.0, atol=1e-12)


def test_branch_starts_principal():
    prs = _synthetic([0.2, 0.21], 1.0)
    assert sqrt_branch_phases(prs, 1.0)[0] == pytest.approx(cmath.phase(1 / prs[0].delta) / 2)
    assert sqrt_branch_phases([], 1.0).size == 0
