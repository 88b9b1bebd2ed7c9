"""Complex action, mixed second derivative of the action and the prefactor."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import CausticError
from .integrator import Trajectory
from .model import SQRT2, ModelParams, PropagatorLabels, SmoothedHamiltonian, force, h_mixed_second_derivative, smoothed_h
from .shooting import RootResult, ShootingConfig, descend

D2S_STEP = 1e-5
CAUSTIC_TOL = 1e-12


@dataclass(frozen=True)
class ActionResult:
    I_s: complex
    f: complex

    @property
    def S(self) -> complex:
        return self.I_s + self.f


@dataclass(frozen=True)
class PrefactorResult:
    d2S: complex
    phase_integral: complex
    delta: complex
    T: float = 0.0


def _quad(y, t):
    if len(t) < 2:
        return 0j
    return complex(simpson(y, x=t))


def uv(q, p, params: ModelParams):
    """Complex coordinates ``u = (q/b + i p/c)/sqrt2`` and ``v = (q/b - i p/c)/sqrt2``."""
    a = q / params.b
    c = 1j * p / params.c
    return (a + c) / SQRT2, (a - c) / SQRT2


def action(traj: Trajectory, labels: PropagatorLabels, params: ModelParams) -> ActionResult:
    """Path and boundary terms of the complex action along a root trajectory."""
    model = traj.model
    hbar = params.hbar
    u, v = uv(traj.q, traj.p, params)
    udot, vdot = uv(traj.p, force(model, traj.q), params)
    integrand = 0.5j * hbar * (v * udot - u * vdot) - smoothed_h(model, traj.q, traj.p)
    I_s = _quad(integrand, traj.t)
    u_T = u[-1]
    v_0 = v[0]
    f = -0.5j * hbar * (labels.v_final * u_T + v_0 * labels.u_initial)
    return ActionResult(complex(I_s), complex(f))


def action_components(traj: Trajectory, labels: PropagatorLabels, params: ModelParams) -> ActionResult:
    """Same action written with the four real coordinates.

    Cross-check for :func:`action`; the path term uses the conserved energy
    instead of integrating the Hamiltonian.
    """
    x1, p1, x2, p2 = traj.x1, traj.p1, traj.x2, traj.p2
    t = traj.t
    if len(t) < 2:
        re = im = 0.0
    else:
        # velocities from the flow rather than differencing the samples
        qdot = traj.p
        pdot = force(traj.model, traj.q)
        dx1, dp2, dp1, dx2 = qdot.real, qdot.imag, pdot.real, pdot.imag
        re = simpson(0.5 * (p2 * dx2 + p1 * dx1 - x1 * dp1 - x2 * dp2), x=t)
        im = simpson(0.5 * (x2 * dx1 + p1 * dp2 - x1 * dx2 - p2 * dp1), x=t)
    I_s = complex(re, im) - traj.energy0 * traj.T
    r = params.b_over_c
    # boundary term from the same coordinates: u'' and v' rebuilt componentwise
    u_T = complex((x1[-1] - r * x2[-1]) / params.b, (p2[-1] + p1[-1] / r) / params.b) / SQRT2
    v_0 = complex((x1[0] + r * x2[0]) / params.b, (p2[0] - p1[0] / r) / params.b) / SQRT2
    f = -0.5j * params.hbar * (labels.v_final * u_T + v_0 * labels.u_initial)
    return ActionResult(I_s, complex(f))


def d2s_mixed(root: RootResult, params: ModelParams, config: ShootingConfig | None = None, h=D2S_STEP) -> complex:
    """Mixed derivative of the action from the sensitivity of the final point.

    Each of the four partial derivatives of ``x1(T)``, ``p1(T)`` with respect
    to ``q'`` and ``p'`` is a central difference over re-converged roots,
    seeded with the unperturbed one.
    """
    config = config or ShootingConfig()
    lab = root.labels
    ends = {}
    for key, dq, dp in (("q+", h, 0.0), ("q-", -h, 0.0), ("p+", 0.0, h), ("p-", 0.0, -h)):
        shifted = PropagatorLabels.make(
            lab.initial.q + dq, lab.initial.p + dp, lab.final.q, lab.final.p, lab.T, params
        )
        r = descend(root.guess, shifted, params, config, keep_trajectory=False)
        ends[key] = r.endpoint
    dx_dq = (ends["q+"].x1 - ends["q-"].x1) / (2 * h)
    dp_dq = (ends["q+"].p1 - ends["q-"].p1) / (2 * h)
    dx_dp = (ends["p+"].x1 - ends["p-"].x1) / (2 * h)
    dp_dp = (ends["p+"].p1 - ends["p-"].p1) / (2 * h)
    bc = params.b_over_c
    return params.hbar * complex(bc * dp_dq - dx_dp / bc, -(dx_dq + dp_dp))


def phase_integral(traj: Trajectory, model: SmoothedHamiltonian | None = None) -> complex:
    model = model or traj.model
    return _quad(h_mixed_second_derivative(model, traj.q) + 0j, traj.t)


def amplitude_delta(d2S: complex, phase_int: complex, params: ModelParams) -> complex:
    if abs(d2S) < CAUSTIC_TOL * params.hbar:
        raise CausticError(f"|d2S| = {abs(d2S):.3e} at a caustic")
    hbar = params.hbar
    return -1j * hbar / d2S * cmath.exp(-1j * phase_int / hbar)


def prefactor(root: RootResult, params: ModelParams, config: ShootingConfig | None = None, h=D2S_STEP) -> PrefactorResult:
    if root.trajectory is None:
        raise ValueError("root was computed without keep_trajectory")
    d2S = d2s_mixed(root, params, config, h)
    phi = phase_integral(root.trajectory)
    return PrefactorResult(d2S, phi, amplitude_delta(d2S, phi, params), root.labels.T)


def harmonic_action_exponent(labels: PropagatorLabels, params: ModelParams) -> complex:
    """``i S / hbar`` in closed form for the harmonic oscillator (beta = 0)."""
    w = math.sqrt(params.lam)
    return labels.u_initial * labels.v_final * cmath.exp(-1j * w * labels.T) - 0.5j * w * labels.T
