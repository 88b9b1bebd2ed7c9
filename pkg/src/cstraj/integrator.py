"""Fixed-step RK4 propagation of the complexified Hamilton equations."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import NonFiniteError
from .model import ComplexPhasePoint, SmoothedHamiltonian, flow_rhs, smoothed_h

logger = logging.getLogger(__name__)

CONSERVATION_TOL = 1e-8
DEFAULT_STEPS = 3000


@numba.njit(cache=True)
def _rk4_endpoint(q, p, T, n, lam_eff, beta):
    """Integrate q' = p, p' = -(lam_eff + 4 beta q^2) q; return (q, p, bad_step)."""
    h = T / n
    half = 0.5 * h
    for k in range(n):
        k1q = p
        k1p = -(lam_eff + 4.0 * beta * q * q) * q
        qa = q + half * k1q
        k2q = p + half * k1p
        k2p = -(lam_eff + 4.0 * beta * qa * qa) * qa
        qb = q + half * k2q
        k3q = p + half * k2p
        k3p = -(lam_eff + 4.0 * beta * qb * qb) * qb
        qc = q + h * k3q
        k4q = p + h * k3p
        k4p = -(lam_eff + 4.0 * beta * qc * qc) * qc
        q = q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        p = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        if not (np.isfinite(q.real) and np.isfinite(q.imag)
                and np.isfinite(p.real) and np.isfinite(p.imag)):
            return q, p, k + 1
    return q, p, -1


@numba.njit(cache=True)
def _rk4_path(q, p, T, n, lam_eff, beta):
    qs = np.empty(n + 1, dtype=np.complex128)
    ps = np.empty(n + 1, dtype=np.complex128)
    qs[0] = q
    ps[0] = p
    for k in range(n):
        q, p, bad = _rk4_endpoint(q, p, T / n, 1, lam_eff, beta)
        qs[k + 1] = q
        ps[k + 1] = p
        if bad >= 0:
            return qs, ps, k + 1
    return qs, ps, -1


@dataclass
class Trajectory:
    """Stored RK4 trajectory on a uniform grid over ``[0, T]``.

    ``q`` and ``p`` hold the complex coordinates; the four real components
    are exposed as properties.
    """

    model: SmoothedHamiltonian
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    energy0: complex
    warnings: list = field(default_factory=list)

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    @property
    def x1(self):
        return self.q.real

    @property
    def p2(self):
        return self.q.imag

    @property
    def p1(self):
        return self.p.real

    @property
    def x2(self):
        return self.p.imag

    def point(self, k) -> ComplexPhasePoint:
        return ComplexPhasePoint.from_qp(self.q[k], self.p[k])

    @property
    def points(self):
        return [(float(self.t[k]), self.point(k)) for k in range(len(self.t))]

    @property
    def start(self) -> ComplexPhasePoint:
        return self.point(0)

    @property
    def end(self) -> ComplexPhasePoint:
        return self.point(-1)

    def energy_drift(self) -> float:
        e = smoothed_h(self.model, self.q, self.p)
        return float(np.max(np.abs(e - self.energy0)) / max(1.0, abs(self.energy0)))


def integrate_endpoint(model: SmoothedHamiltonian, start: ComplexPhasePoint, T, n_steps=DEFAULT_STEPS):
    """Endpoint of :func:`integrate` without storing the path."""
    if T == 0:
        return start
    q, p, bad = _rk4_endpoint(start.q, start.p, float(T), int(n_steps), model.lam_eff, model.beta)
    if bad >= 0:
        raise NonFiniteError(f"trajectory escaped at step {bad}", step=bad)
    return ComplexPhasePoint.from_qp(q, p)


def integrate(model: SmoothedHamiltonian, start: ComplexPhasePoint, T, n_steps=DEFAULT_STEPS) -> Trajectory:
    """Classical RK4 with step ``T/n_steps``, storing every step.

    ``T == 0`` gives the single-point trajectory.  A non-finite coordinate
    raises :class:`NonFiniteError` carrying the offending step index.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if not T >= 0:
        raise ValueError("T must be >= 0")
    e0 = complex(smoothed_h(model, start.q, start.p))
    if T == 0:
        return Trajectory(model, np.zeros(1), np.array([start.q]), np.array([start.p]), e0)
    qs, ps, bad = _rk4_path(start.q, start.p, float(T), int(n_steps), model.lam_eff, model.beta)
    if bad >= 0:
        raise NonFiniteError(f"trajectory escaped at step {bad}", step=bad)
    t = np.linspace(0.0, float(T), int(n_steps) + 1)
    traj = Trajectory(model, t, qs, ps, e0)
    drift = traj.energy_drift()
    if drift > CONSERVATION_TOL:
        msg = f"complex energy drift {drift:.3e} exceeds {CONSERVATION_TOL:g}"
        traj.warnings.append(msg)
        logger.warning(msg)
    return traj


def period_estimate(traj: Trajectory, rel_radius=1e-3):
    """Primitive period of the ``(x1, p1)`` projection, or None.

    Returns are detected as upward crossings of the line through the start
    point normal to the initial velocity; a crossing counts when it lands
    within ``rel_radius`` times the trajectory diameter of the start point.
    The period is the mean gap between consecutive returns (t=0 included).
    """
    if traj.n_steps < 2:
        return None
    xy = np.column_stack([traj.x1, traj.p1])
    x0 = xy[0]
    v0 = flow_rhs(traj.model, traj.start)[:2]
    if not np.any(v0):
        return None
    diameter = float(np.max(np.ptp(xy, axis=0)))
    if diameter == 0:
        return None
    s = (xy - x0) @ v0
    hits = [0.0]
    # skip the departure from the section itself
    k0 = int(np.argmax(s > 0)) if np.any(s > 0) else len(s)
    for k in range(max(k0, 1), len(s) - 1):
        if s[k] < 0 <= s[k + 1]:
            w = s[k] / (s[k] - s[k + 1])
            pt = xy[k] + w * (xy[k + 1] - xy[k])
            if np.hypot(*(pt - x0)) <= rel_radius * diameter:
                hits.append(traj.t[k] + w * (traj.t[k + 1] - traj.t[k]))
    if len(hits) < 2:
        return None
    return float(np.mean(np.diff(hits)))
