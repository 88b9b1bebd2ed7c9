"""Continuous tracking of the prefactor phase along a time sweep.

The square root in the semiclassical sum needs the branch that continues
smoothly from ``T = 0``.  :func:`track_sigma` does the quadrant bookkeeping
(principal arctangent plus a quadrant correction plus a winding count);
:func:`unwrap_half_phase` is the plain continuous unwrapper it must agree
with.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DiscontinuityError

TWO_PI = 2.0 * math.pi
MAX_JUMP = 0.5 * math.pi
_QUADRANT_SHIFT = {1: 0, 2: 1, 3: 1, 4: 2}


@dataclass(frozen=True)
class PhaseState:
    alpha: float
    quadrant_case: int
    s: int
    r: int
    phi: float
    sigma: float
    tau: float | None = None


def quadrant_phase(a: float, b: float):
    """Principal angle, quadrant case and full phase in ``[0, 2 pi)`` of ``a + i b``."""
    if a == 0 and b == 0:
        raise DegenerateInput("phase of 0 is undefined")
    if a == 0:
        alpha = 0.5 * math.pi
        case = 1 if b > 0 else 3
    else:
        alpha = math.atan(b / a)
        if a > 0:
            case = 1 if b >= 0 else 4
        else:
            case = 2 if b >= 0 else 3
    phi = alpha + _QUADRANT_SHIFT[case] * math.pi
    if phi >= TWO_PI:  # alpha + 2 pi rounds up when b/a underflows
        phi -= TWO_PI
    return alpha, case, phi


def _as_complex(item) -> complex:
    return complex(getattr(item, "d2S", item))


def track_sigma(sweep, period_hint=None):
    """Half-phase ``sigma = phi/2 + r*pi`` of each tracked value along a sweep.

    ``sweep`` holds complex numbers or objects with a ``d2S`` attribute.  The
    winding counter ``r`` moves whenever the quadrant phase wraps across
    ``0 = 2 pi``; its sign follows the direction of rotation.  Raises
    :class:`DiscontinuityError` when consecutive phases differ by more than
    ``pi/2`` on the unwrapped scale.
    """
    states = []
    prev = None
    r = 0
    for k, item in enumerate(sweep):
        z = _as_complex(item)
        alpha, case, phi = quadrant_phase(z.real, z.imag)
        if prev is not None:
            best = min((r - 1, r, r + 1), key=lambda m: abs(phi + m * TWO_PI - prev))
            jump = abs(phi + best * TWO_PI - prev)
            if jump > MAX_JUMP:
                raise DiscontinuityError(
                    f"phase jump {jump:.3f} rad at sweep index {k}; refine the grid or check for a caustic"
                )
            r = best
        prev = phi + r * TWO_PI
        states.append(PhaseState(alpha, case, _QUADRANT_SHIFT[case], r, phi, 0.5 * phi + r * math.pi, period_hint))
    return states


def unwrap_half_phase(values) -> np.ndarray:
    """Half of the continuously unwrapped argument."""
    return 0.5 * np.unwrap(np.angle(np.asarray(values, dtype=complex)))


def sqrt_branch_phases(prefactors, hbar: float) -> np.ndarray:
    """Argument of the continuous branch of ``sqrt(1/Delta)`` along a sweep.

    ``arg(1/Delta) = pi/2 + arg(d2S) + Re(phase_integral)/hbar``; only the
    ``d2S`` term can wind, so its tracked half-phase carries the branch.
    The branch is pinned to the principal root at the first point.
    """
    prefactors = list(prefactors)
    if not prefactors:
        return np.zeros(0)
    sig = np.array([s.sigma for s in track_sigma(prefactors)])
    re_phi = np.array([complex(p.phase_integral).real for p in prefactors])
    first = 0.5 * np.angle(1.0 / prefactors[0].delta)
    return first + (sig - sig[0]) + (re_phi - re_phi[0]) / (2.0 * hbar)
