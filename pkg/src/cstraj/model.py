"""Physical parameters, coherent-state labels and the smoothed Hamiltonian.

The Hamiltonian is ``H = p**2/2 + lam*q**2/2 + beta*q**4`` at unit mass.  Its
coherent-state expectation value (the smoothed Hamiltonian) is again a
polynomial in ``q`` and ``p``, so every quantity below is evaluated with plain
complex arithmetic and split into real components only at the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model.

    ``c`` is derived as ``hbar / b`` so the minimum-uncertainty relation
    ``b*c = hbar`` can never be violated.  With ``smoothed=False`` the flow is
    generated by the bare classical Hamiltonian (no zero-point terms), which is
    what real-orbit checks at large energy use.
    """

    hbar: float = 1.0
    b: float = 1.0
    lam: float = 1.0
    beta: float = 0.0
    smoothed: bool = True

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar!r}")
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"b must be positive and finite, got {self.b!r}")
        if not math.isfinite(self.lam):
            raise ValueError(f"lam must be finite, got {self.lam!r}")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be >= 0, got {self.beta!r}")

    @property
    def c(self) -> float:
        return self.hbar / self.b

    @property
    def b_over_c(self) -> float:
        return self.b / self.c


@dataclass(frozen=True)
class CoherentLabel:
    """Mean position/momentum of a coherent state together with its widths."""

    q: float
    p: float
    b: float = 1.0
    c: float = 1.0

    @classmethod
    def from_params(cls, q, p, params: ModelParams) -> "CoherentLabel":
        return cls(float(q), float(p), params.b, params.c)

    @property
    def z(self) -> complex:
        return complex(self.q / self.b, self.p / self.c) / SQRT2


@dataclass(frozen=True)
class PropagatorLabels:
    initial: CoherentLabel
    final: CoherentLabel
    T: float

    def __post_init__(self):
        if not self.T >= 0:
            raise ValueError(f"propagation time must be >= 0, got {self.T!r}")

    @classmethod
    def make(cls, q_i, p_i, q_f, p_f, T, params: ModelParams) -> "PropagatorLabels":
        return cls(
            CoherentLabel.from_params(q_i, p_i, params),
            CoherentLabel.from_params(q_f, p_f, params),
            float(T),
        )

    def at(self, T) -> "PropagatorLabels":
        return PropagatorLabels(self.initial, self.final, float(T))

    def swapped_conjugate(self) -> "PropagatorLabels":
        """Labels (z'*, z''*) -> (z''*, z'*): the time-reversed transition."""
        i, f = self.initial, self.final
        return PropagatorLabels(
            CoherentLabel(f.q, -f.p, f.b, f.c), CoherentLabel(i.q, -i.p, i.b, i.c), self.T
        )

    @property
    def u_initial(self) -> complex:
        return self.initial.z

    @property
    def v_final(self) -> complex:
        return self.final.z.conjugate()


@dataclass(frozen=True)
class ComplexPhasePoint:
    """Point of complexified phase space, ``q = x1 + i p2`` and ``p = p1 + i x2``."""

    x1: float
    p1: float
    x2: float
    p2: float

    @classmethod
    def from_qp(cls, q, p) -> "ComplexPhasePoint":
        q = complex(q)
        p = complex(p)
        return cls(q.real, p.real, p.imag, q.imag)

    @property
    def q(self) -> complex:
        return complex(self.x1, self.p2)

    @property
    def p(self) -> complex:
        return complex(self.p1, self.x2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.p1, self.x2, self.p2])


@dataclass(frozen=True)
class SmoothedHamiltonian:
    params: ModelParams

    @property
    def lam_eff(self) -> float:
        """Coefficient of ``q**2/2`` after smoothing."""
        p = self.params
        if not p.smoothed:
            return p.lam
        return p.lam + 6.0 * p.beta * p.b**2

    @property
    def zero_point(self) -> float:
        p = self.params
        if not p.smoothed:
            return 0.0
        return (p.c**2 + p.lam * p.b**2 + 3.0 * p.beta * p.b**4) / 4.0

    @property
    def omega_eff(self):
        """Small-oscillation frequency of the smoothed potential, or None."""
        if self.lam_eff <= 0:
            return None
        return math.sqrt(self.lam_eff)

    @property
    def beta(self) -> float:
        return self.params.beta


def smoothed_h(model: SmoothedHamiltonian, q, p):
    """Smoothed Hamiltonian at complex (q, p); works elementwise on arrays."""
    q2 = q * q
    return 0.5 * p * p + 0.5 * model.lam_eff * q2 + model.beta * q2 * q2 + model.zero_point


def force(model: SmoothedHamiltonian, q):
    """``-dH/dq`` evaluated in complex arithmetic."""
    return -(model.lam_eff + 4.0 * model.beta * q * q) * q


def flow_rhs(model: SmoothedHamiltonian, pt: ComplexPhasePoint) -> np.ndarray:
    """Time derivatives ``(x1', p1', x2', p2')`` of the real four-dimensional flow.

    Computed from ``q' = p`` and ``p' = -dH/dq`` and split with the same
    convention as :class:`ComplexPhasePoint`.
    """
    qdot = pt.p
    pdot = force(model, pt.q)
    return np.array([qdot.real, pdot.real, pdot.imag, qdot.imag])


def h_mixed_second_derivative(model: SmoothedHamiltonian, pt_or_q):
    """``d2H/du dv = (b**2/2) H_qq + (c**2/2) H_pp``.

    Accepts a :class:`ComplexPhasePoint` or a complex ``q`` (scalar or array),
    since the value does not depend on ``p``.
    """
    q = pt_or_q.q if isinstance(pt_or_q, ComplexPhasePoint) else pt_or_q
    prm = model.params
    h_qq = model.lam_eff + 12.0 * model.beta * q * q
    return 0.5 * prm.b**2 * h_qq + 0.5 * prm.c**2
