"""Assembly of the semiclassical coherent-state propagator."""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .action import ActionResult, PrefactorResult, action, prefactor
from .errors import CausticError, DiscontinuityError, NoConvergence, NonFiniteError
from .model import ModelParams, PropagatorLabels
from .phase import sqrt_branch_phases
from .shooting import DEDUP_TOL, RootResult, ShootingConfig, continuation_sweep, descend

logger = logging.getLogger(__name__)

UNDERFLOW = 1e-300


@dataclass(frozen=True)
class RootTerm:
    root_id: int
    S: complex
    delta: complex
    sigma: float
    value: complex


@dataclass
class PropagatorSample:
    T: float
    K_scsp: complex
    gaussian: float
    terms: list = field(default_factory=list)

    def recompute(self) -> complex:
        return self.gaussian * sum((t.value for t in self.terms), 0j)


def gaussian_factor(labels: PropagatorLabels) -> float:
    return math.exp(-0.5 * abs(labels.final.z) ** 2 - 0.5 * abs(labels.initial.z) ** 2)


def root_term(root_id, act: ActionResult, pref: PrefactorResult, sigma: float, params: ModelParams):
    """One summand: ``|Delta|^-1/2 exp(i sigma) exp(i S / hbar)``, or None on underflow."""
    log_mag = -act.S.imag / params.hbar
    if log_mag < math.log(UNDERFLOW):
        return None
    if log_mag > 700.0:
        raise NonFiniteError(f"root term overflows: Im S / hbar = {-log_mag:.1f}")
    weight = cmath.exp(1j * act.S / params.hbar)
    value = abs(pref.delta) ** -0.5 * cmath.exp(1j * sigma) * weight
    return RootTerm(root_id, act.S, pref.delta, float(sigma), value)


def assemble(roots, labels: PropagatorLabels, params: ModelParams) -> PropagatorSample:
    """Combine ``(root, action, prefactor, sigma)`` tuples into the propagator.

    ``sigma`` is the full argument of the chosen ``sqrt(1/Delta)`` branch,
    not a correction on top of the principal root.
    """
    g = gaussian_factor(labels)
    terms = []
    for k, (root, act, pref, sigma) in enumerate(roots):
        if not np.isfinite(abs(pref.delta)):
            raise CausticError("non-finite prefactor")
        term = root_term(k, act, pref, sigma, params)
        if term is not None:
            terms.append(term)
    sample = PropagatorSample(labels.T, 0j, g, terms)
    sample.K_scsp = sample.recompute()
    return sample


@dataclass
class Branch:
    """One continued root family: roots, actions and prefactors at each grid index."""

    start_index: int
    roots: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    prefactors: list = field(default_factory=list)
    sigmas: np.ndarray | None = None


@dataclass
class SweepOutput:
    T_grid: np.ndarray
    samples: list
    branches: list
    truncated_at: float | None = None
    reason: str | None = None

    @property
    def truncated(self) -> bool:
        return self.truncated_at is not None

    @property
    def K(self) -> np.ndarray:
        return np.array([s.K_scsp for s in self.samples])

    @property
    def T(self) -> np.ndarray:
        return np.array([s.T for s in self.samples])


def _build_branch(roots, params, config, start_index=0):
    br = Branch(start_index)
    for root in roots:
        try:
            pref = prefactor(root, params, config)
        except (NoConvergence, NonFiniteError, CausticError) as exc:
            logger.warning("prefactor failed at T=%g: %s", root.labels.T, exc)
            return br, f"prefactor failed at T={root.labels.T:g}: {exc}", root.labels.T
        br.roots.append(root)
        br.actions.append(action(root.trajectory, root.labels, params))
        br.prefactors.append(pref)
    return br, None, None


def propagate_sweep(labels_base: PropagatorLabels, T_grid, params: ModelParams,
                    config: ShootingConfig | None = None, extra_seeds=()) -> SweepOutput:
    """Semiclassical propagator along an ascending time grid.

    The main branch is the continuation of the free root from the first grid
    time.  Every entry of ``extra_seeds`` starts another branch at the first
    grid time after ``T = 0``; branches that reconverge onto an existing one
    are dropped, and a branch that stops converging stops contributing.
    """
    config = config or ShootingConfig()
    T_grid = np.asarray(T_grid, dtype=float)
    cont = continuation_sweep(labels_base, T_grid, params, config)
    main, reason, stop = _build_branch(cont.roots, params, config)
    if cont.truncated and (stop is None or cont.stopped_at < stop):
        reason, stop = cont.reason, cont.stopped_at
    branches = [main]

    first = int(np.argmax(T_grid > 0)) if np.any(T_grid > 0) else None
    for seed in extra_seeds:
        if first is None:
            break
        try:
            r0 = descend(seed, labels_base.at(T_grid[first]), params, config, keep_trajectory=False)
        except (NoConvergence, NonFiniteError):
            logger.info("extra seed %s did not converge", seed)
            continue
        known = [b.roots[first - b.start_index] for b in branches
                 if 0 <= first - b.start_index < len(b.roots)]
        if any(math.hypot(r0.x1_0 - k.x1_0, r0.p1_0 - k.p1_0) < DEDUP_TOL for k in known):
            continue
        sub = continuation_sweep(labels_base, T_grid[first:], params, config, seed=r0.guess)
        br, _, _ = _build_branch(sub.roots, params, config, first)
        if br.roots:
            branches.append(br)

    n = len(main.roots)
    for br in branches:
        if not br.prefactors:
            br.sigmas = np.zeros(0)
            continue
        try:
            br.sigmas = sqrt_branch_phases(br.prefactors, params.hbar)
        except DiscontinuityError as exc:
            if br is main:
                raise
            logger.warning("dropping branch starting at index %d: %s", br.start_index, exc)
            br.sigmas = np.zeros(0)
            br.roots = br.actions = br.prefactors = []

    samples = []
    for k in range(n):
        parts = []
        for br in branches:
            j = k - br.start_index
            if 0 <= j < len(br.roots):
                parts.append((br.roots[j], br.actions[j], br.prefactors[j], br.sigmas[j]))
        samples.append(assemble(parts, labels_base.at(T_grid[k]), params))
    return SweepOutput(T_grid, samples, branches, stop, reason)


def propagate(labels: PropagatorLabels, params: ModelParams, config: ShootingConfig | None = None,
              n_grid=None) -> PropagatorSample:
    """Propagator at a single time, reached by continuation from ``T = 0``.

    The branch of the square root is only defined by continuity, so a single
    time is still computed along a grid (default spacing 0.01).
    """
    if labels.T == 0:
        return propagate_sweep(labels, [0.0], params, config).samples[0]
    n = n_grid or max(2, int(math.ceil(labels.T / 0.01)) + 1)
    out = propagate_sweep(labels, np.linspace(0.0, labels.T, n), params, config)
    if out.truncated:
        raise NoConvergence(out.reason or "sweep truncated")
    return out.samples[-1]
