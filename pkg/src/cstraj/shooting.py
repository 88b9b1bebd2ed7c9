"""Root search for complex trajectories obeying coherent-state boundary conditions.

Only ``x1(0)`` and ``p1(0)`` are free: the initial conditions fix ``x2(0)`` and
``p2(0)`` and the two final conditions leave a 2x2 nonlinear system, solved
by gradient descent on the endpoint distance ``D``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, NonFiniteError
from .integrator import DEFAULT_STEPS, Trajectory, _rk4_endpoint, integrate
from .model import ComplexPhasePoint, ModelParams, PropagatorLabels, SmoothedHamiltonian

logger = logging.getLogger(__name__)

EPS_FLOOR = 1e-12
DEDUP_TOL = 1e-6


@dataclass(frozen=True)
class ShootingConfig:
    delta: float = 1e-12
    eps0: float = 0.1
    eps_scale: float = 0.5
    fd_step: float = 1e-6
    max_iters: int = 2000
    n_steps: int = DEFAULT_STEPS
    max_halvings: int = 20

    def __post_init__(self):
        for name in ("delta", "eps0", "eps_scale", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.max_halvings < 0:
            raise ValueError("max_halvings must be >= 0")


@dataclass
class RootResult:
    x1_0: float
    p1_0: float
    D_final: float
    iters: int
    labels: PropagatorLabels
    endpoint: ComplexPhasePoint
    trajectory: Trajectory | None = None
    n_gradients: int = 0
    halvings: int = 0
    step_factor: float = 1.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def guess(self):
        return (self.x1_0, self.p1_0)

    @property
    def line_search_used(self) -> bool:
        return self.halvings > 0


def initial_conditions_from_guess(x1_0, p1_0, labels: PropagatorLabels, params: ModelParams) -> ComplexPhasePoint:
    """Complete the starting point so that ``u(0) = z'`` holds exactly."""
    x2 = (params.c / params.b) * (x1_0 - labels.initial.q)
    p2 = (params.b / params.c) * (labels.initial.p - p1_0)
    return ComplexPhasePoint(float(x1_0), float(p1_0), float(x2), float(p2))


def final_residual(end: ComplexPhasePoint, labels: PropagatorLabels, params: ModelParams):
    """Violation of the two final boundary conditions, as a 2-vector."""
    r = params.b_over_c
    return np.array([
        end.x1 + r * end.x2 - labels.final.q,
        end.p1 - end.p2 / r - labels.final.p,
    ])


def endpoint_distance(traj: Trajectory, labels: PropagatorLabels, params: ModelParams) -> float:
    return float(np.hypot(*final_residual(traj.end, labels, params)))


def _shoot(x1_0, p1_0, labels, params, n_steps, model=None):
    """Endpoint and residual for one guess, integrating without storage."""
    model = model or SmoothedHamiltonian(params)
    start = initial_conditions_from_guess(x1_0, p1_0, labels, params)
    if labels.T == 0:
        end = start
    else:
        q, p, bad = _rk4_endpoint(start.q, start.p, float(labels.T), int(n_steps),
                                  model.lam_eff, model.beta)
        if bad >= 0:
            raise NonFiniteError(f"trajectory escaped at step {bad}", step=bad)
        end = ComplexPhasePoint.from_qp(q, p)
    return end, final_residual(end, labels, params)


def _fd_h(x1_0, p1_0, config):
    return config.fd_step * max(1.0, abs(x1_0), abs(p1_0))


def residual_jacobian(x1_0, p1_0, labels, params, config, model=None):
    """Central-difference Jacobian of the final residual w.r.t. the guess."""
    h = _fd_h(x1_0, p1_0, config)
    jac = np.empty((2, 2))
    for j, (dx, dp) in enumerate(((h, 0.0), (0.0, h))):
        _, rp = _shoot(x1_0 + dx, p1_0 + dp, labels, params, config.n_steps, model)
        _, rm = _shoot(x1_0 - dx, p1_0 - dp, labels, params, config.n_steps, model)
        jac[:, j] = (rp - rm) / (2 * h)
    return jac


def gradient_of_D(x1_0, p1_0, labels, params, config, method="residual", model=None):
    """Gradient of ``D`` with respect to the guess ``(x1(0), p1(0))``.

    ``method="direct"`` differences ``D`` itself.  ``D`` is a cone at a root, so
    once ``D`` falls below roughly ``fd_step`` that estimate collapses; the
    default ``"residual"`` differences the smooth residual vector instead and
    applies the chain rule ``grad D = J^T r / D``.
    """
    if method == "direct":
        h = _fd_h(x1_0, p1_0, config)
        g = np.empty(2)
        for j, (dx, dp) in enumerate(((h, 0.0), (0.0, h))):
            _, rp = _shoot(x1_0 + dx, p1_0 + dp, labels, params, config.n_steps, model)
            _, rm = _shoot(x1_0 - dx, p1_0 - dp, labels, params, config.n_steps, model)
            g[j] = (np.hypot(*rp) - np.hypot(*rm)) / (2 * h)
        return g
    if method != "residual":
        raise ValueError(f"unknown gradient method {method!r}")
    _, r = _shoot(x1_0, p1_0, labels, params, config.n_steps, model)
    return _chain_gradient(r, residual_jacobian(x1_0, p1_0, labels, params, config, model))[0]


def _chain_gradient(r, jac):
    """``grad D`` and the step length minimising ``|r - eps J grad D|``."""
    d = np.hypot(*r)
    if d == 0:
        return np.zeros(2), 0.0
    g = jac.T @ r / d
    jg = jac @ g
    nn = jg @ jg
    return g, (r @ jg / nn if nn > 0 else 0.0)


def _zero_time_root(labels, params, config, keep_trajectory):
    # initial and final conditions at the same instant form a linear system
    x1 = 0.5 * (labels.initial.q + labels.final.q)
    p1 = 0.5 * (labels.initial.p + labels.final.p)
    start = initial_conditions_from_guess(x1, p1, labels, params)
    d = float(np.hypot(*final_residual(start, labels, params)))
    traj = integrate(SmoothedHamiltonian(params), start, 0.0) if keep_trajectory else None
    return RootResult(x1, p1, d, 0, labels, start, traj)


def descend(guess, labels: PropagatorLabels, params: ModelParams, config: ShootingConfig | None = None,
            keep_trajectory=True) -> RootResult:
    """Gradient descent on ``D`` from ``guess`` until ``D <= config.delta``.

    The step along ``-grad D`` is ``eps = factor * min(eps0, eps_scale * D)``.
    The gradient is reused while ``D`` keeps decreasing and recomputed when it
    does not.  Each fresh gradient also resets ``factor`` (at most 1) to the
    minimiser of the linearised residual along the gradient; a step that
    fails with a fresh gradient halves ``factor`` instead.
    """
    config = config or ShootingConfig()
    if labels.T == 0:
        return _zero_time_root(labels, params, config, keep_trajectory)
    model = SmoothedHamiltonian(params)
    x = np.array(guess, dtype=float)
    end, r = _shoot(x[0], x[1], labels, params, config.n_steps, model)
    d = float(np.hypot(*r))
    factor = 1.0
    grad = None
    fresh = False
    n_grad = halvings = streak = it = 0
    while d > config.delta:
        if it >= config.max_iters:
            raise NoConvergence(
                f"D={d:.3e} > delta={config.delta:g} after {it} iterations",
                best={"x1_0": x[0], "p1_0": x[1], "D": d, "iters": it},
            )
        it += 1
        base = min(config.eps0, max(EPS_FLOOR, config.eps_scale * d))
        if grad is None:
            jac = residual_jacobian(x[0], x[1], labels, params, config, model)
            grad, eps_lin = _chain_gradient(r, jac)
            n_grad += 1
            fresh = True
            factor = min(1.0, eps_lin / base) if eps_lin > 0 else 1.0
        trial = x - factor * base * grad
        try:
            t_end, t_r = _shoot(trial[0], trial[1], labels, params, config.n_steps, model)
            t_d = float(np.hypot(*t_r))
        except NonFiniteError:
            t_d = math.inf
        if t_d < d:
            x, end, r, d = trial, t_end, t_r, t_d
            fresh = False
            streak = 0
            continue
        if not fresh:
            grad = None
            continue
        factor *= 0.5
        halvings += 1
        streak += 1
        if streak > config.max_halvings:
            raise NoConvergence(
                f"descent stalled at D={d:.3e} after {config.max_halvings} step halvings",
                best={"x1_0": x[0], "p1_0": x[1], "D": d, "iters": it},
            )
    traj = None
    if keep_trajectory:
        start = initial_conditions_from_guess(x[0], x[1], labels, params)
        traj = integrate(model, start, labels.T, config.n_steps)
    return RootResult(
        float(x[0]), float(x[1]), d, it, labels, end, traj,
        n_gradients=n_grad, halvings=halvings, step_factor=factor,
        diagnostics={"line_search": halvings > 0},
    )


@dataclass
class ContinuationResult:
    """Roots along an ascending time grid; ``stopped_at`` marks a truncated sweep."""

    roots: list
    T_grid: np.ndarray
    stopped_at: float | None = None
    reason: str | None = None

    @property
    def truncated(self) -> bool:
        return self.stopped_at is not None

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def __getitem__(self, k):
        return self.roots[k]


def continuation_sweep(labels_base: PropagatorLabels, T_grid, params: ModelParams,
                       config: ShootingConfig | None = None, seed=None, keep_trajectory=True):
    """Solve each time in ``T_grid`` seeded with the previous converged guess.

    The first point is seeded with ``seed`` or the real guess ``(q', p')``.
    A failure ends the sweep; the roots found so far are returned.
    """
    config = config or ShootingConfig()
    T_grid = np.asarray(T_grid, dtype=float)
    if np.any(np.diff(T_grid) <= 0):
        raise ValueError("T_grid must be strictly ascending")
    guess = seed if seed is not None else (labels_base.initial.q, labels_base.initial.p)
    roots = []
    for T in T_grid:
        try:
            root = descend(guess, labels_base.at(T), params, config, keep_trajectory)
        except (NoConvergence, NonFiniteError) as exc:
            logger.warning("continuation stopped at T=%g: %s", T, exc)
            return ContinuationResult(roots, T_grid, float(T), str(exc))
        roots.append(root)
        guess = root.guess
    return ContinuationResult(roots, T_grid)


@dataclass
class MultiStartResult:
    roots: list
    n_failed: int = 0
    n_seeds: int = 0

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)


def multi_start(labels: PropagatorLabels, params: ModelParams, config: ShootingConfig | None = None,
                seeds=()) -> MultiStartResult:
    """Descend from every seed and keep the distinct converged roots."""
    config = config or ShootingConfig()
    roots, failed = [], 0
    seeds = list(seeds)
    for seed in seeds:
        try:
            root = descend(seed, labels, params, config)
        except (NoConvergence, NonFiniteError):
            failed += 1
            continue
        if any(math.hypot(root.x1_0 - o.x1_0, root.p1_0 - o.p1_0) < DEDUP_TOL for o in roots):
            continue
        roots.append(root)
    return MultiStartResult(roots, failed, len(seeds))
