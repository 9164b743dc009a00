"""Prox-linear sequential convex programming driver.

Each iteration linearizes the discretized dynamics about the current iterate,
builds the scaled subproblem, solves it with the customized PIPG solver
(warm-started from the previous subproblem), and takes the full step::

    x_k <- x_bar_k + Px x_hat_k,   u_k <- u_bar_k + Pu u_hat_k

followed by quaternion renormalization. The loop stops when the dynamics
defects and the last accepted scaled step are both below tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import logging
import math
from typing import Callable, Optional

import numpy as np

from . import rocket6dof as r6
from .ctcs import ModelHooks, final_time
from .discretizer import DEFAULT_STEPS, Grid, PropagationError, linearize_all
from .pipg import (
    PipgConfig,
    PipgWorkspace,
    ScaledSubproblem,
    SolverDivergenceError,
    deterministic_seed,
    pipg_custom,
    power_iteration_custom,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScpWeights:
    w_cost: float = 1.0
    w_prox: float = 1.0
    w_ep: float = 100.0
    epsilon_relax: float = 1e-9

    def __post_init__(self):
        for name in ("w_cost", "w_prox", "w_ep", "epsilon_relax"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class ScalingPair:
    Px: np.ndarray
    Pu: np.ndarray

    def __post_init__(self):
        Px = np.asarray(self.Px, dtype=float)
        Pu = np.asarray(self.Pu, dtype=float)
        if np.any(Px <= 0.0) or np.any(Pu <= 0.0):
            raise ValueError("scaling diagonals must be strictly positive")
        object.__setattr__(self, "Px", Px)
        object.__setattr__(self, "Pu", Pu)
        object.__setattr__(self, "Px_inv", 1.0 / Px)
        object.__setattr__(self, "Pu_inv", 1.0 / Pu)

    def scale(self, x, u, x_bar, u_bar):
        return (x - x_bar) * self.Px_inv, (u - u_bar) * self.Pu_inv

    def unscale(self, x_hat, u_hat, x_bar, u_bar):
        return x_bar + x_hat * self.Px, u_bar + u_hat * self.Pu


@dataclass
class TrajectoryIterate:
    x: np.ndarray  # (N, n_x)
    u: np.ndarray  # (N, n_u)
    iteration: int = 0

    def copy(self):
        return TrajectoryIterate(self.x.copy(), self.u.copy(), self.iteration)


@dataclass
class Problem:
    """A free-final-time trajectory problem in augmented form.

    ``x_init`` fixes every model state at tau = 0 (the violation integrator
    starts at 0); ``idx_final`` / ``z_final`` select and fix model states at
    tau = 1. Bounds on the control apply to the dilation factor only.
    """

    hooks: ModelHooks
    grid: Grid
    x_init: np.ndarray
    idx_final: np.ndarray
    z_final: np.ndarray
    s_min: float
    s_max: float
    e_cost: np.ndarray  # on the model state
    scaling: ScalingPair
    weights: ScpWeights = field(default_factory=ScpWeights)
    steps: int = DEFAULT_STEPS
    t_f_guess: float = 1.0
    params: Optional[r6.VehicleParams] = None
    quaternion_slice: Optional[slice] = None

    def __post_init__(self):
        self.x_init = np.asarray(self.x_init, dtype=float)
        self.idx_final = np.asarray(self.idx_final, dtype=np.int64)
        self.z_final = np.asarray(self.z_final, dtype=float)
        self.e_cost = np.asarray(self.e_cost, dtype=float)
        if not 0.0 < self.s_min <= self.s_max:
            raise ValueError("require 0 < s_min <= s_max")

    @property
    def n_x(self):
        return self.hooks.n_x

    @property
    def n_u(self):
        return self.hooks.n_u

    @property
    def e_cost_aug(self):
        return np.concatenate([self.e_cost, [0.0]])

    @property
    def idx_init_aug(self):
        return np.arange(self.n_x)

    @property
    def z_init_aug(self):
        return np.concatenate([self.x_init, [0.0]])

    def control_bounds(self):
        lo = np.full(self.n_u, -np.inf)
        hi = np.full(self.n_u, np.inf)
        lo[-1], hi[-1] = self.s_min, self.s_max
        return lo, hi


@dataclass(frozen=True)
class ScpConfig:
    """SCP loop settings.

    With ``adaptive_prox`` every candidate step is tested against the scaled
    merit (terminal cost plus l1 defect penalty): the step is kept when the
    actual merit decrease is at least ``ratio_accept`` times the decrease the
    convex model predicted, otherwise it is discarded and the proximal weight
    multiplied by ``prox_grow``. Very good agreement (``ratio_good``) relaxes
    the weight by ``prox_shrink``, never below ``ScpWeights.w_prox``. Steps
    that change the merit by less than ``merit_slack`` (relative), and steps
    whose candidate already meets both tolerances, are kept: close to a
    solution the predicted decrease drops below solver accuracy.

    ``y_scale_bounds`` rescales the constraint-violation state each solve so
    its linearized row stays of order one. ``omega_per_prox`` ties the PIPG
    primal-dual balance to the current proximal weight.

    ``reset_relaxation_duals`` drops the warm-started multipliers of the
    violation-integrator rows before each solve. They go stale when a path
    constraint switches off, and the integral dual update needs many
    iterations to unwind them; the default keeps the full warm start.
    """

    max_iters: int = 25
    tol_feas: float = 1e-6
    tol_step: float = 1e-5
    pipg: PipgConfig = field(default_factory=PipgConfig)
    seed: int = 0
    adaptive_prox: bool = True
    ratio_accept: float = 0.1
    ratio_good: float = 0.75
    prox_grow: float = 4.0
    prox_shrink: float = 0.5
    prox_max: float = 1e8
    merit_slack: float = 1e-9
    y_scale_bounds: Optional[tuple] = None
    omega_per_prox: Optional[float] = None
    prox_initial: Optional[float] = None
    reset_relaxation_duals: bool = False

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not (self.tol_feas > 0.0 and self.tol_step > 0.0):
            raise ValueError("tolerances must be positive")
        if not 0.0 <= self.ratio_accept < self.ratio_good <= 1.0:
            raise ValueError("require 0 <= ratio_accept < ratio_good <= 1")
        if not (self.prox_grow > 1.0 and 0.0 < self.prox_shrink <= 1.0):
            raise ValueError("require prox_grow > 1 and 0 < prox_shrink <= 1")


@dataclass
class ScpHistoryEntry:
    iteration: int
    penalized_cost: float
    cost: float
    defect_inf: float
    step_inf: float
    pipg_iterations: int
    sigma: float
    merit: float = math.nan
    w_prox: float = math.nan
    accepted: bool = True


@dataclass
class ScpResult:
    iterate: TrajectoryIterate
    iterations: int
    converged: bool
    history: list
    defect_inf: float
    boundary_residual: float
    status: str = ""


# ---------------------------------------------------------------------------


def slerp(q0, q1, t):
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    d = float(q0 @ q1)
    if d < 0.0:
        q1, d = -q1, -d
    if d > 1.0 - 1e-12:
        q = q0 + t * (q1 - q0)
        return q / np.linalg.norm(q)
    th = math.acos(d)
    return (math.sin((1.0 - t) * th) * q0 + math.sin(t * th) * q1) / math.sin(th)


def initial_guess(problem, grid=None):
    """Straight-line guess for the 6-DoF landing problem.

    Position and velocity are interpolated linearly between the boundary
    values, attitude by slerp, angular rate is zero and mass decreases
    linearly to the dry mass. Thrust cancels gravity at every node (never
    zero, so the thrust-norm Jacobians exist); torque is zero and the
    dilation factor equals the final-time guess.
    """
    p = problem.params
    if p is None:
        raise ValueError("initial_guess needs vehicle parameters; pass an explicit iterate for other models")
    grid = problem.grid if grid is None else grid
    tau = grid.nodes
    N = grid.N
    xi_f = problem.x_init.copy()
    xi_f[problem.idx_final] = problem.z_final
    x = np.zeros((N, problem.n_x))
    u = np.zeros((N, problem.n_u))
    m_i = problem.x_init[r6.IDX_M]
    for k, t in enumerate(tau):
        x[k, r6.IDX_M] = (1.0 - t) * m_i + t * p.m_dry
        x[k, r6.IDX_R] = (1.0 - t) * problem.x_init[r6.IDX_R] + t * xi_f[r6.IDX_R]
        x[k, r6.IDX_V] = (1.0 - t) * problem.x_init[r6.IDX_V] + t * xi_f[r6.IDX_V]
        x[k, r6.IDX_Q] = slerp(problem.x_init[r6.IDX_Q], xi_f[r6.IDX_Q], t)
        x[k, r6.IDX_W] = 0.0
        u[k, r6.IDX_T] = r6.dcm(x[k, r6.IDX_Q]).T @ (-x[k, r6.IDX_M] * p.g_inertial)
        u[k, -1] = problem.t_f_guess
    x[0] = problem.z_init_aug
    x[-1, problem.idx_final] = problem.z_final
    x[:, -1] = 0.0
    return TrajectoryIterate(x=x, u=u, iteration=0)


def defects(iterate, blocks):
    x = iterate.x
    return np.array([b.x_end - x[k + 1] for k, b in enumerate(blocks)])


def penalized_cost(Z, grid, hooks, weights, e_cost_aug, steps=DEFAULT_STEPS, blocks=None):
    """Terminal cost plus the l1 exact penalty on the dynamics defects."""
    if blocks is None:
        blocks = linearize_all(Z.x, Z.u, grid, hooks, steps)
    d = defects(Z, blocks)
    return weights.w_cost * float(Z.x[-1] @ e_cost_aug) + weights.w_ep * float(np.abs(d).sum())


def assemble_subproblem(Zbar, blocks, scaling, weights, bounds, boundary, e_cost_aug):
    """Scale and precondition the linearized problem about ``Zbar``.

    ``bounds`` is ``(u_lo, u_hi)`` per control component (use +-inf for
    components that are not boxed); ``boundary`` is
    ``(idx_i, z_i, idx_f, z_f)`` on the augmented state.
    """
    x_bar, u_bar = Zbar.x, Zbar.u
    N, n = x_bar.shape
    m = u_bar.shape[1]
    K = N - 1
    Px, Pu = scaling.Px, scaling.Pu
    Pxi, Pui = scaling.Px_inv, scaling.Pu_inv

    Am = np.empty((K, n, n))
    Bm = np.empty((K, n, m))
    Bp = np.empty((K, n, m))
    w = np.empty((K, n))
    for k, b in enumerate(blocks):
        Am[k] = Pxi[:, None] * b.A * Px[None, :]
        Bm[k] = Pxi[:, None] * b.Bm * Pu[None, :]
        Bp[k] = Pxi[:, None] * b.Bp * Pu[None, :]
        w[k] = Pxi * (b.x_end - x_bar[k + 1])
    Ap = np.broadcast_to(-np.eye(n), (K, n, n)).copy()

    E_y = np.zeros(n)
    E_y[-1] = 1.0
    eps = weights.epsilon_relax * Pxi[-1] - Pxi[-1] * (x_bar[1:, -1] - x_bar[:-1, -1])

    lo, hi = bounds
    u_min = (np.asarray(lo)[None, :] - u_bar) * Pui[None, :]
    u_max = (np.asarray(hi)[None, :] - u_bar) * Pui[None, :]

    idx_i, z_i, idx_f, z_f = boundary
    z_i_hat = Pxi[idx_i] * (np.asarray(z_i) - x_bar[0, idx_i])
    z_f_hat = Pxi[idx_f] * (np.asarray(z_f) - x_bar[-1, idx_f])

    return ScaledSubproblem(
        Am=Am, Ap=Ap, Bm=Bm, Bp=Bp, w=w, eps=eps, u_min=u_min, u_max=u_max, E_y=E_y,
        idx_i=idx_i, z_i=z_i_hat, idx_f=idx_f, z_f=z_f_hat, e_cost=e_cost_aug,
        w_cost=weights.w_cost, w_prox=weights.w_prox, w_ep=weights.w_ep,
    )


def _renormalize(x, qs):
    if qs is not None:
        q = x[:, qs]
        x[:, qs] = q / np.linalg.norm(q, axis=1, keepdims=True)


def boundary_residual(problem, Z):
    r0 = np.abs(Z.x[0] - problem.z_init_aug).max()
    rf = np.abs(Z.x[-1, problem.idx_final] - problem.z_final).max() if problem.idx_final.size else 0.0
    return float(max(r0, rf))


def scaled_merit(x_final, d, scaling, weights, e_cost_aug):
    """Terminal cost and l1 defect penalty in the subproblem's scaled units."""
    cost = weights.w_cost * float((x_final * scaling.Px_inv) @ e_cost_aug)
    return cost + weights.w_ep * float(np.abs(d * scaling.Px_inv).sum())


def iteration_scaling(scaling, blocks, bounds):
    """Rescale the violation integrator to the size of its linearized row.

    The y-row of the linearized dynamics is ``2 s max(g, 0) dg``; it is large
    while constraints are badly violated and vanishes as they become
    satisfied. Matching ``Py`` to its magnitude (clipped to ``bounds``) keeps
    the scaled row of order one, so neither the spectral estimate nor the
    inequality multipliers blow up.
    """
    if bounds is None:
        return scaling
    lo, hi = bounds
    Px, Pu = scaling.Px, scaling.Pu
    size = 0.0
    for b in blocks:
        size = max(
            size,
            float(np.abs(b.A[-1, :-1] * Px[:-1]).max()),
            float(np.abs(b.Bm[-1] * Pu).max()),
            float(np.abs(b.Bp[-1] * Pu).max()),
        )
    Px = Px.copy()
    Px[-1] = min(max(size, lo), hi)
    return ScalingPair(Px, Pu)


def _model_defects(sub, x_hat, u_hat):
    """Residual of the linearized scaled dynamics at a subproblem point."""
    return (
        np.einsum("kij,kj->ki", sub.Am, x_hat[:-1])
        + np.einsum("kij,kj->ki", sub.Ap, x_hat[1:])
        + np.einsum("kij,kj->ki", sub.Bm, u_hat[:-1])
        + np.einsum("kij,kj->ki", sub.Bp, u_hat[1:])
        + sub.w
    )


def scp_solve(problem, config=None, initial=None, mapper=map, callback: Optional[Callable] = None):
    """Run the prox-linear loop from ``initial`` (or the default guess).

    ``ScpResult.iterations`` counts subproblem solves, rejected candidates
    included. ``callback(solve_index, iterate, history_entry)`` is called
    after every solve and once for the starting point.
    """
    config = ScpConfig() if config is None else config
    grid, hooks, scaling, weights = problem.grid, problem.hooks, problem.scaling, problem.weights
    Z = initial_guess(problem) if initial is None else initial.copy()
    N, n, m = grid.N, problem.n_x, problem.n_u
    bounds = problem.control_bounds()
    boundary = (problem.idx_init_aug, problem.z_init_aug, problem.idx_final, problem.z_final)
    e_cost = problem.e_cost_aug
    Pxi = scaling.Px_inv

    def evaluate(Z):
        blocks = linearize_all(Z.x, Z.u, grid, hooks, problem.steps, mapper=mapper)
        d = defects(Z, blocks)
        pc = weights.w_cost * float(Z.x[-1] @ e_cost) + weights.w_ep * float(np.abs(d).sum())
        return blocks, d, float(np.abs(d * Pxi).max()), pc

    history = []
    ws = PipgWorkspace.zeros(N, n, m)
    w_prox = weights.w_prox if config.prox_initial is None or not config.adaptive_prox else max(config.prox_initial, weights.w_prox)
    last_step = math.inf
    converged = False
    status = "max_iters"
    solves = 0

    try:
        blocks, d, defect_inf, pc = evaluate(Z)
    except (PropagationError, ValueError) as exc:
        return ScpResult(Z, 0, False, history, math.inf, boundary_residual(problem, Z), f"diverged: {exc}")

    def record(entry):
        history.append(entry)
        log.debug(
            "scp %2d  merit %.6f  defect %.3e  step %.3e  prox %.3g  %s",
            entry.iteration, entry.merit, entry.defect_inf, entry.step_inf, entry.w_prox,
            "ok" if entry.accepted else "rejected",
        )
        if callback is not None:
            callback(entry.iteration, Z, entry)

    merit = scaled_merit(Z.x[-1], d, scaling, weights, e_cost)
    record(ScpHistoryEntry(0, pc, weights.w_cost * float(Z.x[-1] @ e_cost), defect_inf, last_step, 0, 0.0, merit, w_prox))

    while True:
        if defect_inf <= config.tol_feas and last_step <= config.tol_step:
            converged = True
            status = "converged"
            break
        if solves >= config.max_iters:
            break

        w_j = replace(weights, w_prox=w_prox)
        sc_j = iteration_scaling(scaling, blocks, config.y_scale_bounds)
        sub = assemble_subproblem(Z, blocks, sc_j, w_j, bounds, boundary, e_cost)
        seed = ws if not ws.primal_is_zero() else deterministic_seed(N, n, m, config.seed)
        pc_cfg = config.pipg
        if config.omega_per_prox is not None:
            pc_cfg = replace(pc_cfg, omega=config.omega_per_prox * w_prox)
        if config.reset_relaxation_duals:
            for a in (ws.theta, ws.theta_t):
                a[:] = 0.0
            ws.phi[:, -1] = 0.0
            ws.phi_t[:, -1] = 0.0
        ws.sigma = power_iteration_custom(sub, seed, pc_cfg.power_eps_abs, pc_cfg.power_eps_rel, pc_cfg.eps_buff, pc_cfg.power_j_max)
        try:
            ws = pipg_custom(sub, pc_cfg, ws)
        except SolverDivergenceError as exc:
            status = f"diverged: {exc}"
            break
        solves += 1

        x_new, u_new = sc_j.unscale(ws.x, ws.u, Z.x, Z.u)
        _renormalize(x_new, problem.quaternion_slice)
        dx, du = scaling.scale(x_new, u_new, Z.x, Z.u)
        step = float(max(np.abs(dx).max(), np.abs(du).max()))
        cand = TrajectoryIterate(x=x_new, u=u_new, iteration=Z.iteration + 1)
        try:
            c_blocks, c_d, c_defect, c_pc = evaluate(cand)
        except (PropagationError, ValueError) as exc:
            # left the model's domain (e.g. negative mass): treat as a rejected step
            c_blocks = None
            log.debug("candidate propagation failed: %s", exc)

        accepted = True
        if config.adaptive_prox:
            m_old = scaled_merit(Z.x[-1], d, sc_j, weights, e_cost)
            m_new = scaled_merit(cand.x[-1], c_d, sc_j, weights, e_cost) if c_blocks is not None else math.inf
            predicted = weights.w_cost * float((Z.x[-1] * sc_j.Px_inv + ws.x[-1]) @ e_cost) + weights.w_ep * float(
                np.abs(_model_defects(sub, ws.x, ws.u)).sum()
            )
            pred_drop = m_old - predicted
            actual_drop = m_old - m_new
            if pred_drop > 0.0:
                ratio = actual_drop / pred_drop
            else:
                ratio = 1.0 if actual_drop >= 0.0 else -math.inf
            noise = config.merit_slack * max(1.0, abs(m_old))
            flat = pred_drop <= noise and actual_drop >= -noise
            done = c_blocks is not None and c_defect <= config.tol_feas and step <= config.tol_step
            accepted = bool(np.isfinite(m_new)) and (ratio >= config.ratio_accept or flat or done)
            if not accepted:
                w_prox = min(w_prox * config.prox_grow, config.prox_max)
            elif ratio >= config.ratio_good and not flat:
                w_prox = max(w_prox * config.prox_shrink, weights.w_prox)
        elif c_blocks is None:
            status = "diverged: candidate propagation failed"
            break

        if accepted:
            Z, blocks, d, defect_inf, pc = cand, c_blocks, c_d, c_defect, c_pc
            merit = scaled_merit(Z.x[-1], d, scaling, weights, e_cost)
            last_step = step
        record(
            ScpHistoryEntry(
                iteration=solves,
                penalized_cost=pc,
                cost=weights.w_cost * float(Z.x[-1] @ e_cost),
                defect_inf=defect_inf,
                step_inf=step,
                pipg_iterations=ws.iterations,
                sigma=ws.sigma,
                merit=merit,
                w_prox=w_prox,
                accepted=accepted,
            )
        )
        if not accepted and w_prox >= config.prox_max:
            status = "stalled: proximal weight at its cap"
            break

    return ScpResult(
        iterate=Z,
        iterations=solves,
        converged=converged,
        history=history,
        defect_inf=defect_inf,
        boundary_residual=boundary_residual(problem, Z),
        status=status,
    )


def trajectory_final_time(problem, Z):
    return final_time(Z.u[:, -1], problem.grid.nodes)
