"""FOH multiple-shooting discretization of the augmented dynamics.

Each interval is integrated independently from its own node state with
classical fixed-step RK4. The state transition and the two FOH input
sensitivities are integrated jointly with the state in one stacked system::

    Phi_x'  = A(tau) Phi_x
    Phi_u-' = A(tau) Phi_u- + B(tau) (tau_{k+1} - tau) / dtau
    Phi_u+' = A(tau) Phi_u+ + B(tau) (tau - tau_k) / dtau

so that ``x_end ~= A x_k + Bm u_k + Bp u_{k+1} + w``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ctcs import augmented_dynamics, rate_and_jacobians

DEFAULT_STEPS = 16
DEFAULT_AUDIT_SUBSTEPS = 64


class PropagationError(RuntimeError):
    """Integration produced a non-finite value."""

    def __init__(self, interval, detail=""):
        self.interval = interval
        msg = f"propagation diverged on interval {interval}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a grid needs at least two nodes")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValueError("grid must start at 0 and end at 1 exactly")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, N):
        nodes = np.linspace(0.0, 1.0, N)
        nodes[0], nodes[-1] = 0.0, 1.0
        return cls(nodes)

    @property
    def N(self):
        return self.nodes.size

    def interval(self, k):
        return float(self.nodes[k]), float(self.nodes[k + 1])


@dataclass
class LinearizedBlocks:
    A: np.ndarray
    Bm: np.ndarray
    Bp: np.ndarray
    w: np.ndarray
    x_end: np.ndarray


def foh_interp(u_k, u_k1, tau, tau_k, tau_k1):
    if not tau_k < tau_k1:
        raise ValueError(f"empty interval [{tau_k}, {tau_k1}]")
    if not tau_k <= tau <= tau_k1:
        raise ValueError(f"tau={tau} outside [{tau_k}, {tau_k1}]")
    if tau == tau_k:
        return np.array(u_k, dtype=float)
    if tau == tau_k1:
        return np.array(u_k1, dtype=float)
    d = tau_k1 - tau_k
    return (tau_k1 - tau) / d * np.asarray(u_k, dtype=float) + (tau - tau_k) / d * np.asarray(u_k1, dtype=float)


def _weights(tau, tau_k, tau_k1):
    d = tau_k1 - tau_k
    return (tau_k1 - tau) / d, (tau - tau_k) / d


def propagate_interval(x_k, u_k, u_k1, tau_k, tau_k1, hooks, steps=DEFAULT_STEPS, index=None):
    """Integrate one interval and return its linearized blocks."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x_k = np.asarray(x_k, dtype=float)
    u_k = np.asarray(u_k, dtype=float)
    u_k1 = np.asarray(u_k1, dtype=float)
    if not np.all(np.isfinite(x_k)):
        raise PropagationError(index, "non-finite initial state")
    n, m = hooks.n_x, hooks.n_u

    # columns: [x | Phi_x | Phi_u- | Phi_u+]
    Y = np.zeros((n, 1 + n + 2 * m))
    Y[:, 0] = x_k
    Y[:, 1 : 1 + n] = np.eye(n)
    cm = slice(1 + n, 1 + n + m)
    cp = slice(1 + n + m, 1 + n + 2 * m)

    def rhs(tau, Y):
        lm, lp = _weights(tau, tau_k, tau_k1)
        u = lm * u_k + lp * u_k1
        f, A, B = rate_and_jacobians(Y[:, 0], u, hooks)
        dY = np.empty_like(Y)
        dY[:, 0] = f
        dY[:, 1:] = A @ Y[:, 1:]
        dY[:, cm] += lm * B
        dY[:, cp] += lp * B
        return dY

    h = (tau_k1 - tau_k) / steps
    for i in range(steps):
        t0 = tau_k + i * h
        k1 = rhs(t0, Y)
        k2 = rhs(t0 + 0.5 * h, Y + 0.5 * h * k1)
        k3 = rhs(t0 + 0.5 * h, Y + 0.5 * h * k2)
        t1 = tau_k1 if i == steps - 1 else t0 + h
        k4 = rhs(t1, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(Y)):
            raise PropagationError(index, f"non-finite value at sub-step {i + 1}/{steps}")

    x_end = Y[:, 0].copy()
    A = Y[:, 1 : 1 + n].copy()
    Bm = Y[:, cm].copy()
    Bp = Y[:, cp].copy()
    w = x_end - A @ x_k - Bm @ u_k - Bp @ u_k1
    return LinearizedBlocks(A=A, Bm=Bm, Bp=Bp, w=w, x_end=x_end)


def linearize_all(x_bar, u_bar, grid, hooks, steps=DEFAULT_STEPS, mapper=map):
    """Linearize every interval of an iterate.

    ``mapper`` may be any ``map``-compatible callable (e.g. an executor's
    ``map``); intervals are independent so the result does not depend on it.
    """
    x_bar = np.asarray(x_bar, dtype=float)
    u_bar = np.asarray(u_bar, dtype=float)
    N = grid.N
    if x_bar.shape[0] != N or u_bar.shape[0] != N:
        raise ValueError(f"iterate has {x_bar.shape[0]} states and {u_bar.shape[0]} controls, grid has {N} nodes")

    def one(k):
        tk, tk1 = grid.interval(k)
        return propagate_interval(x_bar[k], u_bar[k], u_bar[k + 1], tk, tk1, hooks, steps, index=k)

    return list(mapper(one, range(N - 1)))


def single_shoot(x1, u, grid, hooks, steps=DEFAULT_STEPS):
    """Forward-propagate the nonlinear dynamics node to node (no sensitivities)."""
    u = np.asarray(u, dtype=float)
    xs = [np.asarray(x1, dtype=float)]
    for k in range(grid.N - 1):
        tk, tk1 = grid.interval(k)
        xs.append(_rk4_state(xs[-1], u[k], u[k + 1], tk, tk1, hooks, steps, k)[-1])
    return np.array(xs)


def _rk4_state(x, u_k, u_k1, tau_k, tau_k1, hooks, steps, index=None):
    """Plain RK4 on the augmented state; returns every sub-step state (steps + 1 rows)."""
    u_k = np.asarray(u_k, dtype=float)
    u_k1 = np.asarray(u_k1, dtype=float)

    def rhs(tau, x):
        lm, lp = _weights(tau, tau_k, tau_k1)
        return augmented_dynamics(x, lm * u_k + lp * u_k1, hooks)

    h = (tau_k1 - tau_k) / steps
    out = [np.asarray(x, dtype=float)]
    for i in range(steps):
        t0 = tau_k + i * h
        x = out[-1]
        k1 = rhs(t0, x)
        k2 = rhs(t0 + 0.5 * h, x + 0.5 * h * k1)
        k3 = rhs(t0 + 0.5 * h, x + 0.5 * h * k2)
        k4 = rhs(tau_k1 if i == steps - 1 else t0 + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise PropagationError(index, f"non-finite value at sub-step {i + 1}/{steps}")
        out.append(x)
    return out


@dataclass
class DenseAudit:
    """Fine re-propagation of a trajectory.

    ``tau``/``t``/``g`` hold every sample (interval sub-step points plus the
    final node); ``max_pointwise_g`` is the largest constraint value seen and
    ``total_y_increase`` the summed growth of the violation integrator.
    """

    max_pointwise_g: float
    total_y_increase: float
    tau: np.ndarray
    t: np.ndarray
    g: np.ndarray
    y_increase: np.ndarray

    def __iter__(self):
        yield self.max_pointwise_g
        yield self.total_y_increase


def dense_violation_audit(x, u, grid, hooks, substeps=DEFAULT_AUDIT_SUBSTEPS):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    nxi, nze = hooks.n_xi, hooks.n_zeta
    taus, ts, gs, dy = [], [], [], []
    t_k = 0.0
    for k in range(grid.N - 1):
        tk, tk1 = grid.interval(k)
        states = _rk4_state(x[k], u[k], u[k + 1], tk, tk1, hooks, substeps, k)
        n_samples = substeps if k < grid.N - 2 else substeps + 1
        h = (tk1 - tk) / substeps
        for i in range(n_samples):
            tau = tk1 if i == substeps else tk + i * h
            uu = foh_interp(u[k], u[k + 1], tau, tk, tk1)
            taus.append(tau)
            # FOH dilation integrates exactly with the trapezoid rule
            s_tau = uu[-1]
            ts.append(t_k + 0.5 * (u[k, -1] + s_tau) * (tau - tk))
            gs.append(hooks.g(states[i][:nxi], uu[:nze]) if hooks.n_g else np.zeros(0))
        dy.append(states[-1][-1] - x[k, -1])
        t_k += 0.5 * (u[k, -1] + u[k + 1, -1]) * (tk1 - tk)
    g = np.array(gs).reshape(len(taus), hooks.n_g)
    max_g = float(g.max()) if g.size else float("-inf")
    dy = np.array(dy)
    return DenseAudit(
        max_pointwise_g=max_g,
        total_y_increase=float(dy.sum()),
        tau=np.array(taus),
        t=np.array(ts),
        g=g,
        y_increase=dy,
    )
