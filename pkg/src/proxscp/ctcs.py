"""Time dilation and constraint-violation augmentation.

A model with dynamics ``xi' = F(xi, zeta)`` and path constraints
``g <= 0``, ``h = 0`` becomes, on the normalized interval tau in [0, 1],

    x = (xi, y),  u = (zeta, s)
    x' = s * [ F(xi, zeta) ; sum(max(g, 0)^2) + sum(h^2) ]

where ``s = dt/dtau`` is the dilation factor and ``y`` integrates the
squared constraint violation. ``y`` can only grow, and stays flat exactly
when the path constraints hold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class DilationError(ValueError):
    """Raised for a non-positive dilation factor."""


@dataclass(frozen=True)
class ModelHooks:
    """Evaluators for a model plugged into the augmentation.

    ``jacobians(xi, zeta)`` must return ``(dF/dxi, dF/dzeta, dg/dxi, dg/dzeta)``.
    ``h`` and ``h_jacobians`` are optional; ``h_jacobians`` returns
    ``(dh/dxi, dh/dzeta)``.
    """

    n_xi: int
    n_zeta: int
    n_g: int
    F: Callable
    g: Callable
    jacobians: Callable
    n_h: int = 0
    h: Optional[Callable] = None
    h_jacobians: Optional[Callable] = None

    @property
    def n_x(self):
        return self.n_xi + 1

    @property
    def n_u(self):
        return self.n_zeta + 1


def _split(x, u, hooks):
    s = float(u[-1])
    if not s > 0.0:
        raise DilationError(f"dilation factor must be positive, got {s}")
    return x[: hooks.n_xi], u[: hooks.n_zeta], s


def _violation(xi, zeta, hooks):
    gp = np.maximum(hooks.g(xi, zeta), 0.0) if hooks.n_g else np.zeros(0)
    hv = hooks.h(xi, zeta) if hooks.n_h else np.zeros(0)
    return gp, hv


def undilated_rate(x, u, hooks):
    """Rate of the augmented state per unit physical time (s factored out)."""
    xi = x[: hooks.n_xi]
    zeta = u[: hooks.n_zeta]
    gp, hv = _violation(xi, zeta, hooks)
    out = np.empty(hooks.n_x)
    out[:-1] = hooks.F(xi, zeta)
    out[-1] = gp @ gp + hv @ hv
    return out


def augmented_dynamics(x, u, hooks):
    _, _, s = _split(x, u, hooks)
    return s * undilated_rate(x, u, hooks)


def rate_and_jacobians(x, u, hooks):
    """Return ``(f, A, B)`` for the augmented system with a single model evaluation."""
    xi, zeta, s = _split(x, u, hooks)
    nxi, nze = hooks.n_xi, hooks.n_zeta
    Fx, Fu, gx, gu = hooks.jacobians(xi, zeta)
    gp, hv = _violation(xi, zeta, hooks)

    rate = np.empty(hooks.n_x)
    rate[:-1] = hooks.F(xi, zeta)
    rate[-1] = gp @ gp + hv @ hv

    A = np.zeros((hooks.n_x, hooks.n_x))
    B = np.empty((hooks.n_x, hooks.n_u))
    A[:nxi, :nxi] = s * Fx
    B[:nxi, :nze] = s * Fu
    # one-sided derivative of max(g, 0)^2: zero on the satisfied side and at the kink
    ygx = gp @ gx if hooks.n_g else np.zeros(nxi)
    ygu = gp @ gu if hooks.n_g else np.zeros(nze)
    if hooks.n_h:
        hx, hu = hooks.h_jacobians(xi, zeta)
        ygx = ygx + hv @ hx
        ygu = ygu + hv @ hu
    A[-1, :nxi] = 2.0 * s * ygx
    B[-1, :nze] = 2.0 * s * ygu
    B[:, -1] = rate
    return s * rate, A, B


def augmented_jacobians(x, u, hooks):
    _, A, B = rate_and_jacobians(x, u, hooks)
    return A, B


def final_time(s_nodes, tau):
    """Physical duration of an FOH dilation profile (trapezoid rule, exact for FOH)."""
    s_nodes = np.asarray(s_nodes, dtype=float)
    dtau = np.diff(np.asarray(tau, dtype=float))
    return float(np.sum(0.5 * (s_nodes[:-1] + s_nodes[1:]) * dtau))


def node_times(s_nodes, tau):
    """Physical time at every node for an FOH dilation profile."""
    s_nodes = np.asarray(s_nodes, dtype=float)
    dtau = np.diff(np.asarray(tau, dtype=float))
    return np.concatenate([[0.0], np.cumsum(0.5 * (s_nodes[:-1] + s_nodes[1:]) * dtau)])
