"""
6-DoF powered-descent vehicle: dynamics, path constraints and Jacobians.

State (n = 14)::

    xi = [m, r_I(3), v_I(3), q_IB(4), w_B(3)]

    index 0      mass
    index 1-3    inertial position, axis 0 of r is vertical ("up")
    index 4-6    inertial velocity
    index 7-10   attitude quaternion body -> inertial, scalar first
    index 11-13  body angular velocity

Control (n = 6)::

    zeta = [T_B(3), gamma_B(3)]   thrust and torque in the body frame

Dynamics::

    m_dot = -alpha_mdot * |T_B|
    r_dot = v
    v_dot = C(q) T_B / m + g_I
    q_dot = 0.5 * Omega(w) q
    w_dot = J^-1 (r_T x T_B - w x J w + gamma_B)

Path constraints g(xi, zeta) <= 0, in order::

    1  m_dry - m
    2  -e1' r                         altitude
    3  |v|^2 - v_max^2
    4  2 |H_theta q|^2 - (1 - cos theta_max)   tilt
    5  |w|^2 - w_max^2
    6  |T| - T_x sec(delta_max)         gimbal
    7  |T| - T_max
    8  T_min - |T|
    9  |gamma|^2 - gamma_max^2

Aerodynamic forces and moments are not modelled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
import math

import numpy as np

N_STATE = 14
N_CONTROL = 6
N_CONSTRAINT = 9

IDX_M = 0
IDX_R = slice(1, 4)
IDX_V = slice(4, 7)
IDX_Q = slice(7, 11)
IDX_W = slice(11, 14)
IDX_T = slice(0, 3)
IDX_GAMMA = slice(3, 6)

THRUST_FLOOR = 1e-9


class ModelDomainError(ValueError):
    """Evaluation requested outside the model's domain (e.g. m <= 0)."""


class SingularPointError(ValueError):
    """Jacobian requested where the constraint functions are not differentiable."""


def skew(a):
    return np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])


def dcm(q):
    """Direction cosine matrix rotating body vectors into the inertial frame.

    Homogeneous (quadratic) form, so that it and its Jacobian stay consistent
    off the unit sphere; identical to the usual form when ``|q| = 1``.
    """
    q0, q1, q2, q3 = q
    return np.array(
        [
            [q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3, 2 * (q1 * q2 - q0 * q3), 2 * (q1 * q3 + q0 * q2)],
            [2 * (q1 * q2 + q0 * q3), q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3, 2 * (q2 * q3 - q0 * q1)],
            [2 * (q1 * q3 - q0 * q2), 2 * (q2 * q3 + q0 * q1), q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3],
        ]
    )


def omega_matrix(w):
    """Omega(w) such that q_dot = 0.5 * Omega(w) q for q = q_IB (scalar first)."""
    w1, w2, w3 = w
    return np.array(
        [
            [0.0, -w1, -w2, -w3],
            [w1, 0.0, w3, -w2],
            [w2, -w3, 0.0, w1],
            [w3, w2, -w1, 0.0],
        ]
    )


def xi_matrix(q):
    """Xi(q) such that Omega(w) q = Xi(q) w."""
    q0, q1, q2, q3 = q
    return np.array(
        [
            [-q1, -q2, -q3],
            [q0, -q3, q2],
            [q3, q0, -q1],
            [-q2, q1, q0],
        ]
    )


def inverse3(J):
    """Explicit inverse of a 3x3 matrix by cofactor expansion."""
    J = np.asarray(J, dtype=float)
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            r = [a for a in range(3) if a != i]
            c = [b for b in range(3) if b != j]
            minor = J[r[0], c[0]] * J[r[1], c[1]] - J[r[0], c[1]] * J[r[1], c[0]]
            cof[i, j] = (-1) ** (i + j) * minor
    det = float(J[0] @ cof[0])
    if det == 0.0:
        raise ModelDomainError("inertia tensor is singular")
    return cof.T / det


@dataclass
class VehicleParams:
    """Vehicle constants. Angles in radians.

    Defaults are a nondimensional baseline in the spirit of the classic
    Mars-lander benchmark (unit gravity, unit dry mass). They were chosen so
    the nominal landing converges; they are not measured vehicle data.
    """

    alpha_mdot: float = 0.02
    g_inertial: np.ndarray = field(default_factory=lambda: np.array([-1.0, 0.0, 0.0]))
    inertia: np.ndarray = field(default_factory=lambda: 0.01 * np.eye(3))
    r_thrust: np.ndarray = field(default_factory=lambda: np.array([-0.01, 0.0, 0.0]))
    H_theta: np.ndarray = field(
        default_factory=lambda: np.array([[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
    )
    m_dry: float = 1.0
    v_max: float = 3.0
    theta_max: float = math.radians(60.0)
    omega_max: float = math.radians(60.0)
    delta_max: float = math.radians(20.0)
    T_min: float = 0.5
    T_max: float = 4.0
    gamma_max: float = 0.05

    def __post_init__(self):
        self.g_inertial = np.asarray(self.g_inertial, dtype=float).reshape(3)
        self.inertia = np.asarray(self.inertia, dtype=float).reshape(3, 3)
        self.r_thrust = np.asarray(self.r_thrust, dtype=float).reshape(3)
        self.H_theta = np.asarray(self.H_theta, dtype=float).reshape(2, 4)
        self.validate()
        self.inertia_inv = inverse3(self.inertia)
        self.sec_delta = 1.0 / math.cos(self.delta_max)

    def validate(self):
        if not 0.0 < self.T_min < self.T_max:
            raise ValueError(f"require 0 < T_min < T_max, got T_min={self.T_min}, T_max={self.T_max}")
        if not 0.0 < self.delta_max < math.pi / 2:
            raise ValueError(f"delta_max must lie in (0, pi/2), got {self.delta_max}")
        for name in ("alpha_mdot", "m_dry", "v_max", "theta_max", "omega_max", "gamma_max"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        J = self.inertia
        if not np.allclose(J, J.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(J).max())):
            raise ValueError("inertia must be symmetric")
        if np.linalg.eigvalsh(J).min() <= 0.0:
            raise ValueError("inertia must be positive definite")

    def to_dict(self):
        return {
            "alpha_mdot": self.alpha_mdot,
            "g_inertial": self.g_inertial.tolist(),
            "inertia": self.inertia.tolist(),
            "r_thrust": self.r_thrust.tolist(),
            "H_theta": self.H_theta.tolist(),
            "m_dry": self.m_dry,
            "v_max": self.v_max,
            "theta_max": self.theta_max,
            "omega_max": self.omega_max,
            "delta_max": self.delta_max,
            "T_min": self.T_min,
            "T_max": self.T_max,
            "gamma_max": self.gamma_max,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def eval_dynamics(xi, zeta, p):
    m = xi[IDX_M]
    if not m > 0.0:
        raise ModelDomainError(f"mass must be positive, got {m}")
    v = xi[IDX_V]
    q = xi[IDX_Q]
    w = xi[IDX_W]
    T = zeta[IDX_T]
    gam = zeta[IDX_GAMMA]

    out = np.empty(N_STATE)
    out[IDX_M] = -p.alpha_mdot * math.sqrt(T @ T)
    out[IDX_R] = v
    out[IDX_V] = dcm(q) @ T / m + p.g_inertial
    out[IDX_Q] = 0.5 * omega_matrix(w) @ q
    J = p.inertia
    out[IDX_W] = p.inertia_inv @ (np.cross(p.r_thrust, T) - np.cross(w, J @ w) + gam)
    return out


def eval_constraints(xi, zeta, p):
    m = xi[IDX_M]
    r = xi[IDX_R]
    v = xi[IDX_V]
    q = xi[IDX_Q]
    w = xi[IDX_W]
    T = zeta[IDX_T]
    gam = zeta[IDX_GAMMA]
    Tn = math.sqrt(T @ T)
    Hq = p.H_theta @ q
    return np.array(
        [
            p.m_dry - m,
            -r[0],
            v @ v - p.v_max**2,
            2.0 * (Hq @ Hq) - (1.0 - math.cos(p.theta_max)),
            w @ w - p.omega_max**2,
            Tn - T[0] * p.sec_delta,
            Tn - p.T_max,
            -Tn + p.T_min,
            gam @ gam - p.gamma_max**2,
        ]
    )


def _rotation_jacobian_q(q, t):
    """d(C(q) t)/dq for the scalar-first quaternion."""
    q0 = q[0]
    qv = q[1:]
    out = np.empty((3, 4))
    out[:, 0] = 2.0 * q0 * t + 2.0 * np.cross(qv, t)
    out[:, 1:] = (
        -2.0 * np.outer(t, qv) + 2.0 * (qv @ t) * np.eye(3) + 2.0 * np.outer(qv, t) - 2.0 * q0 * skew(t)
    )
    return out


def eval_jacobians(xi, zeta, p):
    """Analytic Jacobians ``(dF_dxi, dF_dzeta, dg_dxi, dg_dzeta)``."""
    m = xi[IDX_M]
    if not m > 0.0:
        raise ModelDomainError(f"mass must be positive, got {m}")
    v = xi[IDX_V]
    q = xi[IDX_Q]
    w = xi[IDX_W]
    T = zeta[IDX_T]
    gam = zeta[IDX_GAMMA]
    Tn = math.sqrt(T @ T)
    if Tn < THRUST_FLOOR:
        raise SingularPointError(f"thrust magnitude {Tn:.3e} is below {THRUST_FLOOR:g}; norm is not differentiable")
    That = T / Tn
    C = dcm(q)
    J = p.inertia
    Jinv = p.inertia_inv

    A = np.zeros((N_STATE, N_STATE))
    B = np.zeros((N_STATE, N_CONTROL))

    B[IDX_M, IDX_T] = -p.alpha_mdot * That

    A[IDX_R, IDX_V] = np.eye(3)

    A[IDX_V, IDX_M] = -C @ T / (m * m)
    A[IDX_V, IDX_Q] = _rotation_jacobian_q(q, T) / m
    B[IDX_V, IDX_T] = C / m

    A[IDX_Q, IDX_Q] = 0.5 * omega_matrix(w)
    A[IDX_Q, IDX_W] = 0.5 * xi_matrix(q)

    A[IDX_W, IDX_W] = Jinv @ (skew(J @ w) - skew(w) @ J)
    B[IDX_W, IDX_T] = Jinv @ skew(p.r_thrust)
    B[IDX_W, IDX_GAMMA] = Jinv

    Gx = np.zeros((N_CONSTRAINT, N_STATE))
    Gu = np.zeros((N_CONSTRAINT, N_CONTROL))
    Gx[0, IDX_M] = -1.0
    Gx[1, 1] = -1.0
    Gx[2, IDX_V] = 2.0 * v
    Gx[3, IDX_Q] = 4.0 * (p.H_theta @ q) @ p.H_theta
    Gx[4, IDX_W] = 2.0 * w
    Gu[5, IDX_T] = That
    Gu[5, 0] -= p.sec_delta
    Gu[6, IDX_T] = That
    Gu[7, IDX_T] = -That
    Gu[8, IDX_GAMMA] = 2.0 * gam
    return A, B, Gx, Gu


def hooks(p):
    """Bundle this vehicle as CTCS model hooks (picklable, for worker pools)."""
    from .ctcs import ModelHooks

    return ModelHooks(
        n_xi=N_STATE,
        n_zeta=N_CONTROL,
        n_g=N_CONSTRAINT,
        F=partial(eval_dynamics, p=p),
        g=partial(eval_constraints, p=p),
        jacobians=partial(eval_jacobians, p=p),
    )
