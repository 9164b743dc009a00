"""Proportional-integral projected gradient (PIPG) for the SCP subproblem.

The subproblem, in scaled variables, is

    minimize   w_cost e'x_N + w_prox/2 sum_k (|x_k|^2 + |u_k|^2)
                 + w_ep sum_k 1'(mu+_k + mu-_k)
    subject to Am_k x_k + Ap_k x_{k+1} + Bm_k u_k + Bp_k u_{k+1}
                 + mu+_k - mu-_k + w_k = 0                    (dual phi_k)
               E_y (x_{k+1} - x_k) <= eps_k                   (dual theta_k)
               mu+_k, mu-_k >= 0,  u_min_k <= u_k <= u_max_k
               x_1[idx_i] = z_i,  x_N[idx_f] = z_f

Three entry points:

* ``pipg_custom`` -- block-sparse, matrix-free solver. Only products with the
  small per-interval blocks are formed.
* ``power_iteration_custom`` -- estimate of the squared largest singular
  value of the stacked constraint operator, for the step sizes.
* ``pipg_generic`` -- the textbook algorithm on explicitly materialized
  matrices (``materialize``); slow, used as a cross-check.

Bounds on ``u`` that should not be imposed are given as +-inf.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

import numpy as np
from numba import njit

from .smallmat import gemv_acc, gemv_t_acc


class SolverDivergenceError(RuntimeError):
    def __init__(self, iteration):
        self.iteration = iteration
        super().__init__(f"PIPG iterate became non-finite at iteration {iteration}")


class PowerIterationSeedError(ValueError):
    """The power iteration was seeded with an all-zero primal point."""


@dataclass(frozen=True)
class PipgConfig:
    omega: float = 1.0
    rho: float = 1.6
    j_max: int = 2500
    j_check: int = 25
    eps_abs: float = 1e-9
    eps_rel: float = 1e-8
    eps_buff: float = 0.05
    power_eps_abs: float = 1e-12
    power_eps_rel: float = 1e-9
    power_j_max: int = 500

    def __post_init__(self):
        if not self.omega > 0.0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not 0.0 < self.rho < 2.0:
            raise ValueError(f"rho must lie in (0, 2), got {self.rho}")
        if self.j_check < 1 or self.j_max < 1:
            raise ValueError("j_check and j_max must be >= 1")
        if self.eps_buff < 0.0:
            raise ValueError("eps_buff must be nonnegative")


@dataclass
class ScaledSubproblem:
    """All data of one scaled convex subproblem (K = N - 1 intervals)."""

    Am: np.ndarray  # (K, n, n)
    Ap: np.ndarray  # (K, n, n)
    Bm: np.ndarray  # (K, n, m)
    Bp: np.ndarray  # (K, n, m)
    w: np.ndarray  # (K, n)
    eps: np.ndarray  # (K,)
    u_min: np.ndarray  # (N, m)
    u_max: np.ndarray  # (N, m)
    E_y: np.ndarray  # (n,)
    idx_i: np.ndarray
    z_i: np.ndarray
    idx_f: np.ndarray
    z_f: np.ndarray
    e_cost: np.ndarray  # (n,)
    w_cost: float
    w_prox: float
    w_ep: float

    def __post_init__(self):
        for name in ("Am", "Ap", "Bm", "Bp", "w", "eps", "u_min", "u_max", "E_y", "z_i", "z_f", "e_cost"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        self.idx_i = np.ascontiguousarray(self.idx_i, dtype=np.int64)
        self.idx_f = np.ascontiguousarray(self.idx_f, dtype=np.int64)
        K, n, m = self.Bm.shape
        if self.Am.shape != (K, n, n) or self.Ap.shape != (K, n, n) or self.Bp.shape != (K, n, m):
            raise ValueError("inconsistent block shapes")
        if self.w.shape != (K, n) or self.eps.shape != (K,):
            raise ValueError("inconsistent w / eps shapes")
        if self.u_min.shape != (K + 1, m) or self.u_max.shape != (K + 1, m):
            raise ValueError("control bounds must have shape (N, n_u)")
        if self.idx_i.shape != self.z_i.shape or self.idx_f.shape != self.z_f.shape:
            raise ValueError("boundary selectors and targets differ in length")

    @property
    def dims(self):
        K, n, m = self.Bm.shape
        return K + 1, n, m


@dataclass
class PipgWorkspace:
    """Primal-dual state; doubles as the warm start of the next solve."""

    x: np.ndarray
    u: np.ndarray
    mu_p: np.ndarray
    mu_m: np.ndarray
    phi: np.ndarray
    theta: np.ndarray
    x_t: np.ndarray = None
    u_t: np.ndarray = None
    nu_p: np.ndarray = None
    nu_m: np.ndarray = None
    phi_t: np.ndarray = None
    theta_t: np.ndarray = None
    sigma: float = 0.0
    iterations: int = 0
    terminated: bool = False

    def __post_init__(self):
        for name in ("x", "u", "mu_p", "mu_m", "phi", "theta"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        for name, src in (("x_t", "x"), ("u_t", "u"), ("nu_p", "mu_p"), ("nu_m", "mu_m"), ("phi_t", "phi"), ("theta_t", "theta")):
            if getattr(self, name) is None:
                setattr(self, name, getattr(self, src).copy())

    @classmethod
    def zeros(cls, N, n, m):
        K = N - 1
        return cls(
            x=np.zeros((N, n)),
            u=np.zeros((N, m)),
            mu_p=np.zeros((K, n)),
            mu_m=np.zeros((K, n)),
            phi=np.zeros((K, n)),
            theta=np.zeros(K),
        )

    def copy(self):
        return replace(self, **{k: getattr(self, k).copy() for k in ("x", "u", "mu_p", "mu_m", "phi", "theta", "x_t", "u_t", "nu_p", "nu_m", "phi_t", "theta_t")})

    def primal_is_zero(self):
        return not (np.any(self.x) or np.any(self.u) or np.any(self.mu_p) or np.any(self.mu_m))


def step_sizes(w_prox, omega, sigma):
    alpha = 2.0 / (w_prox + math.sqrt(w_prox * w_prox + 4.0 * omega * sigma))
    return alpha, omega * alpha


# ---------------------------------------------------------------------------
# stopping test


@njit(cache=True)
def _max_abs(a):
    r = 0.0
    for v in a.ravel():
        if abs(v) > r:
            r = abs(v)
    return r


@njit(cache=True)
def _max_abs_diff(a, b):
    r = 0.0
    fa = a.ravel()
    fb = b.ravel()
    for i in range(fa.size):
        d = abs(fa[i] - fb[i])
        if d > r:
            r = d
    return r


@njit(cache=True)
def _stop(x1, u1, mp1, mm1, phi1, th1, x0, u0, mp0, mm0, phi0, th0, eps_abs, eps_rel):
    z1 = max(max(_max_abs(x1), _max_abs(u1)), max(_max_abs(mp1), _max_abs(mm1)))
    z0 = max(max(_max_abs(x0), _max_abs(u0)), max(_max_abs(mp0), _max_abs(mm0)))
    dz = max(max(_max_abs_diff(x1, x0), _max_abs_diff(u1, u0)), max(_max_abs_diff(mp1, mp0), _max_abs_diff(mm1, mm0)))
    r1 = max(_max_abs(phi1), _max_abs(th1))
    r0 = max(_max_abs(phi0), _max_abs(th0))
    dr = max(_max_abs_diff(phi1, phi0), _max_abs_diff(th1, th0))
    return dz <= eps_abs + eps_rel * max(z1, z0) and dr <= eps_abs + eps_rel * max(r1, r0)


def stopping_custom(current, previous, eps_abs, eps_rel):
    """Terminate iff both the primal and the dual inf-norm change are small.

    ``current`` / ``previous`` are workspaces (or anything with the six
    ``x, u, mu_p, mu_m, phi, theta`` arrays); the comparison is inclusive.
    """
    c, p = current, previous
    names = ("x", "u", "mu_p", "mu_m", "phi", "theta")
    for name in names:
        if np.shape(getattr(c, name)) != np.shape(getattr(p, name)):
            raise ValueError(f"shape mismatch in {name}")
    args = [np.ascontiguousarray(getattr(c, k), dtype=np.float64) for k in names]
    args += [np.ascontiguousarray(getattr(p, k), dtype=np.float64) for k in names]
    return bool(_stop(*args, float(eps_abs), float(eps_rel)))


# ---------------------------------------------------------------------------
# power iteration


@njit(cache=True)
def _forward(Am, Ap, Bm, Bp, Ey, x, u, mup, mum, scale, phi, theta):
    """phi, theta <- scale * (G z, H z) without the constant terms."""
    K, n, m = Bm.shape
    for k in range(K):
        for i in range(n):
            phi[k, i] = 0.0
        gemv_acc(Am[k], x[k], 1.0, phi[k])
        gemv_acc(Ap[k], x[k + 1], 1.0, phi[k])
        gemv_acc(Bm[k], u[k], 1.0, phi[k])
        gemv_acc(Bp[k], u[k + 1], 1.0, phi[k])
        for i in range(n):
            phi[k, i] = scale * (phi[k, i] + mup[k, i] - mum[k, i])
        acc = 0.0
        for i in range(n):
            acc += Ey[i] * (x[k + 1, i] - x[k, i])
        theta[k] = scale * acc


@njit(cache=True)
def _adjoint(Am, Ap, Bm, Bp, Ey, phi, theta, x, u, mup, mum):
    """(x, u, mu+, mu-) <- [G; H]^T (phi, theta)."""
    K, n, m = Bm.shape
    x[:] = 0.0
    u[:] = 0.0
    for k in range(K):
        gemv_t_acc(Am[k], phi[k], 1.0, x[k])
        gemv_t_acc(Ap[k], phi[k], 1.0, x[k + 1])
        gemv_t_acc(Bm[k], phi[k], 1.0, u[k])
        gemv_t_acc(Bp[k], phi[k], 1.0, u[k + 1])
        for i in range(n):
            x[k, i] -= Ey[i] * theta[k]
            x[k + 1, i] += Ey[i] * theta[k]
            mup[k, i] = phi[k, i]
            mum[k, i] = -phi[k, i]


@njit(cache=True)
def _sqnorm(a):
    s = 0.0
    for v in a.ravel():
        s += v * v
    return s


@njit(cache=True)
def _power_kernel(Am, Ap, Bm, Bp, Ey, x, u, mup, mum, eps_abs, eps_rel, j_max):
    K, n, m = Bm.shape
    phi = np.zeros((K, n))
    theta = np.zeros(K)
    sigma = math.sqrt(_sqnorm(x) + _sqnorm(u) + _sqnorm(mup) + _sqnorm(mum))
    sigma_star = sigma
    its = 0
    for j in range(1, j_max + 1):
        its = j
        _forward(Am, Ap, Bm, Bp, Ey, x, u, mup, mum, 1.0 / sigma, phi, theta)
        _adjoint(Am, Ap, Bm, Bp, Ey, phi, theta, x, u, mup, mum)
        sigma_star = math.sqrt(_sqnorm(x) + _sqnorm(u) + _sqnorm(mup) + _sqnorm(mum))
        if abs(sigma_star - sigma) <= eps_abs + eps_rel * max(sigma_star, sigma):
            break
        if j < j_max:
            sigma = sigma_star
    return sigma_star, its


def power_iteration_custom(sub, seed, eps_abs, eps_rel, eps_buff, j_max):
    """Buffered estimate ``(1 + eps_buff) * sigma*`` of ``|[G; H]|_2^2``.

    ``seed`` supplies the starting primal point (``x, u, mu_p, mu_m``); it is
    copied, not modified.
    """
    if seed.primal_is_zero():
        raise PowerIterationSeedError("power iteration needs a nonzero primal seed")
    sigma_star, _ = _power_kernel(
        sub.Am, sub.Ap, sub.Bm, sub.Bp, sub.E_y,
        seed.x.copy(), seed.u.copy(), seed.mu_p.copy(), seed.mu_m.copy(),
        float(eps_abs), float(eps_rel), int(j_max),
    )
    return (1.0 + eps_buff) * sigma_star


def deterministic_seed(N, n, m, seed=0):
    """Pseudo-random unit primal point used when no nonzero warm start exists."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    ws = PipgWorkspace.zeros(N, n, m)
    parts = [ws.x, ws.u, ws.mu_p, ws.mu_m]
    total = sum(a.size for a in parts)
    v = rng.standard_normal(total)
    v /= np.linalg.norm(v)
    off = 0
    for a in parts:
        a.ravel()[:] = v[off : off + a.size]
        off += a.size
    return ws


# ---------------------------------------------------------------------------
# customized solver


@njit(cache=True)
def _pipg_kernel(
    Am, Ap, Bm, Bp, w, eps, umin, umax, Ey, idx_i, z_i, idx_f, z_f, e_cost,
    w_cost, w_prox, w_ep, alpha, beta, rho, eps_abs, eps_rel, j_check, j_max,
    x, u, mup, mum, phi, theta,
    xt, ut, nup, num, phit, thetat,
):
    K, n, m = Bm.shape
    N = K + 1
    # previous hat iterate, for the stopping test
    x0 = x.copy()
    u0 = u.copy()
    mp0 = mup.copy()
    mm0 = mum.copy()
    phi0 = phi.copy()
    th0 = theta.copy()
    # extrapolated points start at the warm start
    xt[:] = x
    ut[:] = u
    nup[:] = mup
    num[:] = mum
    phit[:] = phi
    thetat[:] = theta
    gx = np.empty(n)
    gu = np.empty(m)
    r = np.empty(n)
    dx = np.empty((N, n))
    du = np.empty((N, m))

    its = 0
    done = False
    for j in range(1, j_max + 1):
        its = j
        check = j % j_check == 0
        if check:
            x0[:] = x
            u0[:] = u
            mp0[:] = mup
            mm0[:] = mum
            phi0[:] = phi
            th0[:] = theta

        # projected gradient step on the primal variables
        for k in range(N):
            for i in range(n):
                gx[i] = w_prox * xt[k, i]
            for i in range(m):
                gu[i] = w_prox * ut[k, i]
            if k < K:
                gemv_t_acc(Am[k], phit[k], 1.0, gx)
                gemv_t_acc(Bm[k], phit[k], 1.0, gu)
                for i in range(n):
                    gx[i] -= Ey[i] * thetat[k]
            if k > 0:
                gemv_t_acc(Ap[k - 1], phit[k - 1], 1.0, gx)
                gemv_t_acc(Bp[k - 1], phit[k - 1], 1.0, gu)
                for i in range(n):
                    gx[i] += Ey[i] * thetat[k - 1]
            if k == K:
                for i in range(n):
                    gx[i] += w_cost * e_cost[i]
            for i in range(n):
                x[k, i] = xt[k, i] - alpha * gx[i]
            for i in range(m):
                v = ut[k, i] - alpha * gu[i]
                if v < umin[k, i]:
                    v = umin[k, i]
                elif v > umax[k, i]:
                    v = umax[k, i]
                u[k, i] = v
        for i in range(idx_i.size):
            x[0, idx_i[i]] = z_i[i]
        for i in range(idx_f.size):
            x[K, idx_f[i]] = z_f[i]
        for k in range(K):
            for i in range(n):
                mup[k, i] = max(0.0, nup[k, i] - alpha * (w_ep + phit[k, i]))
                mum[k, i] = max(0.0, num[k, i] - alpha * (w_ep - phit[k, i]))

        # proportional-integral feedback of the constraint violation
        for k in range(N):
            for i in range(n):
                dx[k, i] = 2.0 * x[k, i] - xt[k, i]
            for i in range(m):
                du[k, i] = 2.0 * u[k, i] - ut[k, i]
        for k in range(K):
            for i in range(n):
                r[i] = (2.0 * mup[k, i] - nup[k, i]) - (2.0 * mum[k, i] - num[k, i]) + w[k, i]
            gemv_acc(Am[k], dx[k], 1.0, r)
            gemv_acc(Ap[k], dx[k + 1], 1.0, r)
            gemv_acc(Bm[k], du[k], 1.0, r)
            gemv_acc(Bp[k], du[k + 1], 1.0, r)
            for i in range(n):
                phi[k, i] = phit[k, i] + beta * r[i]
            acc = 0.0
            for i in range(n):
                acc += Ey[i] * (dx[k + 1, i] - dx[k, i])
            theta[k] = max(0.0, thetat[k] + beta * (acc - eps[k]))

        # extrapolation
        for k in range(N):
            for i in range(n):
                xt[k, i] = (1.0 - rho) * xt[k, i] + rho * x[k, i]
            for i in range(m):
                ut[k, i] = (1.0 - rho) * ut[k, i] + rho * u[k, i]
        for k in range(K):
            for i in range(n):
                nup[k, i] = (1.0 - rho) * nup[k, i] + rho * mup[k, i]
                num[k, i] = (1.0 - rho) * num[k, i] + rho * mum[k, i]
                phit[k, i] = (1.0 - rho) * phit[k, i] + rho * phi[k, i]
            thetat[k] = (1.0 - rho) * thetat[k] + rho * theta[k]

        if check:
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(phi))):
                return -j, False
            if _stop(x, u, mup, mum, phi, theta, x0, u0, mp0, mm0, phi0, th0, eps_abs, eps_rel):
                done = True
                break
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u)) and np.all(np.isfinite(phi)) and np.all(np.isfinite(theta))):
        return -its, False
    return its, done


def pipg_custom(sub, config, warm, j_max=None, check=True):
    """Run the customized solver from ``warm``; returns a new workspace.

    ``warm.sigma`` must hold the (buffered) spectral estimate. ``j_max``
    overrides ``config.j_max``; ``check=False`` disables the stopping test so
    exactly ``j_max`` iterations run.
    """
    if not warm.sigma > 0.0:
        raise ValueError("workspace sigma is not set; run power_iteration_custom first")
    N, n, m = sub.dims
    if warm.x.shape != (N, n) or warm.u.shape != (N, m) or warm.phi.shape != (N - 1, n):
        raise ValueError("warm start does not match the subproblem dimensions")
    ws = warm.copy()
    alpha, beta = step_sizes(sub.w_prox, config.omega, ws.sigma)
    j_max = config.j_max if j_max is None else j_max
    j_check = config.j_check if check else j_max + 1
    its, done = _pipg_kernel(
        sub.Am, sub.Ap, sub.Bm, sub.Bp, sub.w, sub.eps, sub.u_min, sub.u_max, sub.E_y,
        sub.idx_i, sub.z_i, sub.idx_f, sub.z_f, sub.e_cost,
        float(sub.w_cost), float(sub.w_prox), float(sub.w_ep), alpha, beta, float(config.rho),
        float(config.eps_abs), float(config.eps_rel), int(j_check), int(j_max),
        ws.x, ws.u, ws.mu_p, ws.mu_m, ws.phi, ws.theta,
        ws.x_t, ws.u_t, ws.nu_p, ws.nu_m, ws.phi_t, ws.theta_t,
    )
    if its < 0:
        raise SolverDivergenceError(-its)
    ws.iterations = its
    ws.terminated = bool(done)
    return ws


# ---------------------------------------------------------------------------
# generic form on explicit matrices


@dataclass
class GenericQP:
    """``min 1/2 z'diag(P)z + p'z  s.t.  G z = g,  H z <= h,  lo <= z <= hi``.

    Fixed entries use ``lo == hi``; the box is the projection set.
    """

    P: np.ndarray
    p: np.ndarray
    G: np.ndarray
    g: np.ndarray
    H: np.ndarray
    h: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    layout: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.P < 0.0):
            raise ValueError("P must be nonnegative (positive semidefinite diagonal)")
        if np.any(self.lo > self.hi):
            raise ValueError("projection box is empty")

    def project(self, z):
        return np.minimum(np.maximum(z, self.lo), self.hi)


def materialize(sub):
    """Build the explicit matrices of the subproblem.

    Variable order: ``z = (x_1..x_N, u_1..u_N, mu+_1..mu+_K, mu-_1..mu-_K)``.
    """
    N, n, m = sub.dims
    K = N - 1
    nz = (n + m) * N + 2 * n * K
    ox, ou, op, om = 0, n * N, (n + m) * N, (n + m) * N + n * K

    P = np.zeros(nz)
    P[: (n + m) * N] = sub.w_prox
    p = np.zeros(nz)
    p[ox + n * K : ox + n * N] = sub.w_cost * sub.e_cost
    p[op:] = sub.w_ep

    G = np.zeros((n * K, nz))
    H = np.zeros((K, nz))
    for k in range(K):
        rows = slice(n * k, n * (k + 1))
        G[rows, ox + n * k : ox + n * (k + 1)] = sub.Am[k]
        G[rows, ox + n * (k + 1) : ox + n * (k + 2)] = sub.Ap[k]
        G[rows, ou + m * k : ou + m * (k + 1)] = sub.Bm[k]
        G[rows, ou + m * (k + 1) : ou + m * (k + 2)] = sub.Bp[k]
        G[rows, op + n * k : op + n * (k + 1)] = np.eye(n)
        G[rows, om + n * k : om + n * (k + 1)] = -np.eye(n)
        H[k, ox + n * k : ox + n * (k + 1)] = -sub.E_y
        H[k, ox + n * (k + 1) : ox + n * (k + 2)] = sub.E_y
    g = -sub.w.ravel().copy()
    h = sub.eps.copy()

    lo = np.full(nz, -np.inf)
    hi = np.full(nz, np.inf)
    lo[ou : ou + m * N] = sub.u_min.ravel()
    hi[ou : ou + m * N] = sub.u_max.ravel()
    lo[op:] = 0.0
    lo[ox + sub.idx_i] = sub.z_i
    hi[ox + sub.idx_i] = sub.z_i
    lo[ox + n * K + sub.idx_f] = sub.z_f
    hi[ox + n * K + sub.idx_f] = sub.z_f
    layout = {"N": N, "n": n, "m": m, "x": ox, "u": ou, "mu_p": op, "mu_m": om}
    return GenericQP(P=P, p=p, G=G, g=g, H=H, h=h, lo=lo, hi=hi, layout=layout)


def pack(ws, qp):
    """Flatten a workspace's primal and dual parts into ``(z, eta, chi)``."""
    return (
        np.concatenate([ws.x.ravel(), ws.u.ravel(), ws.mu_p.ravel(), ws.mu_m.ravel()]),
        ws.phi.ravel().copy(),
        ws.theta.copy(),
    )


def unpack(z, qp):
    L = qp.layout
    N, n, m = L["N"], L["n"], L["m"]
    K = N - 1
    return (
        z[L["x"] : L["u"]].reshape(N, n),
        z[L["u"] : L["mu_p"]].reshape(N, m),
        z[L["mu_p"] : L["mu_m"]].reshape(K, n),
        z[L["mu_m"] :].reshape(K, n),
    )


def pipg_generic(qp, alpha, omega, rho, j_max, initial=None):
    """Textbook extrapolated PIPG on explicit matrices.

    Returns ``(z, eta, chi)`` after exactly ``j_max`` iterations, where ``z``
    is the projected (non-extrapolated) primal iterate.
    """
    nz = qp.p.size
    if initial is None:
        zeta, eta, chi = np.zeros(nz), np.zeros(qp.G.shape[0]), np.zeros(qp.H.shape[0])
    else:
        zeta, eta, chi = (np.array(a, dtype=float) for a in initial)
    beta = omega * alpha
    z, w, v = zeta.copy(), eta.copy(), chi.copy()
    for j in range(1, j_max + 1):
        z = qp.project(zeta - alpha * (qp.P * zeta + qp.p + qp.G.T @ eta + qp.H.T @ chi))
        d = 2.0 * z - zeta
        w = eta + beta * (qp.G @ d - qp.g)
        v = np.maximum(0.0, chi + beta * (qp.H @ d - qp.h))
        zeta = (1.0 - rho) * zeta + rho * z
        eta = (1.0 - rho) * eta + rho * w
        chi = (1.0 - rho) * chi + rho * v
        if not np.all(np.isfinite(z)):
            raise SolverDivergenceError(j)
    return z, w, v


def kkt_residual(qp, z, eta, chi, alpha):
    """Projected-gradient fixed-point residual ``|z - proj(z - alpha * grad L)|_inf``."""
    grad = qp.P * z + qp.p + qp.G.T @ eta + qp.H.T @ chi
    return float(np.max(np.abs(z - qp.project(z - alpha * grad))))
