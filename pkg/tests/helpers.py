"""Shared builders for small random subproblems and the dense reference solvers."""

from __future__ import annotations

import itertools

import numpy as np

from proxscp.pipg import PipgWorkspace, ScaledSubproblem, materialize


def random_subproblem(rng, N=None, n=None, m=None):
    N = int(rng.integers(2, 6)) if N is None else N
    n = int(rng.integers(1, 5)) if n is None else n
    m = int(rng.integers(1, 4)) if m is None else m
    K = N - 1
    Am = np.eye(n) + 0.3 * rng.standard_normal((K, n, n))
    Ap = np.broadcast_to(-np.eye(n), (K, n, n)).copy()
    Bm = 0.5 * rng.standard_normal((K, n, m))
    Bp = 0.5 * rng.standard_normal((K, n, m))
    w = 0.5 * rng.standard_normal((K, n))
    eps = rng.uniform(-0.1, 0.3, K)
    u_min = np.full((N, m), -np.inf)
    u_max = np.full((N, m), np.inf)
    u_min[:, -1] = -rng.uniform(0.05, 0.5, N)
    u_max[:, -1] = rng.uniform(0.05, 0.5, N)
    E_y = np.zeros(n)
    E_y[-1] = 1.0
    idx_i = np.arange(n)
    z_i = 0.5 * rng.standard_normal(n)
    z_i[-1] = 0.0
    n_f = int(rng.integers(0, n))
    idx_f = np.sort(rng.choice(n - 1, size=n_f, replace=False)) if n > 1 else np.zeros(0, dtype=int)
    z_f = 0.5 * rng.standard_normal(idx_f.size)
    return ScaledSubproblem(
        Am=Am, Ap=Ap, Bm=Bm, Bp=Bp, w=w, eps=eps, u_min=u_min, u_max=u_max, E_y=E_y,
        idx_i=idx_i, z_i=z_i, idx_f=idx_f, z_f=z_f, e_cost=rng.standard_normal(n),
        w_cost=1.0, w_prox=float(rng.uniform(0.5, 2.0)), w_ep=float(rng.uniform(2.0, 6.0)),
    )


def random_workspace(rng, sub, scale=1.0):
    N, n, m = sub.dims
    K = N - 1
    return PipgWorkspace(
        x=scale * rng.standard_normal((N, n)),
        u=scale * rng.standard_normal((N, m)),
        mu_p=scale * np.abs(rng.standard_normal((K, n))),
        mu_m=scale * np.abs(rng.standard_normal((K, n))),
        phi=scale * rng.standard_normal((K, n)),
        theta=scale * np.abs(rng.standard_normal(K)),
    )


def gram_eigen_oracle(sub):
    """Largest eigenvalue of K'K for the stacked constraint matrix K = [G; H], by Jacobi rotations."""
    qp = materialize(sub)
    Kmat = np.vstack([qp.G, qp.H])
    return jacobi_max_eig(Kmat @ Kmat.T if Kmat.shape[0] <= Kmat.shape[1] else Kmat.T @ Kmat)


def jacobi_max_eig(S, tol=1e-15, sweeps=100):
    """Cyclic Jacobi eigenvalue iteration on a symmetric matrix."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    for _ in range(sweeps):
        scale = max(1.0, np.abs(np.diag(A)).max())
        off = np.sqrt(max(0.0, np.sum(A**2) - np.sum(np.diag(A) ** 2)))
        if off <= tol * scale:
            break
        for p, q in itertools.combinations(range(n), 2):
            if abs(A[p, q]) <= 1e-300 or abs(A[p, q]) <= 1e-18 * scale:
                continue
            tau = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
            t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            R = np.eye(n)
            R[p, p] = R[q, q] = c
            R[p, q] = s
            R[q, p] = -s
            A = R.T @ A @ R
    return float(np.max(np.diag(A)))


def kkt_solve(qp, active_lo, active_hi, active_h):
    """Solve the equality-constrained QP obtained by fixing an active set.

    Returns ``(z, multipliers)`` or ``None`` when the KKT system is singular.
    Multipliers are ``(eta, lam_lo, lam_hi, chi)`` with the sign convention
    of the Lagrangian ``f + eta'(Gz - g) + chi'(Hz - h) + lam_hi'(z - hi) - lam_lo'(z - lo)``.
    """
    nz = qp.p.size
    lo_idx = np.flatnonzero(active_lo)
    hi_idx = np.flatnonzero(active_hi)
    h_idx = np.flatnonzero(active_h)
    rows = [qp.G]
    rhs = [qp.g]
    for idx, val in ((lo_idx, qp.lo), (hi_idx, qp.hi)):
        E = np.zeros((idx.size, nz))
        E[np.arange(idx.size), idx] = 1.0
        rows.append(E)
        rhs.append(val[idx])
    rows.append(qp.H[h_idx])
    rhs.append(qp.h[h_idx])
    C = np.vstack(rows)
    d = np.concatenate(rhs)
    nc = C.shape[0]
    KKT = np.zeros((nz + nc, nz + nc))
    KKT[:nz, :nz] = np.diag(qp.P)
    KKT[:nz, nz:] = C.T
    KKT[nz:, :nz] = C
    b = np.concatenate([-qp.p, d])
    sol, *_ = np.linalg.lstsq(KKT, b, rcond=None)
    if np.max(np.abs(KKT @ sol - b)) > 1e-9 * max(1.0, np.abs(b).max()):
        return None
    z = sol[:nz]
    y = sol[nz:]
    ng = qp.G.shape[0]
    eta = y[:ng]
    lam_lo = -y[ng : ng + lo_idx.size]
    lam_hi = y[ng + lo_idx.size : ng + lo_idx.size + hi_idx.size]
    chi = y[ng + lo_idx.size + hi_idx.size :]
    return z, (eta, lo_idx, lam_lo, hi_idx, lam_hi, h_idx, chi)


def objective(qp, z):
    return 0.5 * z @ (qp.P * z) + qp.p @ z


def enumerate_active_sets(qp, tol=1e-9):
    """Brute-force oracle: try every activity pattern, keep the best feasible point.

    Only for tiny problems (the number of patterns is exponential).
    """
    nz = qp.p.size
    fixed = qp.lo == qp.hi
    lo_cand = [i for i in range(nz) if np.isfinite(qp.lo[i]) and not fixed[i]]
    hi_cand = [i for i in range(nz) if np.isfinite(qp.hi[i]) and not fixed[i]]
    h_cand = list(range(qp.H.shape[0]))
    best = None
    choices = [(("lo", i), ("hi", i), None) if i in hi_cand else (("lo", i), None) for i in lo_cand]
    choices += [(("hi", i), None) for i in hi_cand if i not in lo_cand]
    choices += [(("h", i), None) for i in h_cand]
    for pattern in itertools.product(*choices):
        act_lo = fixed.copy()
        act_hi = np.zeros(nz, dtype=bool)
        act_h = np.zeros(qp.H.shape[0], dtype=bool)
        for item in pattern:
            if item is None:
                continue
            kind, i = item
            if kind == "lo":
                act_lo[i] = True
            elif kind == "hi":
                act_hi[i] = True
            else:
                act_h[i] = True
        res = kkt_solve(qp, act_lo, act_hi, act_h)
        if res is None:
            continue
        z = res[0]
        if np.any(z < qp.lo - tol) or np.any(z > qp.hi + tol):
            continue
        if np.any(qp.G @ z - qp.g > tol) or np.any(qp.G @ z - qp.g < -tol):
            continue
        if np.any(qp.H @ z - qp.h > tol):
            continue
        f = objective(qp, z)
        if best is None or f < best[0] - 1e-12:
            best = (f, z)
    return None if best is None else best[1]


def certified_kkt_oracle(qp, tol=1e-8):
    """Dense KKT solution on an active set identified by an interior-point solve.

    The interior-point solution (cvxpy + Clarabel) is only used to guess which
    inequalities are active. The returned point is the exact solution of the
    KKT system on that set, and it is accepted only if it is primal feasible
    and its multipliers have the right signs, which certifies optimality.
    """
    import cvxpy as cp

    nz = qp.p.size
    z = cp.Variable(nz)
    fixed = qp.lo == qp.hi
    cons = [qp.G @ z == qp.g]
    if qp.H.shape[0]:
        cons.append(qp.H @ z <= qp.h)
    fin_lo = np.isfinite(qp.lo) & ~fixed
    fin_hi = np.isfinite(qp.hi) & ~fixed
    if fixed.any():
        cons.append(z[np.flatnonzero(fixed)] == qp.lo[fixed])
    if fin_lo.any():
        cons.append(z[np.flatnonzero(fin_lo)] >= qp.lo[fin_lo])
    if fin_hi.any():
        cons.append(z[np.flatnonzero(fin_hi)] <= qp.hi[fin_hi])
    prob = cp.Problem(cp.Minimize(0.5 * cp.sum(cp.multiply(qp.P, cp.square(z))) + qp.p @ z), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    zi = z.value
    gap = 1e-6 * max(1.0, np.abs(zi).max())
    act_lo = fixed | (fin_lo & (zi - qp.lo <= gap))
    act_hi = fin_hi & (qp.hi - zi <= gap)
    act_h = qp.H @ zi - qp.h >= -gap
    res = kkt_solve(qp, act_lo, act_hi, act_h)
    if res is None:
        raise AssertionError("KKT system on the identified active set is singular")
    zk, (eta, lo_idx, lam_lo, hi_idx, lam_hi, h_idx, chi) = res
    free_lo = [i for i in lo_idx if not fixed[i]]
    lam_lo_free = lam_lo[[list(lo_idx).index(i) for i in free_lo]] if free_lo else np.zeros(0)
    ok = (
        np.all(zk >= qp.lo - tol)
        and np.all(zk <= qp.hi + tol)
        and np.all(qp.H @ zk - qp.h <= tol)
        and np.all(lam_lo_free >= -tol)
        and np.all(lam_hi >= -tol)
        and np.all(chi >= -tol)
    )
    if not ok:
        raise AssertionError("active-set KKT point failed certification")
    return zk


def central_fd(f, x, h=1e-6):
    """Central finite-difference Jacobian of ``f`` at ``x`` (columns per coordinate)."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x))
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        J[:, j] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h)
    return J


def relative_error(A, B):
    return float(np.max(np.abs(A - B)) / max(1.0, np.max(np.abs(B))))


def random_rocket_point(rng):
    """A state/control pair away from the thrust-norm singularity."""
    xi = np.empty(14)
    xi[0] = rng.uniform(1.0, 2.5)
    xi[1:4] = rng.uniform(-5.0, 5.0, 3)
    xi[4:7] = rng.uniform(-3.0, 3.0, 3)
    q = rng.standard_normal(4)
    xi[7:11] = q / np.linalg.norm(q)
    xi[11:14] = rng.uniform(-1.0, 1.0, 3)
    zeta = np.empty(6)
    zeta[0:3] = rng.uniform(-4.0, 4.0, 3)
    zeta[0] = abs(zeta[0]) + 0.5
    zeta[3:6] = rng.uniform(-0.1, 0.1, 3)
    return xi, zeta


def lti_hooks(Amat, Bmat, g=None, n_g=0):
    """Model hooks for xi_dot = A xi + B zeta with optional constant-Jacobian constraints."""
    from proxscp.ctcs import ModelHooks

    Amat = np.atleast_2d(np.asarray(Amat, dtype=float))
    Bmat = np.atleast_2d(np.asarray(Bmat, dtype=float))
    n, m = Bmat.shape

    def jac(xi, zeta):
        Gx = np.zeros((n_g, n))
        Gu = np.zeros((n_g, m))
        return Amat, Bmat, Gx, Gu

    return ModelHooks(
        n_xi=n, n_zeta=m, n_g=n_g,
        F=lambda xi, zeta: Amat @ xi + Bmat @ zeta,
        g=g if g is not None else (lambda xi, zeta: np.zeros(0)),
        jacobians=jac,
    )


def foh_closed_form(a, b, dt):
    """Exact FOH input matrices (B-, B+) of x_dot = a x + b u over one interval."""
    e = np.exp(a * dt)
    # int_0^dt e^{a s} ds and int_0^dt s e^{a s} ds
    i0 = (e - 1.0) / a
    i1 = e * (dt / a - 1.0 / a**2) + 1.0 / a**2
    b_minus = b * i1 / dt
    b_plus = b * (i0 - i1 / dt)
    return b_minus, b_plus
