import numpy as np
import pytest

from proxscp import rocket6dof as r6
from proxscp.ctcs import DilationError, ModelHooks, augmented_dynamics, augmented_jacobians, final_time, node_times

from helpers import central_fd, random_rocket_point, relative_error

P = r6.VehicleParams()
HOOKS = r6.hooks(P)


def constant_g_hooks(gvec):
    gvec = np.asarray(gvec, dtype=float)
    return ModelHooks(
        n_xi=2, n_zeta=1, n_g=gvec.size,
        F=lambda xi, z: np.array([xi[1], z[0]]),
        g=lambda xi, z: gvec,
        jacobians=lambda xi, z: (np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]),
                                 np.zeros((gvec.size, 2)), np.zeros((gvec.size, 1))),
    )


def test_satisfied_constraints_do_not_feed_the_integrator():
    f = augmented_dynamics(np.zeros(3), np.array([1.0, 1.0]), constant_g_hooks([-1.0, -0.1]))
    assert f[-1] == 0.0


def test_single_violation_rate():
    f = augmented_dynamics(np.zeros(3), np.array([0.0, 1.0]), constant_g_hooks([-1.0, -2.0, 0.5]))
    assert f[-1] == 0.25


def test_dilation_homogeneity_exact():
    rng = np.random.default_rng(0)
    for _ in range(50):
        xi, zeta = random_rocket_point(rng)
        x = np.append(xi, 0.0)
        s = rng.uniform(0.1, 20.0)
        f1 = augmented_dynamics(x, np.append(zeta, 1.0), HOOKS)
        fs = augmented_dynamics(x, np.append(zeta, s), HOOKS)
        assert np.array_equal(fs, s * f1)
    f2 = augmented_dynamics(x, np.append(zeta, 2.0), HOOKS)
    assert np.array_equal(f2, 2.0 * f1)


def test_nonpositive_dilation_rejected():
    with pytest.raises(DilationError):
        augmented_dynamics(np.zeros(3), np.array([0.0, 0.0]), constant_g_hooks([-1.0]))


def test_violation_rate_never_negative():
    rng = np.random.default_rng(1)
    for _ in range(10_000 // 20):
        xi, zeta = random_rocket_point(rng)
        xi[r6.IDX_R] *= 3.0
        for s in rng.uniform(0.01, 30.0, 20):
            assert augmented_dynamics(np.append(xi, 0.0), np.append(zeta, s), HOOKS)[-1] >= 0.0


def test_s_column_is_the_undilated_rate():
    rng = np.random.default_rng(2)
    xi, zeta = random_rocket_point(rng)
    x = np.append(xi, 0.3)
    _, B = augmented_jacobians(x, np.append(zeta, 4.0), HOOKS)
    assert np.array_equal(B[:, -1], augmented_dynamics(x, np.append(zeta, 1.0), HOOKS))


def test_y_row_vanishes_when_all_constraints_hold():
    xi = np.zeros(14)
    xi[0] = 1.5
    xi[1] = 2.0
    xi[7] = 1.0
    zeta = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    assert np.all(r6.eval_constraints(xi, zeta, P) < 0.0)
    A, B = augmented_jacobians(np.append(xi, 0.0), np.append(zeta, 3.0), HOOKS)
    assert not np.any(A[-1]) and not np.any(B[-1, :-1])
    assert not np.any(A[:, -1])


def test_augmented_jacobians_match_finite_differences():
    rng = np.random.default_rng(4)
    checked = 0
    while checked < 100:
        xi, zeta = random_rocket_point(rng)
        xi[r6.IDX_R] *= 2.0
        g = r6.eval_constraints(xi, zeta, P)
        if np.min(np.abs(g)) < 1e-3:
            continue  # stay off the max(g, 0) kink
        s = rng.uniform(0.5, 10.0)
        x, u = np.append(xi, rng.uniform(0, 1)), np.append(zeta, s)
        A, B = augmented_jacobians(x, u, HOOKS)
        assert relative_error(A, central_fd(lambda xx: augmented_dynamics(xx, u, HOOKS), x)) <= 1e-5
        assert relative_error(B, central_fd(lambda uu: augmented_dynamics(x, uu, HOOKS), u)) <= 1e-5
        checked += 1


def test_final_time_is_the_trapezoid_of_s():
    tau = np.array([0.0, 0.25, 1.0])
    s = np.array([2.0, 4.0, 6.0])
    assert final_time(s, tau) == pytest.approx(0.25 * 3.0 + 0.75 * 5.0)
    t = node_times(s, tau)
    assert t[0] == 0.0 and t[-1] == pytest.approx(final_time(s, tau)) and np.all(np.diff(t) > 0)
