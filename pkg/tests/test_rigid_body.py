import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.spatial.transform import Rotation

from conftest import random_rotation
from hexrotor.errors import NotSkew
from hexrotor.rigid_body import (
    VEHICLE_MASS, InertiaParams, PayloadSpec, RigidBodyState, angular_momentum, composite_inertia,
    default_inertia, dynamics_derivative, from_com_state, integrate_step, kinetic_energy, propagate,
    rotation_angle, skew, so3_exp, to_com_state, unskew,
)
from hexrotor.wrench_model import Wrench

vec3 = st.lists(st.floats(-10, 10), min_size=3, max_size=3).map(np.array)
ASYM = InertiaParams(2.0, np.diag([0.1, 0.2, 0.3]))


# ---------------------------------------------------------------- skew

def test_skew_example():
    assert skew([0, 0, 1]).tolist() == [[0, -1, 0], [1, 0, 0], [0, 0, 0]]


@settings(max_examples=100, deadline=None)
@given(vec3, vec3)
def test_skew_properties(w, a):
    S = skew(w)
    assert np.array_equal(S.T, -S)
    assert np.allclose(S @ a, np.cross(w, a), atol=1e-12)
    assert np.allclose(S @ w, 0, atol=1e-12)
    assert np.array_equal(unskew(S), w)


def test_unskew_cases():
    assert unskew(skew([1, 2, 3])).tolist() == [1, 2, 3]
    assert unskew(np.zeros((3, 3))).tolist() == [0, 0, 0]
    with pytest.raises(NotSkew):
        unskew(np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(NotSkew):
        unskew(skew([1, 2, 3]) + 1e-3 * np.eye(3))


# ---------------------------------------------------------------- exponential map

def test_so3_exp_examples():
    assert np.array_equal(so3_exp(np.zeros(3)), np.eye(3))
    assert so3_exp([0, 0, math.pi / 2]) == pytest.approx(np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1.0]]), abs=1e-15)


def test_so3_exp_against_rotvec(rng):
    for scale in (1e-9, 1e-7, 1e-3, 1.0, 3.0):
        for _ in range(20):
            phi = rng.standard_normal(3) * scale
            R = so3_exp(phi)
            assert np.max(np.abs(R - Rotation.from_rotvec(phi).as_matrix())) <= 1e-13
            assert np.max(np.abs(R @ so3_exp(-phi) - np.eye(3))) <= 1e-12
            assert np.max(np.abs(R.T @ R - np.eye(3))) <= 1e-14


def test_rotation_angle(rng):
    for _ in range(20):
        phi = rng.standard_normal(3)
        phi *= rng.uniform(0, math.pi) / np.linalg.norm(phi)
        assert rotation_angle(so3_exp(phi)) == pytest.approx(np.linalg.norm(phi), abs=1e-7)


# ---------------------------------------------------------------- types

def test_state_validation():
    with pytest.raises(ValueError):
        RigidBodyState(R=np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        RigidBodyState(R=np.eye(3) * 1.001)
    s = RigidBodyState(x=[1, 2, 3])
    assert s.x.dtype == float and s.R.shape == (3, 3)


def test_inertia_validation():
    with pytest.raises(ValueError):
        InertiaParams(0.0, np.eye(3))
    with pytest.raises(ValueError):
        InertiaParams(1.0, np.array([[1, 0.1, 0], [0, 1, 0], [0, 0, 1.0]]))
    with pytest.raises(ValueError):
        InertiaParams(1.0, np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ValueError):
        PayloadSpec(-1.0, np.zeros(3))


def test_default_inertia():
    ip = default_inertia()
    assert ip.m == VEHICLE_MASS == 6.05
    assert np.count_nonzero(ip.J - np.diag(np.diag(ip.J))) == 0
    assert ip.J[2, 2] == pytest.approx(0.5 * 6.05 * 0.16**2)


# ---------------------------------------------------------------- dynamics

def test_free_drift():
    s = RigidBodyState(v=[1, 2, 3])
    d = dynamics_derivative(s, Wrench(), ASYM)
    assert np.array_equal(d.x_dot, s.v)
    assert np.all(d.v_dot == 0) and np.all(d.omega_dot == 0)


def test_body_force_acceleration():
    d = dynamics_derivative(RigidBodyState(), Wrench([0, 0, 3.0], [0, 0, 0]), ASYM)
    assert d.v_dot.tolist() == [0, 0, 1.5]


def test_principal_axis_spin_has_no_acceleration():
    d = dynamics_derivative(RigidBodyState(omega=[0, 2.0, 0]), Wrench(), ASYM)
    assert np.all(d.omega_dot == 0)
    assert np.allclose(d.R_dot, skew([0, 2.0, 0]))


def test_no_gravity():
    d = dynamics_derivative(RigidBodyState(R=random_rotation(np.random.default_rng(0))), Wrench(), ASYM)
    assert np.all(d.v_dot == 0)


# ---------------------------------------------------------------- integration

def test_zero_wrench_rest_is_constant():
    s = propagate(RigidBodyState(x=[1, 2, 3]), Wrench(), ASYM, 1e-3, 1000)
    assert s.x.tolist() == [1, 2, 3] and np.array_equal(s.R, np.eye(3))


def test_dt_must_be_positive():
    with pytest.raises(ValueError):
        integrate_step(RigidBodyState(), Wrench(), ASYM, 0.0)


def test_principal_spin_rate_constant():
    s0 = RigidBodyState(omega=[0, 0, 3.0])
    s = propagate(s0, Wrench(), ASYM, 1e-3, 10_000)
    assert abs(np.linalg.norm(s.omega) - 3.0) <= 1e-9


def test_ballistic_translation():
    F = np.array([0.3, -0.2, 0.5])
    s = propagate(RigidBodyState(), Wrench(F, np.zeros(3)), ASYM, 1e-2, 200)
    assert s.x == pytest.approx(0.5 * F / ASYM.m * 2.0**2, abs=1e-12)


def test_step_matches_propagate():
    rng = np.random.default_rng(2)
    s = RigidBodyState(rng.normal(size=3), rng.normal(size=3), random_rotation(rng), rng.normal(size=3))
    W = Wrench(rng.normal(size=3), rng.normal(size=3))
    a = s
    for _ in range(5):
        a = integrate_step(a, W, ASYM, 1e-3)
    b = propagate(s, W, ASYM, 1e-3, 5)
    assert np.array_equal(a.R, b.R) and np.array_equal(a.x, b.x)


def _reference_solution(s, W, ip, T):
    """High-accuracy solution of the reference-point equations with R as nine entries."""
    def rhs(_, y):
        R = y[6:15].reshape(3, 3)
        # re-orthonormalize only for evaluating the vector field
        U, _, Vt = np.linalg.svd(R)
        st_ = RigidBodyState(y[0:3], y[3:6], U @ Vt, y[15:18])
        d = dynamics_derivative(st_, W, ip)
        return np.concatenate([d.x_dot, d.v_dot, d.R_dot.ravel(), d.omega_dot])

    y0 = np.concatenate([s.x, s.v, s.R.ravel(), s.omega])
    sol = solve_ivp(rhs, (0, T), y0, method="DOP853", rtol=1e-12, atol=1e-13)
    y = sol.y[:, -1]
    return y[0:3], y[3:6], y[6:15].reshape(3, 3), y[15:18]


@pytest.mark.parametrize("offset", [np.zeros(3), np.array([0.05, -0.02, -0.2])])
def test_against_ode_oracle(offset):
    rng = np.random.default_rng(5)
    ip = InertiaParams(3.0, np.array([[0.2, 0.01, 0], [0.01, 0.3, 0.02], [0, 0.02, 0.25]]), offset)
    s = RigidBodyState(rng.normal(size=3), rng.normal(size=3), random_rotation(rng), rng.normal(size=3))
    W = Wrench(rng.normal(size=3), rng.normal(size=3) * 0.3)
    x, v, R, w = _reference_solution(s, W, ip, 1.0)
    out = propagate(s, W, ip, 1e-3, 1000)
    assert out.x == pytest.approx(x, abs=1e-8)
    assert out.v == pytest.approx(v, abs=1e-8)
    assert out.R == pytest.approx(R, abs=1e-8)
    assert out.omega == pytest.approx(w, abs=1e-8)


def test_fourth_order_convergence():
    rng = np.random.default_rng(9)
    s = RigidBodyState(np.zeros(3), rng.normal(size=3), random_rotation(rng), rng.normal(size=3) * 2)
    W = Wrench([0.2, -0.1, 0.3], [0.05, 0.02, -0.04])
    T, base = 1.0, 0.02
    ref = propagate(s, W, ASYM, base / 16, int(16 * T / base))

    def err(dt):
        out = propagate(s, W, ASYM, dt, int(round(T / dt)))
        return max(np.max(np.abs(out.R - ref.R)), np.max(np.abs(out.omega - ref.omega)),
                   np.max(np.abs(out.x - ref.x)))

    ratio = err(base) / err(base / 2)
    assert 12 < ratio < 20


def test_galilean_invariance():
    rng = np.random.default_rng(4)
    s = RigidBodyState(rng.normal(size=3), rng.normal(size=3), random_rotation(rng), rng.normal(size=3))
    W = Wrench(rng.normal(size=3), rng.normal(size=3) * 0.2)
    v0 = np.array([0.5, -1.0, 2.0])
    a = propagate(s, W, ASYM, 1e-3, 2000)
    b = propagate(RigidBodyState(s.x, s.v + v0, s.R, s.omega), W, ASYM, 1e-3, 2000)
    assert b.x - a.x == pytest.approx(v0 * 2.0, abs=1e-11)
    assert np.max(np.abs(a.R - b.R)) <= 1e-13


def test_conservation_short():
    s = RigidBodyState(omega=[1.0, 0.3, -0.7], v=[0.1, 0.2, 0.3])
    H0, E0 = angular_momentum(s, ASYM), kinetic_energy(s, ASYM)
    out = propagate(s, Wrench(), ASYM, 1e-3, 2000)
    assert np.linalg.norm(angular_momentum(out, ASYM) - H0) <= 1e-9 * np.linalg.norm(H0)
    assert abs(kinetic_energy(out, ASYM) - E0) <= 1e-9 * E0


# ---------------------------------------------------------------- payload

def test_zero_payload_is_identity():
    base = default_inertia()
    assert composite_inertia(base, PayloadSpec(0.0, [1, 2, 3])) is base


def test_point_mass_lever_rule():
    base = InertiaParams(4.0, np.eye(3))
    r = np.array([0.0, 0.0, -0.5])
    out = composite_inertia(base, PayloadSpec(1.0, r))
    assert out.m == 5.0
    assert out.com == pytest.approx(1.0 * r / 5.0)


def test_two_symmetric_spheres():
    m, rad, L = 2.0, 0.1, 0.3
    base = InertiaParams(1.0, np.diag([0.1, 0.1, 0.2]))
    one = composite_inertia(base, PayloadSpec.sphere(m, rad, [L, 0, 0]))
    both = composite_inertia(one, PayloadSpec.sphere(m, rad, [-L, 0, 0]))
    Js = 0.4 * m * rad**2
    expected = np.diag([0.1 + 2 * Js, 0.1 + 2 * Js + 2 * m * L**2, 0.2 + 2 * Js + 2 * m * L**2])
    assert both.com == pytest.approx(np.zeros(3), abs=1e-15)
    assert both.J == pytest.approx(expected, abs=1e-12)


def test_com_state_round_trip(rng):
    s = RigidBodyState(rng.normal(size=3), rng.normal(size=3), random_rotation(rng), rng.normal(size=3))
    c = np.array([0.1, -0.2, 0.3])
    back = from_com_state(to_com_state(s, c), c)
    assert back.x == pytest.approx(s.x, abs=1e-14) and back.v == pytest.approx(s.v, abs=1e-14)
