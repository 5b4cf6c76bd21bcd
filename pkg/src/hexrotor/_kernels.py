"""Compiled inner loops: optimizer cost evaluation and the rigid-body step.

These duplicate math that lives in readable form in ``wrench_model`` and
``rigid_body``; the test-suite checks them against each other.
"""
import numpy as np
from numba import njit

_THETA = np.arange(6) * np.pi / 3.0
_SIN_T = np.sin(_THETA)
_COS_T = np.cos(_THETA)


@njit(cache=True)
def block_sqnorms(phi, w, d, k_ratio, out):
    """Write ``||b_i||^2`` into ``out[:6]`` and ``||c_i||^2`` into ``out[6:]``.

    Equally spaced arms, K1 = 1.  Returns False if ``A`` is numerically singular.
    """
    A = np.empty((6, 6))
    for i in range(6):
        sp = np.sin(phi[i])
        cp = np.cos(phi[i])
        lever = d * cp - w[i] * k_ratio * sp
        A[0, i] = _SIN_T[i] * sp
        A[1, i] = -_COS_T[i] * sp
        A[2, i] = cp
        A[3, i] = lever * _SIN_T[i]
        A[4, i] = -lever * _COS_T[i]
        A[5, i] = -d * sp - w[i] * k_ratio * cp
    if abs(np.linalg.det(A)) < 1e-14:
        for i in range(12):
            out[i] = 1e12
        return False
    inv = np.linalg.inv(A)
    for i in range(6):
        out[i] = inv[i, 0] ** 2 + inv[i, 1] ** 2 + inv[i, 2] ** 2
        out[6 + i] = inv[i, 3] ** 2 + inv[i, 4] ** 2 + inv[i, 5] ** 2
    return True


@njit(cache=True)
def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


@njit(cache=True)
def expmap(phi):
    """Rodrigues formula; second-order series below 1e-6 rad."""
    angle = np.sqrt(phi[0] ** 2 + phi[1] ** 2 + phi[2] ** 2)
    S = np.array([[0.0, -phi[2], phi[1]],
                  [phi[2], 0.0, -phi[0]],
                  [-phi[1], phi[0], 0.0]])
    if angle < 1e-6:
        a = 1.0 - angle * angle / 6.0
        b = 0.5 - angle * angle / 24.0
    else:
        a = np.sin(angle) / angle
        b = (1.0 - np.cos(angle)) / (angle * angle)
    return np.eye(3) + a * S + b * (S @ S)


@njit(cache=True)
def _dexpinv(theta, omega):
    # inverse right Jacobian, truncated after the second-order term
    t1 = _cross(theta, omega)
    return omega + 0.5 * t1 + _cross(theta, t1) / 12.0


@njit(cache=True)
def _alpha(omega, M, J, Jinv):
    return Jinv @ (M - _cross(omega, J @ omega))


@njit(cache=True)
def rkmk4_step(x, v, R, omega, F, M, m, J, Jinv, dt):
    """One Runge-Kutta-Munthe-Kaas step of the torque/force-driven rigid body.

    The state is that of the centre of mass; ``F`` and ``M`` are body-frame
    and held constant over the step.  Returns ``(x, v, R, omega)``.
    """
    h = 0.5 * dt
    Fm = F / m

    a1 = R @ Fm
    al1 = _alpha(omega, M, J, Jinv)
    th1 = omega.copy()

    v2 = v + h * a1
    w2 = omega + h * al1
    t2 = h * th1
    R2 = R @ expmap(t2)
    a2 = R2 @ Fm
    al2 = _alpha(w2, M, J, Jinv)
    th2 = _dexpinv(t2, w2)

    v3 = v + h * a2
    w3 = omega + h * al2
    t3 = h * th2
    R3 = R @ expmap(t3)
    a3 = R3 @ Fm
    al3 = _alpha(w3, M, J, Jinv)
    th3 = _dexpinv(t3, w3)

    v4 = v + dt * a3
    w4 = omega + dt * al3
    t4 = dt * th3
    R4 = R @ expmap(t4)
    a4 = R4 @ Fm
    al4 = _alpha(w4, M, J, Jinv)
    th4 = _dexpinv(t4, w4)

    s = dt / 6.0
    x_new = x + s * (v + 2.0 * v2 + 2.0 * v3 + v4)
    v_new = v + s * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    w_new = omega + s * (al1 + 2.0 * al2 + 2.0 * al3 + al4)
    R_new = R @ expmap(s * (th1 + 2.0 * th2 + 2.0 * th3 + th4))
    return x_new, v_new, R_new, w_new


@njit(cache=True)
def rkmk4_propagate(x, v, R, omega, F, M, m, J, Jinv, dt, n_steps):
    for _ in range(n_steps):
        x, v, R, omega = rkmk4_step(x, v, R, omega, F, M, m, J, Jinv, dt)
    return x, v, R, omega


@njit(cache=True)
def epigraph_constraints(z, w, d, k_ratio, slope_p, offset_p, slope_q, offset_q, use_p, use_q, buf, out):
    """Constraint values ``g >= 0`` of the epigraph problems, written to ``out``.

    Force rows are ``slope_p * z[0] + offset_p - ||b_i||^2`` and torque rows
    mirror them with ``c_i``; ``use_p``/``use_q`` select which families are
    present.  Returns ``min(g)``.
    """
    block_sqnorms(z[1:], w, d, k_ratio, buf)
    j = 0
    lo = np.inf
    if use_p:
        for i in range(6):
            out[j] = slope_p * z[0] + offset_p - buf[i]
            lo = min(lo, out[j])
            j += 1
    if use_q:
        for i in range(6):
            out[j] = slope_q * z[0] + offset_q - buf[6 + i]
            lo = min(lo, out[j])
            j += 1
    return lo


@njit(cache=True)
def block_sqnorms_grad(phi, w, d, k_ratio, out, jac):
    """As :func:`block_sqnorms`, plus ``jac[k, i] = d out[k] / d phi[i]``.

    Only column ``i`` of ``A`` depends on ``phi[i]``, so
    ``d(A^-1)/d phi_i = -(A^-1 a_i') (A^-1)[i, :]``.
    """
    A = np.empty((6, 6))
    dA = np.empty((6, 6))
    for i in range(6):
        sp = np.sin(phi[i])
        cp = np.cos(phi[i])
        lever = d * cp - w[i] * k_ratio * sp
        dlever = -d * sp - w[i] * k_ratio * cp
        A[0, i] = _SIN_T[i] * sp
        A[1, i] = -_COS_T[i] * sp
        A[2, i] = cp
        A[3, i] = lever * _SIN_T[i]
        A[4, i] = -lever * _COS_T[i]
        A[5, i] = -d * sp - w[i] * k_ratio * cp
        dA[0, i] = _SIN_T[i] * cp
        dA[1, i] = -_COS_T[i] * cp
        dA[2, i] = -sp
        dA[3, i] = dlever * _SIN_T[i]
        dA[4, i] = -dlever * _COS_T[i]
        dA[5, i] = -d * cp + w[i] * k_ratio * sp
    if abs(np.linalg.det(A)) < 1e-14:
        for i in range(12):
            out[i] = 1e12
            for j in range(6):
                jac[i, j] = 0.0
        return False
    inv = np.linalg.inv(A)
    v = inv @ dA  # column i: A^-1 a_i'
    for k in range(6):
        out[k] = inv[k, 0] ** 2 + inv[k, 1] ** 2 + inv[k, 2] ** 2
        out[6 + k] = inv[k, 3] ** 2 + inv[k, 4] ** 2 + inv[k, 5] ** 2
        for i in range(6):
            sf = 0.0
            st = 0.0
            for j in range(3):
                sf += inv[k, j] * inv[i, j]
                st += inv[k, 3 + j] * inv[i, 3 + j]
            jac[k, i] = -2.0 * v[k, i] * sf
            jac[6 + k, i] = -2.0 * v[k, i] * st
    return True
