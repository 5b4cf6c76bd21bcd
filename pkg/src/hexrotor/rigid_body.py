"""Microgravity rigid-body dynamics and their integration on SO(3).

State convention: ``x``, ``v`` are inertial position and velocity of the body
reference point (the vehicle's own centre of mass), ``R`` maps body to
inertial coordinates and ``omega`` is the body-frame angular velocity.  There
is deliberately no gravity term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import NotSkew
from .wrench_model import Wrench

ORTHO_TOL = 1e-9


def skew(omega) -> np.ndarray:
    """Matrix ``S(omega)`` with ``S(omega) @ a == cross(omega, a)``."""
    wx, wy, wz = np.asarray(omega, dtype=float).reshape(3)
    return np.array([[0.0, -wz, wy],
                     [wz, 0.0, -wx],
                     [-wy, wx, 0.0]])


def unskew(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    asym = np.linalg.norm(S + S.T)
    if asym > 1e-6 * np.linalg.norm(S):
        raise NotSkew(f"matrix is not skew-symmetric (|S + S^T| = {asym:.3g})")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def so3_exp(phi) -> np.ndarray:
    """Rotation matrix for the axis-angle vector ``phi``."""
    return _kernels.expmap(np.asarray(phi, dtype=float).reshape(3))


def rotation_angle(R) -> float:
    """Geodesic angle (rad) of rotation ``R`` from the identity."""
    c = 0.5 * (np.trace(R) - 1.0)
    return math.acos(min(1.0, max(-1.0, c)))


def _check_rotation(R: np.ndarray) -> None:
    if R.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHO_TOL or abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
        raise ValueError("R is not a proper rotation matrix")


@dataclass(frozen=True, eq=False)
class RigidBodyState:
    x: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("x", "v", "omega"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        R = np.asarray(self.R, dtype=float)
        _check_rotation(R)
        object.__setattr__(self, "R", R)


@dataclass(frozen=True, eq=False)
class InertiaParams:
    """Mass and inertia tensor.

    ``J`` is taken about the centre of mass, which sits at ``com`` in body
    coordinates relative to the state's reference point.  ``com`` is zero for
    the bare vehicle and nonzero once a payload is attached.
    """

    m: float
    J: np.ndarray
    com: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float).reshape(3, 3)
        if not self.m > 0:
            raise ValueError("mass must be positive")
        if not np.allclose(J, J.T, atol=1e-12):
            raise ValueError("inertia tensor must be symmetric")
        if np.min(np.linalg.eigvalsh(J)) <= 0:
            raise ValueError("inertia tensor must be positive definite")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float).reshape(3))

    @classmethod
    def cylinder(cls, m: float = 6.05, radius: float = 0.16, height: float = 0.2) -> "InertiaParams":
        """Solid cylinder about its axis (body z)."""
        jxx = m * (3 * radius**2 + height**2) / 12.0
        return cls(m, np.diag([jxx, jxx, 0.5 * m * radius**2]))


# Vehicle mass used throughout the simulation campaigns.
VEHICLE_MASS = 6.05


def default_inertia() -> InertiaParams:
    return InertiaParams.cylinder(VEHICLE_MASS, 0.16, 0.2)


@dataclass(frozen=True, eq=False)
class PayloadSpec:
    mass: float
    offset: np.ndarray
    shape_inertia: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("payload mass must be non-negative")
        Js = np.asarray(self.shape_inertia, dtype=float).reshape(3, 3)
        if not np.allclose(Js, Js.T, atol=1e-12) or np.min(np.linalg.eigvalsh(Js)) < -1e-12:
            raise ValueError("payload inertia must be symmetric positive semi-definite")
        object.__setattr__(self, "shape_inertia", Js)
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float).reshape(3))

    @classmethod
    def sphere(cls, mass: float, radius: float, offset) -> "PayloadSpec":
        return cls(mass, offset, np.eye(3) * 0.4 * mass * radius**2)


def _parallel_axis(m: float, r: np.ndarray) -> np.ndarray:
    return m * (np.dot(r, r) * np.eye(3) - np.outer(r, r))


def composite_inertia(base: InertiaParams, payload: PayloadSpec) -> InertiaParams:
    """Rigidly attach ``payload`` to ``base``; result is about the combined CoM."""
    if payload.mass == 0:
        return base
    m = base.m + payload.mass
    com = (base.m * base.com + payload.mass * payload.offset) / m
    J = (base.J + _parallel_axis(base.m, base.com - com)
         + payload.shape_inertia + _parallel_axis(payload.mass, payload.offset - com))
    return InertiaParams(m, 0.5 * (J + J.T), com)


class StateDerivative(NamedTuple):
    x_dot: np.ndarray
    v_dot: np.ndarray
    R_dot: np.ndarray
    omega_dot: np.ndarray


def dynamics_derivative(s: RigidBodyState, W: Wrench, ip: InertiaParams) -> StateDerivative:
    """Newton-Euler equations; the wrench acts at the reference point.

    With ``ip.com == 0`` this is ``x' = v, v' = R F / m, R' = R S(w),
    J w' = M - w x J w``.
    """
    c = ip.com
    M = W.M - np.cross(c, W.F)
    omega_dot = np.linalg.solve(ip.J, M - np.cross(s.omega, ip.J @ s.omega))
    body_acc = W.F / ip.m - np.cross(s.omega, np.cross(s.omega, c)) - np.cross(omega_dot, c)
    return StateDerivative(s.v.copy(), s.R @ body_acc, s.R @ skew(s.omega), omega_dot)


def to_com_state(s: RigidBodyState, com) -> RigidBodyState:
    com = np.asarray(com, dtype=float)
    return RigidBodyState(s.x + s.R @ com, s.v + s.R @ np.cross(s.omega, com), s.R, s.omega)


def from_com_state(s: RigidBodyState, com) -> RigidBodyState:
    com = np.asarray(com, dtype=float)
    return RigidBodyState(s.x - s.R @ com, s.v - s.R @ np.cross(s.omega, com), s.R, s.omega)


def _kernel_args(s: RigidBodyState, W: Wrench, ip: InertiaParams):
    Jinv = np.linalg.inv(ip.J)
    M = W.M - np.cross(ip.com, W.F)
    return M, Jinv


def integrate_step(s: RigidBodyState, W: Wrench, ip: InertiaParams, dt: float) -> RigidBodyState:
    """Advance one step of length ``dt`` with the wrench held constant.

    Fourth-order Runge-Kutta-Munthe-Kaas: translational and rate states use
    the classical RK4 tableau, the rotation is updated multiplicatively by the
    exponential of the stage-averaged Lie-algebra increment.
    """
    return propagate(s, W, ip, dt, 1)


def propagate(s: RigidBodyState, W: Wrench, ip: InertiaParams, dt: float, n_steps: int) -> RigidBodyState:
    """``n_steps`` consecutive :func:`integrate_step` calls under a constant wrench."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    has_offset = bool(np.any(ip.com))
    if has_offset:
        s = to_com_state(s, ip.com)
    M, Jinv = _kernel_args(s, W, ip)
    x, v, R, w = _kernels.rkmk4_propagate(s.x, s.v, s.R, s.omega, W.F, M, float(ip.m), ip.J, Jinv,
                                          float(dt), int(n_steps))
    out = RigidBodyState(x, v, R, w)
    if has_offset:
        out = from_com_state(out, ip.com)
    return out


def angular_momentum(s: RigidBodyState, ip: InertiaParams) -> np.ndarray:
    """Inertial angular momentum about the centre of mass."""
    return s.R @ (ip.J @ s.omega)


def kinetic_energy(s: RigidBodyState, ip: InertiaParams) -> float:
    v_com = s.v + s.R @ np.cross(s.omega, ip.com)
    return 0.5 * ip.m * float(v_com @ v_com) + 0.5 * float(s.omega @ ip.J @ s.omega)

