"""Decoupled position and attitude controllers closed through allocation.

Translation is feedback-linearized (the controller commands an inertial
acceleration and rotates it into the body frame), attitude uses a geometric
controller on SO(3).  Both produce body-frame quantities that are stacked
into one wrench and mapped to propeller actuations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import AttitudeSingularity
from .rigid_body import InertiaParams, RigidBodyState, skew
from .wrench_model import ActuationMatrix, Wrench, allocate, forward_map, saturate

SINGULARITY_MARGIN = 1e-9


@dataclass(frozen=True)
class PositionGains:
    k_x: float = 4.0
    k_v: float = 4.0

    def __post_init__(self):
        if not (self.k_x > 0 and self.k_v > 0):
            raise ValueError("position gains must be positive")


@dataclass(frozen=True)
class AttitudeGains:
    k_R: float = 8.0
    k_omega: float = 2.5

    def __post_init__(self):
        if not (self.k_R > 0 and self.k_omega > 0):
            raise ValueError("attitude gains must be positive")


@dataclass(frozen=True)
class Gains:
    position: PositionGains = field(default_factory=PositionGains)
    attitude: AttitudeGains = field(default_factory=AttitudeGains)

    def to_dict(self) -> dict:
        return {"kx": self.position.k_x, "kv": self.position.k_v,
                "kr": self.attitude.k_R, "kw": self.attitude.k_omega}

    @classmethod
    def from_dict(cls, data: dict) -> "Gains":
        return cls(PositionGains(float(data.get("kx", 4.0)), float(data.get("kv", 4.0))),
                   AttitudeGains(float(data.get("kr", 8.0)), float(data.get("kw", 2.5))))


@dataclass(frozen=True, eq=False)
class Setpoint:
    x_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R_d: np.ndarray = field(default_factory=lambda: np.eye(3))
    omega_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_dot_d: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("x_d", "v_d", "omega_d", "omega_dot_d"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        R = np.asarray(self.R_d, dtype=float).reshape(3, 3)
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("R_d is not a proper rotation matrix")
        object.__setattr__(self, "R_d", R)


def position_control(s: RigidBodyState, sp: Setpoint, g: PositionGains, m: float) -> np.ndarray:
    """Body-frame force making the translational error a linear PD system."""
    e_x = s.x - sp.x_d
    e_v = s.v - sp.v_d
    p = -g.k_x * e_x - g.k_v * e_v
    return m * (s.R.T @ p)


def attitude_error(R, R_d) -> np.ndarray:
    """Rotation error vector, of magnitude ``sin(angle / 2)``.

    Raises :class:`AttitudeSingularity` when the relative rotation approaches
    180 degrees, where the normalization blows up.
    """
    Re = R_d.T @ R
    tr = float(np.trace(Re))
    if tr <= -1.0 + SINGULARITY_MARGIN:
        raise AttitudeSingularity(f"trace(R_d^T R) = {tr:.12f}; attitude error undefined")
    D = Re - Re.T
    vee = np.array([D[2, 1], D[0, 2], D[1, 0]])
    return vee / (2.0 * math.sqrt(1.0 + tr))


def attitude_control(s: RigidBodyState, sp: Setpoint, g: AttitudeGains, J) -> np.ndarray:
    """Body-frame torque from the geometric SO(3) tracking law.

    The feedforward uses ``S(w_r) J w_r`` with ``w_r = R^T R_d w_d`` the
    desired rate expressed in the body frame.
    """
    e_R = attitude_error(s.R, sp.R_d)
    Rrel = s.R.T @ sp.R_d
    w_ref = Rrel @ sp.omega_d
    e_w = s.omega - w_ref
    return (-g.k_R * e_R - g.k_omega * e_w
            + skew(w_ref) @ (J @ w_ref) + J @ (Rrel @ sp.omega_dot_d))


class Command(NamedTuple):
    u: np.ndarray
    commanded: Wrench
    applied: Wrench
    saturated: bool


def wrench_command(s: RigidBodyState, sp: Setpoint, gains: Gains, ip: InertiaParams,
                   am: ActuationMatrix, policy: str = "scale") -> Command:
    """Controller output -> allocation -> saturation -> realized wrench.

    ``applied`` is what the propellers actually deliver and differs from
    ``commanded`` whenever the allocation left the actuation hypercube.
    """
    F = position_control(s, sp, gains.position, ip.m)
    M = attitude_control(s, sp, gains.attitude, ip.J)
    commanded = Wrench(F, M)
    u, _ = allocate(am, commanded)
    u, saturated = saturate(u, policy)
    applied = forward_map(am, u)
    return Command(u, commanded, applied, saturated)
