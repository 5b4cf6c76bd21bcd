"""Propeller force/torque model and the 6x6 actuation matrix.

Each propeller ``i`` sits at ``r_i = d (cos theta_i, sin theta_i, 0)`` and
pushes along the unit axis ``u_i = (sin theta_i sin phi_i, -cos theta_i sin phi_i,
cos phi_i)``.  Thrust is ``K1 * u`` and the reaction torque is ``w_i K2 * u``,
where ``u`` in [-1, 1] is the normalized actuation.  Stacking the per-propeller
wrench columns gives the actuation matrix ``A`` with ``(F, M) = A @ u``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NotUnit, SingularDesign

N_PROPELLERS = 6
COND_LIMIT = 1e12
SATURATION_POLICIES = ("clamp", "scale")


@dataclass(frozen=True)
class BladeCoefficients:
    """Aerodynamic blade data: air density, diameter and thrust/power coefficients."""

    rho: float
    D: float
    C_T: float
    C_P: float

    def __post_init__(self):
        for name in ("rho", "D", "C_T", "C_P"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")


def blade_constants(bc: BladeCoefficients) -> tuple[float, float]:
    """Return ``(K1, K2)``: thrust and reaction-torque constants of a blade."""
    k1 = bc.rho * bc.D**4 * bc.C_T
    k2 = bc.rho * bc.D**5 * bc.C_P / (2.0 * math.pi)
    return k1, k2


@dataclass(frozen=True)
class PropellerGeometry:
    theta: float
    phi: float
    w: int
    d: float

    def __post_init__(self):
        if self.w not in (-1, 1):
            raise ValueError(f"spin sign must be -1 or +1, got {self.w!r}")
        if not self.d > 0:
            raise ValueError(f"arm length must be positive, got {self.d!r}")
        if abs(self.phi) > math.pi / 2:
            raise ValueError(f"tilt {self.phi!r} rad exceeds 90 degrees")

    @property
    def position(self) -> np.ndarray:
        return self.d * np.array([math.cos(self.theta), math.sin(self.theta), 0.0])

    @property
    def axis(self) -> np.ndarray:
        st, ct = math.sin(self.theta), math.cos(self.theta)
        sp, cp = math.sin(self.phi), math.cos(self.phi)
        return np.array([st * sp, -ct * sp, cp])


@dataclass(frozen=True)
class DesignConfig:
    """Geometry and blade constants of one hexrotor."""

    propellers: tuple[PropellerGeometry, ...]
    k1: float = 1.0
    k2: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "propellers", tuple(self.propellers))
        if len(self.propellers) != N_PROPELLERS:
            raise ValueError(f"expected {N_PROPELLERS} propellers, got {len(self.propellers)}")
        if not self.k1 > 0:
            raise ValueError("k1 must be positive")
        if self.k2 < 0:
            raise ValueError("k2 must be non-negative")

    @classmethod
    def equally_spaced(cls, phi: Sequence[float], w: Sequence[int], d: float = 0.16,
                       k1: float = 1.0, k2: float = 0.01) -> "DesignConfig":
        """Propellers at ``theta_i = (i - 1) * pi / 3``, all at arm length ``d``."""
        if len(phi) != N_PROPELLERS or len(w) != N_PROPELLERS:
            raise ValueError("phi and w need one entry per propeller")
        props = tuple(
            PropellerGeometry(theta=i * math.pi / 3, phi=float(phi[i]), w=int(w[i]), d=float(d))
            for i in range(N_PROPELLERS)
        )
        return cls(props, float(k1), float(k2))

    @property
    def phi(self) -> np.ndarray:
        return np.array([p.phi for p in self.propellers])

    @property
    def w(self) -> np.ndarray:
        return np.array([p.w for p in self.propellers], dtype=int)

    def to_dict(self) -> dict:
        ds = {p.d for p in self.propellers}
        out = {
            "d": self.propellers[0].d,
            "k1": self.k1,
            "k2": self.k2,
            "propellers": [
                {"theta_deg": math.degrees(p.theta), "phi_deg": math.degrees(p.phi), "w": p.w}
                for p in self.propellers
            ],
        }
        if len(ds) > 1:
            for entry, p in zip(out["propellers"], self.propellers):
                entry["d"] = p.d
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DesignConfig":
        d0 = data.get("d")
        props = []
        for entry in data["propellers"]:
            d = entry.get("d", d0)
            if d is None:
                raise ValueError("arm length 'd' missing")
            props.append(PropellerGeometry(
                theta=math.radians(float(entry["theta_deg"])),
                phi=math.radians(float(entry["phi_deg"])),
                w=int(entry["w"]),
                d=float(d),
            ))
        return cls(tuple(props), float(data.get("k1", 1.0)), float(data.get("k2", 0.01)))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "DesignConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Wrench:
    F: np.ndarray = field(default_factory=lambda: np.zeros(3))
    M: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float).reshape(3)
        M = np.asarray(self.M, dtype=float).reshape(3)
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(M))):
            raise ValueError("wrench entries must be finite")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "M", M)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.F, self.M])

    @classmethod
    def from_vector(cls, vec) -> "Wrench":
        vec = np.asarray(vec, dtype=float)
        return cls(vec[:3], vec[3:6])


@dataclass(frozen=True, eq=False)
class ActuationMatrix:
    """Actuation matrix plus (when invertible) its inverse split into row blocks.

    ``b[i]`` and ``c[i]`` are the force and torque parts of row ``i`` of
    ``A^-1``, so that ``u_i = b[i] @ F + c[i] @ M``.
    """

    A: np.ndarray
    A_inv: np.ndarray | None
    cond: float
    rank: int

    @property
    def invertible(self) -> bool:
        return self.A_inv is not None

    @property
    def b(self) -> np.ndarray:
        return self._inverse()[:, :3]

    @property
    def c(self) -> np.ndarray:
        return self._inverse()[:, 3:]

    def _inverse(self) -> np.ndarray:
        if self.A_inv is None:
            raise SingularDesign(f"actuation matrix is singular (rank {self.rank}, cond {self.cond:.3g})")
        return self.A_inv


def actuation_column(p: PropellerGeometry, k1: float, k2: float) -> np.ndarray:
    """Wrench produced by propeller ``p`` at unit actuation, as a 6-vector."""
    st, ct = math.sin(p.theta), math.cos(p.theta)
    sp, cp = math.sin(p.phi), math.cos(p.phi)
    lever = k1 * p.d * cp - p.w * k2 * sp
    return np.array([
        k1 * st * sp,
        -k1 * ct * sp,
        k1 * cp,
        lever * st,
        -lever * ct,
        -k1 * p.d * sp - p.w * k2 * cp,
    ])


def matrix_from_columns(A: np.ndarray) -> ActuationMatrix:
    A = np.array(A, dtype=float)
    A.setflags(write=False)
    cond = float(np.linalg.cond(A))
    rank = int(np.linalg.matrix_rank(A))
    A_inv = None
    if np.isfinite(cond) and cond < COND_LIMIT:
        A_inv = np.linalg.inv(A)
        A_inv.setflags(write=False)
    return ActuationMatrix(A, A_inv, cond, rank)


def build_actuation_matrix(cfg: DesignConfig, strict: bool = True) -> ActuationMatrix:
    """Assemble ``A`` from the propeller columns and invert it.

    With ``strict`` a singular design raises :class:`SingularDesign` (the
    half-built matrix is attached as ``exc.matrix``); otherwise the matrix is
    returned without inverse blocks.
    """
    A = np.column_stack([actuation_column(p, cfg.k1, cfg.k2) for p in cfg.propellers])
    am = matrix_from_columns(A)
    if strict and not am.invertible:
        exc = SingularDesign(f"design is not holonomic: rank {am.rank}, cond {am.cond:.3g}")
        exc.matrix = am
        raise exc
    return am


def forward_map(am: ActuationMatrix, u) -> Wrench:
    return Wrench.from_vector(am.A @ np.asarray(u, dtype=float))


class Allocation(NamedTuple):
    u: np.ndarray
    feasible: bool


def allocate(am: ActuationMatrix, W: Wrench) -> Allocation:
    """Actuation producing wrench ``W`` exactly; ``feasible`` iff all ``|u_i| <= 1``."""
    u = am._inverse() @ W.as_vector()
    return Allocation(u, bool(np.all(np.abs(u) <= 1.0)))


def saturate(u, policy: str = "scale") -> tuple[np.ndarray, bool]:
    """Bring an actuation vector back into the [-1, 1] hypercube.

    ``clamp`` clips each channel independently; ``scale`` divides the whole
    vector by its largest magnitude, which keeps the wrench direction.
    """
    u = np.asarray(u, dtype=float)
    peak = float(np.max(np.abs(u))) if u.size else 0.0
    if peak <= 1.0:
        return u.copy(), False
    if policy == "clamp":
        return np.clip(u, -1.0, 1.0), True
    if policy == "scale":
        return u / peak, True
    raise ValueError(f"unknown saturation policy {policy!r}; expected one of {SATURATION_POLICIES}")


def _blocks(am: ActuationMatrix, kind: str) -> np.ndarray:
    if kind == "force":
        return am.b
    if kind == "torque":
        return am.c
    raise ValueError(f"kind must be 'force' or 'torque', got {kind!r}")


def wrench_limit_along(am: ActuationMatrix, kind: str, e) -> float:
    """Largest force (or torque) magnitude along unit direction ``e``.

    The complementary wrench component is held at zero.  Returns ``inf``
    when no actuator is loaded by that direction.
    """
    e = np.asarray(e, dtype=float).reshape(3)
    norm = float(np.linalg.norm(e))
    if abs(norm - 1.0) > 1e-6:
        raise NotUnit(f"direction has norm {norm:.9g}, expected 1")
    proj = np.abs(_blocks(am, kind) @ e)
    peak = float(proj.max())
    if peak == 0.0:
        return math.inf
    return 1.0 / peak


def wrench_limits(am: ActuationMatrix) -> tuple[float, float]:
    """``(F_max, M_max)``: force and torque attainable in every direction."""
    bn = np.linalg.norm(am.b, axis=1)
    cn = np.linalg.norm(am.c, axis=1)
    return float(1.0 / bn.max()), float(1.0 / cn.max())


def selected_design(d: float = 0.16, k1: float = 1.0, k2: float = 0.01) -> DesignConfig:
    """The rounded force-preferring design: +-55 deg alternating tilt, alternating spin."""
    phi = np.radians([55, -55, 55, -55, 55, -55])
    return DesignConfig.equally_spaced(phi, (-1, 1, -1, 1, -1, 1), d=d, k1=k1, k2=k2)
