"""Closed-loop simulation campaigns: step responses, waypoint missions, noise, payloads.

One run alternates measure -> control -> allocate -> saturate -> integrate at a
fixed step.  The controller always works with the nominal inertia; a payload
only changes the plant.  Waypoints advance on the *true* state so that
measurement noise cannot keep a converged vehicle from being credited.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from . import _kernels
from .errors import AttitudeSingularity, EmptyLog
from .flight_control import Gains, attitude_error
from .rigid_body import (InertiaParams, PayloadSpec, RigidBodyState, composite_inertia,
                         default_inertia, rotation_angle)
from .wrench_model import SATURATION_POLICIES, DesignConfig, build_actuation_matrix, saturate

LOG_HEADER = (["t", "x", "y", "z", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "wx", "wy", "wz",
               "ex", "ey", "ez", "er_x", "er_y", "er_z"]
              + [f"u{i}" for i in range(1, 7)] + ["sat"])


@dataclass(frozen=True)
class NoiseModel:
    """Per-axis Gaussian standard deviations of the measured state."""

    sigma_x: float = 0.02
    sigma_v: float = 0.02
    sigma_att: float = math.radians(5.0)
    sigma_omega: float = math.radians(1.0)
    seed: int = 0

    def __post_init__(self):
        if min(self.sigma_x, self.sigma_v, self.sigma_att, self.sigma_omega) < 0:
            raise ValueError("noise standard deviations must be non-negative")

    def sigmas(self) -> np.ndarray:
        return np.repeat([self.sigma_x, self.sigma_v, self.sigma_att, self.sigma_omega], 3)

    def to_dict(self) -> dict:
        return {"sigma_x": self.sigma_x, "sigma_v": self.sigma_v,
                "sigma_att_deg": math.degrees(self.sigma_att),
                "sigma_omega_deg": math.degrees(self.sigma_omega), "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        base = cls()
        return cls(float(data.get("sigma_x", base.sigma_x)),
                   float(data.get("sigma_v", base.sigma_v)),
                   math.radians(float(data.get("sigma_att_deg", math.degrees(base.sigma_att)))),
                   math.radians(float(data.get("sigma_omega_deg", math.degrees(base.sigma_omega)))),
                   int(data.get("seed", 0)))


def _perturb(x, v, R, w, sig, rng):
    n = rng.standard_normal(12) * sig
    return x + n[0:3], v + n[3:6], _kernels.expmap(n[6:9]) @ R, w + n[9:12]


def perturb_measurement(s: RigidBodyState, nm: NoiseModel, rng: np.random.Generator) -> RigidBodyState:
    """Noisy copy of ``s``.  The attitude is perturbed on the group, so it stays a rotation."""
    x, v, R, w = _perturb(s.x, s.v, s.R, s.omega, nm.sigmas(), rng)
    return RigidBodyState(x, v, R, w)


def euler_xyz_deg_to_matrix(angles) -> np.ndarray:
    """Intrinsic X-Y-Z Euler angles in degrees to a rotation matrix."""
    return Rotation.from_euler("XYZ", np.asarray(angles, dtype=float), degrees=True).as_matrix()


@dataclass(frozen=True, eq=False)
class Waypoint:
    x_d: np.ndarray
    R_d: np.ndarray = field(default_factory=lambda: np.eye(3))
    pos_tol: float = 0.05
    att_tol: float = math.radians(3.0)
    hold: float = 0.5

    def __post_init__(self):
        if not (self.pos_tol > 0 and self.att_tol > 0 and self.hold > 0):
            raise ValueError("waypoint tolerances and hold time must be positive")
        object.__setattr__(self, "x_d", np.asarray(self.x_d, dtype=float).reshape(3))
        # validates the rotation
        object.__setattr__(self, "R_d", RigidBodyState(R=self.R_d).R)

    def to_dict(self) -> dict:
        return {"x": self.x_d.tolist(),
                "euler_xyz_deg": Rotation.from_matrix(self.R_d).as_euler("XYZ", degrees=True).tolist(),
                "pos_tol": self.pos_tol, "att_tol_deg": math.degrees(self.att_tol), "hold": self.hold}

    @classmethod
    def from_dict(cls, data: dict) -> "Waypoint":
        return cls(data["x"], euler_xyz_deg_to_matrix(data.get("euler_xyz_deg", (0, 0, 0))),
                   float(data.get("pos_tol", 0.05)), math.radians(float(data.get("att_tol_deg", 3.0))),
                   float(data.get("hold", 0.5)))


@dataclass(frozen=True, eq=False)
class Scenario:
    """A complete simulation case.

    With ``stop_when_done`` false the run continues to ``t_max`` after the last
    waypoint is reached (used for step responses, whose whole decay is of interest).
    """

    design: DesignConfig
    waypoints: tuple[Waypoint, ...]
    inertia: InertiaParams = field(default_factory=default_inertia)
    gains: Gains = field(default_factory=Gains)
    initial: RigidBodyState = field(default_factory=RigidBodyState)
    noise: NoiseModel | None = None
    payload: PayloadSpec | None = None
    dt: float = 1e-3
    t_max: float = 30.0
    saturation: str = "scale"
    stop_when_done: bool = True
    name: str = "scenario"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_max > self.dt:
            raise ValueError("t_max must exceed dt")
        if not self.waypoints:
            raise ValueError("a scenario needs at least one waypoint")
        if self.saturation not in SATURATION_POLICIES:
            raise ValueError(f"unknown saturation policy {self.saturation!r}")
        object.__setattr__(self, "waypoints", tuple(self.waypoints))

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | str = ".") -> "Scenario":
        """Build from the JSON layout; ``design`` may be inline or a path relative to ``base_dir``."""
        design = data["design"]
        if isinstance(design, str):
            design = DesignConfig.load(Path(base_dir) / design)
        else:
            design = DesignConfig.from_dict(design)
        inertia = default_inertia()
        if "inertia" in data:
            inertia = InertiaParams(float(data["inertia"]["m"]), np.asarray(data["inertia"]["J"], dtype=float))
        init = data.get("initial", {})
        initial = RigidBodyState(init.get("x", np.zeros(3)), init.get("v", np.zeros(3)),
                                 euler_xyz_deg_to_matrix(init.get("euler_xyz_deg", (0, 0, 0))),
                                 init.get("omega", np.zeros(3)))
        payload = None
        if data.get("payload"):
            p = data["payload"]
            payload = PayloadSpec.sphere(float(p["mass"]), float(p.get("radius", 0.1)),
                                         p.get("offset", (0.0, 0.0, -0.25)))
        noise = NoiseModel.from_dict(data["noise"]) if data.get("noise") else None
        return cls(design=design,
                   waypoints=tuple(Waypoint.from_dict(w) for w in data["waypoints"]),
                   inertia=inertia,
                   gains=Gains.from_dict(data.get("gains", {})),
                   initial=initial, noise=noise, payload=payload,
                   dt=float(data.get("dt", 1e-3)), t_max=float(data.get("t_max", 30.0)),
                   saturation=data.get("saturation", "scale"),
                   stop_when_done=bool(data.get("stop_when_done", True)),
                   name=data.get("name", "scenario"))

    @classmethod
    def load(cls, path) -> "Scenario":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), path.parent)

    def with_noise(self, noise: NoiseModel | None) -> "Scenario":
        return _replace(self, noise=noise)

    def with_payload(self, payload: PayloadSpec | None) -> "Scenario":
        return _replace(self, payload=payload)


def _replace(sc: Scenario, **kw) -> Scenario:
    from dataclasses import replace
    return replace(sc, **kw)


@dataclass
class WaypointEvent:
    index: int
    t_start: float
    t_settled: float | None = None  # entry into the tolerance window that was then held
    t_achieved: float | None = None  # t_settled + hold


@dataclass(eq=False)
class ScenarioLog:
    """Per-step arrays of a run.

    ``x, v, R, omega`` are the true state (of the vehicle's reference point);
    ``*_meas`` the measurements the controller saw.  ``e_x, e_v, e_R, e_w``
    are the controller's errors (computed from measurements); ``e_x_true`` and
    ``att_err_true`` (geodesic angle) are the errors of the true state.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray
    x_meas: np.ndarray
    v_meas: np.ndarray
    R_meas: np.ndarray
    omega_meas: np.ndarray
    waypoint: np.ndarray
    e_x: np.ndarray
    e_v: np.ndarray
    e_R: np.ndarray
    e_w: np.ndarray
    e_x_true: np.ndarray
    e_R_true: np.ndarray
    att_err_true: np.ndarray
    u: np.ndarray
    saturated: np.ndarray
    waypoints: tuple[Waypoint, ...]
    events: list[WaypointEvent]
    completed: bool
    failure: str | None = None

    def __len__(self) -> int:
        return int(self.t.size)

    def quaternions(self) -> np.ndarray:
        """``(qw, qx, qy, qz)`` rows with ``qw >= 0``."""
        if len(self) == 0:
            return np.empty((0, 4))
        q = Rotation.from_matrix(self.R).as_quat(canonical=True)
        return q[:, [3, 0, 1, 2]]

    def rows(self) -> np.ndarray:
        return np.column_stack([self.t, self.x, self.v, self.quaternions(), self.omega,
                                self.e_x_true, self.e_R_true, self.u, self.saturated.astype(float)])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LOG_HEADER)
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row[:-1]] + [str(int(row[-1]))])


def _empty(n: int, *shape) -> np.ndarray:
    return np.zeros((n,) + shape)


def run_scenario(sc: Scenario) -> ScenarioLog:
    """Simulate ``sc`` at fixed step ``dt``.

    Raises :class:`SingularDesign` for a non-invertible design.  An attitude
    singularity stops the run; the log is returned with ``failure`` set.
    """
    am = build_actuation_matrix(sc.design)
    A, Ainv = am.A, am._inverse()
    nominal = sc.inertia
    plant = composite_inertia(nominal, sc.payload) if sc.payload is not None else nominal
    c = plant.com
    Jp, Jp_inv, mp = plant.J, np.linalg.inv(plant.J), float(plant.m)
    m_nom = float(nominal.m)
    kx, kv = sc.gains.position.k_x, sc.gains.position.k_v
    kR, kw = sc.gains.attitude.k_R, sc.gains.attitude.k_omega
    sig = sc.noise.sigmas() if sc.noise is not None else None
    rng = np.random.default_rng(sc.noise.seed) if sc.noise is not None else None
    dt = float(sc.dt)

    n_max = int(math.floor(sc.t_max / dt + 1e-9)) + 1
    cols = {k: _empty(n_max, 3) for k in ("x", "v", "omega", "x_meas", "v_meas", "omega_meas",
                                         "e_x", "e_v", "e_R", "e_w", "e_x_true", "e_R_true")}
    Rs, Rms = _empty(n_max, 3, 3), _empty(n_max, 3, 3)
    ts, wps, att = np.zeros(n_max), np.zeros(n_max, dtype=int), np.zeros(n_max)
    us, sats = _empty(n_max, 6), np.zeros(n_max, dtype=bool)

    # plant state of the composite centre of mass
    s0 = sc.initial
    R = s0.R.copy()
    w = s0.omega.copy()
    xc = s0.x + R @ c
    vc = s0.v + R @ np.cross(w, c)

    k_wp = 0
    wp = sc.waypoints[0]
    events = [WaypointEvent(0, 0.0)]
    t_in: float | None = None
    completed = False
    failure = None
    n = 0
    while n < n_max:
        t = n * dt
        x = xc - R @ c
        v = vc - R @ np.cross(w, c)
        if sig is not None:
            xm, vm, Rm, wm = _perturb(x, v, R, w, sig, rng)
        else:
            xm, vm, Rm, wm = x, v, R, w
        try:
            e_R = attitude_error(Rm, wp.R_d)
            e_R_true = attitude_error(R, wp.R_d)
        except AttitudeSingularity as exc:
            failure = f"attitude singularity at t={t:.6g}: {exc}"
            break
        e_x = xm - wp.x_d
        e_v = vm
        # position loop: feedback-linearized PD; attitude loop: geometric PD (waypoints hold still)
        F = m_nom * (Rm.T @ (-kx * e_x - kv * e_v))
        M = -kR * e_R - kw * wm
        u, sat = saturate(Ainv @ np.concatenate([F, M]), sc.saturation)
        applied = A @ u

        ex_true = x - wp.x_d
        ang = rotation_angle(wp.R_d.T @ R)
        ts[n], wps[n], att[n] = t, k_wp, ang
        cols["x"][n], cols["v"][n], cols["omega"][n] = x, v, w
        cols["x_meas"][n], cols["v_meas"][n], cols["omega_meas"][n] = xm, vm, wm
        cols["e_x"][n], cols["e_v"][n], cols["e_R"][n], cols["e_w"][n] = e_x, e_v, e_R, wm
        cols["e_x_true"][n], cols["e_R_true"][n] = ex_true, e_R_true
        Rs[n], Rms[n] = R, Rm
        us[n], sats[n] = u, sat
        n += 1

        # waypoint bookkeeping on the true state
        if not completed:
            inside = np.linalg.norm(ex_true) <= wp.pos_tol and ang <= wp.att_tol
            if not inside:
                t_in = None
            elif t_in is None:
                t_in = t
            if t_in is not None and t - t_in >= wp.hold - 1e-9:
                events[-1].t_settled, events[-1].t_achieved = t_in - events[-1].t_start, t
                t_in = None
                if k_wp + 1 < len(sc.waypoints):
                    k_wp += 1
                    wp = sc.waypoints[k_wp]
                    events.append(WaypointEvent(k_wp, t + dt))
                else:
                    completed = True
                    if sc.stop_when_done:
                        break

        # torque about the composite CoM of the wrench applied at the reference point
        Fb = applied[:3]
        Mc = applied[3:] - np.cross(c, Fb)
        xc, vc, R, w = _kernels.rkmk4_step(xc, vc, R, w, Fb, Mc, mp, Jp, Jp_inv, dt)

    sl = slice(0, n)
    return ScenarioLog(
        t=ts[sl], x=cols["x"][sl], v=cols["v"][sl], R=Rs[sl], omega=cols["omega"][sl],
        x_meas=cols["x_meas"][sl], v_meas=cols["v_meas"][sl], R_meas=Rms[sl],
        omega_meas=cols["omega_meas"][sl], waypoint=wps[sl],
        e_x=cols["e_x"][sl], e_v=cols["e_v"][sl], e_R=cols["e_R"][sl], e_w=cols["e_w"][sl],
        e_x_true=cols["e_x_true"][sl], e_R_true=cols["e_R_true"][sl], att_err_true=att[sl],
        u=us[sl], saturated=sats[sl], waypoints=sc.waypoints, events=events,
        completed=completed, failure=failure)


# --------------------------------------------------------------------------
# metrics

def fit_exponential(t, e, floor: float = 1e-9) -> tuple[float, float]:
    """Least-squares fit of ``log e = a - rate * t``; returns ``(rate, R^2)``.

    Samples at or below ``floor`` (relative to the peak) are excluded.
    """
    t = np.asarray(t, dtype=float)
    e = np.abs(np.asarray(e, dtype=float))
    if e.size == 0 or e.max() == 0:
        return math.nan, math.nan
    mask = e > floor * e.max()
    if mask.sum() < 3:
        return math.nan, math.nan
    tt, ly = t[mask], np.log(e[mask])
    slope, icpt = np.polyfit(tt, ly, 1)
    resid = ly - (slope * tt + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), r2


def _settling(t, pos_err, att_err, wp: Waypoint) -> float | None:
    """Offset from ``t[0]`` of the first in-tolerance entry that is then held for ``wp.hold``."""
    inside = (pos_err <= wp.pos_tol) & (att_err <= wp.att_tol)
    start = None
    for i in range(t.size):
        if not inside[i]:
            start = None
            continue
        if start is None:
            start = i
        if t[i] - t[start] >= wp.hold - 1e-9:
            return float(t[start] - t[0])
    return None


def _overshoot(e_x: np.ndarray) -> float:
    """Fractional travel past the target along the initial error direction."""
    e0 = e_x[0]
    amp = float(np.linalg.norm(e0))
    if amp == 0.0:
        return 0.0
    along = e_x @ (e0 / amp)
    return max(0.0, float(-along.min()) / amp)


def summarize_metrics(log: ScenarioLog, floor: float = 1e-6) -> dict:
    """Per-waypoint settling, peak errors and overshoot, plus whole-run statistics.

    Settling times are measured from the moment each waypoint became active.
    Exponential rates come from the first waypoint segment; ``floor`` drops
    samples below that fraction of the peak error from the fit.
    """
    if len(log) == 0:
        raise EmptyLog("cannot summarize an empty log")
    pos = np.linalg.norm(log.e_x_true, axis=1)
    per_wp = []
    for k, wp in enumerate(log.waypoints):
        idx = np.flatnonzero(log.waypoint == k)
        if idx.size == 0:
            per_wp.append({"index": k, "reached": False, "settling_time": None})
            continue
        settle = _settling(log.t[idx], pos[idx], log.att_err_true[idx], wp)
        per_wp.append({
            "index": k,
            "reached": settle is not None,
            "settling_time": settle,
            "peak_pos_error": float(pos[idx].max()),
            "peak_att_error_deg": math.degrees(float(log.att_err_true[idx].max())),
            "overshoot": _overshoot(log.e_x_true[idx]),
        })
    seg = log.waypoint == 0
    rate, r2 = fit_exponential(log.t[seg], pos[seg], floor)
    axis_rates = []
    for j in range(3):
        comp = log.e_x_true[seg, j]
        axis_rates.append(fit_exponential(log.t[seg], comp, floor)[0] if abs(comp[0]) > 0 else None)
    settles = [w["settling_time"] for w in per_wp]
    return {
        "completed": bool(log.completed),
        "failure": log.failure,
        "steps": len(log),
        "t_final": float(log.t[-1]),
        "waypoints": per_wp,
        "total_settling_time": (float(sum(settles)) if all(s is not None for s in settles) else None),
        "mission_time": (log.events[-1].t_achieved if log.completed and log.events else None),
        "saturation_fraction": float(np.mean(log.saturated)),
        "exp_rate": rate,
        "exp_fit_r2": r2,
        "axis_rates": axis_rates,
        "axis_collapse_deviation": axis_collapse(log.e_x_true[seg]),
        "peak_pos_error": float(pos.max()),
        "peak_att_error_deg": math.degrees(float(log.att_err_true.max())),
    }


def axis_collapse(e: np.ndarray, rel_floor: float = 1e-3) -> float | None:
    """Largest gap between amplitude-normalized per-axis error curves.

    Each axis with a non-negligible initial error is divided by its initial
    value; the result is the max pairwise difference over time (0 when all
    axes follow one shape).  ``None`` with fewer than two such axes.
    """
    e = np.asarray(e, dtype=float)
    e0 = e[0]
    scale = np.max(np.abs(e0))
    axes = [j for j in range(e.shape[1]) if scale > 0 and abs(e0[j]) > rel_floor * scale]
    if len(axes) < 2:
        return None
    curves = np.stack([e[:, j] / e0[j] for j in axes], axis=1)
    return float(np.max(curves.max(axis=1) - curves.min(axis=1)))


def write_outputs(log: ScenarioLog, metrics: dict, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path, metrics_path = out / "log.csv", out / "metrics.json"
    log.to_csv(log_path)
    metrics_path.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    return log_path, metrics_path


def paired_runs(sc: Scenario, seeds: Sequence[int]) -> list[ScenarioLog]:
    """``sc`` once per noise seed (noise defaults to the nominal levels)."""
    base = sc.noise or NoiseModel()
    return [run_scenario(sc.with_noise(NoiseModel(base.sigma_x, base.sigma_v, base.sigma_att,
                                                  base.sigma_omega, int(s)))) for s in seeds]
