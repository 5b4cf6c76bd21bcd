"""``hexctl``: design optimization, limit analysis and closed-loop simulation.

Exit codes: 0 success, 1 input/output or parse error, 2 singular design or
optimizer failure, 3 scenario ran out of time, 4 attitude singularity.
Results go to stdout or files; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from .design_optimizer import OptimizerSettings, pareto_front, select_design
from .errors import AllStartsFailed, HexrotorError, SingularDesign
from .scenario_harness import NoiseModel, Scenario, run_scenario, summarize_metrics, write_outputs
from .wrench_model import DesignConfig, build_actuation_matrix, wrench_limit_along, wrench_limits

EXIT_OK, EXIT_IO, EXIT_SOLVER, EXIT_TIMEOUT, EXIT_SINGULARITY = 0, 1, 2, 3, 4

log = logging.getLogger("hexctl")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_IO):
        super().__init__(message)
        self.code = code


def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {len(vals)}")
    return vals


def _writable_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".hexctl-write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CliError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc}") from exc


def fixture_path(name: str) -> Path:
    """Path of a bundled fixture file."""
    return Path(str(resources.files("hexrotor") / "data" / name))


def _resolve(path: str) -> Path:
    """A user path, falling back to the bundled fixture of the same name."""
    p = Path(path)
    if p.exists():
        return p
    bundled = fixture_path(p.name)
    if bundled.exists():
        log.info("using bundled fixture %s", bundled)
        return bundled
    raise CliError(f"no such file: {path}")


# --------------------------------------------------------------------------

def settings_from_config(data: dict) -> OptimizerSettings:
    kw = {}
    if "phi_max_deg" in data:
        kw["phi_max"] = math.radians(float(data["phi_max_deg"]))
    for key, conv in (("d", float), ("k_ratio", float), ("n_starts", int), ("seed", int),
                      ("tol", float), ("max_evals", int), ("workers", int), ("backend", str)):
        if key in data:
            kw[key] = conv(data[key])
    if "lambda_grid" in data:
        kw["lambda_grid"] = tuple(float(x) for x in data["lambda_grid"])
    unknown = set(data) - set(kw) - {"phi_max_deg"}
    if unknown:
        raise CliError(f"unknown settings keys: {sorted(unknown)}")
    return OptimizerSettings(**kw)


def cmd_design(args) -> int:
    base = OptimizerSettings()
    if args.config:
        try:
            base = settings_from_config(_read_json(Path(args.config)))
        except (TypeError, ValueError) as exc:
            raise CliError(f"invalid settings: {exc}") from exc
    overrides = {}
    if args.lambda_grid is not None:
        overrides["lambda_grid"] = tuple(args.lambda_grid)
    if args.n_starts is not None:
        overrides["n_starts"] = args.n_starts
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        settings = replace(base, **overrides)
    except ValueError as exc:
        raise CliError(f"invalid settings: {exc}") from exc
    out = _writable_dir(args.out)
    try:
        front = pareto_front(settings)
        chosen = select_design(front)
    except AllStartsFailed as exc:
        raise CliError(f"optimizer failed: {exc}", EXIT_SOLVER) from exc
    front.to_csv(out / "front.csv")
    chosen.to_config(settings.d, settings.k_ratio).save(out / "selected_design.json")
    failed = [fp.lam for fp in front.points if not fp.converged]
    if failed:
        log.warning("no converged start for lambda = %s", failed)
    print(json.dumps({"front": str(out / "front.csv"),
                      "selected_design": str(out / "selected_design.json"),
                      "p_star": front.shadow.p_star, "q0": front.shadow.q0,
                      "p0": front.shadow.p0, "q_star": front.shadow.q_star,
                      "selected_f_max": chosen.F_max, "selected_m_max": chosen.M_max}, indent=2))
    return EXIT_OK


def cmd_limits(args) -> int:
    path = _resolve(args.design)
    try:
        cfg = DesignConfig.from_dict(_read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"invalid design file {path}: {exc}") from exc
    try:
        am = build_actuation_matrix(cfg)
    except SingularDesign as exc:
        raise CliError(f"singular design: {exc}", EXIT_SOLVER) from exc
    f_max, m_max = wrench_limits(am)
    result = {"f_max": f_max, "m_max": m_max, "rank": am.rank, "cond": am.cond}
    if args.direction is not None:
        e = np.asarray(args.direction, dtype=float)
        norm = float(np.linalg.norm(e))
        if norm == 0.0:
            raise CliError("direction must be nonzero")
        e = e / norm
        result["direction"] = e.tolist()
        result["f_limit_along"] = _json_float(wrench_limit_along(am, "force", e))
        result["m_limit_along"] = _json_float(wrench_limit_along(am, "torque", e))
    print(json.dumps(result, indent=2))
    return EXIT_OK


def _json_float(x: float):
    return x if math.isfinite(x) else "inf"


def cmd_simulate(args) -> int:
    path = _resolve(args.scenario)
    try:
        sc = Scenario.from_dict(_read_json(path), path.parent)
    except CliError:
        raise
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise CliError(f"invalid scenario file {path}: {exc}") from exc
    if args.seed is not None and sc.noise is not None:
        sc = sc.with_noise(replace(sc.noise, seed=args.seed))
    out = _writable_dir(args.out)
    try:
        lg = run_scenario(sc)
    except SingularDesign as exc:
        raise CliError(f"singular design: {exc}", EXIT_SOLVER) from exc
    if len(lg) == 0:
        # failed before the first step was logged
        metrics = {"completed": False, "failure": lg.failure, "steps": 0}
    else:
        metrics = summarize_metrics(lg)
    metrics["scenario"] = sc.name
    write_outputs(lg, metrics, out)
    print(json.dumps(metrics, indent=2, sort_keys=True))
    if lg.failure is not None:
        log.error("%s", lg.failure)
        return EXIT_SINGULARITY
    if not lg.completed:
        log.error("t_max = %g s reached before all waypoints were achieved", sc.t_max)
        return EXIT_TIMEOUT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hexctl", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="optimize tilt angles and spins; write the Pareto front")
    d.add_argument("--config", help="JSON optimizer settings")
    d.add_argument("--lambda", dest="lambda_grid", type=_floats, help="comma-separated lambda values")
    d.add_argument("--n-starts", type=int)
    d.add_argument("--seed", type=int)
    d.add_argument("--out", required=True, help="output directory")
    d.set_defaults(func=cmd_design)

    lim = sub.add_parser("limits", help="force/torque limits of a design")
    lim.add_argument("design", help="design JSON")
    lim.add_argument("--direction", type=lambda s: _floats(s, 3), help="x,y,z direction")
    lim.set_defaults(func=cmd_limits)

    s = sub.add_parser("simulate", help="run a scenario; write log.csv and metrics.json")
    s.add_argument("scenario", help="scenario JSON (bundled fixture names are accepted)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, help="override the noise seed")
    s.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors are input errors here
        return EXIT_IO if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="hexctl: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"hexctl: error: {exc}", file=sys.stderr)
        return exc.code
    except HexrotorError as exc:
        print(f"hexctl: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
