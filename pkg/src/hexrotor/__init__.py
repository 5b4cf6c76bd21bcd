"""Holonomic hexrotor: propulsion model, design optimization, control and simulation."""
from .errors import (AllStartsFailed, AttitudeSingularity, EmptyLog, HexrotorError, NoConvergence,
                     NotSkew, NotUnit, SingularDesign)
from .wrench_model import (ActuationMatrix, BladeCoefficients, DesignConfig, PropellerGeometry, Wrench,
                           actuation_column, allocate, blade_constants, build_actuation_matrix,
                           forward_map, saturate, selected_design, wrench_limit_along, wrench_limits)
from .design_optimizer import (DesignPoint, OptimizerSettings, ParetoFront, ShadowMinima, local_solve,
                               nbi_subproblem, pareto_front, select_design, shadow_minima, solve_shadow,
                               spin_orbits)
from .rigid_body import (InertiaParams, PayloadSpec, RigidBodyState, composite_inertia,
                         dynamics_derivative, integrate_step, skew, so3_exp, unskew)
from .flight_control import (AttitudeGains, Gains, PositionGains, Setpoint, attitude_control,
                             attitude_error, position_control, wrench_command)
from .scenario_harness import (NoiseModel, Scenario, ScenarioLog, Waypoint, perturb_measurement,
                               run_scenario, summarize_metrics)

__version__ = "0.1.0"
