"""Controlled switched piecewise-deterministic processes on star networks."""

__version__ = "0.1.0"

from .network import (JUNCTION, O, ExtendedNetwork, NetworkPoint, StarNetwork,
                      canonical_point, extend, geodesic_distance, locate,
                      make_network, project_to_network, tangent_cone)
from .model import (ControlSegment, Distinguished, EvalResult, ModelConstants,
                    PdmpModel, ProjectionScales, Traffic3Model, audit_assumptions,
                    evaluate, extend_dynamics, shake, shaking_scales,
                    traffic3_model)
from .simulate import (Arc, JumpDraw, McResult, OccupationEstimate, Policy,
                       RngStream, Trajectory, constant_policy, feedback_policy,
                       flow, mc_cost, mc_occupation, random_open_loop,
                       sample_jump, schedule_policy, simulate,
                       state_schedule_policy)
from .hjb import (DiscreteControlSet, DppPoint, ExtendedSolution, Grid,
                  JunctionMove, ResidualReport, Scheme, ValueField,
                  bellman_jump_operator, build_scheme, discretize_controls,
                  dpp_residual, greedy_feedback_policy, hjb_residual, make_grid,
                  solve_deterministic, solve_value, solve_value_extended)
from .control_projection import (ExponentFit, ProjectionResult,
                                 cost_is_junction_uniform, cycling_segments,
                                 project_control, project_control_extended,
                                 random_shaken_policy, restrict_to_network,
                                 verify_projection_exponent)

__all__ = [
    "JUNCTION", "O", "ExtendedNetwork", "NetworkPoint", "StarNetwork",
    "canonical_point", "extend", "geodesic_distance", "locate", "make_network",
    "project_to_network", "tangent_cone",
    "ControlSegment", "Distinguished", "EvalResult", "ModelConstants",
    "PdmpModel", "ProjectionScales", "Traffic3Model", "audit_assumptions",
    "evaluate", "extend_dynamics", "shake", "shaking_scales", "traffic3_model",
    "Arc", "JumpDraw", "McResult", "OccupationEstimate", "Policy", "RngStream",
    "Trajectory", "constant_policy", "feedback_policy", "flow", "mc_cost",
    "mc_occupation", "random_open_loop", "sample_jump", "schedule_policy",
    "simulate", "state_schedule_policy",
    "DiscreteControlSet", "DppPoint", "ExtendedSolution", "Grid", "JunctionMove",
    "ResidualReport", "Scheme", "ValueField", "bellman_jump_operator",
    "build_scheme", "discretize_controls", "dpp_residual",
    "greedy_feedback_policy", "hjb_residual", "make_grid", "solve_deterministic",
    "solve_value", "solve_value_extended",
    "ExponentFit", "ProjectionResult", "cost_is_junction_uniform",
    "cycling_segments", "project_control", "project_control_extended",
    "random_shaken_policy", "restrict_to_network", "verify_projection_exponent",
]
