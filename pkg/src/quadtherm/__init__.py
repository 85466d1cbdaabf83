"""Quadruped motor thermal network simulation and thermal-constraint rewards."""

from ._backend import BACKEND
from .actuation import ActuationParams, TorqueWindow, assemble_heat_input, joule_heat, pd_torque, torque_rms
from .network import (
    ContinuousGenerator,
    Edge,
    HeatInput,
    ThermalNetwork,
    ThermalNode,
    ThermalState,
    build_generator,
    default_network,
    initial_state,
    load_network,
    pairwise_flow,
)
from .randomizer import RandomizationRanges, SampledEpisodeConfig, sample_episode
from .rewards import (
    RewardConfig,
    RobotSnapshot,
    cbf_margin,
    clip_temperatures,
    max_feasible_gamma,
    thermal_reward_term,
    total_reward,
)
from .scenario import (
    EnduranceResult,
    GaitParams,
    Scenario,
    run_endurance,
    sweep,
    synth_gait_torques,
    throttle_scale,
    time_to_threshold,
)
from .thermal import (
    SimulationTrace,
    SystemMatrices,
    discretize,
    matrices_for,
    simulate,
    single_node_analytic,
    steady_state,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ActuationParams",
    "assemble_heat_input",
    "BACKEND",
    "build_generator",
    "cbf_margin",
    "clip_temperatures",
    "ContinuousGenerator",
    "default_network",
    "discretize",
    "Edge",
    "EnduranceResult",
    "GaitParams",
    "HeatInput",
    "initial_state",
    "joule_heat",
    "load_network",
    "matrices_for",
    "max_feasible_gamma",
    "pairwise_flow",
    "pd_torque",
    "RandomizationRanges",
    "RewardConfig",
    "RobotSnapshot",
    "run_endurance",
    "sample_episode",
    "SampledEpisodeConfig",
    "Scenario",
    "simulate",
    "SimulationTrace",
    "single_node_analytic",
    "steady_state",
    "step",
    "sweep",
    "synth_gait_torques",
    "SystemMatrices",
    "thermal_reward_term",
    "ThermalNetwork",
    "ThermalNode",
    "ThermalState",
    "throttle_scale",
    "time_to_threshold",
    "torque_rms",
    "TorqueWindow",
    "total_reward",
]
