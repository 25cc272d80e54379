"""Headless multi-quadrotor simulation for reinforcement learning research.

Per-rotor dynamics with motor lag and noise, vehicle and room interactions,
K-nearest-neighbor observations, shaped rewards, goal scenarios, and a
parallel benchmark harness with bit-exact trajectory record/replay.
"""

from .config import SwarmEnvConfig, apply_overrides, canonical_text, config_hash, load_config
from .dynamics import (
    GRAVITY,
    BodyWrench,
    MotorState,
    QuadrotorParams,
    RigidState,
    clip_action,
    derive_lag_coefficient,
    integrate_step,
    mix_wrench,
)
from .env import StepResult, SwarmEnv
from .errors import (
    ConfigError,
    DegenerateContact,
    DumpFormatError,
    ReplayDivergence,
    SimulationFault,
)
from .harness import (
    BenchmarkConfig,
    BenchmarkReport,
    HoverPolicy,
    RandomPolicy,
    ReplayPolicy,
    make_policy,
    run_benchmark,
    run_rollout,
)
from .interactions import (
    CollisionParams,
    ContactEvent,
    ContactKind,
    DownwashParams,
)
from .recording import (
    TrajectoryDump,
    TrajectoryRecorder,
    load_dump,
    replay,
    verify_replay,
)
from .rewards import RewardBreakdown, RewardCoeffs, interaction_reward, state_reward
from .rng import STREAMS, make_streams, stream_generator
from .scenarios import SCENARIO_KINDS, ScenarioSpec, Shape, make_scenario
from .sensing import Observation, SensorNoiseParams

__version__ = "0.1.0"

__all__ = [
    "GRAVITY",
    "STREAMS",
    "SCENARIO_KINDS",
    "BenchmarkConfig",
    "BenchmarkReport",
    "BodyWrench",
    "CollisionParams",
    "ConfigError",
    "ContactEvent",
    "ContactKind",
    "DegenerateContact",
    "DownwashParams",
    "DumpFormatError",
    "HoverPolicy",
    "MotorState",
    "Observation",
    "QuadrotorParams",
    "RandomPolicy",
    "ReplayDivergence",
    "ReplayPolicy",
    "RewardBreakdown",
    "RewardCoeffs",
    "RigidState",
    "ScenarioSpec",
    "SensorNoiseParams",
    "Shape",
    "SimulationFault",
    "StepResult",
    "SwarmEnv",
    "SwarmEnvConfig",
    "TrajectoryDump",
    "TrajectoryRecorder",
    "apply_overrides",
    "canonical_text",
    "clip_action",
    "config_hash",
    "derive_lag_coefficient",
    "integrate_step",
    "interaction_reward",
    "load_config",
    "load_dump",
    "make_policy",
    "make_scenario",
    "make_streams",
    "mix_wrench",
    "replay",
    "run_benchmark",
    "run_rollout",
    "state_reward",
    "stream_generator",
    "verify_replay",
]
