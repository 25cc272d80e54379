"""Per-agent observation assembly and sensor noise.

An observation is [goal - x, v, R (row-major), omega] followed by K blocks
of (relative position, relative velocity) for the K nearest teammates in
ascending distance. Flat length is 18 + 6K.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SELF_LENGTH = 18
NEIGHBOR_BLOCK = 6


@dataclass(frozen=True)
class SensorNoiseParams:
    pos_bound: float = 5e-3
    vel_bound: float = 1e-2
    omega_std: float = 1.75e-4
    enabled: bool = True

    def __post_init__(self):
        if self.pos_bound < 0 or self.vel_bound < 0 or self.omega_std < 0:
            raise ConfigError("sensor noise bounds must be >= 0")


@dataclass
class Observation:
    goal_delta: np.ndarray
    velocity: np.ndarray
    rotation: np.ndarray  # (3, 3)
    angular_velocity: np.ndarray
    neighbor_positions: np.ndarray  # (K, 3), ascending distance
    neighbor_velocities: np.ndarray  # (K, 3)

    def to_flat(self):
        return np.concatenate([
            self.goal_delta,
            self.velocity,
            self.rotation.reshape(9),
            self.angular_velocity,
            np.column_stack((self.neighbor_positions, self.neighbor_velocities)).reshape(-1),
        ])

    @property
    def flat_length(self):
        return SELF_LENGTH + NEIGHBOR_BLOCK * self.neighbor_positions.shape[0]


def k_nearest(agent_index, positions, k):
    """Indices of the k closest other agents, ascending distance, ties by index."""
    n = len(positions)
    if k > n - 1:
        raise ConfigError(f"K={k} requires at least {k + 1} agents, have {n}")
    if k == 0:
        return []
    pos = np.asarray(positions, dtype=float)
    delta = pos - pos[agent_index]
    dist2 = np.einsum("ij,ij->i", delta, delta)
    dist2[agent_index] = np.inf
    # stable sort keeps index order among exact ties
    order = np.argsort(dist2, kind="stable")
    return [int(i) for i in order[:k]]


def build_observation(self_state, goal, neighbor_states, k):
    """Observation for one agent; ``neighbor_states`` already k-nearest sorted."""
    if len(neighbor_states) != k:
        raise ValueError(f"expected {k} neighbor states, got {len(neighbor_states)}")
    if k:
        npos = np.array([s.position - self_state.position for s in neighbor_states])
        nvel = np.array([s.velocity - self_state.velocity for s in neighbor_states])
    else:
        npos = np.zeros((0, 3))
        nvel = np.zeros((0, 3))
    return Observation(
        goal_delta=np.asarray(goal, dtype=float) - self_state.position,
        velocity=self_state.velocity.copy(),
        rotation=self_state.rotation.copy(),
        angular_velocity=self_state.angular_velocity.copy(),
        neighbor_positions=npos,
        neighbor_velocities=nvel,
    )


def apply_sensor_noise(obs, params, rng):
    """Additive noise: uniform [-b, b] on positions/velocities, Gaussian on omega.

    Rotation entries are left untouched. With ``enabled`` off the input is
    returned unchanged.
    """
    if not params.enabled:
        return obs
    k = obs.neighbor_positions.shape[0]
    pb, vb = params.pos_bound, params.vel_bound
    noised = Observation(
        goal_delta=obs.goal_delta + rng.uniform(-pb, pb, 3),
        velocity=obs.velocity + rng.uniform(-vb, vb, 3),
        rotation=obs.rotation,
        angular_velocity=obs.angular_velocity + rng.normal(0.0, params.omega_std, 3),
        neighbor_positions=obs.neighbor_positions + rng.uniform(-pb, pb, (k, 3)),
        neighbor_velocities=obs.neighbor_velocities + rng.uniform(-vb, vb, (k, 3)),
    )
    return noised
