"""Multi-vehicle flight environment.

One `SwarmEnv` owns n quadrotors in a closed room. Each control step takes
one action per vehicle, runs a fixed number of physics substeps (zero-order
hold on the actions), resolves vehicle/vehicle and vehicle/room contacts,
then returns per-agent observations, reward breakdowns, a time-based done
flag and an info dict.

Every random draw comes from a named Philox stream keyed by
(master_seed, env_index, episode, source), so trajectories are bitwise
reproducible regardless of how many environments run in parallel.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .config import SwarmEnvConfig
from .dynamics import (
    GRAVITY,
    MotorState,
    RigidState,
    derive_lag_coefficient,
    integrate_step,
    mix_wrench,
    motor_lag_step,
    motor_noise_step,
    thrust_from_motors,
)
from .errors import ConfigError, DegenerateContact, SimulationFault
from .interactions import (
    ContactEvent,
    ContactKind,
    apply_downwash,
    detect_quad_pairs,
    ground_contact,
    resolve_quad_quad,
    resolve_surface,
    surface_contacts,
)
from .rewards import interaction_reward, state_reward
from .rng import make_streams
from .scenarios import make_scenario
from .sensing import Observation, apply_sensor_noise

PHASES = ("dynamics", "collisions", "observations", "rewards")

_SPAWN_ATTEMPTS = 1000


@dataclass
class StepResult:
    observations: np.ndarray  # (n, 18 + 6K)
    rewards: list  # RewardBreakdown per agent
    done: bool
    info: dict

    @property
    def reward_totals(self):
        return np.array([b.total for b in self.rewards])


class SwarmEnv:
    """Headless swarm simulator for one team of quadrotors in a box room."""

    def __init__(self, config=None, master_seed=0, env_index=0):
        self.config = config if config is not None else SwarmEnvConfig()
        self.master_seed = int(master_seed)
        self.env_index = int(env_index)
        self.episode = -1
        self._states = None
        self._step_count = 0
        n = self.config.n_agents
        self._thrusts = np.zeros((n, 4))
        self._prev_thrusts = np.zeros((n, 4))
        self.phase_seconds = {p: 0.0 for p in PHASES}
        self.degenerate_pairs = []

    # -- lifecycle ----------------------------------------------------------

    def reset(self, seed=None):
        """Start a new episode; returns the initial observations (n, obs_len).

        Passing ``seed`` replaces the master seed and restarts the episode
        counter, otherwise the next episode of the current seed begins.
        """
        if seed is not None:
            self.master_seed = int(seed)
            self.episode = -1
        self.episode += 1
        cfg = self.config
        self._streams = make_streams(self.master_seed, self.env_index, self.episode)

        self._quads = self._randomized_quads()
        self._lag = [
            derive_lag_coefficient(q.motor_settling_time, cfg.dt_sim) if cfg.motor_lag else 1.0
            for q in self._quads
        ]

        self._states = self._spawn_states()
        self._motors = [MotorState.zeros() for _ in range(cfg.n_agents)]
        self._thrusts[:] = 0.0
        self._prev_thrusts[:] = 0.0
        self._step_count = 0
        self.phase_seconds = {p: 0.0 for p in PHASES}
        self.degenerate_pairs = []

        self.scenario = make_scenario(cfg.scenario, cfg.room_extent, cfg.n_agents)
        self._assignment = self.scenario.reset(self._streams["scenario"])

        obs, _ = self._observe()
        return obs

    def _randomized_quads(self):
        cfg = self.config
        base = cfg.quad
        if not cfg.domain_rand:
            return [base] * cfg.n_agents
        rng = self._streams["domain_rand"]
        quads = []
        for _ in range(cfg.n_agents):
            factors = {key: float(rng.uniform(*cfg.dr_ranges[key])) for key in sorted(cfg.dr_ranges)}
            quads.append(base.perturbed(factors))
        return quads

    def _spawn_states(self):
        """Collision-free uniform placement in the lower half of the room,
        zero velocities, random yaw."""
        cfg = self.config
        rng = self._streams["spawn"]
        r = cfg.collision.quad_radius
        ex, ey, ez = cfg.room_extent
        lo = np.array([r, r, cfg.collision.ground_z + r])
        hi = np.array([ex - r, ey - r, ez / 2.0])
        if np.any(lo >= hi):
            raise ConfigError("room too small to spawn vehicles")
        placed = []
        min_dist2 = (2.0 * r) ** 2
        for i in range(cfg.n_agents):
            for _ in range(_SPAWN_ATTEMPTS):
                p = rng.uniform(lo, hi)
                if all((p - q) @ (p - q) >= min_dist2 for q in placed):
                    placed.append(p)
                    break
            else:
                raise ConfigError(
                    f"could not place vehicle {i} without overlap after "
                    f"{_SPAWN_ATTEMPTS} attempts; room too crowded"
                )
        states = []
        for p in placed:
            yaw = rng.uniform(-math.pi, math.pi)
            c, s = math.cos(yaw), math.sin(yaw)
            rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
            states.append(RigidState(p.copy(), np.zeros(3), rot, np.zeros(3)))
        return states

    # -- stepping -------------------------------------------------------------

    def step(self, actions):
        """Advance one control step (`config.substeps` physics steps)."""
        cfg = self.config
        n = cfg.n_agents
        if self._states is None:
            raise RuntimeError("call reset() before step()")
        actions = np.asarray(actions, dtype=float)
        if actions.shape != (n, 4):
            raise ValueError(f"actions must have shape ({n}, 4), got {actions.shape}")
        if not np.isfinite(actions).all():
            raise ValueError("actions contain non-finite values")

        u_cmd = np.sqrt((np.clip(actions, -1.0, 1.0) + 1.0) * 0.5)
        events = []
        for _ in range(cfg.substeps):
            self._substep(u_cmd, events)

        self._step_count += 1
        elapsed = self._step_count * cfg.dt_control
        self.scenario.step(elapsed, self._streams["scenario"])

        events = self._dedupe(events)
        rewards, dist_matrix = self._rewards(events)
        obs, _ = self._observe(dist_matrix)

        done = self._step_count >= cfg.episode_steps
        crashed = any(e.kind is ContactKind.GROUND_HIT for e in events)
        if cfg.early_terminate_on_crash and crashed:
            done = True

        info = {
            "step": self._step_count,
            "time": elapsed,
            "events": tuple(events),
            "event_counts": self._event_counts(events),
            "degenerate_pairs": tuple(self.degenerate_pairs),
            "goal_epoch": self._assignment.epoch,
        }
        return StepResult(observations=obs, rewards=rewards, done=done, info=info)

    def _substep(self, u_cmd, events):
        cfg = self.config
        n = cfg.n_agents
        dt = cfg.dt_sim
        states = self._states
        colp = cfg.collision

        t0 = time.perf_counter()
        # Motor filters and body wrenches.
        wrenches = []
        motor_rng = self._streams["motor_noise"]
        for i in range(n):
            motor = self._motors[i]
            if cfg.motor_lag:
                motor.filtered_speed = motor_lag_step(u_cmd[i], motor, self._lag[i])
            else:
                motor.filtered_speed = u_cmd[i].copy()
            if cfg.motor_noise:
                motor.noise = motor_noise_step(motor, self._quads[i], motor_rng)
            f = thrust_from_motors(motor, self._quads[i].f_max)
            self._thrusts[i] = f
            wrenches.append(mix_wrench(f, self._quads[i]))

        # Downwash disturbances from the pre-integration positions.
        dw_accel = [None] * n
        dw_odot = [None] * n
        if cfg.downwash and n > 1:
            dw_rng = self._streams["downwash"] if cfg.collision_noise else None
            for i in range(n - 1):
                for j in range(i + 1, n):
                    low, high = (i, j) if states[i].position[2] < states[j].position[2] else (j, i)
                    accel, odot = apply_downwash(states[low], states[high], cfg.downwash_params, dw_rng)
                    if np.any(accel) or np.any(odot):
                        dw_accel[low] = accel if dw_accel[low] is None else dw_accel[low] + accel
                        dw_odot[low] = odot if dw_odot[low] is None else dw_odot[low] + odot

        # Ground handling, then integration.
        for i in range(n):
            state = states[i]
            if cfg.ground:
                res = ground_contact(state, self._thrusts[i], colp, self._quads[i])
                if res.event is not None:
                    events.append(ContactEvent(res.event, (i,), self._step_count))
                if res.event is ContactKind.GROUND_HIT:
                    # Impact absorbs the step: state is reset and held.
                    states[i] = res.state
                    continue
                if res.supported:
                    states[i] = self._slide_on_floor(res, self._quads[i], dt)
                    continue
                state = res.state
            try:
                states[i] = integrate_step(
                    state, wrenches[i], self._quads[i], dt,
                    extra_accel=dw_accel[i], extra_omega_dot=dw_odot[i],
                )
            except SimulationFault as e:
                raise SimulationFault(str(e), agent_index=i) from e
        self.phase_seconds["dynamics"] += time.perf_counter() - t0

        t0 = time.perf_counter()
        # Vehicle/vehicle contacts, ascending pair order.
        if cfg.collisions and n > 1:
            positions = np.array([s.position for s in states])
            coll_rng = self._streams["collision"] if cfg.collision_noise else None
            for i, j in detect_quad_pairs(positions, colp.quad_radius):
                try:
                    states[i], states[j] = resolve_quad_quad(states[i], states[j], colp, coll_rng)
                except DegenerateContact:
                    self.degenerate_pairs.append((self._step_count, i, j))
                    continue
                events.append(ContactEvent(ContactKind.QUAD_QUAD, (i, j), self._step_count))

        # Walls and ceiling.
        if cfg.surfaces:
            surf_rng = self._streams["collision"] if cfg.collision_noise else None
            for i in range(n):
                for kind, normal in surface_contacts(states[i].position, colp):
                    states[i] = resolve_surface(states[i], normal, colp, surf_rng)
                    events.append(ContactEvent(kind, (i,), self._step_count))
        self.phase_seconds["collisions"] += time.perf_counter() - t0

    @staticmethod
    def _slide_on_floor(res, quad, dt):
        """Planar motion while the floor carries the weight."""
        state = res.state
        v = state.velocity
        v[0] += dt * res.planar_force[0] / quad.mass
        v[1] += dt * res.planar_force[1] / quad.mass
        state.position[0] += dt * v[0]
        state.position[1] += dt * v[1]
        return state

    @staticmethod
    def _dedupe(events):
        seen = set()
        out = []
        for e in events:
            key = (e.kind, e.agents)
            if key not in seen:
                seen.add(key)
                out.append(e)
        return out

    def _event_counts(self, events):
        n = self.config.n_agents
        counts = {kind.value: np.zeros(n, dtype=int) for kind in ContactKind}
        for e in events:
            for a in e.agents:
                counts[e.kind.value][a] += 1
        return counts

    def _distance_matrix(self):
        positions = np.array([s.position for s in self._states])
        diff = positions[:, None, :] - positions[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        np.fill_diagonal(dist2, np.inf)
        return dist2

    def _rewards(self, events):
        t0 = time.perf_counter()
        cfg = self.config
        n = cfg.n_agents
        coeffs = cfg.rewards
        goals = self._assignment.goals
        dist2 = self._distance_matrix()
        rewards = []
        for i in range(n):
            base = state_reward(self._states[i], goals[i], self._thrusts[i],
                                self._prev_thrusts[i], coeffs)
            mine = [e for e in events if i in e.agents]
            others = np.sqrt(np.delete(dist2[i], i))
            rewards.append(base.merged(interaction_reward(mine, others, coeffs)))
        self._prev_thrusts[:] = self._thrusts
        self.phase_seconds["rewards"] += time.perf_counter() - t0
        return rewards, dist2

    def _observe(self, dist2=None):
        t0 = time.perf_counter()
        cfg = self.config
        n, k = cfg.n_agents, cfg.k_neighbors
        goals = self._assignment.goals
        if k and dist2 is None:
            dist2 = self._distance_matrix()
        if k:
            order = np.argsort(dist2, axis=1, kind="stable")[:, :k]
        out = np.empty((n, cfg.obs_length))
        rng = self._streams["sensor"]
        for i in range(n):
            s = self._states[i]
            if k:
                idx = order[i]
                npos = np.array([self._states[j].position - s.position for j in idx])
                nvel = np.array([self._states[j].velocity - s.velocity for j in idx])
            else:
                npos = np.zeros((0, 3))
                nvel = np.zeros((0, 3))
            obs = Observation(
                goal_delta=goals[i] - s.position,
                velocity=s.velocity.copy(),
                rotation=s.rotation,
                angular_velocity=s.angular_velocity.copy(),
                neighbor_positions=npos,
                neighbor_velocities=nvel,
            )
            out[i] = apply_sensor_noise(obs, cfg.sensor, rng).to_flat()
        self.phase_seconds["observations"] += time.perf_counter() - t0
        return out, dist2

    # -- inspection and test hooks -------------------------------------------

    @property
    def n_agents(self):
        return self.config.n_agents

    @property
    def step_count(self):
        return self._step_count

    @property
    def elapsed(self):
        return self._step_count * self.config.dt_control

    @property
    def goals(self):
        return self._assignment.goals.copy()

    @property
    def positions(self):
        return np.array([s.position for s in self._states])

    @property
    def velocities(self):
        return np.array([s.velocity for s in self._states])

    @property
    def rotations(self):
        return np.array([s.rotation for s in self._states])

    @property
    def angular_velocities(self):
        return np.array([s.angular_velocity for s in self._states])

    @property
    def thrusts(self):
        return self._thrusts.copy()

    def agent_state(self, i):
        return self._states[i].copy()

    def motor_state(self, i):
        return self._motors[i].copy()

    def set_agent_state(self, i, position=None, velocity=None, rotation=None,
                        angular_velocity=None, motor=None):
        """Overwrite parts of one vehicle's state (test hook)."""
        s = self._states[i]
        if position is not None:
            s.position = np.asarray(position, dtype=float).copy()
        if velocity is not None:
            s.velocity = np.asarray(velocity, dtype=float).copy()
        if rotation is not None:
            s.rotation = np.asarray(rotation, dtype=float).copy()
        if angular_velocity is not None:
            s.angular_velocity = np.asarray(angular_velocity, dtype=float).copy()
        if motor is not None:
            self._motors[i] = motor.copy()
        s.validate()

    def phase_fractions(self):
        """Share of stepping wall time spent in each instrumented phase."""
        total = sum(self.phase_seconds.values())
        if total == 0.0:
            return {p: 0.0 for p in PHASES}
        # Fractions of instrumented time only; bookkeeping outside the four
        # phases makes them sum to at most one when compared to wall time.
        return {p: self.phase_seconds[p] / total for p in PHASES}
