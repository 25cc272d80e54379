"""Rollout and benchmark harness.

Runs batches of environments either inline or across worker processes,
counting environment steps and phase times. Workers only return counters,
so throughput numbers are not distorted by per-step IPC. Reported
steps-per-second is agent steps divided by the slowest worker's loop time.
"""

import os
import time
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .config import SwarmEnvConfig
from .dynamics import GRAVITY
from .env import PHASES, SwarmEnv
from .errors import SimulationFault
from .recording import TrajectoryRecorder
from .rng import stream_generator


class RandomPolicy:
    """Gaussian actions from the per-env policy stream; the usual load for
    throughput measurements."""

    def __init__(self, scale=1.0):
        self.scale = scale
        self._rng = None

    def reset(self, env):
        self._rng = stream_generator(env.master_seed, env.env_index, env.episode, "policy")

    def act(self, obs, env):
        return self.scale * self._rng.standard_normal((env.n_agents, 4))


class HoverPolicy:
    """Constant action whose steady-state thrust balances nominal weight."""

    def __init__(self):
        self._cached = None

    def reset(self, env):
        quad = env.config.quad
        f_hat = quad.mass * GRAVITY / (4.0 * quad.f_max)
        self._cached = np.full((env.config.n_agents, 4), 2.0 * f_hat - 1.0)

    def act(self, obs, env):
        return self._cached


class ReplayPolicy:
    """Feed back the actions stored in a trajectory dump."""

    def __init__(self, dump):
        self.dump = dump
        self._t = 0

    def reset(self, env):
        self._t = 0

    def act(self, obs, env):
        if self._t >= self.dump.n_steps:
            raise IndexError("replay dump exhausted")
        a = self.dump.actions[self._t]
        self._t += 1
        return a


POLICIES = {"random": RandomPolicy, "hover": HoverPolicy}


def make_policy(name):
    try:
        return POLICIES[name]()
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None


@dataclass
class RolloutResult:
    env_steps: int
    agent_steps: int
    wall_seconds: float
    phase_seconds: dict
    episodes: int
    reward_sum: float
    record_path: str = None


def run_rollout(config, master_seed, env_index, n_steps, policy=None, record_path=None):
    """Run one environment for ``n_steps`` control steps (resetting between
    episodes); optionally dump the first episode's trajectory."""
    env = SwarmEnv(config, master_seed=master_seed, env_index=env_index)
    if policy is None:
        policy = RandomPolicy()
    obs = env.reset()
    policy.reset(env)
    recorder = TrajectoryRecorder(record_path, env) if record_path else None
    reward_sum = 0.0
    episodes = 1
    t0 = time.perf_counter()
    for _ in range(n_steps):
        actions = policy.act(obs, env)
        result = env.step(actions)
        obs = result.observations
        reward_sum += float(result.reward_totals.sum())
        if recorder is not None:
            recorder.record(actions, result)
        if result.done:
            if recorder is not None:
                recorder.close()
                recorder = None
            obs = env.reset()
            policy.reset(env)
            episodes += 1
    wall = time.perf_counter() - t0
    if recorder is not None:
        recorder.close()
    return RolloutResult(
        env_steps=n_steps,
        agent_steps=n_steps * config.n_agents,
        wall_seconds=wall,
        phase_seconds=dict(env.phase_seconds),
        episodes=episodes,
        reward_sum=reward_sum,
        record_path=record_path,
    )


@dataclass
class BenchmarkConfig:
    config: SwarmEnvConfig = field(default_factory=SwarmEnvConfig)
    n_envs: int = 1
    n_workers: int = 1
    steps_per_env: int = 1000
    master_seed: int = 0
    policy: str = "random"
    record_dir: str = None


@dataclass
class WorkerReport:
    worker: int
    env_indices: tuple
    env_steps: int
    agent_steps: int
    wall_seconds: float
    phase_seconds: dict
    fault: str = None


@dataclass
class BenchmarkReport:
    sps: float
    env_steps: int
    agent_steps: int
    wall_seconds: float  # slowest worker's stepping loop
    phase_fractions: dict
    workers: list
    empty: bool = False

    def describe(self):
        lines = [
            f"agent steps/s: {self.sps:,.0f}",
            f"env steps: {self.env_steps}  agent steps: {self.agent_steps}",
            f"wall (slowest worker): {self.wall_seconds:.3f} s",
        ]
        frac = "  ".join(f"{k} {v:.1%}" for k, v in self.phase_fractions.items())
        lines.append(f"phase breakdown: {frac}")
        return "\n".join(lines)


def _worker_main(payload):
    """Run this worker's share of environments, returning counters only."""
    worker_id, env_indices, bench = payload
    policy = make_policy(bench.policy)
    env_steps = 0
    phase = {p: 0.0 for p in PHASES}
    try:
        t0 = time.perf_counter()
        for env_index in env_indices:
            record_path = None
            if bench.record_dir:
                record_path = os.path.join(bench.record_dir, f"env_{env_index}.traj")
            result = run_rollout(
                bench.config, bench.master_seed, env_index,
                bench.steps_per_env, policy=policy, record_path=record_path,
            )
            env_steps += result.env_steps
            for p in PHASES:
                phase[p] += result.phase_seconds[p]
        wall = time.perf_counter() - t0
    except SimulationFault as e:
        return WorkerReport(worker_id, tuple(env_indices), 0, 0, 0.0, phase, fault=str(e))
    return WorkerReport(
        worker=worker_id,
        env_indices=tuple(env_indices),
        env_steps=env_steps,
        agent_steps=env_steps * bench.config.n_agents,
        wall_seconds=wall,
        phase_seconds=phase,
    )


def run_benchmark(bench):
    """Execute the benchmark and aggregate worker counters.

    Throughput = total agent steps / max(worker loop seconds): the batch is
    only as fast as its slowest worker. A zero-work request is flagged
    ``empty`` instead of reporting infinite or undefined throughput.
    """
    if bench.n_envs <= 0 or bench.steps_per_env <= 0:
        return BenchmarkReport(
            sps=0.0, env_steps=0, agent_steps=0, wall_seconds=0.0,
            phase_fractions={p: 0.0 for p in PHASES}, workers=[], empty=True,
        )
    if bench.n_workers < 1:
        raise ValueError("n_workers must be >= 1")
    if bench.record_dir:
        os.makedirs(bench.record_dir, exist_ok=True)

    shares = [list(range(bench.n_envs))[w::bench.n_workers] for w in range(bench.n_workers)]
    payloads = [(w, shares[w], bench) for w in range(bench.n_workers) if shares[w]]

    if bench.n_workers == 1:
        reports = [_worker_main(payloads[0])]
    else:
        ctx = get_context("spawn")
        with ctx.Pool(processes=len(payloads)) as pool:
            reports = pool.map(_worker_main, payloads)

    for rep in reports:
        if rep.fault:
            raise SimulationFault(
                f"worker {rep.worker} (envs {rep.env_indices}) aborted: {rep.fault}"
            )

    env_steps = sum(r.env_steps for r in reports)
    agent_steps = sum(r.agent_steps for r in reports)
    wall = max(r.wall_seconds for r in reports)
    total_loop = sum(r.wall_seconds for r in reports)
    fractions = {
        p: (sum(r.phase_seconds[p] for r in reports) / total_loop if total_loop > 0 else 0.0)
        for p in PHASES
    }
    return BenchmarkReport(
        sps=agent_steps / wall if wall > 0 else 0.0,
        env_steps=env_steps,
        agent_steps=agent_steps,
        wall_seconds=wall,
        phase_fractions=fractions,
        workers=reports,
        empty=False,
    )
