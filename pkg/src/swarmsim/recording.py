"""Trajectory dumps and bit-exact replay.

Dumps are plain text: a commented header (format version, config hash, seed
keys, column names) followed by one line per agent per control step. Floats
are written with ``float.hex`` so parsing them back gives the identical bit
pattern, which lets replay assert bitwise agreement rather than tolerances.
"""

from dataclasses import dataclass

import numpy as np

from .config import config_hash
from .env import SwarmEnv
from .errors import ConfigError, DumpFormatError, ReplayDivergence

MAGIC = "# swarmsim trajectory v1"

_STATE_COLUMNS = (
    "x", "y", "z", "vx", "vy", "vz",
    "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22",
    "wx", "wy", "wz",
    "a0", "a1", "a2", "a3",
    "reward",
)


def _hex(x):
    return float(x).hex()


class TrajectoryRecorder:
    """Streams one environment's episode to a dump file.

    Create after ``env.reset()`` (the header captures the episode index),
    then call ``record(actions, result)`` after every ``env.step``.
    """

    def __init__(self, path, env, extra_meta=None):
        self.env = env
        self._fh = open(path, "w")
        meta = {
            "config_hash": config_hash(env.config),
            "master_seed": env.master_seed,
            "env_index": env.env_index,
            "episode": env.episode,
            "n_agents": env.config.n_agents,
        }
        if extra_meta:
            meta.update(extra_meta)
        self._fh.write(MAGIC + "\n")
        for key, value in meta.items():
            self._fh.write(f"# {key}: {value}\n")
        self._fh.write("# columns: step agent " + " ".join(_STATE_COLUMNS) + "\n")
        self._fh.write("# units: m, m/s, rotation row-major body-to-world, rad/s body frame, raw actions\n")

    def record(self, actions, result):
        env = self.env
        actions = np.asarray(actions, dtype=float)
        totals = result.reward_totals
        step = result.info["step"]
        for i in range(env.config.n_agents):
            s = env.agent_state(i)
            fields = [str(step), str(i)]
            fields += [_hex(v) for v in s.position]
            fields += [_hex(v) for v in s.velocity]
            fields += [_hex(v) for v in s.rotation.reshape(9)]
            fields += [_hex(v) for v in s.angular_velocity]
            fields += [_hex(v) for v in actions[i]]
            fields.append(_hex(totals[i]))
            self._fh.write(" ".join(fields) + "\n")

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class TrajectoryDump:
    meta: dict
    actions: np.ndarray  # (S, n, 4)
    positions: np.ndarray  # (S, n, 3)
    velocities: np.ndarray  # (S, n, 3)
    rotations: np.ndarray  # (S, n, 3, 3)
    angular_velocities: np.ndarray  # (S, n, 3)
    rewards: np.ndarray  # (S, n)

    @property
    def n_steps(self):
        return self.actions.shape[0]

    @property
    def n_agents(self):
        return self.actions.shape[1]


def load_dump(path):
    """Parse a dump file; raises DumpFormatError with the byte offset of the
    first malformed line."""
    with open(path, "rb") as fh:
        raw = fh.read()

    meta = {}
    rows = []
    offset = 0
    first = True
    for line_bytes in raw.split(b"\n"):
        line_offset = offset
        offset += len(line_bytes) + 1
        try:
            line = line_bytes.decode("utf-8")
        except UnicodeDecodeError:
            raise DumpFormatError("undecodable bytes", byte_offset=line_offset) from None
        if first:
            if line != MAGIC:
                raise DumpFormatError(
                    f"bad magic line {line!r}, expected {MAGIC!r}", byte_offset=0
                )
            first = False
            continue
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                meta[key.strip()] = value.strip()
            continue
        tokens = line.split()
        if len(tokens) != 2 + len(_STATE_COLUMNS):
            raise DumpFormatError(
                f"expected {2 + len(_STATE_COLUMNS)} fields, got {len(tokens)}",
                byte_offset=line_offset,
            )
        try:
            step = int(tokens[0])
            agent = int(tokens[1])
            values = [float.fromhex(t) for t in tokens[2:]]
        except ValueError as e:
            raise DumpFormatError(f"unparsable field: {e}", byte_offset=line_offset) from None
        rows.append((step, agent, values, line_offset))

    if first:
        raise DumpFormatError("empty file", byte_offset=0)
    try:
        n_agents = int(meta["n_agents"])
    except (KeyError, ValueError):
        raise DumpFormatError("missing or invalid n_agents in header", byte_offset=0) from None
    if len(rows) % n_agents != 0:
        raise DumpFormatError(
            f"{len(rows)} records do not form whole steps of {n_agents} agents",
            byte_offset=rows[-1][3] if rows else 0,
        )

    n_steps = len(rows) // n_agents
    actions = np.empty((n_steps, n_agents, 4))
    positions = np.empty((n_steps, n_agents, 3))
    velocities = np.empty((n_steps, n_agents, 3))
    rotations = np.empty((n_steps, n_agents, 3, 3))
    omegas = np.empty((n_steps, n_agents, 3))
    rewards = np.empty((n_steps, n_agents))
    for idx, (step, agent, values, line_offset) in enumerate(rows):
        want_step, want_agent = idx // n_agents + 1, idx % n_agents
        if step != want_step or agent != want_agent:
            raise DumpFormatError(
                f"out-of-order record (step {step}, agent {agent}), "
                f"expected (step {want_step}, agent {want_agent})",
                byte_offset=line_offset,
            )
        v = np.asarray(values)
        s = want_step - 1
        positions[s, agent] = v[0:3]
        velocities[s, agent] = v[3:6]
        rotations[s, agent] = v[6:15].reshape(3, 3)
        omegas[s, agent] = v[15:18]
        actions[s, agent] = v[18:22]
        rewards[s, agent] = v[22]

    return TrajectoryDump(
        meta=meta, actions=actions, positions=positions, velocities=velocities,
        rotations=rotations, angular_velocities=omegas, rewards=rewards,
    )


@dataclass
class ReplayReport:
    identical: bool
    steps_compared: int
    divergence: dict = None  # step/agent/field/expected/actual when not identical

    def describe(self):
        if self.identical:
            return f"identical over {self.steps_compared} steps"
        d = self.divergence
        return (
            f"first divergence at step {d['step']}, agent {d['agent']}, "
            f"{d['field']}: recorded {d['expected']!r}, replayed {d['actual']!r}"
        )


def _first_mismatch(field, recorded, replayed):
    if recorded.shape != replayed.shape or not np.array_equal(recorded, replayed):
        flat_a = np.ravel(recorded)
        flat_b = np.ravel(replayed)
        for k in range(flat_a.size):
            if flat_a[k] != flat_b[k]:
                return {"field": field, "expected": float(flat_a[k]), "actual": float(flat_b[k])}
        return {"field": field, "expected": None, "actual": None}
    return None


def replay(dump, config, stop_at_divergence=True):
    """Re-run the recorded actions on a fresh environment and compare.

    ``config`` must be the configuration the dump was produced with; the
    header hash guards against mixed-up files. Comparison is bitwise on
    position, velocity, rotation, angular velocity and reward total.
    """
    if config_hash(config) != dump.meta.get("config_hash"):
        raise ConfigError("config does not match the dump's config_hash")
    env = SwarmEnv(
        config,
        master_seed=int(dump.meta.get("master_seed", 0)),
        env_index=int(dump.meta.get("env_index", 0)),
    )
    target_episode = int(dump.meta.get("episode", 0))
    for _ in range(target_episode + 1):
        env.reset()

    for s in range(dump.n_steps):
        result = env.step(dump.actions[s])
        for i in range(dump.n_agents):
            st = env.agent_state(i)
            checks = (
                ("position", dump.positions[s, i], st.position),
                ("velocity", dump.velocities[s, i], st.velocity),
                ("rotation", dump.rotations[s, i], st.rotation),
                ("angular_velocity", dump.angular_velocities[s, i], st.angular_velocity),
                ("reward", np.asarray(dump.rewards[s, i]), np.asarray(result.rewards[i].total)),
            )
            for field, expected, actual in checks:
                bad = _first_mismatch(field, np.asarray(expected), np.asarray(actual))
                if bad is not None:
                    bad.update(step=s + 1, agent=i)
                    report = ReplayReport(identical=False, steps_compared=s + 1, divergence=bad)
                    if stop_at_divergence:
                        return report
    return ReplayReport(identical=True, steps_compared=dump.n_steps)


def verify_replay(dump, config):
    """Replay and raise ReplayDivergence unless bitwise identical."""
    report = replay(dump, config)
    if not report.identical:
        raise ReplayDivergence(report.describe())
    return report
