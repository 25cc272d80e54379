"""Goal generation: geometric formations, timed formation changes, and
single-target pursuit along Lissajous or Bezier-spline trajectories.

Scenario objects own the goal state of one environment instance. All
randomness comes from the generator handed in by the caller, so goal
sequences are a pure function of (spec, seed).
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError

SCENARIO_KINDS = (
    "static_formation",
    "dynamic_goals",
    "swap_goals",
    "shrink_expand",
    "swarm_vs_swarm",
    "pursuit_lissajous",
    "pursuit_bezier",
)


class Shape(Enum):
    CIRCLE = "circle"
    GRID = "grid"
    SPHERE = "sphere"
    CYLINDER = "cylinder"
    CUBE = "cube"


@dataclass(frozen=True)
class FormationShape:
    kind: Shape
    spacing: float = 0.5
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.spacing > 0):
            raise ConfigError(f"formation spacing must be > 0, got {self.spacing}")


@dataclass
class GoalAssignment:
    goals: np.ndarray  # (n, 3)
    epoch: int = 0

    def copy(self):
        return GoalAssignment(self.goals.copy(), self.epoch)


def _circle_offsets(n, spacing):
    if n == 1:
        return np.zeros((1, 3))
    radius = spacing / (2.0 * math.sin(math.pi / n))
    angles = 2.0 * math.pi * np.arange(n) / n
    return np.column_stack((radius * np.cos(angles), radius * np.sin(angles), np.zeros(n)))


def _grid_offsets(n, spacing):
    side = math.ceil(math.sqrt(n))
    idx = np.arange(n)
    rows, cols = idx // side, idx % side
    x = (cols - (side - 1) / 2.0) * spacing
    y = (rows - (side - 1) / 2.0) * spacing
    return np.column_stack((x, y, np.zeros(n)))


def _sphere_offsets(n, spacing):
    if n == 1:
        return np.zeros((1, 3))
    # Fibonacci spiral; radius sized so the area per point is ~spacing^2.
    radius = spacing * math.sqrt(n / (4.0 * math.pi))
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    ring = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    golden = math.pi * (3.0 - math.sqrt(5.0))
    theta = golden * i
    return radius * np.column_stack((ring * np.cos(theta), ring * np.sin(theta), z))


def _cylinder_offsets(n, spacing):
    ring_size = max(1, math.ceil(math.sqrt(n)))
    n_rings = math.ceil(n / ring_size)
    pts = []
    for k in range(n_rings):
        count = min(ring_size, n - k * ring_size)
        ring = _circle_offsets(max(count, 1), spacing)[:count] if count > 1 else np.zeros((count, 3))
        ring = ring.copy()
        ring[:, 2] = (k - (n_rings - 1) / 2.0) * spacing
        pts.append(ring)
    return np.vstack(pts)


def _cube_offsets(n, spacing):
    side = math.ceil(n ** (1.0 / 3.0))
    while side ** 3 < n:  # guard against fp round-down of the cube root
        side += 1
    idx = np.arange(n)
    x = idx % side
    y = (idx // side) % side
    z = idx // (side * side)
    mid = (side - 1) / 2.0
    return spacing * np.column_stack((x - mid, y - mid, z - mid))


_OFFSET_BUILDERS = {
    Shape.CIRCLE: _circle_offsets,
    Shape.GRID: _grid_offsets,
    Shape.SPHERE: _sphere_offsets,
    Shape.CYLINDER: _cylinder_offsets,
    Shape.CUBE: _cube_offsets,
}


def formation_offsets(kind, n_agents, spacing):
    """Offsets about the formation center for ``n_agents`` points."""
    if n_agents < 0:
        raise ConfigError("n_agents must be >= 0")
    if n_agents == 0:
        return np.zeros((0, 3))
    return _OFFSET_BUILDERS[kind](n_agents, spacing)


def generate_formation(shape, n_agents, rng=None):
    """Goal points for one formation: center plus deterministic offsets."""
    if n_agents < 1:
        raise ConfigError("a formation needs at least one agent")
    return np.asarray(shape.center, dtype=float) + formation_offsets(shape.kind, n_agents, shape.spacing)


def _yaw_matrix(yaw):
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class LissajousParams:
    center: tuple
    amplitude: tuple = (1.5, 1.5, 0.75)
    frequency: tuple = (0.7, 0.53, 0.37)  # rad/s
    phase: tuple = (0.0, 1.2, 2.3)

    def max_speed(self):
        a = np.asarray(self.amplitude, dtype=float)
        w = np.asarray(self.frequency, dtype=float)
        return float(np.linalg.norm(a * w))


def lissajous_goal(t, params):
    """Point on the 3D Lissajous curve at time t."""
    c = np.asarray(params.center, dtype=float)
    a = np.asarray(params.amplitude, dtype=float)
    w = np.asarray(params.frequency, dtype=float)
    p = np.asarray(params.phase, dtype=float)
    return c + a * np.sin(w * t + p)


@dataclass
class BezierPath:
    """Closed piecewise-cubic path through waypoints with C1 joins.

    Control points come from Catmull-Rom style tangents, so velocity is
    continuous across segment boundaries and each segment endpoint is a
    waypoint exactly.
    """

    waypoints: np.ndarray  # (m, 3)
    segment_duration: float
    control: np.ndarray = field(init=False)  # (m, 4, 3)

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[0] < 2 or wp.shape[1] != 3:
            raise ConfigError("a Bezier path needs at least two 3D waypoints")
        if not (self.segment_duration > 0):
            raise ConfigError("segment_duration must be > 0")
        self.waypoints = wp
        m = wp.shape[0]
        tangents = (wp[(np.arange(m) + 1) % m] - wp[(np.arange(m) - 1) % m]) / 2.0
        ctrl = np.empty((m, 4, 3))
        for k in range(m):
            nxt = (k + 1) % m
            ctrl[k, 0] = wp[k]
            ctrl[k, 1] = wp[k] + tangents[k] / 3.0
            ctrl[k, 2] = wp[nxt] - tangents[nxt] / 3.0
            ctrl[k, 3] = wp[nxt]
        self.control = ctrl

    @property
    def n_segments(self):
        return self.waypoints.shape[0]

    def max_speed(self):
        edges = np.diff(self.control, axis=1)
        fastest = np.max(np.linalg.norm(edges, axis=2))
        return 3.0 * fastest / self.segment_duration


def bezier_goal(t, path):
    """Point on the closed Bezier path at time t (wraps around)."""
    s = (t / path.segment_duration) % path.n_segments
    k = int(s)
    u = s - k
    p0, p1, p2, p3 = path.control[k]
    v = 1.0 - u
    return (v * v * v) * p0 + (3.0 * v * v * u) * p1 + (3.0 * v * u * u) * p2 + (u * u * u) * p3


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "static_formation"
    shape_pool: tuple = ("circle", "grid", "sphere", "cylinder", "cube")
    spacing: float = 0.5
    goal_margin: float = 0.3  # keep goals at least this far from walls
    hold_time_range: tuple = (2.0, 6.0)
    shrink_factor_range: tuple = (0.5, 1.5)
    lissajous_amplitude: tuple = (1.5, 1.5, 0.75)
    lissajous_frequency: tuple = (0.7, 0.53, 0.37)
    lissajous_phase: tuple = (0.0, 1.2, 2.3)
    bezier_waypoints: int = 6
    bezier_segment_duration: float = 3.0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}; choose from {SCENARIO_KINDS}")
        if not self.shape_pool:
            raise ConfigError("shape_pool must not be empty")
        for name in self.shape_pool:
            if name not in {s.value for s in Shape}:
                raise ConfigError(f"unknown formation shape {name!r}")
        lo, hi = self.hold_time_range
        if not (0 < lo <= hi):
            raise ConfigError(f"hold_time_range must be positive and ordered, got {self.hold_time_range}")
        if self.bezier_waypoints < 2:
            raise ConfigError("bezier_waypoints must be >= 2")


class Scenario:
    """Base: owns per-episode goal state; subclasses define transitions."""

    def __init__(self, spec, room_extent, n_agents):
        self.spec = spec
        self.room = np.asarray(room_extent, dtype=float)
        self.n_agents = n_agents
        self.assignment = None

    def reset(self, rng):
        raise NotImplementedError

    def step(self, elapsed, rng):
        """Advance to episode time ``elapsed`` (s); returns the assignment."""
        return self.assignment

    # -- placement helpers -------------------------------------------------

    def _sample_shape(self, rng):
        pool = self.spec.shape_pool
        return Shape(pool[int(rng.integers(len(pool)))])

    def _place(self, offsets, rng, extra_scale=1.0):
        """Random yaw + uniform center placement keeping all points in-room.

        ``extra_scale`` reserves head-room for later expansion of the
        offsets about the center.
        """
        yaw = rng.uniform(0.0, 2.0 * math.pi)
        rotated = offsets @ _yaw_matrix(yaw).T
        margin = self.spec.goal_margin
        scaled = rotated * extra_scale
        lo = margin - scaled.min(axis=0) if len(scaled) else np.full(3, margin)
        hi = self.room - margin - (scaled.max(axis=0) if len(scaled) else 0.0)
        if np.any(lo > hi):
            raise ConfigError(
                f"formation of extent {np.ptp(scaled, axis=0) if len(scaled) else 0} "
                f"does not fit in room {tuple(self.room)} with margin {margin}"
            )
        center = rng.uniform(lo, hi)
        return center + rotated, center


class StaticFormationScenario(Scenario):
    """One formation sampled from the pool, fixed for the whole episode."""

    def reset(self, rng):
        shape = self._sample_shape(rng)
        offsets = formation_offsets(shape, self.n_agents, self.spec.spacing)
        goals, center = self._place(offsets, rng)
        self.center = center
        self.assignment = GoalAssignment(goals, epoch=0)
        return self.assignment


class TimedTransitionScenario(Scenario):
    """Shared hold-time machinery for the dynamic formation variants."""

    def reset(self, rng):
        self._next_transition = float(rng.uniform(*self.spec.hold_time_range))
        self.assignment = self._initial_assignment(rng)
        return self.assignment

    def step(self, elapsed, rng):
        while elapsed >= self._next_transition:
            self._transition(rng)
            self.assignment.epoch += 1
            self._next_transition += float(rng.uniform(*self.spec.hold_time_range))
        return self.assignment

    def _initial_assignment(self, rng):
        raise NotImplementedError

    def _transition(self, rng):
        raise NotImplementedError


class DynamicGoalsScenario(TimedTransitionScenario):
    """Regenerate shape and placement at every transition."""

    def _initial_assignment(self, rng):
        self._regenerate(rng)
        return GoalAssignment(self._goals, epoch=0)

    def _regenerate(self, rng):
        shape = self._sample_shape(rng)
        offsets = formation_offsets(shape, self.n_agents, self.spec.spacing)
        self._goals, self.center = self._place(offsets, rng)

    def _transition(self, rng):
        self._regenerate(rng)
        self.assignment.goals = self._goals


class SwapGoalsScenario(TimedTransitionScenario):
    """Keep the formation, shuffle which agent owns which goal."""

    def _initial_assignment(self, rng):
        shape = self._sample_shape(rng)
        offsets = formation_offsets(shape, self.n_agents, self.spec.spacing)
        goals, self.center = self._place(offsets, rng)
        return GoalAssignment(goals, epoch=0)

    def _transition(self, rng):
        perm = rng.permutation(self.n_agents)
        self.assignment.goals = self.assignment.goals[perm]


class ShrinkExpandScenario(TimedTransitionScenario):
    """Rescale the formation about its center by a random factor."""

    def _initial_assignment(self, rng):
        shape = self._sample_shape(rng)
        offsets = formation_offsets(shape, self.n_agents, self.spec.spacing)
        max_scale = max(1.0, self.spec.shrink_factor_range[1])
        goals, self.center = self._place(offsets, rng, extra_scale=max_scale)
        return GoalAssignment(goals, epoch=0)

    def _feasible_scale(self, offsets, requested):
        """Largest scale <= requested keeping center + s*offset inside margins."""
        margin = self.spec.goal_margin
        limit = requested
        for axis in range(3):
            for off in offsets[:, axis]:
                if off > 0:
                    limit = min(limit, (self.room[axis] - margin - self.center[axis]) / off)
                elif off < 0:
                    limit = min(limit, (margin - self.center[axis]) / off)
        return max(limit, 0.0)

    def _transition(self, rng):
        factor = float(rng.uniform(*self.spec.shrink_factor_range))
        offsets = self.assignment.goals - self.center
        factor = self._feasible_scale(offsets, factor)
        self.assignment.goals = self.center + factor * offsets


class SwarmVsSwarmScenario(TimedTransitionScenario):
    """Two half-team groups with mirrored fixed centers; each transition
    resamples the shape and sends every group to the other group's side."""

    def _initial_assignment(self, rng):
        self._split = self.n_agents - self.n_agents // 2  # first group size
        self._swapped = False
        shape = self._sample_shape(rng)
        self._spawn_centers(rng)
        goals = self._build_goals(shape, rng)
        return GoalAssignment(goals, epoch=0)

    def _spawn_centers(self, rng):
        margin = self.spec.goal_margin
        # Reserve room for the widest formation either group can get.
        probe = max(
            np.abs(formation_offsets(Shape(name), max(self._split, 1), self.spec.spacing)).max(initial=0.0)
            for name in self.spec.shape_pool
        )
        lo = np.full(3, margin + probe)
        hi = self.room - margin - probe
        # Center A must land where its mirror about the room center fits too;
        # for a symmetric box that is the same interval.
        if np.any(lo > hi):
            raise ConfigError("room too small for swarm_vs_swarm formations")
        self._center_a = rng.uniform(lo, hi)
        self._center_b = self.room - self._center_a

    def _build_goals(self, shape, rng):
        ca, cb = (self._center_a, self._center_b)
        if self._swapped:
            ca, cb = cb, ca
        n1 = self._split
        n2 = self.n_agents - n1
        goals = np.zeros((self.n_agents, 3))
        if n1:
            goals[:n1] = ca + formation_offsets(shape, n1, self.spec.spacing)
        if n2:
            goals[n1:] = cb + formation_offsets(shape, n2, self.spec.spacing)
        return goals

    def _transition(self, rng):
        self._swapped = not self._swapped
        shape = self._sample_shape(rng)
        self.assignment.goals = self._build_goals(shape, rng)


class PursuitScenario(Scenario):
    """All agents chase one moving goal along a parametric trajectory."""

    def __init__(self, spec, room_extent, n_agents):
        super().__init__(spec, room_extent, n_agents)
        if spec.kind == "pursuit_lissajous":
            center = self.room / 2.0
            amp = np.asarray(spec.lissajous_amplitude, dtype=float)
            if np.any(center - amp < 0.0) or np.any(center + amp > self.room):
                raise ConfigError(
                    f"Lissajous amplitude box {tuple(amp)} exceeds room {tuple(self.room)}"
                )
            self.path_params = LissajousParams(
                center=tuple(center),
                amplitude=spec.lissajous_amplitude,
                frequency=spec.lissajous_frequency,
                phase=spec.lissajous_phase,
            )
        self._path = None

    def _goal_at(self, t):
        if self.spec.kind == "pursuit_lissajous":
            return lissajous_goal(t, self.path_params)
        return bezier_goal(t, self._path)

    def reset(self, rng):
        if self.spec.kind == "pursuit_bezier":
            margin = self.spec.goal_margin
            waypoints = rng.uniform(
                np.full(3, margin), self.room - margin,
                size=(self.spec.bezier_waypoints, 3),
            )
            self._path = BezierPath(waypoints, self.spec.bezier_segment_duration)
        goal = self._goal_at(0.0)
        self.assignment = GoalAssignment(np.tile(goal, (self.n_agents, 1)), epoch=0)
        return self.assignment

    def step(self, elapsed, rng):
        goal = self._goal_at(elapsed)
        self.assignment.goals[:] = goal
        return self.assignment

    def max_goal_speed(self):
        if self.spec.kind == "pursuit_lissajous":
            return self.path_params.max_speed()
        return self._path.max_speed()


_SCENARIO_CLASSES = {
    "static_formation": StaticFormationScenario,
    "dynamic_goals": DynamicGoalsScenario,
    "swap_goals": SwapGoalsScenario,
    "shrink_expand": ShrinkExpandScenario,
    "swarm_vs_swarm": SwarmVsSwarmScenario,
    "pursuit_lissajous": PursuitScenario,
    "pursuit_bezier": PursuitScenario,
}


def make_scenario(spec, room_extent, n_agents):
    return _SCENARIO_CLASSES[spec.kind](spec, room_extent, n_agents)
