"""Contact models: quad-quad collisions, wall/ceiling response, ground
contact with friction, and downwash coupling.

Vehicles are bounding spheres of radius ``quad_radius``; the collision
response acts on linear and angular velocity only (positions and attitudes
are never moved by a quad-quad contact). Walls use the same velocity
exchange with the surface as an immovable zero-velocity body.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import GRAVITY, RigidState, orthonormalize
from .errors import ConfigError, DegenerateContact


class ContactKind(Enum):
    QUAD_QUAD = "quad_quad"
    WALL = "wall"
    CEILING = "ceiling"
    GROUND_HIT = "ground_hit"
    GROUND_REST = "ground_rest"


@dataclass(frozen=True)
class ContactEvent:
    kind: ContactKind
    agents: tuple
    step: int

    def __post_init__(self):
        n = len(self.agents)
        if self.kind is ContactKind.QUAD_QUAD:
            if n != 2 or self.agents[0] == self.agents[1]:
                raise ValueError("quad_quad events carry exactly two distinct agents")
        elif n != 1:
            raise ValueError(f"{self.kind.value} events carry exactly one agent")


@dataclass(frozen=True)
class CollisionParams:
    quad_radius: float = 0.06
    velocity_decay_1: float = 1.0
    velocity_decay_2: float = 1.0
    linear_noise_scale: float = 0.2
    angular_noise_scale: float = 1.0
    friction_mu: float = 0.6
    ground_z: float = 0.0
    room_extent: tuple = (10.0, 10.0, 10.0)
    # |v_z| below this counts as settled for the ground-rest condition.
    rest_vz_threshold: float = 0.01

    def __post_init__(self):
        if not (self.quad_radius > 0):
            raise ConfigError(f"quad_radius must be > 0, got {self.quad_radius}")
        for name in ("velocity_decay_1", "velocity_decay_2"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ConfigError(f"{name} must be in (0, 1], got {v}")
        if self.friction_mu < 0:
            raise ConfigError(f"friction_mu must be >= 0, got {self.friction_mu}")
        extent = np.asarray(self.room_extent, dtype=float)
        if extent.shape != (3,) or not np.all(extent > 0):
            raise ConfigError(f"room_extent must be 3 positive values, got {self.room_extent}")
        object.__setattr__(self, "room_extent", tuple(float(v) for v in extent))


@dataclass(frozen=True)
class DownwashParams:
    """Gains for the gated downwash push on the lower vehicle.

    The deterministic push is k1 * (k2 * distance + b1) on the world z axis;
    k1 < 0 makes it point down. The constants are uncalibrated config values.
    """

    k1: float = -3.0
    k2: float = 0.5
    b1: float = 1.0
    xy_radius: float = 0.1
    z_range: float = 2.0
    accel_noise_scale: float = 0.05
    angular_noise_scale: float = 0.5

    def __post_init__(self):
        if not (self.xy_radius > 0):
            raise ConfigError(f"xy_radius must be > 0, got {self.xy_radius}")
        if not (self.z_range > 0):
            raise ConfigError(f"z_range must be > 0, got {self.z_range}")


def detect_quad_pairs(positions, quad_radius):
    """All index pairs (i, j), i < j, closer than two radii, ascending order."""
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    if n < 2:
        return []
    diff = pos[:, None, :] - pos[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    limit2 = (2.0 * quad_radius) ** 2
    pairs = []
    for i in range(n - 1):
        row = dist2[i, i + 1:]
        for off in np.flatnonzero(row < limit2):
            pairs.append((i, int(i + 1 + off)))
    return pairs


def _collision_noise(params, rng):
    eps_v1 = params.linear_noise_scale * rng.standard_normal(3)
    eps_v2 = params.linear_noise_scale * rng.standard_normal(3)
    eps_w1 = params.angular_noise_scale * rng.standard_normal(3)
    eps_w2 = params.angular_noise_scale * rng.standard_normal(3)
    return eps_v1, eps_v2, eps_w1, eps_w2


def resolve_quad_quad(state1, state2, params, rng=None):
    """Velocity exchange along the contact normal between two vehicles.

    n = (x1 - x2)/|x1 - x2|, vt = ((v2 - v1) . n) n, then
    v1 <- a1 (v1 + vt + eps), v2 <- a2 (v2 - vt + eps); angular velocities
    pick up independent noise. Positions and rotations are untouched.
    Pass ``rng=None`` to disable the noise terms.
    """
    delta = state1.position - state2.position
    dist = math.sqrt(delta @ delta)
    if dist == 0.0:
        raise DegenerateContact("coincident positions, collision normal undefined")
    normal = delta / dist
    exchange = ((state2.velocity - state1.velocity) @ normal) * normal

    if rng is None:
        eps_v1 = eps_v2 = eps_w1 = eps_w2 = 0.0
    else:
        eps_v1, eps_v2, eps_w1, eps_w2 = _collision_noise(params, rng)

    new1 = state1.copy()
    new2 = state2.copy()
    new1.velocity = params.velocity_decay_1 * (state1.velocity + exchange + eps_v1)
    new2.velocity = params.velocity_decay_2 * (state2.velocity - exchange + eps_v2)
    new1.angular_velocity = state1.angular_velocity + eps_w1
    new2.angular_velocity = state2.angular_velocity + eps_w2
    return new1, new2


def resolve_surface(state, surface_normal, params, rng=None):
    """Wall/ceiling response: the quad-quad model with an immovable surface.

    ``surface_normal`` is the inward unit normal. Only the vehicle is
    updated (the surface has zero velocity, so its normal velocity component
    is absorbed); afterwards the position is clamped so the bounding sphere
    stays inside the room.
    """
    normal = np.asarray(surface_normal, dtype=float)
    exchange = -(state.velocity @ normal) * normal

    if rng is None:
        eps_v = eps_w = 0.0
    else:
        eps_v = params.linear_noise_scale * rng.standard_normal(3)
        eps_w = params.angular_noise_scale * rng.standard_normal(3)

    new = state.copy()
    new.velocity = params.velocity_decay_1 * (state.velocity + exchange + eps_v)
    new.angular_velocity = state.angular_velocity + eps_w
    r = params.quad_radius
    lo = np.array([r, r, params.ground_z + r])
    hi = np.asarray(params.room_extent) - r
    new.position = np.clip(new.position, lo, hi)
    return new


def surface_contacts(position, params):
    """(kind, inward normal) for every wall/ceiling plane the sphere touches."""
    r = params.quad_radius
    ex, ey, ez = params.room_extent
    x, y, z = position
    found = []
    if x - r <= 0.0:
        found.append((ContactKind.WALL, np.array([1.0, 0.0, 0.0])))
    if x + r >= ex:
        found.append((ContactKind.WALL, np.array([-1.0, 0.0, 0.0])))
    if y - r <= 0.0:
        found.append((ContactKind.WALL, np.array([0.0, 1.0, 0.0])))
    if y + r >= ey:
        found.append((ContactKind.WALL, np.array([0.0, -1.0, 0.0])))
    if z + r >= ez:
        found.append((ContactKind.CEILING, np.array([0.0, 0.0, -1.0])))
    return found


def upright_rotation(rot):
    """Rebuild a rotation with body z pointing up, preserving heading.

    The old body x axis is projected onto the horizontal plane; if it is
    degenerate (vehicle pointing straight up/down) world x is used.
    """
    heading = np.array([rot[0, 0], rot[1, 0], 0.0])
    norm = math.sqrt(heading @ heading)
    if norm < 1e-12:
        heading = np.array([1.0, 0.0, 0.0])
    else:
        heading = heading / norm
    up = np.array([0.0, 0.0, 1.0])
    left = np.cross(up, heading)
    return orthonormalize(np.column_stack((heading, left, up)))


@dataclass
class GroundResolution:
    """Outcome of the ground model for one vehicle at one substep."""

    state: RigidState
    # World-frame planar force replacing the thrust force during rest, or None.
    planar_force: object
    # True when the floor supplies the normal force (vertical accel is zero).
    supported: bool
    event: object  # ContactKind.GROUND_HIT / GROUND_REST / None


def ground_contact(state, motor_thrusts, params, quad):
    """Impact and rest handling against the floor plane.

    Impact (sphere contact while descending faster than the rest threshold):
    velocities zeroed, attitude reset upright, vehicle placed on the floor.
    Rest (contact, total thrust below weight, |v_z| small): the vehicle is
    held on the floor and the planar thrust force is reduced by friction --
    opposing the thrust direction at rest, opposing the velocity when
    sliding.
    """
    r = params.quad_radius
    floor = params.ground_z + r
    if state.position[2] > floor:
        return GroundResolution(state, None, False, None)

    vz = state.velocity[2]
    total_thrust = float(np.sum(motor_thrusts))
    weight = quad.mass * GRAVITY

    if vz < -params.rest_vz_threshold:
        new = state.copy()
        new.position[2] = floor
        new.velocity[:] = 0.0
        new.angular_velocity[:] = 0.0
        new.rotation = upright_rotation(state.rotation)
        return GroundResolution(new, None, False, ContactKind.GROUND_HIT)

    if total_thrust < weight and abs(vz) <= params.rest_vz_threshold:
        new = state.copy()
        new.position[2] = floor
        new.velocity[2] = 0.0
        force_world = total_thrust * new.rotation[:, 2]
        f_xy = force_world.copy()
        f_xy[2] = 0.0
        normal_force = max(weight - force_world[2], 0.0)
        friction = params.friction_mu * normal_force
        v_xy = np.array([new.velocity[0], new.velocity[1], 0.0])
        speed = math.sqrt(v_xy @ v_xy)
        if speed == 0.0:
            mag = math.sqrt(f_xy @ f_xy)
            if mag > 0.0:
                f_xy = f_xy * (max(mag - friction, 0.0) / mag)
        else:
            f_xy = f_xy - friction * (v_xy / speed)
        return GroundResolution(new, f_xy, True, ContactKind.GROUND_REST)

    return GroundResolution(state, None, False, None)


def apply_downwash(state_low, state_high, params, rng=None):
    """Acceleration disturbance on the lower vehicle from one flying above.

    Returns (linear accel world frame, angular accel body frame); both zero
    unless the pair overlaps in xy within ``xy_radius`` and the upper vehicle
    is above by less than ``z_range``.
    """
    dx = state_high.position[0] - state_low.position[0]
    dy = state_high.position[1] - state_low.position[1]
    dz = state_high.position[2] - state_low.position[2]
    if dz <= 0.0 or dz >= params.z_range:
        return np.zeros(3), np.zeros(3)
    if math.sqrt(dx * dx + dy * dy) >= params.xy_radius:
        return np.zeros(3), np.zeros(3)

    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    accel = np.array([0.0, 0.0, params.k1 * (params.k2 * dist + params.b1)])
    omega_dot = np.zeros(3)
    if rng is not None:
        accel = accel + params.accel_noise_scale * rng.standard_normal(3)
        omega_dot = params.angular_noise_scale * rng.standard_normal(3)
    return accel, omega_dot
