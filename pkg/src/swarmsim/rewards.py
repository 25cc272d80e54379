"""Per-agent scalar reward: state-based terms plus interaction terms.

Every term is a configurable coefficient times a state/interaction quantity;
the defaults make distance, speed, spin, action and collision terms
penalties (negative weights) and upright orientation a bonus. The paper-free
choice of default magnitudes lives in the shipped config file.
"""

from dataclasses import dataclass, fields

import numpy as np

from .interactions import ContactKind


@dataclass(frozen=True)
class RewardCoeffs:
    alpha_pos: float = -1.0
    alpha_vel: float = -0.05
    alpha_ori: float = 0.5
    alpha_spin: float = -0.05
    alpha_act: float = -0.01
    alpha_dact: float = -0.01
    alpha_rot: float = 0.1
    alpha_yaw: float = 0.0
    w_floor_hit: float = -10.0
    w_floor_rest: float = -0.5
    w_wall: float = -5.0
    w_ceiling: float = -5.0
    w_quad_collision: float = -5.0
    w_proximity: float = -1.0
    proximity_range: float = 0.3


@dataclass
class RewardBreakdown:
    pos: float = 0.0
    vel: float = 0.0
    ori: float = 0.0
    spin: float = 0.0
    act: float = 0.0
    dact: float = 0.0
    rot: float = 0.0
    yaw: float = 0.0
    floor_hit: float = 0.0
    floor_rest: float = 0.0
    wall: float = 0.0
    ceiling: float = 0.0
    quad_collision: float = 0.0
    proximity: float = 0.0

    @property
    def total(self):
        return (self.pos + self.vel + self.ori + self.spin + self.act + self.dact
                + self.rot + self.yaw + self.floor_hit + self.floor_rest + self.wall
                + self.ceiling + self.quad_collision + self.proximity)

    def components(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def merged(self, other):
        out = RewardBreakdown()
        for f in fields(self):
            setattr(out, f.name, getattr(self, f.name) + getattr(other, f.name))
        return out


def _norm(v):
    return float(np.sqrt(v @ v))


def state_reward(state, goal, f, f_prev, coeffs):
    """State-based terms for one agent at one control step.

    R indexing is zero-based body-to-world, so rotation[2, 2] is the upright
    alignment (body z on world z) and rotation[0, 0] the yaw alignment.
    """
    rot = state.rotation
    return RewardBreakdown(
        pos=coeffs.alpha_pos * _norm(np.asarray(goal, dtype=float) - state.position),
        vel=coeffs.alpha_vel * _norm(state.velocity),
        ori=coeffs.alpha_ori * rot[2, 2],
        spin=coeffs.alpha_spin * _norm(state.angular_velocity),
        act=coeffs.alpha_act * _norm(np.asarray(f, dtype=float)),
        dact=coeffs.alpha_dact * _norm(np.asarray(f, dtype=float) - np.asarray(f_prev, dtype=float)),
        rot=coeffs.alpha_rot * (np.trace(rot) - 1.0) / 2.0,
        yaw=coeffs.alpha_yaw * rot[0, 0],
    )


_EVENT_FIELD = {
    ContactKind.GROUND_HIT: ("floor_hit", "w_floor_hit"),
    ContactKind.GROUND_REST: ("floor_rest", "w_floor_rest"),
    ContactKind.WALL: ("wall", "w_wall"),
    ContactKind.CEILING: ("ceiling", "w_ceiling"),
    ContactKind.QUAD_QUAD: ("quad_collision", "w_quad_collision"),
}


def interaction_reward(events, pair_distances, coeffs):
    """Interaction terms for one agent: event indicators plus proximity shaping.

    ``events`` are this agent's contact events for the control step;
    ``pair_distances`` the distances to other agents. Proximity contributes
    w * max(0, 1 - d/range) per pair, zero at and beyond the range.
    """
    out = RewardBreakdown()
    for event in events:
        field_name, weight_name = _EVENT_FIELD[event.kind]
        setattr(out, field_name, getattr(out, field_name) + getattr(coeffs, weight_name))
    if coeffs.proximity_range > 0:
        shaped = 0.0
        for d in pair_distances:
            shaped += max(0.0, 1.0 - d / coeffs.proximity_range)
        out.proximity = coeffs.w_proximity * shaped
    return out
