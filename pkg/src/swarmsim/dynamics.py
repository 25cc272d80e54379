"""Single-quadrotor forward dynamics.

Action-to-thrust pipeline (clip, first-order motor lag, AR(1) motor noise),
wrench mixing for a quad-X airframe, and semi-implicit rigid-body integration
with an exact exponential-map attitude update.

All operations are pure functions of their arguments plus an explicitly
passed random generator; they never touch shared state.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SimulationFault

GRAVITY = 9.81
GRAVITY_VEC = np.array([0.0, 0.0, -GRAVITY])

# 2% settling criterion for the motor low-pass filter.
_SETTLING_FRACTION = 0.02


def cross3(a, b):
    """3-vector cross product without np.cross's axis plumbing overhead."""
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


@dataclass(frozen=True)
class QuadrotorParams:
    """Vehicle constants, Crazyflie 2.x scale by default.

    All values are SI. ``rotor_spin_signs`` follows the rotor order of
    :func:`rotor_positions`: two CW (+1) and two CCW (-1) rotors on opposite
    diagonals.
    """

    mass: float = 0.027
    inertia_diag: tuple = (1.4e-5, 1.4e-5, 2.17e-5)
    arm_length: float = 0.046
    torque_to_thrust: float = 0.006
    rotor_spin_signs: tuple = (1.0, -1.0, 1.0, -1.0)
    f_max: float = 0.15
    motor_settling_time: float = 0.15
    noise_decay: float = 0.9
    noise_scale: float = 0.002

    def __post_init__(self):
        inertia = np.asarray(self.inertia_diag, dtype=float)
        signs = np.asarray(self.rotor_spin_signs, dtype=float)
        if not (self.mass > 0):
            raise ConfigError(f"mass must be > 0, got {self.mass}")
        if inertia.shape != (3,) or not np.all(inertia > 0):
            raise ConfigError(f"inertia_diag must be 3 positive values, got {self.inertia_diag}")
        if not (self.arm_length > 0):
            raise ConfigError(f"arm_length must be > 0, got {self.arm_length}")
        if not (self.f_max > 0):
            raise ConfigError(f"f_max must be > 0, got {self.f_max}")
        if signs.shape != (4,) or not np.all(np.abs(signs) == 1.0) or signs.sum() != 0.0:
            raise ConfigError(
                f"rotor_spin_signs must be four values in {{+1,-1}} summing to 0, got {self.rotor_spin_signs}"
            )
        if not (0.0 <= self.noise_decay < 1.0):
            raise ConfigError(f"noise_decay must be in [0, 1), got {self.noise_decay}")
        if not (self.motor_settling_time > 0):
            raise ConfigError(f"motor_settling_time must be > 0, got {self.motor_settling_time}")
        object.__setattr__(self, "inertia_diag", tuple(float(v) for v in inertia))
        object.__setattr__(self, "rotor_spin_signs", tuple(float(v) for v in signs))
        # Cached derived arrays for the hot loop.
        object.__setattr__(self, "_inertia", inertia)
        object.__setattr__(self, "_inertia_inv", 1.0 / inertia)
        object.__setattr__(self, "_mix", _mix_matrix(self.arm_length, self.torque_to_thrust, signs))

    @property
    def inertia(self):
        return self._inertia

    @property
    def inertia_inv(self):
        return self._inertia_inv

    @property
    def mix_matrix(self):
        """3x4 map from per-rotor thrusts to body torque (thrust + drag terms)."""
        return self._mix

    def perturbed(self, factors):
        """New params with named fields scaled multiplicatively.

        ``factors`` maps field name -> scalar multiplier; used by per-episode
        domain randomization. Spin signs are not perturbable.
        """
        allowed = {
            "mass", "inertia_diag", "arm_length", "torque_to_thrust",
            "f_max", "motor_settling_time", "noise_decay", "noise_scale",
        }
        updates = {}
        for name, factor in factors.items():
            if name not in allowed:
                raise ConfigError(f"field {name!r} does not accept perturbation")
            value = getattr(self, name)
            if isinstance(value, tuple):
                updates[name] = tuple(v * factor for v in value)
            else:
                updates[name] = value * factor
        merged = {
            name: updates.get(name, getattr(self, name))
            for name in (
                "mass", "inertia_diag", "arm_length", "torque_to_thrust",
                "rotor_spin_signs", "f_max", "motor_settling_time",
                "noise_decay", "noise_scale",
            )
        }
        return QuadrotorParams(**merged)


def rotor_positions(arm_length):
    """Body-frame rotor centers for the X layout.

    Order: front-right, front-left, rear-left, rear-right; each at distance
    arm_length/sqrt(2) along both horizontal body axes. Diagonal pairs
    (0, 2) and (1, 3) share a spin sign.
    """
    d = arm_length / math.sqrt(2.0)
    return np.array([
        [d, -d, 0.0],
        [d, d, 0.0],
        [-d, d, 0.0],
        [-d, -d, 0.0],
    ])


def _mix_matrix(arm_length, torque_to_thrust, spin_signs):
    # tau = M @ f with tau_th rows from r x (0,0,f) and tau_p on the z row.
    pos = rotor_positions(arm_length)
    m = np.zeros((3, 4))
    m[0] = pos[:, 1]
    m[1] = -pos[:, 0]
    m[2] = torque_to_thrust * np.asarray(spin_signs, dtype=float)
    return m


@dataclass
class RigidState:
    """World-frame position/velocity, body-to-world rotation, body-frame omega."""

    position: np.ndarray
    velocity: np.ndarray
    rotation: np.ndarray
    angular_velocity: np.ndarray

    @classmethod
    def at_rest(cls, position):
        return cls(
            position=np.asarray(position, dtype=float).copy(),
            velocity=np.zeros(3),
            rotation=np.eye(3),
            angular_velocity=np.zeros(3),
        )

    def copy(self):
        return RigidState(
            self.position.copy(), self.velocity.copy(),
            self.rotation.copy(), self.angular_velocity.copy(),
        )

    def validate(self, tol=1e-8):
        if not (np.isfinite(self.position).all() and np.isfinite(self.velocity).all()
                and np.isfinite(self.rotation).all() and np.isfinite(self.angular_velocity).all()):
            raise SimulationFault("non-finite rigid state")
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > tol or np.linalg.det(self.rotation) <= 0:
            raise SimulationFault(f"rotation not orthonormal (residual {err:.3e})")


@dataclass
class MotorState:
    """Per-motor filter state: filtered speed in [0,1], AR(1) noise, last thrust."""

    filtered_speed: np.ndarray = field(default_factory=lambda: np.zeros(4))
    noise: np.ndarray = field(default_factory=lambda: np.zeros(4))
    prev_thrust: np.ndarray = field(default_factory=lambda: np.zeros(4))

    @classmethod
    def zeros(cls):
        return cls()

    def copy(self):
        return MotorState(self.filtered_speed.copy(), self.noise.copy(), self.prev_thrust.copy())


@dataclass
class BodyWrench:
    """Body-frame force (z only for quad-X) and torque."""

    force_body: np.ndarray
    torque: np.ndarray


def clip_action(a):
    """Map an unconstrained action to thrust fractions: (clip(a, -1, 1) + 1) / 2."""
    a = np.asarray(a, dtype=float)
    if a.shape != (4,):
        raise ValueError(f"action must have shape (4,), got {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"action contains non-finite values: {a}")
    return (np.clip(a, -1.0, 1.0) + 1.0) * 0.5


def derive_lag_coefficient(settling_time, dt):
    """Low-pass coefficient reaching 98% of a unit step at ``settling_time``.

    Closed form: 1 - exp(ln(0.02) * dt / settling_time), so that
    (1 - alpha)^(settling_time/dt) = 0.02 exactly.
    """
    if settling_time <= 0 or dt <= 0:
        raise ConfigError("settling_time and dt must be > 0")
    if dt >= settling_time:
        raise ConfigError(
            f"dt ({dt}) must be smaller than settling_time ({settling_time}) "
            "for the motor lag filter to be meaningful"
        )
    return 1.0 - math.exp(math.log(_SETTLING_FRACTION) * dt / settling_time)


def motor_lag_step(u_cmd, motor, lag_coeff):
    """One filter step: u_f <- alpha * (u - u_f_prev) + u_f_prev."""
    return lag_coeff * (u_cmd - motor.filtered_speed) + motor.filtered_speed


def motor_noise_step(motor, params, rng):
    """AR(1) motor noise: eps <- a_nd * eps_prev + a_ns * N(0,1), per motor."""
    return params.noise_decay * motor.noise + params.noise_scale * rng.standard_normal(4)


def thrust_from_motors(motor, f_max):
    """Per-motor thrust f_max * u_f^2 + noise, clamped at zero (rotors cannot pull)."""
    f = f_max * motor.filtered_speed * motor.filtered_speed + motor.noise
    return np.maximum(f, 0.0)


def mix_wrench(f, params):
    """Total body-frame force and torque from per-rotor thrusts."""
    force = np.array([0.0, 0.0, float(np.sum(f))])
    torque = params.mix_matrix @ f
    return BodyWrench(force_body=force, torque=torque)


def rotation_from_rotvec(vec):
    """Rodrigues' formula: exact rotation matrix for a rotation vector."""
    angle = math.sqrt(vec[0] * vec[0] + vec[1] * vec[1] + vec[2] * vec[2])
    if angle == 0.0:
        return np.eye(3)
    kx, ky, kz = vec[0] / angle, vec[1] / angle, vec[2] / angle
    s = math.sin(angle)
    c = math.cos(angle)
    t = 1.0 - c
    return np.array([
        [c + kx * kx * t, kx * ky * t - kz * s, kx * kz * t + ky * s],
        [ky * kx * t + kz * s, c + ky * ky * t, ky * kz * t - kx * s],
        [kz * kx * t - ky * s, kz * ky * t + kx * s, c + kz * kz * t],
    ])


def orthonormalize(rot):
    """Gram-Schmidt on the body axes (columns); keeps det = +1."""
    c0 = rot[:, 0]
    c0 = c0 / math.sqrt(c0 @ c0)
    c1 = rot[:, 1] - (rot[:, 1] @ c0) * c0
    c1 = c1 / math.sqrt(c1 @ c1)
    c2 = np.cross(c0, c1)
    return np.column_stack((c0, c1, c2))


def integrate_step(state, wrench, params, dt, extra_accel=None, extra_omega_dot=None):
    """One semi-implicit Euler step at the physics timestep.

    omega is updated first (Euler on the gyroscopic equation), the attitude
    follows the exact exponential map of the new omega and is re-orthonormalized,
    then velocity (gravity + rotated body force) and finally position from the
    new velocity. ``extra_accel`` (world frame) and ``extra_omega_dot`` (body
    frame) inject external disturbances such as downwash or ground support.
    """
    inertia = params.inertia
    omega = state.angular_velocity
    torque = wrench.torque
    gyro = np.cross(omega, inertia * omega)
    omega_dot = params.inertia_inv * (torque - gyro)
    if extra_omega_dot is not None:
        omega_dot = omega_dot + extra_omega_dot
    omega_new = omega + dt * omega_dot

    rot_new = state.rotation @ rotation_from_rotvec(omega_new * dt)
    rot_new = orthonormalize(rot_new)

    force = wrench.force_body
    if force[0] == 0.0 and force[1] == 0.0:
        force_world = force[2] * rot_new[:, 2]
    else:
        force_world = rot_new @ force
    accel = GRAVITY_VEC + force_world / params.mass
    if extra_accel is not None:
        accel = accel + extra_accel
    vel_new = state.velocity + dt * accel
    pos_new = state.position + dt * vel_new

    if not (math.isfinite(pos_new[0]) and math.isfinite(pos_new[1]) and math.isfinite(pos_new[2])
            and math.isfinite(vel_new[0]) and math.isfinite(vel_new[1]) and math.isfinite(vel_new[2])
            and math.isfinite(omega_new[0]) and math.isfinite(omega_new[1]) and math.isfinite(omega_new[2])):
        raise SimulationFault("non-finite state after integration step")

    return RigidState(pos_new, vel_new, rot_new, omega_new)
