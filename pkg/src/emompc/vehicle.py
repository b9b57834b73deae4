"""Single-track (bicycle) lateral dynamics and its planar symmetry actions.

State layout used throughout: ``x = (p1, p2, theta, v_y, r)`` with
position in meters, heading in radians, lateral velocity in m/s and yaw
rate in rad/s.  The longitudinal speed ``v_x`` is constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the single-track model plus the fixed speed."""

    c_alpha_f: float = 65100.0  # front cornering stiffness
    c_alpha_r: float = 54100.0  # rear cornering stiffness
    l_f: float = 1.0            # front axle to center of mass, m
    l_r: float = 1.45           # rear axle to center of mass, m
    mass: float = 1275.0        # kg
    i_z: float = 1627.0         # yaw inertia, kg m^2
    v_x: float = 30.0           # longitudinal speed, m/s

    def __post_init__(self):
        for name in ("c_alpha_f", "c_alpha_r", "l_f", "l_r", "mass", "i_z", "v_x"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass
class VehicleState:
    p1: float
    p2: float
    theta: float
    v_y: float
    r: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.theta, self.v_y, self.r])

    @classmethod
    def from_array(cls, x) -> "VehicleState":
        p1, p2, theta, v_y, r = (float(v) for v in x)
        return cls(p1, p2, theta, v_y, r)


def lateral_coefficients(u: float, p: VehicleParams) -> tuple[float, float, float, float, float, float]:
    """The six steering-dependent coefficients of the lateral subsystem."""
    cu = math.cos(u)
    c1 = -(p.c_alpha_f * cu + p.c_alpha_r) / (p.mass * p.v_x)
    c2 = (-p.l_f * p.c_alpha_f * cu + p.l_r * p.c_alpha_r) / (p.i_z * p.v_x)
    c3 = p.c_alpha_f * cu / p.mass
    c4 = (-p.l_f * p.c_alpha_f * cu + p.l_r * p.c_alpha_r) / (p.mass * p.v_x) - p.v_x
    c5 = -(p.l_f**2 * p.c_alpha_f * cu + p.l_r**2 * p.c_alpha_r) / (p.i_z * p.v_x)
    c6 = p.l_f * p.c_alpha_f * cu / p.i_z
    return c1, c2, c3, c4, c5, c6


def bicycle_rhs(x, u: float, params: VehicleParams) -> np.ndarray:
    """Time derivative of the five-state bicycle model under steering ``u``.

    The lateral block follows the standard single-track form: the yaw
    moment couples to the lateral velocity through the inertia-scaled
    stiffness difference, and the Coriolis term ``-v_x r`` enters the
    lateral-velocity equation.
    """
    x = np.asarray(x, dtype=float)
    c1, c2, c3, c4, c5, c6 = lateral_coefficients(float(u), params)
    theta, v_y, r = x[2], x[3], x[4]
    st, ct = math.sin(theta), math.cos(theta)
    return np.array(
        [
            params.v_x * ct - v_y * st,
            params.v_x * st + v_y * ct,
            r,
            c1 * v_y + c4 * r + c3 * float(u),
            c2 * v_y + c5 * r + c6 * float(u),
        ]
    )


@dataclass(frozen=True)
class Se2Action:
    """Planar rotation by ``delta_theta`` composed with translation ``delta_p``.

    Acts on the vehicle state as ``Q x + dx`` where ``Q`` rotates the
    position block and leaves ``(theta, v_y, r)`` untouched apart from
    the heading shift; acts on track points as ``R p + delta_p``.
    """

    delta_theta: float
    delta_p: tuple[float, float]

    @classmethod
    def identity(cls) -> "Se2Action":
        return cls(0.0, (0.0, 0.0))

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.delta_theta), math.sin(self.delta_theta)
        return np.array([[c, -s], [s, c]])

    def inverse(self) -> "Se2Action":
        c, s = math.cos(self.delta_theta), math.sin(self.delta_theta)
        px, py = self.delta_p
        return Se2Action(-self.delta_theta, (-(c * px + s * py), -(-s * px + c * py)))

    def state_matrix(self) -> np.ndarray:
        q = np.eye(5)
        q[:2, :2] = self.rotation()
        return q

    def apply_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return self.rotation() @ p + np.asarray(self.delta_p)

    def apply_points(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return pts @ self.rotation().T + np.asarray(self.delta_p)


def se2_apply(g: Se2Action, x) -> np.ndarray:
    """Transform a vehicle state: rotate and translate position, shift heading."""
    x = np.asarray(x, dtype=float)
    out = x.copy()
    out[:2] = g.apply_point(x[:2])
    out[2] = x[2] + g.delta_theta
    return out


def check_equivariance(g: Se2Action, x, u: float, params: VehicleParams) -> float:
    """Residual ``max|f(g.x, u) - Q f(x, u)|`` of the vector-field symmetry."""
    lhs = bicycle_rhs(se2_apply(g, x), u, params)
    rhs = g.state_matrix() @ bicycle_rhs(x, u, params)
    return float(np.max(np.abs(lhs - rhs)))


def mirror_state(x) -> np.ndarray:
    """Reflect a full state across the horizontal axis: flip p2, theta, v_y, r."""
    x = np.asarray(x, dtype=float)
    return np.array([x[0], -x[1], -x[2], -x[3], -x[4]])


def mirror_control(u) -> np.ndarray:
    """Steering is odd under the horizontal reflection."""
    return -np.asarray(u, dtype=float)


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi
