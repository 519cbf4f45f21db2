"""Tether cable as a chain of spheres joined by stiff spring-damper segments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FIRST = "first"
LAST = "last"


@dataclass(frozen=True)
class TetherConfig:
    n_spheres: int
    mass_per_sphere: float
    sphere_radius: float
    segment_rest_length: float
    stretch_stiffness: float
    joint_damping: float = 0.0
    axial_damping: float = None  # N*s/m; default tuned from stiffness and mass
    water_density: float = 0.0
    drag_coefficient: float = 0.0

    def __post_init__(self):
        if self.n_spheres < 2:
            raise ValueError("a tether needs at least 2 spheres")
        if self.mass_per_sphere <= 0 or self.sphere_radius <= 0:
            raise ValueError("mass and radius must be positive")
        if self.segment_rest_length <= 0 or self.stretch_stiffness <= 0:
            raise ValueError("rest length and stiffness must be positive")
        if self.joint_damping < 0 or self.water_density < 0 or self.drag_coefficient < 0:
            raise ValueError("damping, density and drag must be non-negative")
        if self.axial_damping is None:
            # light sub-critical damping so stiff chains settle
            object.__setattr__(
                self,
                "axial_damping",
                0.2 * 2.0 * math.sqrt(self.stretch_stiffness * self.mass_per_sphere),
            )

    @property
    def total_length(self):
        return (self.n_spheres - 1) * self.segment_rest_length

    @property
    def sphere_volume(self):
        return 4.0 / 3.0 * math.pi * self.sphere_radius**3

    @property
    def cross_section_area(self):
        return math.pi * self.sphere_radius**2


@dataclass
class TetherState:
    positions: np.ndarray  # (N, 3) m
    velocities: np.ndarray  # (N, 3) m/s

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.velocities = np.asarray(self.velocities, dtype=np.float64).reshape(-1, 3)
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities))):
            raise ValueError("tether state must be finite")

    @staticmethod
    def straight_line(cfg: TetherConfig, start, end):
        """Chain laid out evenly between two points, at rest."""
        start = np.asarray(start, dtype=np.float64)
        end = np.asarray(end, dtype=np.float64)
        ts = np.linspace(0.0, 1.0, cfg.n_spheres)[:, None]
        return TetherState(start + ts * (end - start), np.zeros((cfg.n_spheres, 3)))


@dataclass(frozen=True)
class Attachment:
    endpoint: str  # FIRST or LAST
    point: np.ndarray = None      # fixed world anchor
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.endpoint not in (FIRST, LAST):
            raise ValueError("endpoint must be 'first' or 'last'")
        if self.point is not None:
            object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=np.float64))

    def sphere_index(self, cfg: TetherConfig):
        return 0 if self.endpoint == FIRST else cfg.n_spheres - 1


def _forces(state: TetherState, cfg: TetherConfig, gravity):
    pos, vel = state.positions, state.velocities
    n = cfg.n_spheres
    f = np.zeros_like(pos)

    # gravity, buoyancy (submerged when center below z=0), quadratic drag
    f[:, 2] -= cfg.mass_per_sphere * gravity
    submerged = pos[:, 2] < 0.0
    f[submerged, 2] += cfg.water_density * cfg.sphere_volume * gravity
    if cfg.drag_coefficient > 0 and cfg.water_density > 0:
        speed = np.linalg.norm(vel, axis=1, keepdims=True)
        drag = -0.5 * cfg.water_density * cfg.drag_coefficient * cfg.cross_section_area * speed * vel
        f[submerged] += drag[submerged]

    # segment spring + axial damping
    d = pos[1:] - pos[:-1]
    lengths = np.linalg.norm(d, axis=1)
    safe = np.where(lengths > 1e-12, lengths, 1.0)
    units = d / safe[:, None]
    stretch = lengths - cfg.segment_rest_length
    rel_v = np.einsum("ij,ij->i", vel[1:] - vel[:-1], units)
    mag = cfg.stretch_stiffness * stretch + cfg.axial_damping * rel_v
    seg_force = mag[:, None] * units
    f[:-1] += seg_force
    f[1:] -= seg_force

    # bending damping at interior joints: damp lateral velocity relative to neighbors
    if cfg.joint_damping > 0 and n > 2:
        c = cfg.joint_damping / cfg.segment_rest_length**2
        lat_v = vel[1:-1] - 0.5 * (vel[:-2] + vel[2:])
        axis = pos[2:] - pos[:-2]
        axis_len = np.linalg.norm(axis, axis=1, keepdims=True)
        axis = axis / np.where(axis_len > 1e-12, axis_len, 1.0)
        lat_v = lat_v - np.einsum("ij,ij->i", lat_v, axis)[:, None] * axis
        fb = -c * lat_v
        f[1:-1] += fb
        f[:-2] -= fb / 2.0
        f[2:] -= fb / 2.0

    return f


def tether_step(state: TetherState, cfg: TetherConfig, attachments=(), gravity=9.81, dt=1e-3):
    """Semi-implicit Euler step.

    Returns (new state, endpoint forces): one reaction force vector per
    attachment, the impulse the constraint applied divided by dt.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    f = _forces(state, cfg, gravity)
    m = cfg.mass_per_sphere

    new_vel = state.velocities + (f / m) * dt
    new_pos = state.positions + new_vel * dt

    endpoint_forces = []
    for att in attachments:
        i = att.sphere_index(cfg)
        # impulse/dt the constraint applies to hold the endpoint
        endpoint_forces.append(m * (att.velocity - new_vel[i]) / dt)
        new_vel[i] = att.velocity.copy()
        new_pos[i] = att.point if att.point is not None else state.positions[i] + att.velocity * dt

    return TetherState(new_pos, new_vel), endpoint_forces


def tether_tension(state: TetherState, cfg: TetherConfig, segment_index: int) -> float:
    """Signed spring tension of one segment; positive when taut."""
    if not 0 <= segment_index < cfg.n_spheres - 1:
        raise IndexError("segment index out of range")
    d = state.positions[segment_index + 1] - state.positions[segment_index]
    return cfg.stretch_stiffness * (float(np.linalg.norm(d)) - cfg.segment_rest_length)


def mechanical_energy(state: TetherState, cfg: TetherConfig, gravity=0.0):
    """Kinetic + spring + gravitational potential energy; diagnostic for tests."""
    ke = 0.5 * cfg.mass_per_sphere * float(np.sum(state.velocities**2))
    d = state.positions[1:] - state.positions[:-1]
    stretch = np.linalg.norm(d, axis=1) - cfg.segment_rest_length
    pe_spring = 0.5 * cfg.stretch_stiffness * float(np.sum(stretch**2))
    pe_grav = cfg.mass_per_sphere * gravity * float(np.sum(state.positions[:, 2]))
    return ke + pe_spring + pe_grav
