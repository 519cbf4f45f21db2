"""Thermal camera: steady-state temperature images of bodies, ocean surface and sky."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraIntrinsics, Pose
from .mesh import AIR_TEMPERATURE, CONSTANT, TEMPERATURE_MAP, Material
from .noise import keyed_normal
from .scene import Scene, pixel_ray_directions

_KELVIN_OFFSET = 273.15
_SWINBANK_COEFF = 0.0552
_SCHLICK_BASE_REFLECTANCE = 0.02


@dataclass(frozen=True)
class ThermalConfig:
    intrinsics: CameraIntrinsics
    temp_min: float = -10.0
    temp_max: float = 60.0
    noise_stddev: float = 0.0
    noise_seed: int = 0
    colormap: str = "hot"

    def __post_init__(self):
        if self.temp_min >= self.temp_max:
            raise ValueError("temp_min must be below temp_max")
        if self.noise_stddev < 0:
            raise ValueError("noise_stddev must be non-negative")
        if self.colormap not in COLORMAPS:
            raise ValueError(f"unknown colormap {self.colormap!r}")


@dataclass(frozen=True)
class ThermalEnvironment:
    air_temperature: float = 20.0       # degrees C
    water_temperature: float = 15.0     # degrees C
    solar_irradiance: float = 0.0       # W/m^2
    sun_direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    solar_absorption_gain: float = 15.0         # deg C at 1000 W/m^2 fully absorbed
    solar_absorption_gain_water: float = 2.0

    def __post_init__(self):
        if self.solar_irradiance < 0:
            raise ValueError("solar_irradiance must be non-negative")
        d = np.asarray(self.sun_direction, dtype=np.float64)
        n = np.linalg.norm(d)
        if abs(n - 1.0) > 1e-6:
            d = d / n
        object.__setattr__(self, "sun_direction", d)


def _bilinear_sample(grid, u, v):
    h, w = grid.shape
    x = np.clip(u, 0.0, 1.0) * (w - 1)
    y = np.clip(v, 0.0, 1.0) * (h - 1)
    x0, y0 = int(np.floor(x)), int(np.floor(y))
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    top = grid[y0, x0] * (1 - fx) + grid[y0, x1] * fx
    bot = grid[y1, x0] * (1 - fx) + grid[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def base_temperature(material: Material, env: ThermalEnvironment, uv=None) -> float:
    mode = material.thermal
    if mode.kind == AIR_TEMPERATURE:
        return env.air_temperature
    if mode.kind == CONSTANT:
        return mode.constant_celsius
    if mode.kind == TEMPERATURE_MAP:
        u, v = (0.0, 0.0) if uv is None else (float(uv[0]), float(uv[1]))
        return float(_bilinear_sample(mode.temperature_map, u, v))
    raise ValueError(f"unknown thermal mode {mode.kind!r}")


def surface_temperature(material: Material, normal, sun_visible, env: ThermalEnvironment, uv=None):
    """Base temperature plus the absorbed-sunlight increase.

    Absorption scales with (1 - albedo), is attenuated linearly by roughness
    and by the sun incidence cosine, and vanishes in shadow.
    """
    t = base_temperature(material, env, uv)
    if not sun_visible:
        return t
    cos_sun = max(0.0, float(np.dot(np.asarray(normal, dtype=np.float64), env.sun_direction)))
    absorbed = (
        env.solar_absorption_gain
        * (1.0 - material.albedo)
        * (1.0 - 0.5 * material.roughness)
        * (env.solar_irradiance / 1000.0)
        * cos_sun
    )
    return t + absorbed


def sky_temperature(air_temperature: float) -> float:
    """Swinbank-form clear sky: T_sky[K] = 0.0552 * T_air[K]^1.5."""
    t_air_k = air_temperature + _KELVIN_OFFSET
    if t_air_k < 0:
        raise ValueError("air temperature below absolute zero")
    return _SWINBANK_COEFF * t_air_k**1.5 - _KELVIN_OFFSET


def ocean_surface_temperature(env: ThermalEnvironment, view_incidence: float) -> float:
    """Blend of sun-warmed water and reflected sky, Schlick-weighted by incidence."""
    if not 0.0 <= view_incidence <= np.pi / 2 + 1e-12:
        raise ValueError("view incidence must be in [0, pi/2]")
    w0 = _SCHLICK_BASE_REFLECTANCE
    w = w0 + (1.0 - w0) * (1.0 - np.cos(view_incidence)) ** 5
    water = env.water_temperature + env.solar_absorption_gain_water * env.solar_irradiance / 1000.0
    return (1.0 - w) * water + w * sky_temperature(env.air_temperature)


def _hot_colormap(x):
    x = np.clip(x, 0.0, 1.0)
    r = np.clip(3.0 * x, 0, 1)
    g = np.clip(3.0 * x - 1.0, 0, 1)
    b = np.clip(3.0 * x - 2.0, 0, 1)
    return np.stack([r, g, b], axis=-1)


def _gray_colormap(x):
    x = np.clip(x, 0.0, 1.0)
    return np.stack([x, x, x], axis=-1)


COLORMAPS = {"hot": _hot_colormap, "gray": _gray_colormap}


def render_thermal(scene, camera_pose: Pose, cfg: ThermalConfig, env: ThermalEnvironment,
                   frame_index=0):
    """Returns (float temperature image in deg C, color-mapped RGB display image)."""
    snap = scene.snapshot() if isinstance(scene, Scene) else scene
    intr = cfg.intrinsics
    W, H = intr.width, intr.height
    temps = np.empty((H, W))

    dirs_cam = pixel_ray_directions(intr)
    rot = camera_pose.rotation
    origin = camera_pose.position
    sky_t = sky_temperature(env.air_temperature)
    water_z = snap.water_z

    for row in range(H):
        dirs_world = rot.apply(dirs_cam[row])
        for col in range(W):
            d = dirs_world[col]
            hit = snap.raycast(origin, d)
            water_t = None
            if water_z is not None and d[2] != 0.0:
                s = (water_z - origin[2]) / d[2]
                if s > 0 and (hit is None or s < hit.range):
                    cos_i = min(1.0, abs(d[2]))
                    water_t = ocean_surface_temperature(env, float(np.arccos(cos_i)))
            if water_t is not None:
                temps[row, col] = water_t
            elif hit is not None:
                visible = snap.sun_visible(hit.point, env.sun_direction)
                temps[row, col] = surface_temperature(
                    hit.material, hit.normal, visible, env, hit.uv
                )
            else:
                temps[row, col] = sky_t

    if cfg.noise_stddev > 0:
        temps = temps + keyed_normal(
            (cfg.noise_seed, "thermal", frame_index), (H, W), scale=cfg.noise_stddev
        )
    float_image = np.clip(temps, cfg.temp_min, cfg.temp_max)
    normalized = (float_image - cfg.temp_min) / (cfg.temp_max - cfg.temp_min)
    display = COLORMAPS[cfg.colormap](normalized)
    return float_image, display
