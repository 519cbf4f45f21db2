"""Forward-looking sonar image synthesis from ray-cast range/normal/reflectivity samples.

Pipeline per scan: ray fan -> histogram binning of raw returns -> gain ->
per-beam pattern factor -> multiplicative Perlin and additive Gaussian noise ->
temporal hold/ghosting blend -> clamp to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose
from .noise import PerlinNoise3D, keyed_normal, keyed_uniform
from .scene import Scene


@dataclass(frozen=True)
class SonarConfig:
    num_beams: int = 128
    horizontal_fov: float = math.radians(120.0)
    vertical_fov: float = math.radians(20.0)
    vertical_rays_per_beam: int = 8
    range_min: float = 0.5
    range_max: float = 50.0
    num_bins: int = 256
    gain: float = 1.0
    noise_stddev: float = 0.0
    noise_seed: int = 0
    perlin_scale: float = 0.1
    perlin_amplitude: float = None  # defaults to noise_stddev when unset
    beam_pattern_noise_amplitude: float = 0.0
    hold_factor: float = 0.0
    ghosting_factor: float = 0.0

    def __post_init__(self):
        if self.num_beams < 1 or self.num_bins < 1 or self.vertical_rays_per_beam < 1:
            raise ValueError("beam/bin/ray counts must be >= 1")
        if not 0 <= self.range_min < self.range_max:
            raise ValueError("require 0 <= range_min < range_max")
        if self.gain <= 0:
            raise ValueError("gain must be positive")
        if self.noise_stddev < 0 or self.beam_pattern_noise_amplitude < 0:
            raise ValueError("noise amplitudes must be non-negative")
        if self.perlin_scale <= 0:
            raise ValueError("perlin_scale must be positive")
        if not 0.0 <= self.hold_factor <= 1.0:
            raise ValueError("hold_factor must be in [0, 1]")
        if not 0.0 <= self.ghosting_factor < 1.0:
            raise ValueError("ghosting_factor must be in [0, 1)")

    @property
    def range_step(self):
        return (self.range_max - self.range_min) / self.num_bins

    @property
    def effective_perlin_amplitude(self):
        return self.noise_stddev if self.perlin_amplitude is None else self.perlin_amplitude


def gemini_1200ik_preset(**overrides) -> SonarConfig:
    """Named preset loosely tuned after a Gemini 1200ik-class multibeam unit."""
    base = dict(
        num_beams=512,
        horizontal_fov=math.radians(120.0),
        vertical_fov=math.radians(20.0),
        vertical_rays_per_beam=16,
        range_min=0.3,
        range_max=50.0,
        num_bins=512,
        gain=2.0,
        noise_stddev=0.02,
        beam_pattern_noise_amplitude=0.05,
        hold_factor=0.5,
        ghosting_factor=0.3,
    )
    base.update(overrides)
    return SonarConfig(**base)


@dataclass(frozen=True)
class SonarImage:
    intensities: np.ndarray  # (num_beams, num_bins), values in [0, 1]
    timestamp: float = 0.0


def bin_index(range_m: float, cfg: SonarConfig):
    """Histogram bin for a range sample; None when outside [range_min, range_max)."""
    if not math.isfinite(range_m):
        raise ValueError("range must be finite")
    if range_m < cfg.range_min or range_m >= cfg.range_max:
        return None
    return int((range_m - cfg.range_min) / cfg.range_step)


def raw_return(hit, ray_direction, cfg: SonarConfig) -> float:
    """Echo contribution: reflectivity x incidence cosine x inverse-square spreading."""
    if hit.range < cfg.range_min:
        raise ValueError("hit closer than range_min")
    cos_inc = float(np.dot(-np.asarray(ray_direction, dtype=np.float64), hit.normal))
    return raw_return_components(hit.material.acoustic_reflectivity, cos_inc, hit.range)


def raw_return_components(reflectivity, cos_incidence, range_m):
    return reflectivity * max(0.0, cos_incidence) * (1.0 / (range_m * range_m))


def beam_directions(cfg: SonarConfig):
    """Unit ray directions in the sonar frame (x forward, y left, z up).

    Returns (num_beams, vertical_rays_per_beam, 3); beams fan uniformly in
    azimuth, vertical rays uniformly in elevation.
    """
    if cfg.num_beams > 1:
        az = np.linspace(-cfg.horizontal_fov / 2, cfg.horizontal_fov / 2, cfg.num_beams)
    else:
        az = np.zeros(1)
    if cfg.vertical_rays_per_beam > 1:
        el = np.linspace(-cfg.vertical_fov / 2, cfg.vertical_fov / 2, cfg.vertical_rays_per_beam)
    else:
        el = np.zeros(1)
    azg, elg = np.meshgrid(az, el, indexing="ij")
    return np.stack(
        [np.cos(elg) * np.cos(azg), np.cos(elg) * np.sin(azg), np.sin(elg)], axis=-1
    )


def accumulate_bins(snapshot, sonar_pose: Pose, cfg: SonarConfig):
    """Cast the beam fan and histogram raw returns; no gain or noise applied."""
    bins = np.zeros((cfg.num_beams, cfg.num_bins))
    dirs = beam_directions(cfg)
    rot = sonar_pose.rotation
    origin = sonar_pose.position
    for b in range(cfg.num_beams):
        world_dirs = rot.apply(dirs[b])
        if world_dirs.ndim == 1:
            world_dirs = world_dirs[None, :]
        for d in world_dirs:
            hit = snapshot.raycast(origin, d)
            if hit is None or hit.range < cfg.range_min:
                continue
            k = bin_index(hit.range, cfg)
            if k is None:
                continue
            bins[b, k] += raw_return(hit, d, cfg)
    return bins


def sonar_scan(
    scene_or_snapshot,
    sonar_pose: Pose,
    cfg: SonarConfig,
    prev: SonarImage = None,
    frame_index: int = 0,
    timestamp: float = 0.0,
) -> SonarImage:
    snap = scene_or_snapshot.snapshot() if isinstance(scene_or_snapshot, Scene) else scene_or_snapshot

    img = accumulate_bins(snap, sonar_pose, cfg)
    img *= cfg.gain

    if cfg.beam_pattern_noise_amplitude > 0:
        # fixed per-beam imperfection, a function of the seed only
        p = keyed_uniform((cfg.noise_seed, "sonar_beam_pattern"), cfg.num_beams, -1.0, 1.0)
        img *= (1.0 + cfg.beam_pattern_noise_amplitude * p)[:, None]

    amp = cfg.effective_perlin_amplitude
    if amp > 0:
        perlin = PerlinNoise3D(cfg.noise_seed)
        beams = np.arange(cfg.num_beams)[:, None] * cfg.perlin_scale
        rbins = np.arange(cfg.num_bins)[None, :] * cfg.perlin_scale
        img *= 1.0 + amp * perlin.sample(beams, rbins, float(frame_index))
    if cfg.noise_stddev > 0:
        img += keyed_normal(
            (cfg.noise_seed, "sonar_gaussian", frame_index),
            (cfg.num_beams, cfg.num_bins),
            scale=cfg.noise_stddev,
        )

    if prev is not None:
        img = np.maximum(img, cfg.hold_factor * (cfg.ghosting_factor * prev.intensities))

    return SonarImage(np.clip(img, 0.0, 1.0), timestamp)
