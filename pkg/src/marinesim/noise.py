"""Deterministic, key-addressed random draws and seeded Perlin gradient noise.

Every draw is keyed by an explicit integer tuple (seed, subsystem, frame, ...),
so results do not depend on call order or parallel schedule.
"""

from __future__ import annotations

import operator

import numpy as np

_SUBSYSTEM_IDS = {
    "sonar_gaussian": 1,
    "sonar_beam_pattern": 2,
    "ebc_threshold": 3,
    "thermal": 4,
    "usbl": 5,
    "comms_drop": 6,
}


def keyed_generator(*key) -> np.random.Generator:
    """Generator derived from an integer key tuple via Philox."""
    ints = [_SUBSYSTEM_IDS[k] if isinstance(k, str) else operator.index(k) & 0xFFFFFFFFFFFFFFFF
            for k in key]
    return np.random.Generator(np.random.Philox(key=np.random.SeedSequence(ints).generate_state(2, np.uint64)))


def keyed_normal(key, shape=None, loc=0.0, scale=1.0):
    return keyed_generator(*key).normal(loc, scale, shape)


def keyed_uniform(key, shape=None, low=0.0, high=1.0):
    return keyed_generator(*key).uniform(low, high, shape)


class PerlinNoise3D:
    """Classic 3-D gradient noise in [-1, 1] with a seeded permutation table."""

    def __init__(self, seed):
        rng = keyed_generator(int(seed), 0x9E3779B9)
        self.perm = rng.permutation(256)
        self.perm = np.concatenate([self.perm, self.perm]).astype(np.int64)
        angles = rng.uniform(0, 2 * np.pi, 256)
        z = rng.uniform(-1, 1, 256)
        r = np.sqrt(1 - z * z)
        self.grads = np.stack([r * np.cos(angles), r * np.sin(angles), z], axis=-1)

    @staticmethod
    def _fade(t):
        return t * t * t * (t * (t * 6 - 15) + 10)

    def _grad_dot(self, ix, iy, iz, fx, fy, fz):
        h = self.perm[self.perm[self.perm[ix & 255] + (iy & 255)] + (iz & 255)]
        g = self.grads[h]
        return g[..., 0] * fx + g[..., 1] * fy + g[..., 2] * fz

    def sample(self, x, y, z):
        """Noise value at (x, y, z); accepts scalars or broadcastable arrays."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        x, y, z = np.broadcast_arrays(x, y, z)
        ix = np.floor(x).astype(np.int64)
        iy = np.floor(y).astype(np.int64)
        iz = np.floor(z).astype(np.int64)
        fx, fy, fz = x - ix, y - iy, z - iz
        u, v, w = self._fade(fx), self._fade(fy), self._fade(fz)

        def corner(dx, dy, dz):
            return self._grad_dot(ix + dx, iy + dy, iz + dz, fx - dx, fy - dy, fz - dz)

        x00 = corner(0, 0, 0) * (1 - u) + corner(1, 0, 0) * u
        x10 = corner(0, 1, 0) * (1 - u) + corner(1, 1, 0) * u
        x01 = corner(0, 0, 1) * (1 - u) + corner(1, 0, 1) * u
        x11 = corner(0, 1, 1) * (1 - u) + corner(1, 1, 1) * u
        y0 = x00 * (1 - v) + x10 * v
        y1 = x01 * (1 - v) + x11 * v
        out = y0 * (1 - w) + y1 * w
        # normalized so the theoretical bound maps inside [-1, 1]
        return np.clip(out * (2.0 / np.sqrt(3.0)), -1.0, 1.0)
