"""File export helpers: raw float grids, PNG planes, event streams, flow images."""

from __future__ import annotations

import struct

import numpy as np
from PIL import Image


def write_raw_float_grid(path, grid):
    """Little-endian float32 grid with an 8-byte (W, H) uint32 header."""
    grid = np.asarray(grid, dtype="<f4")
    if grid.ndim == 2:
        h, w = grid.shape
    elif grid.ndim == 3:
        h, w = grid.shape[:2]
    else:
        raise ValueError("expected a 2-D grid or an interleaved 3-D grid")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", w, h))
        fh.write(grid.tobytes())


def read_raw_float_grid(path, channels=1):
    with open(path, "rb") as fh:
        w, h = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f4")
    if channels == 1:
        return data.reshape(h, w)
    return data.reshape(h, w, channels)


def write_id_png(path, ids):
    """16-bit grayscale PNG for instance/class id planes."""
    arr = np.asarray(ids)
    if arr.min() < 0 or arr.max() > 65535:
        raise ValueError("id plane out of uint16 range")
    Image.fromarray(arr.astype(np.uint16)).save(path)


def write_gray_png(path, values, lo=0.0, hi=1.0):
    """8-bit grayscale PNG after linear [lo, hi] -> [0, 255] mapping."""
    arr = np.asarray(values, dtype=np.float64)
    scaled = np.clip((arr - lo) / (hi - lo), 0.0, 1.0)
    Image.fromarray(np.round(scaled * 255).astype(np.uint8), mode="L").save(path)


def write_rgb_png(path, rgb):
    arr = np.asarray(rgb)
    if arr.dtype != np.uint8:
        arr = np.round(np.clip(arr, 0, 1) * 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def write_events_text(path, events):
    """One `t x y p` line per event, t with 9 decimal places."""
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(f"{ev.t:.9f} {ev.x} {ev.y} {ev.polarity}\n")


def write_events_binary(path, events):
    """Little-endian records of (float64 t, uint16 x, uint16 y, int8 p)."""
    with open(path, "wb") as fh:
        for ev in events:
            fh.write(struct.pack("<dHHb", ev.t, ev.x, ev.y, ev.polarity))


def read_events_binary(path):
    from .events import Event

    out = []
    rec = struct.Struct("<dHHb")
    with open(path, "rb") as fh:
        data = fh.read()
    for off in range(0, len(data), rec.size):
        t, x, y, p = rec.unpack_from(data, off)
        out.append(Event(x=x, y=y, t=t, polarity=p))
    return out


def sonar_fan_image(intensities, horizontal_fov, size=256):
    """Nearest-neighbor polar-to-Cartesian fan projection for display."""
    n_beams, n_bins = intensities.shape
    img = np.zeros((size, size))
    ys, xs = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    cx = (size - 1) / 2.0
    x = (xs - cx) / cx          # [-1, 1] across
    y = (size - 1 - ys) / (size - 1.0)  # 0 at bottom (sonar apex)
    r = np.sqrt(x * x + y * y)
    theta = np.arctan2(x, y)
    beam = np.round((theta / horizontal_fov + 0.5) * (n_beams - 1)).astype(int)
    rbin = np.round(r * (n_bins - 1)).astype(int)
    valid = (np.abs(theta) <= horizontal_fov / 2) & (r <= 1.0)
    img[valid] = intensities[beam[valid], rbin[valid]]
    return img


def flow_to_rgb(flow, validity=None, max_magnitude=None):
    """Standard flow color wheel: hue from direction, saturation from magnitude."""
    u = flow[..., 0]
    v = flow[..., 1]
    mag = np.sqrt(u * u + v * v)
    if max_magnitude is None:
        max_magnitude = max(mag.max(), 1e-9)
    ang = np.arctan2(-v, -u) / np.pi  # [-1, 1]
    h = (ang + 1.0) / 2.0
    s = np.clip(mag / max_magnitude, 0, 1)
    i = np.floor(h * 6.0).astype(int) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = 1.0 - s
    q = 1.0 - s * f
    t = 1.0 - s * (1.0 - f)
    one = np.ones_like(h)
    rgb = np.zeros(h.shape + (3,))
    lut = [(one, t, p), (q, one, p), (p, one, t), (p, q, one), (t, p, one), (one, p, q)]
    for k, (r_, g_, b_) in enumerate(lut):
        m = i == k
        rgb[m, 0] = r_[m]
        rgb[m, 1] = g_[m]
        rgb[m, 2] = b_[m]
    if validity is not None:
        rgb[~validity] = 0.0
    return rgb
