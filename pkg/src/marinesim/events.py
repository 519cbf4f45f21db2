"""Event-based camera: asynchronous brightness-change events from log-luminance frames.

Between two frames the log-luminance of each pixel is interpolated linearly;
an event fires at every instant the difference to the pixel's reference level
first reaches the sampled contrast threshold, gated by a refractory period.
Crossings inside the refractory window are suppressed without advancing the
reference. Output is sorted by (t, y, x, polarity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import keyed_normal

_MIN_THRESHOLD_FRACTION = 0.01


@dataclass(frozen=True)
class EbcConfig:
    contrast_threshold_pos: float = 0.2
    contrast_threshold_neg: float = 0.2
    threshold_noise_stddev: float = 0.0
    refractory_period: float = 0.0
    frame_rate: float = 30.0
    noise_seed: int = 0
    log_eps: float = 1e-3

    def __post_init__(self):
        if self.contrast_threshold_pos <= 0 or self.contrast_threshold_neg <= 0:
            raise ValueError("contrast thresholds must be strictly positive")
        if self.threshold_noise_stddev < 0:
            raise ValueError("threshold_noise_stddev must be non-negative")
        if self.refractory_period < 0:
            raise ValueError("refractory_period must be non-negative")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")
        if self.log_eps <= 0:
            raise ValueError("log_eps must be positive")


@dataclass(frozen=True)
class Event:
    x: int
    y: int
    t: float
    polarity: int  # +1 or -1


def log_luminance(L, log_eps):
    """ln(L + log_eps); L must be non-negative."""
    arr = np.asarray(L, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("luminance must be non-negative")
    return np.log(arr + log_eps)


def sample_threshold(cfg: EbcConfig, frame_index, y, x, counter, polarity):
    """Resampled contrast threshold after an event, clamped away from zero.

    Keyed draw: identical for identical (seed, frame, pixel, counter, polarity)
    regardless of evaluation order.
    """
    nominal = cfg.contrast_threshold_pos if polarity > 0 else cfg.contrast_threshold_neg
    if cfg.threshold_noise_stddev == 0:
        return nominal
    n = keyed_normal(
        (cfg.noise_seed, "ebc_threshold", frame_index, y, x, counter, 1 if polarity > 0 else 0),
        scale=cfg.threshold_noise_stddev,
    )
    return max(_MIN_THRESHOLD_FRACTION * nominal, nominal + float(n))


class PixelStateGrid:
    """Per-pixel reference levels, refractory clocks and sampled thresholds."""

    def __init__(self, width, height, cfg: EbcConfig):
        self.reference = np.zeros((height, width))
        self.last_event_time = np.full((height, width), -np.inf)
        self.threshold_pos = np.full((height, width), cfg.contrast_threshold_pos)
        self.threshold_neg = np.full((height, width), cfg.contrast_threshold_neg)
        self.event_counter = np.zeros((height, width), dtype=np.int64)
        self.frame_index = 0
        self.initialized = False

    @property
    def shape(self):
        return self.reference.shape


def _pixel_events(prev, cur, t0, t1, cfg, state, y, x, out):
    ref = state.reference[y, x]
    last_t = state.last_event_time[y, x]
    th_p = state.threshold_pos[y, x]
    th_n = state.threshold_neg[y, x]
    counter = state.event_counter[y, x]
    slope = (cur - prev) / (t1 - t0)
    if slope == 0.0:
        return
    t_now = t0
    while True:
        if slope > 0:
            target = ref + th_p
            pol = 1
        else:
            target = ref - th_n
            pol = -1
        t_cross = t0 + (target - prev) / slope
        if t_cross <= t_now or t_cross > t1:
            break
        if t_cross - last_t > cfg.refractory_period:
            out.append(Event(x=x, y=y, t=t_cross, polarity=pol))
            last_t = t_cross
            ref = target
            counter += 1
            if pol > 0:
                th_p = sample_threshold(cfg, state.frame_index, y, x, counter, 1)
            else:
                th_n = sample_threshold(cfg, state.frame_index, y, x, counter, -1)
            t_now = t_cross
        else:
            # suppressed: the crossing is consumed, the reference stays
            break
    state.reference[y, x] = ref
    state.last_event_time[y, x] = last_t
    state.threshold_pos[y, x] = th_p
    state.threshold_neg[y, x] = th_n
    state.event_counter[y, x] = counter


def generate_events(prev_logL, cur_logL, t0, t1, cfg: EbcConfig, state: PixelStateGrid):
    """Events for one inter-frame interval; returns (sorted events, state)."""
    prev_logL = np.asarray(prev_logL, dtype=np.float64)
    cur_logL = np.asarray(cur_logL, dtype=np.float64)
    if prev_logL.shape != cur_logL.shape or prev_logL.shape != state.shape:
        raise ValueError("log-luminance grids and pixel state must share dimensions")
    if t1 <= t0:
        raise ValueError("t1 must be greater than t0")

    events = []
    h, w = state.shape
    changed = np.argwhere(prev_logL != cur_logL)
    for y, x in changed:
        _pixel_events(
            float(prev_logL[y, x]), float(cur_logL[y, x]), t0, t1, cfg, state, int(y), int(x), events
        )
    state.frame_index += 1
    events.sort(key=lambda e: (e.t, e.y, e.x, e.polarity))
    return events, state


class EventCamera:
    """Stateful frame-to-frame wrapper used by the scenario runner."""

    def __init__(self, width, height, cfg: EbcConfig):
        self.cfg = cfg
        self.state = PixelStateGrid(width, height, cfg)
        self._prev_logL = None
        self._prev_t = None

    def process_frame(self, luminance, t):
        """Feed one luminance frame; returns the events since the previous frame."""
        logL = log_luminance(luminance, self.cfg.log_eps)
        if self._prev_logL is None:
            # first frame defines the references and yields no events
            self.state.reference = logL.copy()
            self._prev_logL = logL
            self._prev_t = t
            return []
        if t <= self._prev_t:
            raise ValueError("frame timestamps must be increasing")
        events, _ = generate_events(self._prev_logL, logL, self._prev_t, t, self.cfg, self.state)
        self._prev_logL = logL
        self._prev_t = t
        return events
