"""Acoustic modem/USBL propagation and visual-light communication links."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose
from .noise import keyed_normal, keyed_uniform

DEFAULT_SOUND_SPEED = 1500.0  # m/s, conventional seawater value
MAX_PAYLOAD_BYTES = 4096

DELIVERED = "delivered"
BLOCKED_OCCLUSION = "blocked_occlusion"
OUT_OF_RANGE = "out_of_range"
OUTSIDE_CONE = "outside_cone"


@dataclass(frozen=True)
class AcousticNode:
    id: int
    cone_half_angle: float = math.pi  # pi = omnidirectional
    max_range: float = 1000.0

    def __post_init__(self):
        if not 0 < self.cone_half_angle <= math.pi:
            raise ValueError("cone_half_angle must be in (0, pi]")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")


@dataclass(frozen=True)
class AcousticMessage:
    src: int
    dst: int
    payload: bytes
    emit_time: float

    def __post_init__(self):
        if len(self.payload) > MAX_PAYLOAD_BYTES:
            raise ValueError(f"payload exceeds {MAX_PAYLOAD_BYTES} bytes")


@dataclass(frozen=True)
class Delivery:
    outcome: str
    receive_time: float = None
    message: AcousticMessage = None


@dataclass(frozen=True)
class UsblFix:
    range: float
    bearing: float
    elevation: float
    noise_applied: bool


@dataclass(frozen=True)
class VlcNode:
    id: int
    beam_half_angle: float = math.radians(45.0)
    max_range_clear: float = 50.0
    turbidity_coeff: float = 0.0  # 1/m
    link_threshold: float = 0.1

    def __post_init__(self):
        if not 0 < self.beam_half_angle <= math.pi / 2:
            raise ValueError("beam_half_angle must be in (0, pi/2]")
        if self.turbidity_coeff < 0:
            raise ValueError("turbidity_coeff must be non-negative")
        if not 0 < self.link_threshold <= 1:
            raise ValueError("link_threshold must be in (0, 1]")


def _boresight(pose: Pose):
    # transducer boresight along local +x
    return pose.transform_direction(np.array([1.0, 0.0, 0.0]))


def _within_cone(pose: Pose, half_angle, target):
    to_target = np.asarray(target, dtype=np.float64) - pose.position
    d = np.linalg.norm(to_target)
    if d == 0:
        return True
    cos_angle = float(np.dot(_boresight(pose), to_target / d))
    return cos_angle >= math.cos(half_angle) - 1e-12


def propagate_acoustic(snapshot, tx: AcousticNode, tx_pose: Pose,
                       rx: AcousticNode, rx_pose: Pose,
                       msg: AcousticMessage, c=DEFAULT_SOUND_SPEED) -> Delivery:
    """Spherical wavefront propagation with range, cone and occlusion gating.

    Gate precedence: out-of-range, then outside-cone, then occlusion.
    Geometry is evaluated at emit time.
    """
    if c <= 0:
        raise ValueError("sound speed must be positive")
    d = float(np.linalg.norm(rx_pose.position - tx_pose.position))
    if d > min(tx.max_range, rx.max_range):
        return Delivery(OUT_OF_RANGE, message=msg)
    if not (_within_cone(tx_pose, tx.cone_half_angle, rx_pose.position)
            and _within_cone(rx_pose, rx.cone_half_angle, tx_pose.position)):
        return Delivery(OUTSIDE_CONE, message=msg)
    if snapshot is not None and snapshot.occluded(tx_pose.position, rx_pose.position):
        return Delivery(BLOCKED_OCCLUSION, message=msg)
    return Delivery(DELIVERED, receive_time=msg.emit_time + d / c, message=msg)


def usbl_fix(tx_pose: Pose, rx_pose: Pose, range_noise_std=0.0, angle_noise_std=0.0,
             seed=0, query_index=0) -> UsblFix:
    """Range/bearing/elevation of the transmitter in the receiver's frame."""
    rel = rx_pose.inverse_transform_point(tx_pose.position)
    r = float(np.linalg.norm(rel))
    if r == 0:
        raise ValueError("coincident transducer positions")
    bearing = math.atan2(rel[1], rel[0])
    elevation = math.asin(max(-1.0, min(1.0, rel[2] / r)))
    noisy = range_noise_std > 0 or angle_noise_std > 0
    if noisy:
        dr, db, de = keyed_normal((seed, "usbl", query_index), 3)
        r = max(0.0, r + dr * range_noise_std)
        bearing = math.atan2(math.sin(bearing + db * angle_noise_std),
                             math.cos(bearing + db * angle_noise_std))
        elevation = max(-math.pi / 2, min(math.pi / 2, elevation + de * angle_noise_std))
    return UsblFix(r, bearing, elevation, noisy)


def vlc_link(snapshot, tx: VlcNode, tx_pose: Pose, rx: VlcNode, rx_pose: Pose) -> float:
    """Link quality in [0, 1]: Beer-Lambert turbidity times alignment cosines.

    Zero when mutual facing fails, the path is occluded, or out of range.
    """
    to_rx = rx_pose.position - tx_pose.position
    d = float(np.linalg.norm(to_rx))
    if d == 0:
        return 1.0
    if d > min(tx.max_range_clear, rx.max_range_clear):
        return 0.0
    u = to_rx / d
    cos_tx = float(np.dot(_boresight(tx_pose), u))
    cos_rx = float(np.dot(_boresight(rx_pose), -u))
    if cos_tx < math.cos(tx.beam_half_angle) - 1e-12:
        return 0.0
    if cos_rx < math.cos(rx.beam_half_angle) - 1e-12:
        return 0.0
    if snapshot is not None and snapshot.occluded(tx_pose.position, rx_pose.position):
        return 0.0
    k = max(tx.turbidity_coeff, rx.turbidity_coeff)
    return math.exp(-k * d) * cos_tx * cos_rx


class ChannelScheduler:
    """Orders in-flight deliveries; geometry was evaluated at emit time."""

    def __init__(self, drop_probability=0.0, seed=0):
        if not 0.0 <= drop_probability <= 1.0:
            raise ValueError("drop_probability must be in [0, 1]")
        self._heap = []
        self._order = 0
        self._time = -math.inf
        self.drop_probability = drop_probability
        self.seed = seed

    def submit(self, delivery: Delivery):
        """Queue a delivery computed at emit time; non-delivered outcomes are dropped."""
        if delivery.outcome != DELIVERED:
            return
        if self.drop_probability > 0:
            u = keyed_uniform((self.seed, "comms_drop", self._order))
            if u < self.drop_probability:
                self._order += 1
                return
        heapq.heappush(self._heap, (delivery.receive_time, self._order, delivery))
        self._order += 1

    def due(self, current_time):
        """All deliveries with receive_time <= current_time, in order."""
        if current_time < self._time:
            raise ValueError("current_time must be monotone non-decreasing")
        self._time = current_time
        out = []
        while self._heap and self._heap[0][0] <= current_time:
            out.append(heapq.heappop(self._heap)[2])
        return out
