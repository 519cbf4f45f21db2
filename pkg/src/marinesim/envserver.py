"""Step/reset environment over a local socket for reinforcement-learning clients.

Framing: 4-byte little-endian payload length, then payload. Requests start
with an opcode byte (RESET=1, STEP=2, OBS_SPEC=3, CLOSE=4); responses with a
status byte (0 ok, 1 error). Observations are little-endian float64 arrays
laid out exactly as published by OBS_SPEC.
"""

from __future__ import annotations

import json
import socket
import struct

import numpy as np

from .scenario import ScenarioConfig, ebc_config, sensor_intrinsics, sonar_config
from .sonar import sonar_scan
from .thermal import ThermalConfig, render_thermal
from .thrusters import Thruster

OP_RESET = 1
OP_STEP = 2
OP_OBS_SPEC = 3
OP_CLOSE = 4

STATUS_OK = 0
STATUS_ERROR = 1


class EnvSimulation:
    """Free-mass vehicle driven by thruster setpoints, plus optional sensor views."""

    def __init__(self, cfg: ScenarioConfig):
        if cfg.environment is None:
            raise ValueError("scenario has no environment section")
        self.cfg = cfg
        self.env = cfg.environment
        self._thruster_decls = [
            t for t in cfg.thrusters if t.name in self.env.thruster_names
        ]
        self._sensor_decls = [
            (i, s) for i, s in enumerate(cfg.sensors) if s.name in self.env.observe_sensors
        ]
        self.reset(cfg.seed)

    @property
    def action_size(self):
        return len(self._thruster_decls)

    def obs_spec(self):
        fields = [
            {"name": "position", "size": 3},
            {"name": "orientation_quat", "size": 4},
            {"name": "linear_velocity", "size": 3},
            {"name": "angular_velocity", "size": 3},
        ]
        for _, s in self._sensor_decls:
            fields.append({"name": s.name, "size": self._sensor_size(s)})
        return {"fields": fields, "action_size": self.action_size,
                "dtype": "float64", "byte_order": "little"}

    def _sensor_size(self, decl):
        if decl.type == "sonar":
            c = sonar_config(decl.config, 0)
            return c.num_beams * c.num_bins
        intr = sensor_intrinsics(decl.config)
        return intr.width * intr.height

    def reset(self, seed):
        self.seed = int(seed)
        self.t = 0.0
        self.tick = 0
        self.position = self.env.initial_position.astype(float).copy()
        self.velocity = np.zeros(3)
        self.thrusters = [Thruster(t.rotor, t.generation, t.name) for t in self._thruster_decls]
        self.frame = 0
        return self.observe()

    def step(self, actions):
        actions = np.asarray(actions, dtype=float)
        if actions.shape != (self.action_size,):
            raise ValueError(
                f"action length {actions.size} != thruster count {self.action_size}")
        if not np.all(np.isfinite(actions)):
            raise ValueError("actions must be finite")
        dt = self.cfg.base_dt
        for _ in range(self.env.control_period_ticks):
            force = np.zeros(3)
            for decl, th, u in zip(self._thruster_decls, self.thrusters, actions):
                thrust, _ = th.step(float(u), dt)
                force += thrust * decl.mount_pose.transform_direction([1.0, 0.0, 0.0])
            self.velocity += force / self.env.mass * dt
            self.position += self.velocity * dt
            self.tick += 1
            self.t = self.tick * dt
        self.frame += 1
        done = self.t >= self.cfg.duration - 1e-12
        return self.observe(), done

    def observe(self):
        parts = [
            self.position,
            np.array([0.0, 0.0, 0.0, 1.0]),
            self.velocity,
            np.zeros(3),
        ]
        body_states = {
            inst.name: inst.state_at(self.t) for inst in self.cfg.scene.instances
        }
        snap = self.cfg.scene.snapshot(self.t) if self._sensor_decls else None
        for idx, s in self._sensor_decls:
            eff_seed = (self.seed << 8) ^ idx
            pose = s.mount_pose
            if s.mount_body is not None:
                pose = body_states[s.mount_body].pose.compose(pose)
            if s.type == "sonar":
                img = sonar_scan(snap, pose, sonar_config(s.config, eff_seed),
                                 frame_index=self.frame)
                parts.append(img.intensities.ravel())
            elif s.type == "thermal":
                c = s.config
                tc = ThermalConfig(
                    intrinsics=sensor_intrinsics(c),
                    temp_min=c.get("temp_min", -10.0), temp_max=c.get("temp_max", 60.0),
                    noise_stddev=c.get("noise_stddev", 0.0), noise_seed=eff_seed,
                )
                float_img, _ = render_thermal(snap, pose, tc, self.cfg.thermal_env, self.frame)
                parts.append(float_img.ravel())
            else:
                raise ValueError(f"sensor type {s.type!r} not observable")
        return np.concatenate(parts)


# ----------------------------------------------------------------------- wire helpers

def _recv_exact(sock, n):
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed the connection")
        buf += chunk
    return buf


def read_frame(sock):
    (length,) = struct.unpack("<I", _recv_exact(sock, 4))
    return _recv_exact(sock, length)


def write_frame(sock, payload: bytes):
    sock.sendall(struct.pack("<I", len(payload)) + payload)


def serve(cfg: ScenarioConfig, host="127.0.0.1", port=0, announce=print):
    """Run the single-session environment server; blocks until CLOSE."""
    sim = EnvSimulation(cfg)
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as srv:
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind((host, port))
        srv.listen(1)
        bound = srv.getsockname()
        announce(f"LISTENING {bound[0]} {bound[1]}", flush=True)
        closing = False
        while not closing:
            conn, _ = srv.accept()
            with conn:
                while True:
                    try:
                        payload = read_frame(conn)
                    except ConnectionError:
                        break
                    response, closing = _handle(sim, payload)
                    write_frame(conn, response)
                    if closing:
                        break


def _handle(sim: EnvSimulation, payload: bytes):
    try:
        op = payload[0]
        if op == OP_RESET:
            (seed,) = struct.unpack_from("<Q", payload, 1)
            obs = sim.reset(seed)
            return bytes([STATUS_OK]) + obs.astype("<f8").tobytes(), False
        if op == OP_STEP:
            (count,) = struct.unpack_from("<I", payload, 1)
            actions = np.frombuffer(payload, dtype="<f8", count=count, offset=5)
            obs, done = sim.step(actions)
            return bytes([STATUS_OK, 1 if done else 0]) + obs.astype("<f8").tobytes(), False
        if op == OP_OBS_SPEC:
            return bytes([STATUS_OK]) + json.dumps(sim.obs_spec(), sort_keys=True).encode(), False
        if op == OP_CLOSE:
            return bytes([STATUS_OK]), True
        return bytes([STATUS_ERROR]) + f"unknown opcode {op}".encode(), False
    except (ValueError, struct.error) as e:
        return bytes([STATUS_ERROR]) + str(e).encode(), False


class EnvClient:
    """Reference Python client; sends one request at a time (no pipelining)."""

    def __init__(self, host, port, timeout=10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)

    def reset(self, seed):
        write_frame(self.sock, bytes([OP_RESET]) + struct.pack("<Q", seed))
        resp = read_frame(self.sock)
        self._check(resp)
        return np.frombuffer(resp, dtype="<f8", offset=1)

    def step(self, actions):
        actions = np.asarray(actions, dtype="<f8")
        write_frame(self.sock, bytes([OP_STEP]) + struct.pack("<I", actions.size) + actions.tobytes())
        resp = read_frame(self.sock)
        self._check(resp)
        done = bool(resp[1])
        return np.frombuffer(resp, dtype="<f8", offset=2), done

    def obs_spec(self):
        write_frame(self.sock, bytes([OP_OBS_SPEC]))
        resp = read_frame(self.sock)
        self._check(resp)
        return json.loads(resp[1:].decode())

    def close(self):
        try:
            write_frame(self.sock, bytes([OP_CLOSE]))
            read_frame(self.sock)
        finally:
            self.sock.close()

    @staticmethod
    def _check(resp):
        if resp[0] != STATUS_OK:
            raise RuntimeError(resp[1:].decode())
