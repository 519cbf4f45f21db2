"""Scenario execution: fixed-step time loop, sensor scheduling and output writing."""

from __future__ import annotations

import csv
import hashlib
import json
import time
from pathlib import Path

import numpy as np

from . import comms as comms_mod
from .annotation import bounding_boxes, point_cloud, segmentation, write_point_cloud, write_yolo_labels
from .events import EventCamera
from .flow import render_flow
from .geometry import RigidBodyState
from .imageio import (
    sonar_fan_image,
    write_events_binary,
    write_events_text,
    write_gray_png,
    write_id_png,
    write_raw_float_grid,
    write_rgb_png,
)
from .scenario import ScenarioConfig, ebc_config, sensor_intrinsics, sonar_config
from .scene import render_buffers
from .sonar import sonar_scan
from .tether import Attachment, tether_step
from .thermal import ThermalConfig, render_thermal
from .thrusters import Thruster


def config_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(canon).hexdigest()


def sensor_tick_interval(rate, base_dt):
    return int(round(1.0 / (rate * base_dt)))


class _SensorRuntime:
    """Per-sensor mutable state and output bookkeeping during a run."""

    def __init__(self, decl, index, cfg: ScenarioConfig, out_dir: Path):
        self.decl = decl
        self.interval = sensor_tick_interval(decl.rate, cfg.base_dt)
        self.seed = (cfg.seed << 8) ^ index
        self.frame = 0
        self.files = []
        self.dir = out_dir / decl.name
        self.dir.mkdir(parents=True, exist_ok=True)
        self.intr = sensor_intrinsics(decl.config)
        if decl.type == "sonar":
            self.sonar_cfg = sonar_config(decl.config, self.seed)
            self.prev_image = None
        elif decl.type == "event":
            self.ebc = EventCamera(self.intr.width, self.intr.height, ebc_config(decl.config, self.seed))
            self.all_events = []
        elif decl.type == "thermal":
            c = decl.config
            self.thermal_cfg = ThermalConfig(
                intrinsics=self.intr,
                temp_min=c.get("temp_min", -10.0),
                temp_max=c.get("temp_max", 60.0),
                noise_stddev=c.get("noise_stddev", 0.0),
                noise_seed=self.seed,
                colormap=c.get("colormap", "hot"),
            )

    def world_pose(self, body_states):
        if self.decl.mount_body is not None:
            return body_states[self.decl.mount_body].pose.compose(self.decl.mount_pose)
        return self.decl.mount_pose

    def world_state(self, body_states) -> RigidBodyState:
        if self.decl.mount_body is None:
            return RigidBodyState.at_rest(self.decl.mount_pose)
        body = body_states[self.decl.mount_body]
        pose = body.pose.compose(self.decl.mount_pose)
        r = pose.position - body.pose.position
        return RigidBodyState(
            pose=pose,
            linear_velocity=body.linear_velocity + np.cross(body.angular_velocity, r),
            angular_velocity=body.angular_velocity,
        )

    def emit(self, path: Path):
        self.files.append(str(path.relative_to(self.dir.parent)))


def _fire_sensor(rt: _SensorRuntime, cfg: ScenarioConfig, snap, body_states, t):
    d = rt.decl
    stem = rt.dir / f"{rt.frame:06d}"
    if d.type == "camera":
        bufs = render_buffers(snap, rt.world_pose(body_states), rt.intr, cfg.lighting)
        write_raw_float_grid(stem.with_name(stem.name + "_depth.raw"), bufs.depth)
        write_raw_float_grid(stem.with_name(stem.name + "_range.raw"), bufs.range)
        write_id_png(stem.with_name(stem.name + "_instance.png"), bufs.instance_id)
        write_id_png(stem.with_name(stem.name + "_class.png"), bufs.class_id)
        write_gray_png(stem.with_name(stem.name + "_luminance.png"), bufs.luminance)
        for suffix in ("_depth.raw", "_range.raw", "_instance.png", "_class.png", "_luminance.png"):
            rt.emit(stem.with_name(stem.name + suffix))
        if d.config.get("annotations"):
            boxes = bounding_boxes(bufs)
            write_yolo_labels(stem.with_name(stem.name + "_labels.txt"), boxes)
            masks = segmentation(bufs)
            write_id_png(stem.with_name(stem.name + "_semantic.png"), masks.semantic)
            cloud = point_cloud(bufs, rt.intr)
            write_point_cloud(stem.with_name(stem.name + "_cloud.xyz"), cloud)
            for suffix in ("_labels.txt", "_semantic.png", "_cloud.xyz"):
                rt.emit(stem.with_name(stem.name + suffix))
    elif d.type == "sonar":
        img = sonar_scan(snap, rt.world_pose(body_states), rt.sonar_cfg,
                         prev=rt.prev_image, frame_index=rt.frame, timestamp=t)
        rt.prev_image = img
        # beam = column, bin = row, bin 0 at bottom
        write_gray_png(stem.with_suffix(".png"), np.flipud(img.intensities.T))
        write_raw_float_grid(stem.with_suffix(".raw"), img.intensities)
        rt.emit(stem.with_suffix(".png"))
        rt.emit(stem.with_suffix(".raw"))
        if d.config.get("export_fan"):
            fan = sonar_fan_image(img.intensities, rt.sonar_cfg.horizontal_fov)
            write_gray_png(stem.with_name(stem.name + "_fan.png"), fan)
            rt.emit(stem.with_name(stem.name + "_fan.png"))
    elif d.type == "event":
        bufs = render_buffers(snap, rt.world_pose(body_states), rt.intr, cfg.lighting)
        evs = rt.ebc.process_frame(bufs.luminance, t)
        write_events_text(stem.with_suffix(".txt"), evs)
        rt.emit(stem.with_suffix(".txt"))
        rt.all_events.extend(evs)
    elif d.type == "thermal":
        float_img, display = render_thermal(snap, rt.world_pose(body_states),
                                            rt.thermal_cfg, cfg.thermal_env, rt.frame)
        write_raw_float_grid(stem.with_name(stem.name + "_temp.raw"), float_img)
        write_rgb_png(stem.with_name(stem.name + "_display.png"), display)
        rt.emit(stem.with_name(stem.name + "_temp.raw"))
        rt.emit(stem.with_name(stem.name + "_display.png"))
    elif d.type == "flow":
        states = {inst.name: body_states[inst.name] for inst in cfg.scene.instances}
        field = render_flow(snap, rt.world_state(body_states), rt.intr, states)
        write_raw_float_grid(stem.with_suffix(".raw"), field.flow)
        rt.emit(stem.with_suffix(".raw"))
    rt.frame += 1


def run_scenario(cfg: ScenarioConfig, out_dir) -> dict:
    """Execute a validated scenario and write all outputs plus a manifest."""
    t_start = time.monotonic()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    n_ticks = int(round(cfg.duration / cfg.base_dt))
    sensors = [_SensorRuntime(s, i, cfg, out_dir) for i, s in enumerate(cfg.sensors)]

    thrusters = []
    thruster_rows = {}
    for td in cfg.thrusters:
        th = Thruster(td.rotor, td.generation, td.name)
        thrusters.append((td, th))
        thruster_rows[td.name] = [("t", "input", "omega", "thrust", "torque")]

    tether_states = [t.initial_state for t in cfg.tethers]
    tether_rows = {t.name: [("t", "sphere_index", "x", "y", "z", "vx", "vy", "vz")]
                   for t in cfg.tethers}

    scheduler = comms_mod.ChannelScheduler(cfg.comms.drop_probability, cfg.seed)
    pending_messages = sorted(cfg.comms.messages, key=lambda m: (m["emit_time"],))
    msg_cursor = 0
    comm_log = [("emit_time", "kind", "src", "dst", "outcome", "receive_time", "quality")]

    def node_pose(entry, body_states):
        node, body, local = entry
        if body is not None:
            return body_states[body].pose.compose(local)
        return local

    for tick in range(n_ticks + 1):
        t = tick * cfg.base_dt
        body_states = {inst.name: inst.state_at(t) for inst in cfg.scene.instances}
        snap = None

        def snapshot():
            nonlocal snap
            if snap is None:
                snap = cfg.scene.snapshot(t)
            return snap

        # dynamics advance over the step ending at t
        if tick > 0:
            for td, th in thrusters:
                u = td.input_at(t)
                thrust, torque = th.step(u, cfg.base_dt)
                thruster_rows[td.name].append(
                    (f"{t:.6f}", f"{u:.6f}", f"{th.state.omega:.9f}",
                     f"{thrust:.9f}", f"{torque:.9f}"))
            for i, td in enumerate(cfg.tethers):
                atts = []
                for a in td.attachments:
                    if "body" in a:
                        bs = body_states[a["body"]]
                        anchor = bs.pose.transform_point(a.get("offset", (0, 0, 0)))
                        vel = bs.linear_velocity + np.cross(
                            bs.angular_velocity, anchor - bs.pose.position)
                        atts.append(Attachment(a["endpoint"], point=anchor, velocity=vel))
                    else:
                        atts.append(Attachment(a["endpoint"], point=np.asarray(a["point"], dtype=float)))
                tether_states[i], _ = tether_step(
                    tether_states[i], td.config, atts, dt=cfg.base_dt)
            for st_idx, td in enumerate(cfg.tethers):
                st = tether_states[st_idx]
                for k in range(td.config.n_spheres):
                    p, v = st.positions[k], st.velocities[k]
                    tether_rows[td.name].append(
                        (f"{t:.6f}", k, f"{p[0]:.9f}", f"{p[1]:.9f}", f"{p[2]:.9f}",
                         f"{v[0]:.9f}", f"{v[1]:.9f}", f"{v[2]:.9f}"))

        # emit any messages due at this tick; geometry evaluated now (emit time)
        while msg_cursor < len(pending_messages) and pending_messages[msg_cursor]["emit_time"] <= t + 1e-12:
            m = pending_messages[msg_cursor]
            msg_cursor += 1
            if m["kind"] == "acoustic":
                tx = cfg.comms.acoustic_nodes[m["src"]]
                rx = cfg.comms.acoustic_nodes[m["dst"]]
                msg = comms_mod.AcousticMessage(m["src"], m["dst"], m["payload"], m["emit_time"])
                delivery = comms_mod.propagate_acoustic(
                    snapshot(), tx[0], node_pose(tx, body_states),
                    rx[0], node_pose(rx, body_states), msg, cfg.comms.sound_speed)
                scheduler.submit(delivery)
                rt_str = f"{delivery.receive_time:.9f}" if delivery.receive_time is not None else ""
                comm_log.append((f"{m['emit_time']:.6f}", "acoustic", m["src"], m["dst"],
                                 delivery.outcome, rt_str, ""))
            else:
                tx = cfg.comms.vlc_nodes[m["src"]]
                rx = cfg.comms.vlc_nodes[m["dst"]]
                q = comms_mod.vlc_link(snapshot(), tx[0], node_pose(tx, body_states),
                                       rx[0], node_pose(rx, body_states))
                ok = q >= min(tx[0].link_threshold, rx[0].link_threshold)
                comm_log.append((f"{m['emit_time']:.6f}", "vlc", m["src"], m["dst"],
                                 "delivered" if ok else "below_threshold", "", f"{q:.6f}"))
        scheduler.due(t)

        # sensors fire on their tick multiples, in declaration order
        for rt in sensors:
            if tick % rt.interval == 0:
                _fire_sensor(rt, cfg, snapshot(), body_states, t)

    # combined event stream binaries
    for rt in sensors:
        if rt.decl.type == "event":
            path = rt.dir / "events.bin"
            write_events_binary(path, rt.all_events)
            rt.emit(path)

    extra_files = []
    for name, rows in thruster_rows.items():
        path = out_dir / name / "timeseries.csv"
        path.parent.mkdir(exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(rows)
        extra_files.append(str(path.relative_to(out_dir)))
    for name, rows in tether_rows.items():
        path = out_dir / name / "state.csv"
        path.parent.mkdir(exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(rows)
        extra_files.append(str(path.relative_to(out_dir)))
    if len(comm_log) > 1:
        path = out_dir / "comms_log.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(comm_log)
        extra_files.append(str(path.relative_to(out_dir)))

    manifest = {
        "config_hash": config_hash(cfg.raw),
        "seed": cfg.seed,
        "frame_counts": {rt.decl.name: rt.frame for rt in sensors},
        "outputs": {rt.decl.name: rt.files for rt in sensors},
        "extra_outputs": extra_files,
        "wall_clock_seconds": time.monotonic() - t_start,
    }
    for rt in sensors:
        for f in rt.files:
            if not (out_dir / f).exists():
                raise RuntimeError(f"manifest lists missing file {f}")
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
