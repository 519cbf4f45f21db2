"""Declarative scenario files: parsing, validation and construction of sim objects."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from . import comms as comms_mod
from . import thrusters as thr
from .events import EbcConfig
from .geometry import CameraIntrinsics, KinematicTrajectory, Pose
from .mesh import Material, ThermalMode, TriangleMesh, load_obj, make_box, make_quad, make_sphere
from .scene import LightingEnvironment, Scene, SceneInstance
from .sonar import SonarConfig, gemini_1200ik_preset
from .tether import TetherConfig, TetherState
from .thermal import ThermalConfig, ThermalEnvironment

SENSOR_TYPES = ("camera", "sonar", "event", "thermal", "flow")


@dataclass
class Diagnostic:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


class ScenarioError(ValueError):
    """Raised when a scenario file fails validation."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass
class SensorDecl:
    name: str
    type: str
    rate: float
    mount_body: str
    mount_pose: Pose
    config: dict


@dataclass
class ThrusterDecl:
    name: str
    rotor: object
    generation: object
    input_schedule: list  # [(t, u), ...] time-sorted
    mount_pose: Pose

    def input_at(self, t):
        u = self.input_schedule[0][1]
        for ti, ui in self.input_schedule:
            if ti <= t + 1e-12:
                u = ui
            else:
                break
        return u


@dataclass
class TetherDecl:
    name: str
    config: TetherConfig
    initial_state: TetherState
    attachments: list  # dicts: {endpoint, point} or {endpoint, body, offset}


@dataclass
class CommsDecl:
    sound_speed: float
    drop_probability: float
    acoustic_nodes: dict   # id -> (AcousticNode, body, local Pose)
    vlc_nodes: dict        # id -> (VlcNode, body, local Pose)
    messages: list         # [{emit_time, kind, src, dst, payload}]


@dataclass
class EnvironmentDecl:
    mass: float
    control_period_ticks: int
    thruster_names: list
    observe_sensors: list
    initial_position: np.ndarray


@dataclass
class ScenarioConfig:
    seed: int
    duration: float
    base_dt: float
    scene: Scene
    lighting: LightingEnvironment
    thermal_env: ThermalEnvironment
    sensors: list
    thrusters: list
    tethers: list
    comms: CommsDecl
    environment: EnvironmentDecl
    outputs: dict
    raw: dict


def _pose_from(d, diags, path):
    pos = d.get("position", [0.0, 0.0, 0.0])
    if "orientation" in d:
        quat = d["orientation"]
    elif "rpy_deg" in d:
        quat = Rotation.from_euler("xyz", d["rpy_deg"], degrees=True).as_quat()
    else:
        quat = [0.0, 0.0, 0.0, 1.0]
    try:
        return Pose(np.asarray(pos, dtype=float), np.asarray(quat, dtype=float))
    except (ValueError, TypeError) as e:
        diags.append(Diagnostic(path, str(e)))
        return Pose.identity()


def _mesh_from(d, diags, path):
    kind = d.get("type")
    try:
        if kind == "box":
            return make_box(d.get("size", [1, 1, 1]), d.get("center", [0, 0, 0]))
        if kind == "sphere":
            return make_sphere(d.get("radius", 1.0), d.get("center", [0, 0, 0]),
                               d.get("subdivisions", 16))
        if kind == "quad":
            return make_quad(d.get("width", 1.0), d.get("height", 1.0),
                             d.get("center", [0, 0, 0]), d.get("normal", [0, 0, 1]))
        if kind == "obj":
            return load_obj(d["path"])
    except (OSError, KeyError, ValueError) as e:
        diags.append(Diagnostic(path, f"cannot build mesh: {e}"))
        return None
    diags.append(Diagnostic(path + ".type", f"unknown mesh type {kind!r}"))
    return None


def _material_from(d, diags, path):
    th = d.get("thermal", {})
    mode = th.get("mode", "air")
    try:
        if mode == "constant":
            thermal = ThermalMode("constant", constant_celsius=float(th.get("value", 20.0)))
        elif mode == "map":
            thermal = ThermalMode("map", temperature_map=np.asarray(th["grid"], dtype=float))
        else:
            thermal = ThermalMode("air")
        return Material(
            albedo=d.get("albedo", 0.8),
            roughness=d.get("roughness", 0.5),
            acoustic_reflectivity=d.get("acoustic_reflectivity", 0.8),
            thermal=thermal,
            class_id=d.get("class_id", 1),
        )
    except (ValueError, KeyError) as e:
        diags.append(Diagnostic(path, str(e)))
        return Material()


def _trajectory_from(d, diags, path):
    if d is None:
        return None
    try:
        times = [w["t"] for w in d["waypoints"]]
        poses = tuple(_pose_from(w, diags, f"{path}.waypoints") for w in d["waypoints"])
        return KinematicTrajectory(times, poses, d.get("interpolation", "linear"))
    except (KeyError, ValueError, TypeError) as e:
        diags.append(Diagnostic(path, f"bad trajectory: {e}"))
        return None


def _rotor_from(d, diags, path):
    kind = d.get("type")
    try:
        if kind == "zero_order":
            return thr.ZeroOrder()
        if kind == "first_order":
            return thr.FirstOrder(tau=d["tau"])
        if kind == "yoerger":
            return thr.Yoerger(alpha=d["alpha"], beta=d["beta"])
        if kind == "bessa":
            return thr.Bessa(inertia=d["inertia"], k_linear=d["k_linear"],
                             k_quad=d["k_quad"], k_torque=d["k_torque"],
                             resistance=d["resistance"])
        if kind == "mechanical_pi":
            return thr.MechanicalPI(inertia=d["inertia"], kp=d["kp"], ki=d["ki"],
                                    integral_limit=d["integral_limit"])
    except (KeyError, ValueError) as e:
        diags.append(Diagnostic(path, f"bad rotor dynamics: {e}"))
        return None
    diags.append(Diagnostic(path + ".type", f"unknown rotor dynamics {kind!r}"))
    return None


def _generation_from(d, diags, path):
    kind = d.get("type")
    try:
        if kind == "quadratic":
            return thr.Quadratic(ct=d["ct"])
        if kind == "deadband":
            return thr.Deadband(ct_fwd=d["ct_fwd"], ct_rev=d["ct_rev"],
                                deadband_lo=d["deadband_lo"], deadband_hi=d["deadband_hi"])
        if kind == "linear_interp":
            if "csv" in d:
                return thr.LinearInterp.from_csv(d["csv"])
            return thr.LinearInterp(tuple((r[0], r[1]) for r in d["table"]))
        if kind == "fluid_dynamics":
            return thr.FluidDynamics(rho=d.get("rho", 1025.0), diameter=d["diameter"],
                                     kt0=d["kt0"], kt_j=d.get("kt_j", 0.0),
                                     kq=d.get("kq", 0.0), kt0_rev=d.get("kt0_rev"))
    except (KeyError, ValueError, OSError) as e:
        diags.append(Diagnostic(path, f"bad thrust generation: {e}"))
        return None
    diags.append(Diagnostic(path + ".type", f"unknown thrust generation {kind!r}"))
    return None


def sensor_intrinsics(cfg: dict) -> CameraIntrinsics:
    return CameraIntrinsics(
        width=int(cfg.get("width", 64)),
        height=int(cfg.get("height", 64)),
        focal_length=float(cfg.get("focal_length", 64.0)),
        principal_point=cfg.get("principal_point"),
    )


def sonar_config(cfg: dict, seed: int) -> SonarConfig:
    if cfg.get("preset") == "gemini_1200ik":
        base = gemini_1200ik_preset(noise_seed=seed)
        return base
    keys = dict(cfg)
    keys.pop("export_fan", None)
    for ang in ("horizontal_fov_deg", "vertical_fov_deg"):
        if ang in keys:
            keys[ang.replace("_deg", "")] = math.radians(keys.pop(ang))
    keys.setdefault("noise_seed", seed)
    return SonarConfig(**keys)


def ebc_config(cfg: dict, seed: int) -> EbcConfig:
    keys = {k: v for k, v in cfg.items()
            if k not in ("width", "height", "focal_length", "principal_point")}
    keys.setdefault("noise_seed", seed)
    return EbcConfig(**keys)


def parse_config(data: dict):
    """Build a ScenarioConfig from parsed JSON; returns (config, diagnostics)."""
    diags = []

    seed = data.get("seed", 0)
    duration = data.get("duration", 0.0)
    base_dt = data.get("base_dt", 0.01)
    if not isinstance(seed, int):
        diags.append(Diagnostic("seed", "must be an integer"))
        seed = 0
    if not (isinstance(duration, (int, float)) and duration > 0):
        diags.append(Diagnostic("duration", f"must be positive, got {duration}"))
        duration = 1.0
    if not (isinstance(base_dt, (int, float)) and base_dt > 0):
        diags.append(Diagnostic("base_dt", f"must be positive, got {base_dt}"))
        base_dt = 0.01

    scene_d = data.get("scene", {})
    instances = []
    for i, inst_d in enumerate(scene_d.get("instances", [])):
        path = f"scene.instances[{i}]"
        name = inst_d.get("name")
        if not name:
            diags.append(Diagnostic(path + ".name", "instance name required"))
            name = f"instance_{i}"
        mesh = _mesh_from(inst_d.get("mesh", {}), diags, path + ".mesh")
        if mesh is None:
            continue
        material = _material_from(inst_d.get("material", {}), diags, path + ".material")
        traj = _trajectory_from(inst_d.get("trajectory"), diags, path + ".trajectory")
        if traj is None:
            traj = KinematicTrajectory.static(_pose_from(inst_d.get("pose", {}), diags, path + ".pose"))
        instances.append(SceneInstance(name, mesh, material, traj))
    names = [i.name for i in instances]
    if len(set(names)) != len(names):
        diags.append(Diagnostic("scene.instances", "instance names must be unique"))
        instances = list({i.name: i for i in instances}.values())
    scene = Scene(instances, water_z=scene_d.get("water_z"))

    light_d = data.get("lighting", {})
    try:
        lighting = LightingEnvironment(
            sun_direction=np.asarray(light_d.get("sun_direction", [0, 0, 1]), dtype=float),
            ambient=light_d.get("ambient", 0.2),
            sun_occlusion=light_d.get("sun_occlusion", False),
        )
    except ValueError as e:
        diags.append(Diagnostic("lighting", str(e)))
        lighting = LightingEnvironment()

    env_d = data.get("thermal_environment", {})
    try:
        thermal_env = ThermalEnvironment(
            air_temperature=env_d.get("air_temperature", 20.0),
            water_temperature=env_d.get("water_temperature", 15.0),
            solar_irradiance=env_d.get("solar_irradiance", 0.0),
            sun_direction=np.asarray(env_d.get("sun_direction", light_d.get("sun_direction", [0, 0, 1])), dtype=float),
            solar_absorption_gain=env_d.get("solar_absorption_gain", 15.0),
            solar_absorption_gain_water=env_d.get("solar_absorption_gain_water", 2.0),
        )
    except ValueError as e:
        diags.append(Diagnostic("thermal_environment", str(e)))
        thermal_env = ThermalEnvironment()

    sensors = []
    seen_sensor_names = set()
    for i, s in enumerate(data.get("sensors", [])):
        path = f"sensors[{i}]"
        name = s.get("name", f"sensor_{i}")
        if name in seen_sensor_names:
            diags.append(Diagnostic(path + ".name", f"duplicate sensor name {name!r}"))
        seen_sensor_names.add(name)
        stype = s.get("type")
        if stype not in SENSOR_TYPES:
            diags.append(Diagnostic(path + ".type", f"unknown sensor type {stype!r}"))
            continue
        rate = s.get("rate", 10.0)
        if rate <= 0:
            diags.append(Diagnostic(path + ".rate", "rate must be positive"))
            continue
        interval = 1.0 / (rate * base_dt)
        if abs(interval - round(interval)) > 1e-9:
            diags.append(Diagnostic(path + ".rate", "rate does not divide base step"))
        mount = s.get("mount", {})
        body = mount.get("body")
        if body is not None and body not in names:
            diags.append(Diagnostic(path + ".mount.body", f"unknown body {body!r}"))
        sensors.append(SensorDecl(
            name=name, type=stype, rate=rate, mount_body=body,
            mount_pose=_pose_from(mount, diags, path + ".mount"),
            config=s.get("config", {}),
        ))
        # eagerly validate the sensor config
        try:
            sidx = len(sensors) - 1
            eff_seed = (seed << 8) ^ sidx
            if stype == "sonar":
                sonar_config(sensors[-1].config, eff_seed)
            elif stype == "event":
                ebc_config(sensors[-1].config, eff_seed)
            elif stype == "thermal":
                ThermalConfig(intrinsics=sensor_intrinsics(sensors[-1].config),
                              temp_min=sensors[-1].config.get("temp_min", -10.0),
                              temp_max=sensors[-1].config.get("temp_max", 60.0))
            else:
                sensor_intrinsics(sensors[-1].config)
        except (TypeError, ValueError) as e:
            diags.append(Diagnostic(path + ".config", str(e)))

    thrusters = []
    for i, t in enumerate(data.get("thrusters", [])):
        path = f"thrusters[{i}]"
        rotor = _rotor_from(t.get("rotor", {}), diags, path + ".rotor")
        gen = _generation_from(t.get("generation", {}), diags, path + ".generation")
        if rotor is None or gen is None:
            continue
        inp = t.get("input", 0.0)
        if isinstance(inp, (int, float)):
            schedule = [(0.0, float(inp))]
        else:
            schedule = [(float(a), float(b)) for a, b in inp]
        thrusters.append(ThrusterDecl(
            name=t.get("name", f"thruster_{i}"), rotor=rotor, generation=gen,
            input_schedule=schedule,
            mount_pose=_pose_from(t.get("mount", {}), diags, path + ".mount"),
        ))

    tethers = []
    for i, t in enumerate(data.get("tethers", [])):
        path = f"tethers[{i}]"
        try:
            cfg = TetherConfig(
                n_spheres=t["n_spheres"],
                mass_per_sphere=t["mass_per_sphere"],
                sphere_radius=t["sphere_radius"],
                segment_rest_length=t["segment_rest_length"],
                stretch_stiffness=t["stretch_stiffness"],
                joint_damping=t.get("joint_damping", 0.0),
                water_density=t.get("water_density", 0.0),
                drag_coefficient=t.get("drag_coefficient", 0.0),
            )
            if "total_length" in t and abs(t["total_length"] - cfg.total_length) >= 1e-9:
                diags.append(Diagnostic(
                    path + ".total_length",
                    "inconsistent with (n_spheres - 1) * segment_rest_length"))
            state = TetherState.straight_line(cfg, t.get("start", [0, 0, 0]),
                                              t.get("end", [0, 0, -cfg.total_length]))
            atts = t.get("attachments", [])
            for j, a in enumerate(atts):
                if a.get("endpoint") not in ("first", "last"):
                    diags.append(Diagnostic(f"{path}.attachments[{j}].endpoint",
                                            "must be 'first' or 'last'"))
                if "body" in a and a["body"] not in names:
                    diags.append(Diagnostic(f"{path}.attachments[{j}].body",
                                            f"unknown body {a['body']!r}"))
            tethers.append(TetherDecl(t.get("name", f"tether_{i}"), cfg, state, atts))
        except (KeyError, ValueError) as e:
            diags.append(Diagnostic(path, f"bad tether: {e}"))

    comms_d = data.get("comms", {})
    acoustic_nodes, vlc_nodes = {}, {}
    for i, n in enumerate(comms_d.get("acoustic_nodes", [])):
        path = f"comms.acoustic_nodes[{i}]"
        try:
            node = comms_mod.AcousticNode(
                id=n["id"],
                cone_half_angle=math.radians(n.get("cone_half_angle_deg", 180.0)),
                max_range=n.get("max_range", 1000.0),
            )
            acoustic_nodes[node.id] = (node, n.get("body"), _pose_from(n, diags, path))
        except (KeyError, ValueError) as e:
            diags.append(Diagnostic(path, str(e)))
    for i, n in enumerate(comms_d.get("vlc_nodes", [])):
        path = f"comms.vlc_nodes[{i}]"
        try:
            node = comms_mod.VlcNode(
                id=n["id"],
                beam_half_angle=math.radians(n.get("beam_half_angle_deg", 45.0)),
                max_range_clear=n.get("max_range_clear", 50.0),
                turbidity_coeff=n.get("turbidity_coeff", 0.0),
                link_threshold=n.get("link_threshold", 0.1),
            )
            vlc_nodes[node.id] = (node, n.get("body"), _pose_from(n, diags, path))
        except (KeyError, ValueError) as e:
            diags.append(Diagnostic(path, str(e)))
    messages = []
    for i, m in enumerate(comms_d.get("messages", [])):
        path = f"comms.messages[{i}]"
        kind = m.get("kind", "acoustic")
        nodes = acoustic_nodes if kind == "acoustic" else vlc_nodes
        for end in ("src", "dst"):
            if m.get(end) not in nodes:
                diags.append(Diagnostic(f"{path}.{end}", f"unknown {kind} node {m.get(end)!r}"))
        payload = m.get("payload", "")
        messages.append({
            "emit_time": m.get("emit_time", 0.0), "kind": kind,
            "src": m.get("src"), "dst": m.get("dst"),
            "payload": payload.encode() if isinstance(payload, str) else bytes(payload),
        })
    comms = CommsDecl(
        sound_speed=comms_d.get("sound_speed", comms_mod.DEFAULT_SOUND_SPEED),
        drop_probability=comms_d.get("drop_probability", 0.0),
        acoustic_nodes=acoustic_nodes, vlc_nodes=vlc_nodes, messages=messages,
    )

    env = None
    if "environment" in data:
        e = data["environment"]
        path = "environment"
        mass = e.get("mass", 10.0)
        if mass <= 0:
            diags.append(Diagnostic(path + ".mass", "mass must be positive"))
        thr_names = e.get("thrusters", [t.name for t in thrusters])
        known = {t.name for t in thrusters}
        for nm in thr_names:
            if nm not in known:
                diags.append(Diagnostic(path + ".thrusters", f"unknown thruster {nm!r}"))
        obs_sensors = e.get("observe", [])
        known_s = {s.name for s in sensors}
        for nm in obs_sensors:
            if nm not in known_s:
                diags.append(Diagnostic(path + ".observe", f"unknown sensor {nm!r}"))
        env = EnvironmentDecl(
            mass=mass,
            control_period_ticks=int(e.get("control_period_ticks", 1)),
            thruster_names=thr_names,
            observe_sensors=obs_sensors,
            initial_position=np.asarray(e.get("initial_position", [0, 0, 0]), dtype=float),
        )
        if env.control_period_ticks < 1:
            diags.append(Diagnostic(path + ".control_period_ticks", "must be >= 1"))

    cfg = ScenarioConfig(
        seed=seed, duration=float(duration), base_dt=float(base_dt),
        scene=scene, lighting=lighting, thermal_env=thermal_env,
        sensors=sensors, thrusters=thrusters, tethers=tethers,
        comms=comms, environment=env,
        outputs=data.get("outputs", {}), raw=data,
    )
    return cfg, diags


def validate_config(path):
    """Load and validate a scenario file; raises ScenarioError on any violation."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ScenarioError([Diagnostic(str(path), f"cannot read file: {e}")])
    except json.JSONDecodeError as e:
        raise ScenarioError([Diagnostic(str(path), f"invalid JSON: {e}")])
    cfg, diags = parse_config(data)
    if diags:
        raise ScenarioError(diags)
    return cfg
