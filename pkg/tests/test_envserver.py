import queue
import threading

import numpy as np
import pytest

from marinesim.envserver import EnvClient, EnvSimulation, serve
from marinesim.scenario import parse_config


def env_scenario(**overrides):
    data = {
        "seed": 5,
        "duration": 0.1,
        "base_dt": 0.01,
        "scene": {"instances": []},
        "thrusters": [
            {"name": "fwd",
             "rotor": {"type": "zero_order"},
             "generation": {"type": "quadratic", "ct": 0.1},
             "mount": {"rpy_deg": [0, 0, 0]}},
            {"name": "lat",
             "rotor": {"type": "zero_order"},
             "generation": {"type": "quadratic", "ct": 0.1},
             "mount": {"rpy_deg": [0, 0, 90]}},
        ],
        "environment": {
            "mass": 2.0,
            "control_period_ticks": 1,
            "thrusters": ["fwd", "lat"],
            "observe": [],
            "initial_position": [0, 0, 0],
        },
    }
    data.update(overrides)
    cfg, diags = parse_config(data)
    assert diags == []
    return cfg


class TestEnvSimulation:
    def test_reset_returns_initial_observation(self):
        sim = EnvSimulation(env_scenario())
        obs = sim.reset(123)
        assert obs.shape == (13,)
        assert np.allclose(obs[:3], 0)          # position
        assert np.allclose(obs[3:7], [0, 0, 0, 1])  # identity quaternion

    def test_step_applies_thrust_along_mounts(self):
        sim = EnvSimulation(env_scenario())
        obs, done = sim.step([10.0, 0.0])
        # quadratic generator: T = 0.1 * 100 = 10 N along +x; a = 5 m/s^2
        assert obs[7] == pytest.approx(5.0 * 0.01)   # vx after one tick
        assert obs[0] == pytest.approx(obs[7] * 0.01)
        assert not done
        obs, _ = sim.step([0.0, 10.0])
        assert obs[8] > 0  # second thruster mounted along +y

    def test_done_at_duration(self):
        sim = EnvSimulation(env_scenario())
        done = False
        steps = 0
        while not done:
            _, done = sim.step([0.0, 0.0])
            steps += 1
        assert steps == 10  # duration 0.1 at dt 0.01

    def test_bad_action_length_leaves_state_unchanged(self):
        sim = EnvSimulation(env_scenario())
        sim.step([1.0, 2.0])
        before = sim.observe().copy()
        with pytest.raises(ValueError):
            sim.step([1.0])
        with pytest.raises(ValueError):
            sim.step([np.inf, 0.0])
        assert np.array_equal(sim.observe(), before)

    def test_reset_determinism(self):
        sim = EnvSimulation(env_scenario())
        sim.reset(42)
        a = [sim.step([3.0, -1.0])[0].copy() for _ in range(5)]
        sim.reset(42)
        b = [sim.step([3.0, -1.0])[0].copy() for _ in range(5)]
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_control_period_ticks(self):
        cfg = env_scenario()
        cfg.environment.control_period_ticks = 5
        sim = EnvSimulation(cfg)
        _, done = sim.step([0.0, 0.0])
        assert sim.t == pytest.approx(0.05)
        _, done = sim.step([0.0, 0.0])
        assert done

    def test_requires_environment_section(self):
        data_cfg = env_scenario()
        data_cfg.environment = None
        with pytest.raises(ValueError):
            EnvSimulation(data_cfg)

    def test_obs_spec_layout(self):
        spec = EnvSimulation(env_scenario()).obs_spec()
        assert spec["action_size"] == 2
        sizes = [f["size"] for f in spec["fields"]]
        assert sizes == [3, 4, 3, 3]
        assert spec["dtype"] == "float64"

    def test_sonar_observation_appended(self):
        cfg_data_sensors = [
            {"name": "fls", "type": "sonar", "rate": 100.0,
             "config": {"num_beams": 4, "num_bins": 8, "range_min": 0.5,
                        "range_max": 8.5, "noise_stddev": 0.0}}]
        cfg = env_scenario(
            scene={"instances": [
                {"name": "wall",
                 "mesh": {"type": "quad", "width": 30, "height": 30,
                          "center": [3, 0, 0], "normal": [-1, 0, 0]},
                 "material": {"acoustic_reflectivity": 0.9}}]},
            sensors=cfg_data_sensors,
            environment={
                "mass": 2.0, "thrusters": ["fwd", "lat"],
                "observe": ["fls"], "initial_position": [0, 0, 0],
            })
        sim = EnvSimulation(cfg)
        obs = sim.observe()
        assert obs.shape == (13 + 4 * 8,)
        assert obs[13:].max() > 0  # the wall reflects into some bin


class TestSocketProtocol:
    @pytest.fixture
    def live_server(self):
        cfg = env_scenario()
        ports = queue.Queue()

        def announce(line, flush=True):
            ports.put(int(line.split()[2]))

        thread = threading.Thread(target=serve, args=(cfg, "127.0.0.1", 0),
                                  kwargs={"announce": announce}, daemon=True)
        thread.start()
        port = ports.get(timeout=10)
        client = EnvClient("127.0.0.1", port)
        yield client
        try:
            client.close()
        except OSError:
            pass
        thread.join(timeout=10)
        assert not thread.is_alive()

    def test_reset_step_roundtrip(self, live_server):
        c = live_server
        obs = c.reset(7)
        assert obs.shape == (13,)
        obs2, done = c.step([10.0, 0.0])
        assert not done
        assert obs2[7] > 0

    def test_wire_determinism(self, live_server):
        c = live_server
        c.reset(99)
        a, _ = c.step([5.0, 5.0])
        c.reset(99)
        b, _ = c.step([5.0, 5.0])
        assert np.array_equal(a, b)

    def test_error_response_keeps_session_alive(self, live_server):
        c = live_server
        c.reset(1)
        with pytest.raises(RuntimeError):
            c.step([1.0])  # wrong action length
        obs, _ = c.step([1.0, 1.0])  # still usable
        assert obs.shape == (13,)

    def test_obs_spec_over_wire(self, live_server):
        spec = live_server.obs_spec()
        assert spec["action_size"] == 2
        assert spec["byte_order"] == "little"

    def test_done_flag_over_wire(self, live_server):
        c = live_server
        c.reset(0)
        done = False
        for _ in range(10):
            _, done = c.step([0.0, 0.0])
        assert done
