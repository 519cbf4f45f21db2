import math

import numpy as np
import pytest

from marinesim.tether import (
    Attachment,
    TetherConfig,
    TetherState,
    mechanical_energy,
    tether_step,
    tether_tension,
)


def settle(state, cfg, attachments, gravity=9.81, dt=1e-4, n_steps=200000):
    forces = []
    for _ in range(n_steps):
        state, forces = tether_step(state, cfg, attachments, gravity, dt)
    return state, forces


def hanging_config(**kw):
    base = dict(n_spheres=2, mass_per_sphere=1.0, sphere_radius=0.02,
                segment_rest_length=1.0, stretch_stiffness=10000.0)
    base.update(kw)
    return TetherConfig(**base)


class TestStaticEquilibrium:
    def test_hanging_mass_tension_equals_weight(self):
        # one sphere of 1 kg hanging from a fixed anchor: T = m*g
        cfg = hanging_config()
        state = TetherState.straight_line(cfg, (0, 0, 1.0), (0, 0, 0.0))
        anchor = Attachment("first", point=np.array([0.0, 0.0, 1.0]))
        state, forces = settle(state, cfg, [anchor], n_steps=100000)
        assert tether_tension(state, cfg, 0) == pytest.approx(9.81, abs=1e-3)
        # static extension: delta = m*g/k
        length = np.linalg.norm(state.positions[1] - state.positions[0])
        assert length - 1.0 == pytest.approx(9.81 / 10000.0, abs=1e-6)
        # anchor reaction carries the anchored sphere plus the hanging one
        assert forces[0][2] == pytest.approx(2 * 9.81, abs=1e-2)

    def test_chain_tension_grows_toward_anchor(self):
        cfg = hanging_config(n_spheres=5, segment_rest_length=0.5)
        state = TetherState.straight_line(cfg, (0, 0, 2.0), (0, 0, 0.0))
        anchor = Attachment("first", point=np.array([0.0, 0.0, 2.0]))
        state, _ = settle(state, cfg, [anchor], n_steps=150000)
        tensions = [tether_tension(state, cfg, i) for i in range(4)]
        # top segment carries 4 masses, bottom carries 1
        for i, n_below in enumerate((4, 3, 2, 1)):
            assert tensions[i] == pytest.approx(n_below * 9.81, abs=5e-2)

    def test_neutral_buoyancy_stays_put(self):
        # sphere density matched to water: gravity cancels below z=0
        radius = 0.05
        volume = 4.0 / 3.0 * math.pi * radius**3
        rho = 1000.0
        cfg = hanging_config(mass_per_sphere=rho * volume, sphere_radius=radius,
                             water_density=rho)
        state = TetherState.straight_line(cfg, (0, 0, -1.0), (0, 0, -2.0))
        initial = state.positions.copy()
        state, _ = settle(state, cfg, [], n_steps=1000)
        assert np.allclose(state.positions, initial, atol=1e-9)


class TestDynamics:
    def test_free_fall_without_attachments(self):
        cfg = hanging_config()
        state = TetherState.straight_line(cfg, (0, 0, 10.0), (0, 0, 9.0))
        dt, n = 1e-3, 100
        for _ in range(n):
            state, _ = tether_step(state, cfg, (), 9.81, dt)
        # semi-implicit Euler free fall: z drop = g*dt^2*n(n+1)/2
        drop = 9.81 * dt * dt * n * (n + 1) / 2.0
        assert state.positions[0, 2] == pytest.approx(10.0 - drop, abs=1e-9)
        assert state.velocities[0, 2] == pytest.approx(-9.81 * dt * n, abs=1e-12)

    def test_drag_limits_terminal_speed(self):
        cfg = hanging_config(mass_per_sphere=10.0, sphere_radius=0.05,
                             water_density=1000.0, drag_coefficient=1.0)
        state = TetherState.straight_line(cfg, (0, 0, -5.0), (0, 0, -6.0))
        for _ in range(200000):
            state, _ = tether_step(state, cfg, (), 9.81, 1e-4)
        # oracle: 0.5*rho*cd*A*v^2 = m*g - rho*V*g at terminal velocity
        area = math.pi * 0.05**2
        net_weight = 10.0 * 9.81 - 1000.0 * cfg.sphere_volume * 9.81
        v_term = math.sqrt(net_weight / (0.5 * 1000.0 * 1.0 * area))
        assert -state.velocities[0, 2] == pytest.approx(v_term, rel=1e-3)

    def test_moving_attachment_drags_endpoint(self):
        cfg = hanging_config()
        state = TetherState.straight_line(cfg, (0, 0, 0.0), (1.0, 0, 0.0))
        att = Attachment("first", velocity=np.array([0.5, 0.0, 0.0]))
        for _ in range(100):
            state, _ = tether_step(state, cfg, [att], 0.0, 1e-3)
        assert state.positions[0, 0] == pytest.approx(0.5 * 0.1, abs=1e-12)
        assert np.allclose(state.velocities[0], [0.5, 0, 0])

    def test_joint_damping_settles_transverse_oscillation(self):
        cfg = hanging_config(n_spheres=5, segment_rest_length=0.5,
                             stretch_stiffness=2000.0, joint_damping=5.0)
        cfg_no = hanging_config(n_spheres=5, segment_rest_length=0.5,
                                stretch_stiffness=2000.0, joint_damping=0.0)
        state0 = TetherState.straight_line(cfg, (0, 0, 0), (2.0, 0, 0))
        state0.positions[2, 1] += 0.2  # lateral kick in the middle
        both = Attachment("first", point=np.zeros(3)), Attachment(
            "last", point=np.array([2.0, 0, 0]))

        def energy_after(cfg_used):
            s = TetherState(state0.positions.copy(), state0.velocities.copy())
            for _ in range(20000):
                s, _ = tether_step(s, cfg_used, both, 0.0, 1e-4)
            return mechanical_energy(s, cfg_used)

        assert energy_after(cfg) < 0.5 * energy_after(cfg_no)

    def test_bending_damping_conserves_momentum(self):
        # the joint-damping forces on a free chain must sum to zero
        cfg = hanging_config(n_spheres=6, segment_rest_length=0.5, joint_damping=3.0)
        rng = np.random.default_rng(0)
        state = TetherState(
            np.cumsum(rng.uniform(0.2, 0.6, (6, 3)), axis=0),
            rng.uniform(-1, 1, (6, 3)),
        )
        from marinesim.tether import _forces
        f_with = _forces(state, cfg, 0.0)
        cfg_no = hanging_config(n_spheres=6, segment_rest_length=0.5, joint_damping=0.0)
        f_without = _forces(state, cfg_no, 0.0)
        bending = f_with - f_without
        assert np.allclose(bending.sum(axis=0), 0, atol=1e-12)

    def test_deterministic(self):
        cfg = hanging_config(n_spheres=4, water_density=1000.0, drag_coefficient=0.5)

        def run():
            s = TetherState.straight_line(cfg, (0, 0, 0), (0, 0, -3.0))
            out = []
            for _ in range(500):
                s, _ = tether_step(s, cfg, [Attachment("first", point=np.zeros(3))])
                out.append(s.positions.copy())
            return np.array(out)

        assert np.array_equal(run(), run())


class TestValidation:
    def test_needs_two_spheres(self):
        with pytest.raises(ValueError):
            hanging_config(n_spheres=1)

    def test_tension_index_bounds(self):
        cfg = hanging_config()
        state = TetherState.straight_line(cfg, (0, 0, 0), (0, 0, -1.0))
        with pytest.raises(IndexError):
            tether_tension(state, cfg, 1)

    def test_bad_endpoint_name(self):
        with pytest.raises(ValueError):
            Attachment("middle")

    def test_total_length(self):
        assert hanging_config(n_spheres=5, segment_rest_length=0.5).total_length == 2.0
