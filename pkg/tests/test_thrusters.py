import math

import numpy as np
import pytest

from marinesim.thrusters import (
    Bessa,
    Deadband,
    FirstOrder,
    FluidDynamics,
    LinearInterp,
    MechanicalPI,
    Quadratic,
    Thruster,
    ThrusterState,
    Yoerger,
    ZeroOrder,
    rotor_step,
    thrust_and_torque,
)


def run_rotor(dyn, u, dt, n_steps, state=None):
    state = state or ThrusterState()
    for _ in range(n_steps):
        state = rotor_step(dyn, state, u, 0.0, dt)
    return state


class TestZeroOrder:
    def test_passthrough(self):
        state = rotor_step(ZeroOrder(), ThrusterState(omega=3.0), 7.5, 0.0, 0.01)
        assert state.omega == 7.5


class TestFirstOrder:
    def test_exponential_response_closed_form(self):
        # oracle: omega(t) = u * (1 - exp(-t/tau))
        tau, u, dt = 0.25, 10.0, 0.001
        state = run_rotor(FirstOrder(tau), u, dt, int(tau / dt))
        assert state.omega == pytest.approx(u * (1 - math.exp(-1.0)), abs=1e-6)

    def test_decay_from_initial_speed(self):
        tau, dt = 0.1, 0.001
        state = run_rotor(FirstOrder(tau), 0.0, dt, 100, ThrusterState(omega=5.0))
        assert state.omega == pytest.approx(5.0 * math.exp(-1.0), abs=1e-6)

    def test_rejects_bad_tau(self):
        with pytest.raises(ValueError):
            FirstOrder(0.0)


class TestYoerger:
    def test_steady_state_speed(self):
        # at equilibrium: beta * omega^2 = torque -> omega = sqrt(torque/beta)
        alpha, beta, torque = 0.2, 0.05, 4.0
        state = run_rotor(Yoerger(alpha, beta), torque, 0.001, 20000)
        assert state.omega == pytest.approx(math.sqrt(torque / beta), abs=1e-3)

    def test_negative_torque_symmetric(self):
        state = run_rotor(Yoerger(0.2, 0.05), -4.0, 0.001, 20000)
        assert state.omega == pytest.approx(-math.sqrt(4.0 / 0.05), abs=1e-3)


class TestBessa:
    def test_steady_state_balances_motor_and_load(self):
        dyn = Bessa(inertia=0.01, k_linear=0.02, k_quad=0.001,
                    k_torque=0.1, resistance=1.0)
        state = run_rotor(dyn, 12.0, 0.001, 20000)
        w = state.omega
        motor = (dyn.k_torque / dyn.resistance) * (12.0 - dyn.k_torque * w)
        load = dyn.k_linear * w + dyn.k_quad * w * abs(w)
        assert motor == pytest.approx(load, abs=1e-6)


class TestMechanicalPI:
    def test_tracks_setpoint(self):
        dyn = MechanicalPI(inertia=0.05, kp=2.0, ki=5.0, integral_limit=10.0)
        state = run_rotor(dyn, 20.0, 0.001, 30000)
        assert state.omega == pytest.approx(20.0, abs=1e-3)

    def test_integral_clamped(self):
        dyn = MechanicalPI(inertia=0.05, kp=2.0, ki=50.0, integral_limit=0.5)
        state = run_rotor(dyn, 100.0, 0.001, 50)
        assert abs(state.pi_integral) <= 0.5

    def test_integral_rejects_sustained_load(self):
        dyn = MechanicalPI(inertia=0.05, kp=2.0, ki=5.0, integral_limit=50.0)
        state = ThrusterState()
        for _ in range(40000):
            state = rotor_step(dyn, state, 10.0, 1.0, 0.001)
        assert state.omega == pytest.approx(10.0, abs=1e-3)


class TestRk4Accuracy:
    def test_fourth_order_convergence(self):
        # halving dt must shrink the error by at least 2^3 (measured factor ~16)
        tau, u, t_end = 0.2, 1.0, 0.2
        exact = u * (1 - math.exp(-t_end / tau))

        def error(dt):
            state = run_rotor(FirstOrder(tau), u, dt, int(round(t_end / dt)))
            return abs(state.omega - exact)

        e1, e2 = error(0.02), error(0.01)
        assert e1 / e2 >= 8.0


class TestGenerators:
    def test_quadratic_symmetric(self):
        assert thrust_and_torque(Quadratic(0.05), 10.0) == (pytest.approx(5.0), 0.0)
        assert thrust_and_torque(Quadratic(0.05), -10.0)[0] == pytest.approx(-5.0)

    def test_deadband_zero_inside(self):
        gen = Deadband(ct_fwd=0.1, ct_rev=0.2, deadband_lo=-2.0, deadband_hi=3.0)
        for w in (-2.0, 0.0, 3.0):
            assert thrust_and_torque(gen, w) == (0.0, 0.0)

    def test_deadband_measured_from_edges(self):
        gen = Deadband(ct_fwd=0.1, ct_rev=0.2, deadband_lo=-2.0, deadband_hi=3.0)
        assert thrust_and_torque(gen, 5.0)[0] == pytest.approx(0.1 * 4.0)
        assert thrust_and_torque(gen, -4.0)[0] == pytest.approx(-0.2 * 4.0)

    def test_deadband_must_bracket_zero(self):
        with pytest.raises(ValueError):
            Deadband(0.1, 0.1, deadband_lo=1.0, deadband_hi=2.0)

    def test_interp_midpoint_and_clamping(self):
        gen = LinearInterp(((0.0, 0.0), (10.0, 40.0)))
        assert thrust_and_torque(gen, 5.0)[0] == pytest.approx(20.0)
        assert thrust_and_torque(gen, -5.0)[0] == 0.0
        assert thrust_and_torque(gen, 50.0)[0] == 40.0

    def test_interp_from_csv(self, tmp_path):
        p = tmp_path / "table.csv"
        p.write_text("omega,thrust\n0,0\n10,40\n")
        gen = LinearInterp.from_csv(p)
        assert thrust_and_torque(gen, 5.0)[0] == pytest.approx(20.0)

    def test_interp_requires_increasing_omega(self):
        with pytest.raises(ValueError):
            LinearInterp(((0.0, 0.0), (0.0, 1.0)))

    def test_fluid_dynamics_static_thrust(self):
        gen = FluidDynamics(rho=1000.0, diameter=0.2, kt0=0.4, kt_j=0.3, kq=0.05)
        omega = 20.0
        n = omega / (2 * math.pi)
        thrust, torque = thrust_and_torque(gen, omega, advance_velocity=0.0)
        assert thrust == pytest.approx(1000.0 * 0.2**4 * 0.4 * n * n)
        assert torque == pytest.approx(1000.0 * 0.2**5 * 0.05 * n * n)

    def test_fluid_dynamics_advance_ratio_reduces_thrust(self):
        gen = FluidDynamics(rho=1000.0, diameter=0.2, kt0=0.4, kt_j=0.3)
        static, _ = thrust_and_torque(gen, 20.0, advance_velocity=0.0)
        moving, _ = thrust_and_torque(gen, 20.0, advance_velocity=0.5)
        n = 20.0 / (2 * math.pi)
        j = 0.5 / (n * 0.2)
        assert moving == pytest.approx(1000.0 * 0.2**4 * (0.4 - 0.3 * j) * n * n)
        assert moving < static

    def test_fluid_dynamics_near_zero_speed_guard(self):
        gen = FluidDynamics()
        thrust, torque = thrust_and_torque(gen, 1e-9, advance_velocity=5.0)
        assert thrust == pytest.approx(0.0, abs=1e-12)
        assert torque == pytest.approx(0.0, abs=1e-12)

    def test_fluid_dynamics_reverse_coefficient(self):
        gen = FluidDynamics(rho=1000.0, diameter=0.2, kt0=0.4, kt0_rev=0.2)
        fwd, _ = thrust_and_torque(gen, 20.0)
        rev, _ = thrust_and_torque(gen, -20.0)
        assert rev == pytest.approx(-fwd / 2.0)


class TestComposition:
    def test_any_rotor_with_any_generator(self):
        rotors = [ZeroOrder(), FirstOrder(0.1), Yoerger(0.2, 0.05),
                  Bessa(0.01, 0.02, 0.001, 0.1, 1.0),
                  MechanicalPI(0.05, 2.0, 5.0, 10.0)]
        gens = [Quadratic(0.05), Deadband(0.1, 0.1, -1.0, 1.0),
                LinearInterp(((-10.0, -40.0), (10.0, 40.0))),
                FluidDynamics()]
        for rotor in rotors:
            for gen in gens:
                th = Thruster(rotor, gen)
                for _ in range(10):
                    thrust, torque = th.step(2.0, 0.01)
                assert math.isfinite(thrust) and math.isfinite(torque)

    def test_load_torque_lags_one_step(self):
        rotor = MechanicalPI(0.05, 2.0, 5.0, 10.0)
        gen = FluidDynamics(kq=0.5)
        th = Thruster(rotor, gen)
        assert th.state.last_torque == 0.0
        _, torque1 = th.step(10.0, 0.01)
        assert th.state.last_torque == torque1

    def test_deterministic(self):
        def run():
            th = Thruster(Yoerger(0.2, 0.05), Quadratic(0.05))
            return [th.step(3.0, 0.01) for _ in range(50)]
        assert run() == run()
