"""Modular thruster models: rotor dynamics variants composed with thrust generators.

Any rotor dynamics model combines with any thrust/torque generation model.
Continuous dynamics are integrated with classical fixed-step RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


# --------------------------------------------------------------------------- rotor dynamics

@dataclass(frozen=True)
class ZeroOrder:
    """Passthrough: the input is the rotor angular velocity in rad/s."""


@dataclass(frozen=True)
class FirstOrder:
    """omega' = (input - omega) / tau, angular-velocity input."""

    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")


@dataclass(frozen=True)
class Yoerger:
    """alpha * omega' + beta * omega*|omega| = input torque (Nm)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")


@dataclass(frozen=True)
class Bessa:
    """DC motor with back EMF driving a linear + quadratic hydrodynamic load.

    inertia * omega' = (k_torque/resistance) * (V - k_torque*omega)
                       - k_linear*omega - k_quad*omega*|omega|
    Input is voltage.
    """

    inertia: float
    k_linear: float
    k_quad: float
    k_torque: float
    resistance: float

    def __post_init__(self):
        if self.inertia <= 0 or self.k_torque <= 0 or self.resistance <= 0:
            raise ValueError("inertia, k_torque and resistance must be positive")
        if self.k_linear < 0 or self.k_quad < 0:
            raise ValueError("load constants must be non-negative")


@dataclass(frozen=True)
class MechanicalPI:
    """Rotating propeller driven by a PI speed controller; setpoint input in rad/s.

    The integral term (not the total torque) is clamped to +/- integral_limit.
    """

    inertia: float
    kp: float
    ki: float
    integral_limit: float

    def __post_init__(self):
        if self.inertia <= 0 or self.kp <= 0 or self.integral_limit <= 0:
            raise ValueError("inertia, kp and integral_limit must be positive")
        if self.ki < 0:
            raise ValueError("ki must be non-negative")


# --------------------------------------------------------------------------- thrust generation

@dataclass(frozen=True)
class Quadratic:
    """T = ct * omega * |omega|, symmetric; no induced torque."""

    ct: float


@dataclass(frozen=True)
class Deadband:
    """Asymmetric quadratic law measured from the deadband edges; zero inside."""

    ct_fwd: float
    ct_rev: float
    deadband_lo: float
    deadband_hi: float

    def __post_init__(self):
        if not (self.deadband_lo <= 0.0 <= self.deadband_hi):
            raise ValueError("deadband must bracket zero")


@dataclass(frozen=True)
class LinearInterp:
    """Tabulated omega -> thrust lookup, clamped at the table ends."""

    table: tuple  # ((omega, thrust), ...) with strictly increasing omega

    def __post_init__(self):
        tab = tuple((float(w), float(t)) for w, t in self.table)
        if len(tab) < 2:
            raise ValueError("interpolation table needs at least 2 rows")
        omegas = [r[0] for r in tab]
        if any(b <= a for a, b in zip(omegas, omegas[1:])):
            raise ValueError("table omega values must be strictly increasing")
        object.__setattr__(self, "table", tab)

    @staticmethod
    def from_csv(path):
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                w, t = line.split(",")[:2]
                try:
                    rows.append((float(w), float(t)))
                except ValueError:
                    continue  # header line
        return LinearInterp(tuple(rows))


@dataclass(frozen=True)
class FluidDynamics:
    """Advance-ratio thrust law with an induced torque coefficient.

    n = omega / 2pi rev/s; J = advance_velocity / (n * diameter);
    KT = kt0 - kt_j * J; T = rho * D^4 * KT * n|n|; Q = rho * D^5 * kq * n|n|.
    kt0_rev, when given, applies for negative rotation.
    """

    rho: float = 1025.0
    diameter: float = 0.1
    kt0: float = 0.5
    kt_j: float = 0.0
    kq: float = 0.05
    kt0_rev: float = None

    def __post_init__(self):
        if self.rho <= 0 or self.diameter <= 0:
            raise ValueError("rho and diameter must be positive")
        if self.kt0_rev is None:
            object.__setattr__(self, "kt0_rev", self.kt0)


# --------------------------------------------------------------------------- state and stepping

@dataclass
class ThrusterState:
    omega: float = 0.0
    pi_integral: float = 0.0
    last_torque: float = 0.0  # induced load torque from the previous evaluation


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rotor_step(dyn, state: ThrusterState, u, load_torque, dt) -> ThrusterState:
    """Advance the rotor state one step of dt under input u."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    omega = state.omega
    integral = state.pi_integral

    if isinstance(dyn, ZeroOrder):
        omega = u
    elif isinstance(dyn, FirstOrder):
        omega = _rk4(lambda w: (u - w) / dyn.tau, omega, dt)
    elif isinstance(dyn, Yoerger):
        omega = _rk4(lambda w: (u - dyn.beta * w * abs(w)) / dyn.alpha, omega, dt)
    elif isinstance(dyn, Bessa):
        def dwdt(w):
            motor = (dyn.k_torque / dyn.resistance) * (u - dyn.k_torque * w)
            return (motor - dyn.k_linear * w - dyn.k_quad * w * abs(w)) / dyn.inertia
        omega = _rk4(dwdt, omega, dt)
    elif isinstance(dyn, MechanicalPI):
        e = u - omega
        integral = max(-dyn.integral_limit, min(dyn.integral_limit, integral + dyn.ki * e * dt))
        frozen = integral  # integral term held constant over the step
        omega = _rk4(
            lambda w: (dyn.kp * (u - w) + frozen - load_torque) / dyn.inertia, omega, dt
        )
    else:
        raise TypeError(f"unknown rotor dynamics {type(dyn).__name__}")

    return ThrusterState(omega=omega, pi_integral=integral, last_torque=state.last_torque)


def thrust_and_torque(gen, omega, advance_velocity=0.0):
    """(thrust N, induced torque Nm) of a generator at rotor speed omega."""
    if isinstance(gen, Quadratic):
        return gen.ct * omega * abs(omega), 0.0
    if isinstance(gen, Deadband):
        if gen.deadband_lo <= omega <= gen.deadband_hi:
            return 0.0, 0.0
        if omega > gen.deadband_hi:
            d = omega - gen.deadband_hi
            return gen.ct_fwd * d * abs(d), 0.0
        d = omega - gen.deadband_lo
        return gen.ct_rev * d * abs(d), 0.0
    if isinstance(gen, LinearInterp):
        tab = gen.table
        if omega <= tab[0][0]:
            return tab[0][1], 0.0
        if omega >= tab[-1][0]:
            return tab[-1][1], 0.0
        for (w0, t0), (w1, t1) in zip(tab, tab[1:]):
            if w0 <= omega <= w1:
                f = (omega - w0) / (w1 - w0)
                return t0 + f * (t1 - t0), 0.0
    if isinstance(gen, FluidDynamics):
        n = omega / (2.0 * math.pi)
        if abs(n) > 1e-6:
            j = advance_velocity / (n * gen.diameter)
        else:
            j = 0.0
        kt0 = gen.kt0 if n >= 0 else gen.kt0_rev
        kt = kt0 - gen.kt_j * j
        thrust = gen.rho * gen.diameter**4 * kt * n * abs(n)
        torque = gen.rho * gen.diameter**5 * gen.kq * n * abs(n)
        return thrust, torque
    raise TypeError(f"unknown thrust generation {type(gen).__name__}")


def thruster_step(rotor, gen, state: ThrusterState, u, advance_velocity, dt):
    """One composed step: rotor update under lagged load torque, then thrust lookup.

    Returns (new state, thrust, torque).
    """
    new_state = rotor_step(rotor, state, u, state.last_torque, dt)
    thrust, torque = thrust_and_torque(gen, new_state.omega, advance_velocity)
    new_state.last_torque = torque
    return new_state, thrust, torque


class Thruster:
    """Stateful rotor + generator pair, stepped by the scenario runner."""

    def __init__(self, rotor, generation, name="thruster"):
        self.rotor = rotor
        self.generation = generation
        self.name = name
        self.state = ThrusterState()

    def step(self, u, dt, advance_velocity=0.0):
        self.state, thrust, torque = thruster_step(
            self.rotor, self.generation, self.state, u, advance_velocity, dt
        )
        return thrust, torque
