"""Closed-loop fixed-step DTC simulation.

Each control period: sample the plant terminal quantities, update the
voltage-model flux estimator, run both hysteresis comparators, select the
inverter state from the switching table, then advance plant and estimator
over the period with that state held.  The fuzzy optimizer, when enabled,
adjusts the flux reference at its own (slower) period.  Everything is
seed-free and deterministic.

The flux reference ramps from 10% of rated to its initial value over the
first 50 ms so the switching table never sees a near-zero flux vector; the
optimizer is disabled during that window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from . import estimator, machine
from .dtc_core import HysteresisConfig, flux_comparator, select_vector, torque_comparator
from .frames import SpaceVector, clarke, space_vector
from .fuzzy import OptimizerConfig, StatorFluxOptimizer, default_optimizer_config, parse_definition
from .machine import MotorParams, MotorState, SwitchState, UnstableSimulationError, default_motor

STARTUP_TIME = 0.05
STARTUP_FLUX_FRACTION = 0.1
MAX_RECORDS = 100_000

CONTROLLERS = ("conventional", "fuzzy_optimized")


class StepProfile:
    """Piecewise-constant schedule; value is 0 before the first step."""

    def __init__(self, steps: Sequence[tuple[float, float]]):
        entries = sorted(steps)
        times = [t for t, _ in entries]
        if len(set(times)) != len(times):
            raise ValueError(f"profile has duplicate step times: {times}")
        if times and times[0] < 0:
            raise ValueError(f"profile step time must be >= 0, got {times[0]}")
        self.steps: tuple[tuple[float, float], ...] = tuple(entries)

    def value(self, t: float) -> float:
        out = 0.0
        for time, value in self.steps:
            if time > t:
                break
            out = value
        return out

    def step_times(self) -> list[float]:
        return [t for t, _ in self.steps]

    def __eq__(self, other) -> bool:
        return isinstance(other, StepProfile) and self.steps == other.steps

    def __repr__(self) -> str:
        return f"StepProfile({list(self.steps)!r})"


class PIGains(NamedTuple):
    """Speed-loop PI gains and torque limit."""

    kp: float
    ki: float
    torque_limit: float


class PISpeedController:
    """PI speed controller with output clamp and integrator anti-windup."""

    def __init__(self, gains: PIGains):
        if gains.kp < 0 or gains.ki < 0:
            raise ValueError(f"PI gains must be >= 0, got {gains}")
        if gains.torque_limit <= 0:
            raise ValueError(f"torque_limit must be > 0, got {gains.torque_limit}")
        self.gains = gains
        self.integral = 0.0

    def update(self, speed_error: float, dt: float) -> float:
        kp, ki, limit = self.gains
        self.integral += ki * speed_error * dt
        u = kp * speed_error + self.integral
        if u > limit:
            u = limit
            self.integral = min(self.integral, limit)
        elif u < -limit:
            u = -limit
            self.integral = max(self.integral, -limit)
        return u


class SimRecord(NamedTuple):
    """One sampled row of the simulation output.

    flux_alpha/flux_beta are the estimated (controller-side) stator flux
    components, consistent with flux_mag_est.
    """

    time: float
    torque_est: float
    torque_plant: float
    torque_ref: float
    flux_mag_est: float
    flux_ref: float
    flux_alpha: float
    flux_beta: float
    speed_mech: float
    sector: int
    switch: SwitchState


@dataclass
class Scenario:
    """Everything needed for one deterministic closed-loop run.

    Exactly one of ``torque_ref`` / ``speed_ref`` drives the torque loop;
    speed mode needs PI gains (filled with defaults when omitted).  Fields
    left as None are derived from the motor ratings.
    """

    controller: str = "conventional"
    duration: float = 1.0
    dt: float = 50e-6
    substeps: int = 1
    stride: int | None = None
    motor: MotorParams = field(default_factory=default_motor)
    torque_ref: StepProfile | None = None
    speed_ref: StepProfile | None = None
    speed_pi: PIGains | None = None
    load: StepProfile = field(default_factory=lambda: StepProfile([]))
    initial_flux_ref: float | None = None
    hysteresis: HysteresisConfig | None = None
    optimizer: OptimizerConfig | None = None
    fuzzy_definition: str | None = None

    def __post_init__(self) -> None:
        m = self.motor
        if self.initial_flux_ref is None:
            self.initial_flux_ref = m.rated_flux
        if self.hysteresis is None:
            self.hysteresis = HysteresisConfig(0.01 * m.rated_flux, 0.02 * m.rated_torque)
        if self.optimizer is None:
            self.optimizer = default_optimizer_config(m.rated_flux, m.rated_torque)
        if self.torque_ref is None and self.speed_ref is None:
            self.torque_ref = StepProfile([(0.0, 0.0)])
        if self.speed_ref is not None and self.speed_pi is None:
            self.speed_pi = PIGains(2.0, 100.0, 1.5 * m.rated_torque)

    def validate(self) -> None:
        if self.controller not in CONTROLLERS:
            raise ValueError(
                f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValueError(f"duration must be > 0, got {self.duration!r}")
        if not (math.isfinite(self.dt) and 0 < self.dt <= self.duration):
            raise ValueError(f"dt must be > 0 and <= duration, got {self.dt!r}")
        if not (isinstance(self.substeps, int) and self.substeps >= 1):
            raise ValueError(f"substeps must be an integer >= 1, got {self.substeps!r}")
        if self.stride is not None and not (isinstance(self.stride, int) and self.stride >= 1):
            raise ValueError(f"stride must be an integer >= 1, got {self.stride!r}")
        if (self.torque_ref is None) == (self.speed_ref is None):
            raise ValueError("exactly one of torque_ref and speed_ref must be set")
        if self.initial_flux_ref <= 0:
            raise ValueError(f"initial_flux_ref must be > 0, got {self.initial_flux_ref!r}")
        if self.hysteresis.flux_band <= 0 or self.hysteresis.torque_band <= 0:
            raise ValueError(f"hysteresis bands must be > 0, got {self.hysteresis}")
        if self.controller == "fuzzy_optimized":
            cfg = self.optimizer
            if not cfg.flux_min <= self.initial_flux_ref <= cfg.flux_max:
                raise ValueError(
                    f"initial_flux_ref {self.initial_flux_ref} outside optimizer range "
                    f"[{cfg.flux_min}, {cfg.flux_max}]")
        for name in ("torque_ref", "speed_ref", "load"):
            profile = getattr(self, name)
            if profile is not None and profile.step_times() and \
                    profile.step_times()[-1] >= self.duration:
                raise ValueError(
                    f"{name} has a step at t={profile.step_times()[-1]} "
                    f">= duration {self.duration}")

    def step_times(self) -> list[float]:
        """All reference and load step times (for steady-window analysis)."""
        times = set(self.load.step_times())
        driver = self.torque_ref if self.torque_ref is not None else self.speed_ref
        times.update(driver.step_times())
        return sorted(times)


def flux_startup(t: float, rated_flux: float, initial_flux_ref: float) -> float:
    """Magnetization ramp of the flux reference over the first 50 ms."""
    if t >= STARTUP_TIME:
        return initial_flux_ref
    start = STARTUP_FLUX_FRACTION * rated_flux
    return start + (initial_flux_ref - start) * (t / STARTUP_TIME)


def run(scenario: Scenario) -> list[SimRecord]:
    """Simulate the scenario and return the decimated record list."""
    records, _ = simulate(scenario)
    return records


def simulate(scenario: Scenario) -> tuple[list[SimRecord], MotorState]:
    """Full simulation returning both the records and the final plant state."""
    sc = scenario
    sc.validate()
    motor = sc.motor
    dt = sc.dt
    n_steps = round(sc.duration / dt)
    stride = sc.stride if sc.stride is not None else max(1, -(-n_steps // MAX_RECORDS))

    stepper = machine.make_stepper(motor)
    v_table: dict[SwitchState, SpaceVector] = {}
    for sa in (0, 1):
        for sb in (0, 1):
            for s_c in (0, 1):
                sw = SwitchState(sa, sb, s_c)
                v_table[sw] = space_vector(clarke(machine.inverter_phase_voltages(sw, motor.vdc)))

    fuzzy_mode = sc.controller == "fuzzy_optimized"
    optimizer = None
    opt_every = 1
    if fuzzy_mode:
        inference = parse_definition(sc.fuzzy_definition) if sc.fuzzy_definition else None
        optimizer = StatorFluxOptimizer(sc.optimizer, inference)
        opt_every = max(1, round(sc.optimizer.update_period / dt))

    pi = PISpeedController(sc.speed_pi) if sc.speed_ref is not None else None

    rs = motor.rs
    pole_pairs = motor.pole_pairs
    k_t = 1.5 * pole_pairs
    lr, lm = motor.lr, motor.lm
    inv_det = 1.0 / motor.leakage
    flux_band, torque_band = sc.hysteresis
    initial_flux_ref = sc.initial_flux_ref
    rated_flux = motor.rated_flux
    torque_steps = sc.torque_ref.steps if sc.torque_ref is not None else ()
    speed_steps = sc.speed_ref.steps if sc.speed_ref is not None else ()
    load_steps = sc.load.steps
    sub = sc.substeps
    sub_dt = dt / sub

    # Plant and controller state.
    fsa = fsb = fra = frb = w = ang = 0.0
    est = estimator.EstimatorState(SpaceVector(0.0, 0.0), rs)
    flux_cmd, torque_cmd = 1, 0
    sector = 1
    sw = SwitchState(0, 0, 0)
    flux_ref = flux_startup(0.0, rated_flux, initial_flux_ref)
    startup_done = False
    torque_ref_now = 0.0
    speed_ref_now = 0.0
    load_now = 0.0
    t_idx = s_idx = l_idx = 0

    records: list[SimRecord] = []
    append = records.append

    for k in range(n_steps):
        t = k * dt

        while l_idx < len(load_steps) and load_steps[l_idx][0] <= t:
            load_now = load_steps[l_idx][1]
            l_idx += 1
        if pi is not None:
            while s_idx < len(speed_steps) and speed_steps[s_idx][0] <= t:
                speed_ref_now = speed_steps[s_idx][1]
                s_idx += 1
            torque_ref_now = pi.update(speed_ref_now - w, dt)
        else:
            while t_idx < len(torque_steps) and torque_steps[t_idx][0] <= t:
                torque_ref_now = torque_steps[t_idx][1]
                t_idx += 1

        if t < STARTUP_TIME:
            flux_ref = flux_startup(t, rated_flux, initial_flux_ref)
        elif not startup_done:
            flux_ref = initial_flux_ref
            startup_done = True

        # Plant terminal currents (exact, in the stationary frame).
        isa = (lr * fsa - lm * fra) * inv_det
        isb = (lr * fsb - lm * frb) * inv_det
        i_s = SpaceVector(isa, isb)

        est_flux = est.integrated_flux
        mag = estimator.flux_magnitude(est_flux)
        torque_est = estimator.estimate_torque(est_flux, i_s, pole_pairs)
        if mag > 0.0:
            sector = estimator.flux_sector(est_flux)

        torque_err = torque_ref_now - torque_est
        flux_cmd = flux_comparator(flux_ref - mag, flux_band, flux_cmd)
        torque_cmd = torque_comparator(torque_err, torque_band, torque_cmd)
        sw = select_vector(flux_cmd, torque_cmd, sector, sw)
        v_s = v_table[sw]

        if k % stride == 0:
            append(SimRecord(t, torque_est,
                             k_t * (fsa * isb - fsb * isa), torque_ref_now,
                             mag, flux_ref, est_flux.alpha, est_flux.beta,
                             w, sector, sw))

        if optimizer is not None and startup_done and k % opt_every == 0:
            flux_ref = optimizer.step(torque_err, flux_ref)

        est = estimator.update_flux(est, v_s, i_s, dt)
        for _ in range(sub):
            fsa, fsb, fra, frb, w, ang = stepper(
                fsa, fsb, fra, frb, w, ang, v_s.alpha, v_s.beta, load_now, sub_dt)
        if not math.isfinite(fsa + fsb + fra + frb + w):
            raise UnstableSimulationError(
                f"machine state diverged at t={t:g} s; reduce dt")

    final = machine.pack_state((fsa, fsb, fra, frb, w, ang))
    return records, final


DEFAULT_SPEED_REF = 100.0  # rad/s mechanical; well below base speed


def default_scenario(controller: str = "conventional", dt: float = 5e-6) -> Scenario:
    """The shipped demonstration profile.

    Speed regulated at 100 rad/s, load steps 20% -> 100% -> 50% of rated at
    0.5 s intervals.  Near standstill a DTC drive spends most of its time on
    zero vectors and cannot hold the flux reference, so the demonstration
    runs at speed like any realistic drive cycle.
    """
    motor = default_motor()
    levels = [(0.0, 0.2), (0.5, 1.0), (1.0, 0.5)]
    return Scenario(
        controller=controller,
        duration=1.5,
        dt=dt,
        motor=motor,
        speed_ref=StepProfile([(0.0, DEFAULT_SPEED_REF)]),
        load=StepProfile([(t, frac * motor.rated_torque) for t, frac in levels]),
    )


def constant_load_scenario(load_fraction: float, controller: str = "fuzzy_optimized",
                           duration: float = 0.9, dt: float = 5e-6) -> Scenario:
    """Single constant-load operating point (for converged-flux studies)."""
    motor = default_motor()
    return Scenario(
        controller=controller,
        duration=duration,
        dt=dt,
        motor=motor,
        speed_ref=StepProfile([(0.0, DEFAULT_SPEED_REF)]),
        load=StepProfile([(0.0, load_fraction * motor.rated_torque)]),
    )
