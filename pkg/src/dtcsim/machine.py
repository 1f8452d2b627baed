"""Induction motor dynamic model and ideal two-level voltage source inverter.

The machine is modelled in the stationary alpha-beta frame with the four
flux linkages as electrical states plus mechanical speed and rotor angle:

    d(lambda_s)/dt = v_s - rs * i_s
    d(lambda_r)/dt = -rr * i_r + j * w_e * lambda_r      (w_e = p * w_mech)
    J * dw/dt      = T_e - T_load - friction * w
    d(theta)/dt    = w

with currents recovered from the flux linkages through the inductance
matrix.  The stator equation is deliberately the same expression the
controller-side flux estimator integrates, so estimator accuracy tests
measure discretization error only.

Integration is fixed-step classical RK4, holding the applied voltage and
load torque constant over the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .frames import PhaseTriple, SpaceVector

TWO_PI = 2.0 * math.pi


class UnstableSimulationError(RuntimeError):
    """The integrated state left the finite range (time step too large)."""


@dataclass(frozen=True)
class MotorParams:
    """Electrical and mechanical machine parameters plus the DC bus voltage.

    rs, rr        stator / rotor resistance [ohm]
    ls, lr, lm    stator / rotor self- and mutual inductance [H]
    pole_pairs    number of pole pairs
    inertia       rotor inertia [kg m^2]
    friction      viscous friction [N m s/rad]
    rated_flux    rated stator flux magnitude [Wb]
    rated_torque  rated torque [N m]
    vdc           DC bus voltage [V]
    """

    rs: float
    rr: float
    ls: float
    lr: float
    lm: float
    pole_pairs: int
    inertia: float
    friction: float
    rated_flux: float
    rated_torque: float
    vdc: float

    def __post_init__(self) -> None:
        for name in ("rs", "rr", "ls", "lr", "lm", "inertia", "friction",
                     "rated_flux", "rated_torque", "vdc"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"motor parameter {name} must be a positive finite number, got {value!r}")
        if not (isinstance(self.pole_pairs, int) and self.pole_pairs >= 1):
            raise ValueError(f"pole_pairs must be an integer >= 1, got {self.pole_pairs!r}")
        if self.leakage <= 0.0:
            raise ValueError(
                f"singular inductances: ls*lr - lm^2 = {self.leakage:g} must be > 0")

    @property
    def leakage(self) -> float:
        """Determinant of the inductance matrix, ls*lr - lm^2 [H^2]."""
        return self.ls * self.lr - self.lm * self.lm


def default_motor() -> MotorParams:
    """A 4 kW, 2-pole-pair machine of the usual simulation scale.

    These values are a stand-in parameter set, not tied to any particular
    physical machine.
    """
    return MotorParams(
        rs=1.405,
        rr=1.395,
        ls=0.1780,
        lr=0.1780,
        lm=0.1722,
        pole_pairs=2,
        inertia=0.0131,
        friction=0.002985,
        rated_flux=0.8,
        rated_torque=26.0,
        vdc=540.0,
    )


class SwitchState(NamedTuple):
    """Inverter leg states; 1 = upper device on, 0 = lower device on."""

    sa: int
    sb: int
    sc: int


class MotorState(NamedTuple):
    """Machine dynamic state."""

    stator_flux: SpaceVector
    rotor_flux: SpaceVector
    speed_mech: float
    rotor_angle: float


class MotorStateDerivative(NamedTuple):
    d_stator_flux: SpaceVector
    d_rotor_flux: SpaceVector
    d_speed_mech: float
    d_rotor_angle: float


ZERO_STATE = MotorState(SpaceVector(0.0, 0.0), SpaceVector(0.0, 0.0), 0.0, 0.0)


def inverter_phase_voltages(sw: SwitchState, vdc: float) -> PhaseTriple:
    """Phase-to-neutral voltages of an ideal two-level inverter.

    van = vdc*(2*sa - sb - sc)/3 and cyclic permutations; the output always
    sums to zero.
    """
    if vdc <= 0:
        raise ValueError(f"vdc must be > 0, got {vdc!r}")
    sa, sb, sc = sw
    third = vdc / 3.0
    return PhaseTriple(
        third * (2 * sa - sb - sc),
        third * (2 * sb - sc - sa),
        third * (2 * sc - sa - sb),
    )


def currents_from_fluxes(state: MotorState, params: MotorParams) -> tuple[SpaceVector, SpaceVector]:
    """Invert the flux-linkage relations to stator and rotor currents."""
    det = params.leakage
    if det <= 0.0:
        raise ValueError(f"singular inductances: ls*lr - lm^2 = {det:g} must be > 0")
    fsa, fsb = state.stator_flux
    fra, frb = state.rotor_flux
    inv = 1.0 / det
    i_s = SpaceVector((params.lr * fsa - params.lm * fra) * inv,
                      (params.lr * fsb - params.lm * frb) * inv)
    i_r = SpaceVector((params.ls * fra - params.lm * fsa) * inv,
                      (params.ls * frb - params.lm * fsb) * inv)
    return i_s, i_r


def electromagnetic_torque(state: MotorState, params: MotorParams) -> float:
    """T_e = (3/2) p (lambda_alpha i_beta - lambda_beta i_alpha) [N m]."""
    i_s, _ = currents_from_fluxes(state, params)
    fsa, fsb = state.stator_flux
    return 1.5 * params.pole_pairs * (fsa * i_s.beta - fsb * i_s.alpha)


def make_stepper(params: MotorParams) -> Callable[..., tuple[float, float, float, float, float, float]]:
    """Build an RK4 stepper over raw floats for the given parameter set.

    The returned callable advances ``(fsa, fsb, fra, frb, w, ang)`` by ``dt``
    under constant stator voltage ``(va, vb)`` and load torque ``t_load``.
    This is the single source of the model equations; ``derivative`` and
    ``step`` wrap it.  Keeping the hot path on plain floats matters: the
    closed-loop simulator calls this a few hundred thousand times per run.
    """
    rs, rr = params.rs, params.rr
    ls, lr, lm = params.ls, params.lr, params.lm
    inv_det = 1.0 / params.leakage
    pp = params.pole_pairs
    k_t = 1.5 * pp
    inv_j = 1.0 / params.inertia
    fric = params.friction

    def deriv(fsa, fsb, fra, frb, w, va, vb, t_load):
        isa = (lr * fsa - lm * fra) * inv_det
        isb = (lr * fsb - lm * frb) * inv_det
        ira = (ls * fra - lm * fsa) * inv_det
        irb = (ls * frb - lm * fsb) * inv_det
        we = pp * w
        te = k_t * (fsa * isb - fsb * isa)
        return (va - rs * isa,
                vb - rs * isb,
                -rr * ira - we * frb,
                -rr * irb + we * fra,
                (te - t_load - fric * w) * inv_j,
                w)

    def step(fsa, fsb, fra, frb, w, ang, va, vb, t_load, dt):
        h = 0.5 * dt
        k1 = deriv(fsa, fsb, fra, frb, w, va, vb, t_load)
        k2 = deriv(fsa + h * k1[0], fsb + h * k1[1], fra + h * k1[2],
                   frb + h * k1[3], w + h * k1[4], va, vb, t_load)
        k3 = deriv(fsa + h * k2[0], fsb + h * k2[1], fra + h * k2[2],
                   frb + h * k2[3], w + h * k2[4], va, vb, t_load)
        k4 = deriv(fsa + dt * k3[0], fsb + dt * k3[1], fra + dt * k3[2],
                   frb + dt * k3[3], w + dt * k3[4], va, vb, t_load)
        sixth = dt / 6.0
        return (fsa + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
                fsb + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
                fra + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]),
                frb + sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3]),
                w + sixth * (k1[4] + 2.0 * (k2[4] + k3[4]) + k4[4]),
                ang + sixth * (k1[5] + 2.0 * (k2[5] + k3[5]) + k4[5]))

    step.deriv = deriv
    return step


def derivative(state: MotorState, v_s: SpaceVector, t_load: float,
               params: MotorParams) -> MotorStateDerivative:
    """Time derivative of the machine state under the given voltage and load."""
    d = make_stepper(params).deriv(
        state.stator_flux.alpha, state.stator_flux.beta,
        state.rotor_flux.alpha, state.rotor_flux.beta,
        state.speed_mech, v_s.alpha, v_s.beta, t_load)
    return MotorStateDerivative(SpaceVector(d[0], d[1]), SpaceVector(d[2], d[3]),
                                d[4], d[5])


def step(state: MotorState, v_s: SpaceVector, t_load: float,
         params: MotorParams, dt: float) -> MotorState:
    """Advance the state by one RK4 step of length ``dt``.

    Raises UnstableSimulationError if any state component leaves the finite
    range, which signals that ``dt`` is too large for the machine dynamics.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    out = make_stepper(params)(
        state.stator_flux.alpha, state.stator_flux.beta,
        state.rotor_flux.alpha, state.rotor_flux.beta,
        state.speed_mech, state.rotor_angle,
        v_s.alpha, v_s.beta, t_load, dt)
    return pack_state(out)


def pack_state(raw: tuple[float, float, float, float, float, float]) -> MotorState:
    """Wrap raw stepper output into a MotorState, checking finiteness."""
    fsa, fsb, fra, frb, w, ang = raw
    if not (math.isfinite(fsa) and math.isfinite(fsb) and math.isfinite(fra)
            and math.isfinite(frb) and math.isfinite(w) and math.isfinite(ang)):
        raise UnstableSimulationError(
            "machine state diverged to non-finite values; reduce the time step")
    return MotorState(SpaceVector(fsa, fsb), SpaceVector(fra, frb), w, ang % TWO_PI)


def magnetic_energy(state: MotorState, params: MotorParams) -> float:
    """Stored magnetic field energy [J] for the amplitude-invariant scaling."""
    i_s, i_r = currents_from_fluxes(state, params)
    fsa, fsb = state.stator_flux
    fra, frb = state.rotor_flux
    return 0.75 * (i_s.alpha * fsa + i_s.beta * fsb + i_r.alpha * fra + i_r.beta * frb)


def kinetic_energy(state: MotorState, params: MotorParams) -> float:
    """Rotor kinetic energy [J]."""
    return 0.5 * params.inertia * state.speed_mech ** 2
