"""Rotary-wing propulsion power and closed-loop energy accounting.

Power in steady circular flight at speed V and turn radius r is the sum
of three rotor terms (blade profile, induced, parasite):

    P(V, r) = P_b * (1 + 3 V^2 / U_tip^2)
            + P_ind * sqrt(1 + V^4 / (r^2 g^2))
                    * (sqrt(1 + V^4 / (r^2 g^2) + V^4 / (4 v_0^4))
                       - V^2 / (2 v_0^2)) ** 0.5
            + 0.5 * d_0 * rho * s * A * V^3

The V^4 / (r^2 g^2) term is the squared centrifugal acceleration over
gravity; it vanishes for straight flight, which is encoded with the
STRAIGHT marker (an infinite turn radius).  Hover is the V = 0 case and
costs P_b + P_ind.

For each radius there is a single speed minimizing P, and a closed-loop
trajectory flown segment by segment at those optimal speeds has a
well-defined lap time, time-weighted mean power, and energy per hour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from functools import lru_cache
from importlib import resources

from supply_planner.errors import DomainError, InputError

STRAIGHT = math.inf
"""Turn-radius marker for straight-line flight."""

_SPEED_HI = 60.0  # m/s, upper bound of the optimal-speed search
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EnergyParams:
    """Rotary-wing aircraft constants.

    Attributes:
        weight: aircraft weight in N.
        rotor_radius: rotor radius in m.
        blade_angular_velocity: blade angular velocity in rad/s.
        induced_power_factor: incremental correction factor to induced power.
        profile_drag_coeff: profile drag coefficient.
        air_density: air density in kg/m^3.
        rotor_disc_area: rotor disc area in m^2.
        tip_speed: tip speed of the rotor blade in m/s.
        fuselage_drag_ratio: fuselage drag ratio.
        rotor_solidity: rotor solidity.
        hover_induced_velocity: mean rotor induced velocity in hover, m/s.
        blade_profile_power: blade profile power in hover, W.
        induced_power: induced power in hover, W.
        gravity: gravitational acceleration in m/s^2.
        max_power: maximum propulsion power in W; defaults to twice the
            hover power when not given.
    """

    weight: float = 20.0
    rotor_radius: float = 0.4
    blade_angular_velocity: float = 300.0
    induced_power_factor: float = 0.1
    profile_drag_coeff: float = 0.012
    air_density: float = 1.225
    rotor_disc_area: float = 0.503
    tip_speed: float = 120.0
    fuselage_drag_ratio: float = 0.6
    rotor_solidity: float = 0.05
    hover_induced_velocity: float = 4.03
    blade_profile_power: float = 79.86
    induced_power: float = 88.63
    gravity: float = 9.8
    max_power: float | None = None

    def __post_init__(self) -> None:
        for field in fields(self):
            value = getattr(self, field.name)
            if field.name == "max_power" and value is None:
                continue
            if value <= 0:
                raise DomainError(f"{field.name} must be positive, got {value}")
        if self.max_power is None:
            hover = self.blade_profile_power + self.induced_power
            object.__setattr__(self, "max_power", 2.0 * hover)

    @classmethod
    def from_primitives(
        cls,
        *,
        weight: float = 20.0,
        rotor_radius: float = 0.4,
        blade_angular_velocity: float = 300.0,
        induced_power_factor: float = 0.1,
        profile_drag_coeff: float = 0.012,
        air_density: float = 1.225,
        tip_speed: float = 120.0,
        fuselage_drag_ratio: float = 0.6,
        rotor_solidity: float = 0.05,
        gravity: float = 9.8,
        max_power: float | None = None,
    ) -> "EnergyParams":
        """Build params deriving disc area, induced velocity and hover powers.

        A = pi R^2, v_0 = sqrt(W / (2 rho A)),
        P_b = (delta / 8) rho s A Omega^3 R^3,
        P_ind = (1 + k) W^(3/2) / sqrt(2 rho A).
        """
        area = math.pi * rotor_radius**2
        v0 = math.sqrt(weight / (2.0 * air_density * area))
        p_blade = (
            profile_drag_coeff
            / 8.0
            * air_density
            * rotor_solidity
            * area
            * blade_angular_velocity**3
            * rotor_radius**3
        )
        p_induced = (1.0 + induced_power_factor) * weight**1.5 / math.sqrt(
            2.0 * air_density * area
        )
        return cls(
            weight=weight,
            rotor_radius=rotor_radius,
            blade_angular_velocity=blade_angular_velocity,
            induced_power_factor=induced_power_factor,
            profile_drag_coeff=profile_drag_coeff,
            air_density=air_density,
            rotor_disc_area=area,
            tip_speed=tip_speed,
            fuselage_drag_ratio=fuselage_drag_ratio,
            rotor_solidity=rotor_solidity,
            hover_induced_velocity=v0,
            blade_profile_power=p_blade,
            induced_power=p_induced,
            gravity=gravity,
            max_power=max_power,
        )

    @classmethod
    def from_file(cls, path: str) -> "EnergyParams":
        """Load params from flat `name = value` text; '#' starts a comment.

        Every physical constant must be present; max_power may be
        omitted to get the twice-hover default.
        """
        known = {field.name for field in fields(cls)}
        values: dict[str, float] = {}
        try:
            with open(path) as fh:
                for lineno, raw in enumerate(fh, start=1):
                    line = raw.split("#", 1)[0].strip()
                    if not line:
                        continue
                    name, sep, text = line.partition("=")
                    name = name.strip()
                    if not sep or not name:
                        raise InputError(f"{path}:{lineno}: expected `name = value`")
                    if name not in known:
                        raise InputError(f"{path}:{lineno}: unknown parameter {name!r}")
                    if name in values:
                        raise InputError(f"{path}:{lineno}: duplicate parameter {name!r}")
                    try:
                        values[name] = float(text.strip())
                    except ValueError as exc:
                        raise InputError(f"{path}:{lineno}: {exc}") from exc
        except OSError as exc:
            raise InputError(f"cannot read params file {path}: {exc}") from exc
        missing = sorted(known - values.keys() - {"max_power"})
        if missing:
            raise InputError(f"{path}: missing parameters: {', '.join(missing)}")
        try:
            return cls(**values)
        except DomainError as exc:
            raise InputError(f"{path}: {exc}") from exc


@lru_cache(maxsize=1)
def default_energy_params() -> EnergyParams:
    """The aircraft constants shipped with the package."""
    ref = resources.files("supply_planner").joinpath("data/energy_params.txt")
    with resources.as_file(ref) as path:
        return EnergyParams.from_file(str(path))


@dataclass(frozen=True)
class SpeedPoint:
    """A speed with its turn radius and resulting propulsion power."""

    speed: float
    turn_radius: float
    power: float


def circular_power(params: EnergyParams, speed: float, turn_radius: float) -> float:
    """Propulsion power in W at the given speed and turn radius.

    turn_radius is in meters or STRAIGHT for straight-line flight.
    """
    if speed < 0:
        raise DomainError(f"speed must be >= 0, got {speed}")
    if turn_radius != STRAIGHT and turn_radius <= 0:
        raise DomainError(f"turn_radius must be positive or STRAIGHT, got {turn_radius}")
    v2 = speed * speed
    v4 = v2 * v2
    if turn_radius == STRAIGHT:
        centrifugal = 0.0
    else:
        centrifugal = v4 / (turn_radius * turn_radius * params.gravity * params.gravity)
    blade = params.blade_profile_power * (1.0 + 3.0 * v2 / params.tip_speed**2)
    v0_2 = params.hover_induced_velocity**2
    induced = (
        params.induced_power
        * math.sqrt(1.0 + centrifugal)
        * math.sqrt(
            math.sqrt(1.0 + centrifugal + v4 / (4.0 * v0_2 * v0_2))
            - v2 / (2.0 * v0_2)
        )
    )
    parasite = (
        0.5
        * params.fuselage_drag_ratio
        * params.air_density
        * params.rotor_solidity
        * params.rotor_disc_area
        * v2
        * speed
    )
    return blade + induced + parasite


def hover_power(params: EnergyParams) -> float:
    """Propulsion power in W when hovering."""
    return circular_power(params, 0.0, STRAIGHT)


@lru_cache(maxsize=None)
def optimal_speed(params: EnergyParams, turn_radius: float) -> SpeedPoint:
    """Speed minimizing propulsion power at the given turn radius.

    Coarse 0.1 m/s scan over [0, 60] m/s followed by golden-section
    refinement around the best sample; the power curve has a single dip
    over this range, so the minimizer is located to well under 0.01 m/s.
    """
    steps = int(round(_SPEED_HI / 0.1))
    best_i = 0
    best_p = math.inf
    for i in range(steps + 1):
        p = circular_power(params, i * 0.1, turn_radius)
        if p < best_p:
            best_p = p
            best_i = i
    lo = max(0.0, (best_i - 1) * 0.1)
    hi = min(_SPEED_HI, (best_i + 1) * 0.1)
    while hi - lo > 1e-4:
        c = hi - (hi - lo) * _INVPHI
        d = lo + (hi - lo) * _INVPHI
        if circular_power(params, c, turn_radius) < circular_power(params, d, turn_radius):
            hi = d
        else:
            lo = c
    speed = (lo + hi) / 2.0
    return SpeedPoint(speed, turn_radius, circular_power(params, speed, turn_radius))


def loop_energy_per_hour(
    params: EnergyParams, segments: list[tuple[float, float]]
) -> tuple[float, float, float]:
    """Cost a closed loop of (length m, turn_radius m-or-STRAIGHT) segments.

    Each segment is flown at the optimal speed for its radius.  Returns
    (energy per hour in J, lap time in s, time-weighted mean power in W).
    """
    if not segments:
        raise DomainError("segment list must not be empty")
    lap_time = 0.0
    lap_energy = 0.0
    for length, turn_radius in segments:
        if length <= 0:
            raise DomainError(f"segment length must be positive, got {length}")
        point = optimal_speed(params, turn_radius)
        if point.speed <= 0:
            raise DomainError(
                f"turn radius {turn_radius} has optimal speed 0; segment cannot be flown"
            )
        seg_time = length / point.speed
        lap_time += seg_time
        lap_energy += point.power * seg_time
    mean_power = lap_energy / lap_time
    return mean_power * 3600.0, lap_time, mean_power


def hover_energy_per_hour(params: EnergyParams) -> float:
    """Energy in J consumed by one hour of hovering."""
    return hover_power(params) * 3600.0
