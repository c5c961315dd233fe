"""ISFET device model.

An ISFET is treated as an n-type MOSFET in the linear region whose threshold
voltage is shifted by the electrochemical potential of the solution touching
its gate. The chemical potential follows the Nernst law with pH standing in
for the hydrogen-ion activity (a_H = 10**-pH).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

GAS_CONSTANT = 8.314462618  # J/(mol K)
FARADAY = 96485.33212  # C/mol
HYDROGEN_CHARGE = 1
ABSOLUTE_ZERO_C = -273.15

LINEAR = "linear"
SATURATION = "saturation"
CUTOFF = "cutoff"


class DeviceError(ValueError):
    """Invalid device parameters or physically meaningless inputs."""


def kelvin(temp_celsius: float) -> float:
    if not temp_celsius > ABSOLUTE_ZERO_C:
        raise DeviceError(f"temperature {temp_celsius} C is at or below absolute zero")
    return temp_celsius - ABSOLUTE_ZERO_C


@dataclass(frozen=True)
class MosfetParams:
    """Lumped linear-region MOSFET parameters.

    ``k_factor`` stands for mobility * oxide capacitance * W/L; only the
    product ever enters the current law.
    """

    k_factor: float = 2.0e-4
    v_th0: float = -0.8803633702318966

    def __post_init__(self):
        if not (self.k_factor > 0 and math.isfinite(self.k_factor)):
            raise DeviceError(f"k_factor must be positive, got {self.k_factor}")
        if not math.isfinite(self.v_th0):
            raise DeviceError(f"v_th0 must be finite, got {self.v_th0}")


@dataclass(frozen=True)
class ElectroChemParams:
    """Electrolyte/oxide interface parameters.

    ``e0`` is the interface potential at ``ph_ref``; ``alpha`` scales the
    ideal Nernst slope down to the measured sensitivity; ``sign`` selects the
    direction in which the chemical potential moves per pH unit.
    """

    e0: float = 0.0
    ph_ref: float = 7.0
    alpha: float = 0.98422
    sign: int = 1

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise DeviceError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not (0.0 <= self.ph_ref <= 14.0):
            raise DeviceError(f"ph_ref must lie in [0, 14], got {self.ph_ref}")
        if self.sign not in (1, -1):
            raise DeviceError(f"sign must be +1 or -1, got {self.sign}")
        if not math.isfinite(self.e0):
            raise DeviceError(f"e0 must be finite, got {self.e0}")


@dataclass(frozen=True)
class SolutionSample:
    ph: float
    temp_celsius: float = 25.0

    def __post_init__(self):
        if not (0.0 <= self.ph <= 14.0):
            raise DeviceError(f"pH must lie in [0, 14], got {self.ph}")
        kelvin(self.temp_celsius)


@dataclass(frozen=True)
class IsfetDevice:
    mosfet: MosfetParams = field(default_factory=MosfetParams)
    chem: ElectroChemParams = field(default_factory=ElectroChemParams)


def nernst_slope(temp_celsius: float) -> float:
    """Ideal Nernst slope in volts per pH unit, ln(10) R T / (n F)."""
    return math.log(10.0) * GAS_CONSTANT * kelvin(temp_celsius) / (HYDROGEN_CHARGE * FARADAY)


def effective_sensitivity(device: IsfetDevice, temp_celsius: float) -> float:
    return device.chem.alpha * nernst_slope(temp_celsius)


def v_chemical(device: IsfetDevice, sample: SolutionSample) -> float:
    """Interface potential for a solution sample.

    Written relative to ``ph_ref`` so that ``e0`` is the potential at the
    reference point; ln(a_H) = -ln(10) * pH turns the log-activity term into
    a linear function of pH.
    """
    chem = device.chem
    slope = effective_sensitivity(device, sample.temp_celsius)
    return chem.e0 + chem.sign * slope * (chem.ph_ref - sample.ph)


def v_th_isfet(device: IsfetDevice, sample: SolutionSample) -> float:
    return device.mosfet.v_th0 - v_chemical(device, sample)


def drain_current(device: IsfetDevice, v_gs: float, v_ds: float, sample: SolutionSample) -> float:
    """Linear-region drain current k * ((v_gs - v_th) * v_ds - v_ds**2 / 2).

    The expression is evaluated regardless of region; use :func:`region_check`
    to confirm the bias point is physical.
    """
    if v_ds < 0:
        raise DeviceError(f"v_ds must be non-negative, got {v_ds}")
    overdrive = v_gs - v_th_isfet(device, sample)
    return device.mosfet.k_factor * (overdrive * v_ds - 0.5 * v_ds * v_ds)


def region_check(device: IsfetDevice, v_gs: float, v_ds: float, sample: SolutionSample) -> str:
    if v_ds < 0:
        raise DeviceError(f"v_ds must be non-negative, got {v_ds}")
    overdrive = v_gs - v_th_isfet(device, sample)
    if overdrive <= 0:
        return CUTOFF
    if overdrive <= v_ds:
        return SATURATION
    return LINEAR
