"""Constant-voltage constant-current (CVCC) readout model.

The readout forces I_DS = i_bias through the ISFET and holds V_DS = r1 * i_bias.
With the gate tied to ground, V_GS = -V_S, so the source node settles wherever
the drain-current law returns exactly i_bias. A buffer/level stage maps V_S to
the output pin: v_out = output_gain * v_s + output_offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .device import (
    LINEAR,
    IsfetDevice,
    SolutionSample,
    drain_current,
    effective_sensitivity,
    region_check,
    v_th_isfet,
)

SOLVE_XTOL = 1e-12
PH_SLACK = 1e-9  # round-off allowance at the ends of the pH scale


class ReadoutError(ValueError):
    pass


class BiasInfeasibleError(ReadoutError):
    def __init__(self, region: str, v_s: float):
        super().__init__(f"operating point v_s={v_s:.6g} V falls in the {region} region, expected linear")
        self.region = region
        self.v_s = v_s


class RailViolationError(ReadoutError):
    pass


class PhRangeError(ReadoutError):
    pass


@dataclass(frozen=True)
class CvccParams:
    i_bias: float = 50e-6
    r1: float = 10e3
    output_gain: float = 1.0
    output_offset: float = 1.87
    v_supply_pos: float = 5.0
    v_supply_neg: float = -5.0

    def __post_init__(self):
        if not self.i_bias > 0:
            raise ReadoutError(f"i_bias must be positive, got {self.i_bias}")
        if not self.r1 > 0:
            raise ReadoutError(f"r1 must be positive, got {self.r1}")
        if not self.v_supply_neg < self.v_supply_pos:
            raise ReadoutError("v_supply_neg must be below v_supply_pos")

    @property
    def v_ds(self) -> float:
        return self.r1 * self.i_bias


@dataclass(frozen=True)
class OperatingPoint:
    v_s: float
    v_d: float
    v_ds: float
    i_ds: float
    v_out: float


def closed_form_v_s(device: IsfetDevice, sample: SolutionSample, cvcc: CvccParams) -> float:
    """Source voltage from inverting the linear-region law by hand."""
    v_ds = cvcc.v_ds
    k = device.mosfet.k_factor
    return -(cvcc.i_bias / (k * v_ds) + v_th_isfet(device, sample) + v_ds / 2)


def output_voltage(op: OperatingPoint, cvcc: CvccParams) -> float:
    return cvcc.output_gain * op.v_s + cvcc.output_offset


def solve_operating_point(device: IsfetDevice, sample: SolutionSample, cvcc: CvccParams) -> OperatingPoint:
    """Solve the CVCC bias point by bracketed root finding on the current residual.

    Raises :class:`RailViolationError` if no source voltage inside the supply
    rails carries i_bias, and :class:`BiasInfeasibleError` if the solution is
    not in the linear region.
    """
    v_ds = cvcc.v_ds

    def residual(v_s):
        return drain_current(device, -v_s, v_ds, sample) - cvcc.i_bias

    lo, hi = cvcc.v_supply_neg, cvcc.v_supply_pos
    f_lo, f_hi = residual(lo), residual(hi)
    if f_lo == 0.0:
        v_s = lo
    elif f_hi == 0.0:
        v_s = hi
    elif np.sign(f_lo) == np.sign(f_hi):
        raise RailViolationError(
            f"no source voltage within [{lo}, {hi}] V sinks i_bias={cvcc.i_bias:g} A"
        )
    else:
        v_s = brentq(residual, lo, hi, xtol=SOLVE_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200)

    region = region_check(device, -v_s, v_ds, sample)
    if region != LINEAR:
        raise BiasInfeasibleError(region, v_s)
    v_d = v_s + v_ds
    if not (lo <= v_d <= hi):
        raise RailViolationError(f"drain node {v_d:.6g} V outside rails [{lo}, {hi}] V")

    v_out = cvcc.output_gain * v_s + cvcc.output_offset
    return OperatingPoint(v_s=v_s, v_d=v_d, v_ds=v_ds, i_ds=cvcc.i_bias, v_out=v_out)


def chain_v_out(device: IsfetDevice, cvcc: CvccParams, ph: float, temp_celsius: float) -> float:
    return solve_operating_point(device, SolutionSample(ph, temp_celsius), cvcc).v_out


def calibrate_ph(device: IsfetDevice, cvcc: CvccParams, v_out: float, temp_celsius: float) -> float:
    """Invert the sensing chain: the pH that produces ``v_out`` at ``temp_celsius``.

    The chain is affine in pH, v_out = v_ref + slope * (ph - ph_ref), with
    slope = -sign * gain * sensitivity, so the inverse is exact.
    """
    chem = device.chem
    slope = -chem.sign * cvcc.output_gain * effective_sensitivity(device, temp_celsius)
    if slope == 0:
        raise ReadoutError("chain has zero pH sensitivity; cannot invert")
    ref = SolutionSample(chem.ph_ref, temp_celsius)
    v_ref = cvcc.output_gain * closed_form_v_s(device, ref, cvcc) + cvcc.output_offset
    ph = chem.ph_ref + (v_out - v_ref) / slope
    if not math.isfinite(ph) or not (-PH_SLACK <= ph <= 14.0 + PH_SLACK):
        raise PhRangeError(f"v_out={v_out} V maps to pH {ph:.4f}, outside [0, 14]")
    return min(max(ph, 0.0), 14.0)


def sweep(
    device: IsfetDevice,
    cvcc: CvccParams,
    ph_start: float,
    ph_end: float,
    steps: int,
    temp_celsius: float,
) -> list[tuple[float, float]]:
    if not ph_start < ph_end:
        raise ReadoutError(f"sweep needs ph_start < ph_end, got {ph_start} >= {ph_end}")
    if steps < 2:
        raise ReadoutError(f"sweep needs at least 2 steps, got {steps}")
    phs = np.linspace(ph_start, ph_end, steps)
    return [(float(ph), chain_v_out(device, cvcc, float(ph), temp_celsius)) for ph in phs]


def fit_slope(points: list[tuple[float, float]]) -> float:
    """Least-squares slope of v_out against pH, volts per pH unit."""
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    return float(np.polyfit(x, y, 1)[0])


def format_sweep_csv(points: list[tuple[float, float]]) -> str:
    lines = ["ph,v_out_volts"]
    lines += [f"{ph:.6f},{v:.9f}" for ph, v in points]
    return "\n".join(lines) + "\n"
