"""pH-to-key pipeline.

A key bit of value 1 is bound to a target pH: the readout voltage the chain
produces for that pH at binding time becomes the centre of a comparator
window. At derivation time each bit gets one solution reading; a reading
inside its own window yields 1, anything else 0. Bits bound to 0 have no
target and only read 1 if the voltage happens to land in some declared
window.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .device import IsfetDevice, SolutionSample
from .readout import CvccParams, solve_operating_point

DEFAULT_TOLERANCE = 0.0296
DEFAULT_PH_RANGE = (5.8, 8.0)
WRONG_KEY_VOLTAGE = 0.0


class KeygenError(ValueError):
    pass


class PhPolicyError(KeygenError):
    pass


class OverlappingWindowError(KeygenError):
    pass


@dataclass(frozen=True)
class BitBinding:
    """Comparator window of one key bit; ``target_ph`` is None for 0-bits."""

    target_ph: float | None
    expected_v_out: float | None
    tolerance: float
    bind_temp_celsius: float

    def __post_init__(self):
        if not self.tolerance > 0:
            raise KeygenError(f"tolerance must be positive, got {self.tolerance}")
        if (self.target_ph is None) != (self.expected_v_out is None):
            raise KeygenError("target_ph and expected_v_out must both be set or both be empty")

    @property
    def bound_bit(self) -> int:
        return 0 if self.target_ph is None else 1

    @property
    def window(self) -> tuple[float, float] | None:
        if self.expected_v_out is None:
            return None
        return (self.expected_v_out - self.tolerance, self.expected_v_out + self.tolerance)


@dataclass(frozen=True)
class KeyBinding:
    bits: tuple[BitBinding, ...]

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(b.bound_bit for b in self.bits)

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True)
class NoiseModel:
    sigma_volts: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma_volts >= 0:
            raise KeygenError(f"sigma_volts must be non-negative, got {self.sigma_volts}")


def chain_output(device: IsfetDevice, cvcc: CvccParams, sample: SolutionSample) -> float:
    return solve_operating_point(device, sample, cvcc).v_out


def comparator(v_out: float, expected: float, tolerance: float) -> int:
    """1 iff ``v_out`` lies in the closed window ``expected +- tolerance``."""
    if not tolerance > 0:
        raise KeygenError(f"tolerance must be positive, got {tolerance}")
    return int(abs(v_out - expected) <= tolerance)


def bind_key(
    device: IsfetDevice,
    cvcc: CvccParams,
    key: Sequence[int],
    ph_targets: Sequence[float],
    temp_celsius: float,
    tolerance: float = DEFAULT_TOLERANCE,
    ph_range: tuple[float, float] | None = DEFAULT_PH_RANGE,
) -> KeyBinding:
    """Bind every 1-bit of ``key`` to the next entry of ``ph_targets``.

    ``ph_range=None`` lifts the pH policy restriction.
    """
    key = tuple(int(b) for b in key)
    if any(b not in (0, 1) for b in key):
        raise KeygenError("key must contain only 0/1")
    n_ones = sum(key)
    if len(ph_targets) != n_ones:
        raise KeygenError(f"{n_ones} key bits are 1 but {len(ph_targets)} pH targets were given")
    targets = iter(ph_targets)
    bits = []
    for b in key:
        if not b:
            bits.append(BitBinding(None, None, tolerance, temp_celsius))
            continue
        ph = float(next(targets))
        if ph_range is not None and not (ph_range[0] <= ph <= ph_range[1]):
            raise PhPolicyError(f"target pH {ph} outside the allowed range [{ph_range[0]}, {ph_range[1]}]")
        v = chain_output(device, cvcc, SolutionSample(ph, temp_celsius))
        bits.append(BitBinding(ph, v, tolerance, temp_celsius))
    binding = KeyBinding(tuple(bits))
    check_windows(binding)
    return binding


def check_windows(binding: KeyBinding) -> None:
    """Reject bindings where two 1-bits could be asserted by the same voltage.

    Bits sharing the same target pH share one window and are allowed.
    """
    ones = [b for b in binding.bits if b.bound_bit]
    for i, a in enumerate(ones):
        for b in ones[i + 1:]:
            if a.target_ph == b.target_ph and a.bind_temp_celsius == b.bind_temp_celsius:
                continue
            if abs(a.expected_v_out - b.expected_v_out) <= a.tolerance + b.tolerance:
                raise OverlappingWindowError(
                    f"windows around {a.expected_v_out:.6f} V (pH {a.target_ph}) and "
                    f"{b.expected_v_out:.6f} V (pH {b.target_ph}) overlap"
                )


@dataclass(frozen=True)
class BitReading:
    bit: int
    v_out: float
    derived: int
    bound: int
    offset_volts: float | None  # distance from this bit's window centre

    @property
    def flipped(self) -> bool:
        return self.derived != self.bound


def _any_window(v: float, binding: KeyBinding) -> int:
    return int(any(comparator(v, b.expected_v_out, b.tolerance) for b in binding.bits if b.bound_bit))


def read_bits(
    device: IsfetDevice,
    cvcc: CvccParams,
    binding: KeyBinding,
    samples: Sequence[SolutionSample],
    noise: NoiseModel | None = None,
) -> list[BitReading]:
    """Per-bit readings with the voltage, the derived bit and the window offset."""
    if len(samples) != len(binding):
        raise KeygenError(f"binding has {len(binding)} bits but {len(samples)} samples were given")
    if noise is not None and noise.sigma_volts > 0:
        jitter = np.random.default_rng(noise.seed).normal(0.0, noise.sigma_volts, size=len(samples))
    else:
        jitter = np.zeros(len(samples))
    out = []
    for i, (bb, sample) in enumerate(zip(binding.bits, samples)):
        v = chain_output(device, cvcc, sample) + float(jitter[i])
        if bb.bound_bit:
            derived = comparator(v, bb.expected_v_out, bb.tolerance)
            offset = v - bb.expected_v_out
        else:
            derived = _any_window(v, binding)
            offset = None
        out.append(BitReading(i, v, derived, bb.bound_bit, offset))
    return out


def derive_key(
    device: IsfetDevice,
    cvcc: CvccParams,
    binding: KeyBinding,
    samples: Sequence[SolutionSample],
    noise: NoiseModel | None = None,
) -> tuple[int, ...]:
    return tuple(r.derived for r in read_bits(device, cvcc, binding, samples, noise))


@dataclass(frozen=True)
class RobustnessRow:
    bit: int
    sigma_volts: float
    trials: int
    errors: int

    @property
    def ber(self) -> float:
        return self.errors / self.trials


def robustness_eval(
    device: IsfetDevice,
    cvcc: CvccParams,
    binding: KeyBinding,
    noise_sigma: float,
    trials: int,
    seed: int = 0,
) -> list[RobustnessRow]:
    """Monte Carlo bit-error rate under additive Gaussian noise at the output node.

    1-bits are read at their bound pH and temperature; 0-bits are read at
    the wrong-key voltage of 0 V. Every bit draws from its own stream seeded
    by ``(seed, bit)``, so a larger sigma scales the same standard-normal
    draws and results never depend on evaluation order.
    """
    if trials < 1:
        raise KeygenError(f"trials must be at least 1, got {trials}")
    if noise_sigma < 0:
        raise KeygenError(f"noise_sigma must be non-negative, got {noise_sigma}")
    windows = np.array([b.window for b in binding.bits if b.bound_bit]).reshape(-1, 2)
    rows = []
    for i, bb in enumerate(binding.bits):
        z = np.random.default_rng([seed, i]).standard_normal(trials)
        if bb.bound_bit:
            v0 = chain_output(device, cvcc, SolutionSample(bb.target_ph, bb.bind_temp_celsius))
            v = v0 + noise_sigma * z
            hit = np.abs(v - bb.expected_v_out) <= bb.tolerance
            errors = int(np.count_nonzero(~hit))
        else:
            v = WRONG_KEY_VOLTAGE + noise_sigma * z
            hit = np.zeros(trials, dtype=bool)
            for lo, hi in windows:
                hit |= (v >= lo) & (v <= hi)
            errors = int(np.count_nonzero(hit))
        rows.append(RobustnessRow(i, float(noise_sigma), trials, errors))
    return rows


def format_robustness_csv(rows: Sequence[RobustnessRow]) -> str:
    lines = ["bit,sigma_volts,trials,errors,ber"]
    lines += [f"{r.bit},{r.sigma_volts:.6g},{r.trials},{r.errors},{r.ber:.6e}" for r in rows]
    return "\n".join(lines) + "\n"
