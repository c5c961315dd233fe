"""Line-oriented ``key = value`` files: tool config, key bindings, scenarios.

Tool config::

    [device]
    k_factor = 2e-4
    alpha = 0.98422
    [cvcc]
    i_bias = 50e-6
    [paths]
    netlist = demo_locked.bench

Missing values fall back to the shipped Table-II calibration; unknown
sections or keys are rejected.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .device import ElectroChemParams, IsfetDevice, MosfetParams, SolutionSample
from .keygen import BitBinding, KeyBinding, check_windows
from .readout import CvccParams


class ConfigError(ValueError):
    pass


DEVICE_KEYS = ("k_factor", "v_th0", "e0", "ph_ref", "alpha", "sign")
CVCC_KEYS = tuple(f.name for f in fields(CvccParams))
PATH_KEYS = ("netlist", "locked", "binding", "scenario", "out")
BIT_KEYS = ("target_ph", "expected_v_out", "tolerance", "bind_temp_celsius")


@dataclass(frozen=True)
class ToolConfig:
    device: IsfetDevice = field(default_factory=IsfetDevice)
    cvcc: CvccParams = field(default_factory=CvccParams)
    paths: dict = field(default_factory=dict)


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
        interpolation=None, default_section="__none__",
    )
    p.optionxform = str
    return p


def _read(text: str, source: str) -> configparser.ConfigParser:
    p = _parser()
    try:
        p.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return p


def _float(section, key, source) -> float:
    raw = section[key]
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{source}: [{section.name}] {key} = {raw!r} is not a number") from None


def _check_keys(section, allowed, source):
    unknown = [k for k in section if k not in allowed]
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) {unknown} in [{section.name}]")


def parse_config(text: str, source: str = "<config>") -> ToolConfig:
    p = _read(text, source)
    unknown = [s for s in p.sections() if s not in ("device", "cvcc", "paths")]
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {unknown}")
    mosfet, chem, cvcc, paths = MosfetParams(), ElectroChemParams(), CvccParams(), {}
    try:
        if p.has_section("device"):
            sec = p["device"]
            _check_keys(sec, DEVICE_KEYS, source)
            vals = {k: _float(sec, k, source) for k in sec}
            if "sign" in vals:
                if vals["sign"] not in (1.0, -1.0):
                    raise ConfigError(f"{source}: [device] sign must be +1 or -1")
                vals["sign"] = int(vals["sign"])
            mosfet = replace(mosfet, **{k: v for k, v in vals.items() if k in ("k_factor", "v_th0")})
            chem = replace(chem, **{k: v for k, v in vals.items() if k in ("e0", "ph_ref", "alpha", "sign")})
        if p.has_section("cvcc"):
            sec = p["cvcc"]
            _check_keys(sec, CVCC_KEYS, source)
            cvcc = replace(cvcc, **{k: _float(sec, k, source) for k in sec})
        if p.has_section("paths"):
            sec = p["paths"]
            _check_keys(sec, PATH_KEYS, source)
            paths = dict(sec)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return ToolConfig(IsfetDevice(mosfet, chem), cvcc, paths)


def load_config(path: str | Path | None) -> ToolConfig:
    if path is None:
        return ToolConfig()
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def _opt_float(raw: str) -> float | None:
    return None if raw.strip().lower() in ("", "none", "-") else float(raw)


def parse_binding(text: str, source: str = "<binding>") -> KeyBinding:
    """One ``[bit N]`` section per key bit, N dense from 0.

    0-bits carry ``target_ph = none`` and ``expected_v_out = none``.
    """
    p = _read(text, source)
    bits = {}
    for name in p.sections():
        parts = name.split()
        if len(parts) != 2 or parts[0] != "bit" or not parts[1].isdigit():
            raise ConfigError(f"{source}: unexpected section [{name}], expected [bit <N>]")
        sec = p[name]
        _check_keys(sec, BIT_KEYS, source)
        missing = [k for k in BIT_KEYS if k not in sec]
        if missing:
            raise ConfigError(f"{source}: [{name}] missing {missing}")
        try:
            bits[int(parts[1])] = BitBinding(
                target_ph=_opt_float(sec["target_ph"]),
                expected_v_out=_opt_float(sec["expected_v_out"]),
                tolerance=float(sec["tolerance"]),
                bind_temp_celsius=float(sec["bind_temp_celsius"]),
            )
        except ValueError as exc:
            raise ConfigError(f"{source}: [{name}] {exc}") from None
    if sorted(bits) != list(range(len(bits))):
        raise ConfigError(f"{source}: bit sections must be numbered densely from 0, got {sorted(bits)}")
    if not bits:
        raise ConfigError(f"{source}: no [bit N] sections")
    binding = KeyBinding(tuple(bits[i] for i in range(len(bits))))
    try:
        check_windows(binding)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return binding


def format_binding(binding: KeyBinding) -> str:
    def fmt(v):
        return "none" if v is None else repr(float(v))

    blocks = []
    for i, b in enumerate(binding.bits):
        blocks.append(
            f"[bit {i}]\n"
            f"target_ph = {fmt(b.target_ph)}\n"
            f"expected_v_out = {fmt(b.expected_v_out)}\n"
            f"tolerance = {fmt(b.tolerance)}\n"
            f"bind_temp_celsius = {fmt(b.bind_temp_celsius)}\n"
        )
    return "\n".join(blocks)


def parse_scenario(text: str, source: str = "<scenario>") -> list[SolutionSample]:
    """One ``ph,temp_celsius`` pair per line; an optional header and ``#`` comments are skipped."""
    samples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.replace(" ", "").lower() == "ph,temp_celsius":
            continue
        parts = [s.strip() for s in line.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"{source}:{lineno}: expected 'ph,temp_celsius', got {raw!r}")
        try:
            samples.append(SolutionSample(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return samples
