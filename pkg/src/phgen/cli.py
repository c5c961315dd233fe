"""Command-line front end.

Exit codes: 0 success/unlocked, 2 usage or parse error, 3 corrupted verdict,
4 infeasible bias or size limit.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import config as cfg
from .device import SolutionSample
from .keygen import (
    DEFAULT_PH_RANGE,
    DEFAULT_TOLERANCE,
    KeygenError,
    bind_key,
    format_robustness_csv,
    read_bits,
    robustness_eval,
    NoiseModel,
)
from .locking import (
    STRATEGIES,
    LockingError,
    LockRequest,
    activated_oracle,
    brute_force_attack,
    insert_key_gates,
    verify_unlock,
)
from .netlist import (
    NetlistError,
    SizeLimitError,
    format_truth_table_csv,
    key_from_string,
    key_to_string,
    parse_bench,
    simulate,
    to_bench,
    truth_table,
)
from .readout import (
    BiasInfeasibleError,
    RailViolationError,
    ReadoutError,
    fit_slope,
    format_sweep_csv,
    solve_operating_point,
    sweep,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CORRUPTED = 3
EXIT_INFEASIBLE = 4

DEMO_PH = 5.8
DEMO_WRONG_PH = 7.0
DEMO_TEMP = 24.0


class UsageError(Exception):
    pass


def data_path(name: str) -> Path:
    return Path(str(resources.files("phgen") / "data" / name))


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(args, msg: str):
    if not args.quiet:
        print(msg)


def format_current(amps: float) -> str:
    mantissa, exp = f"{amps:.3e}".split("e")
    return f"{mantissa}e{int(exp)}"


def format_operating_point(op) -> str:
    return (
        f"V_D={op.v_d:.3f} V_S={op.v_s:.3f} V_DS={op.v_ds:.3f} "
        f"I_DS={format_current(op.i_ds)} V_OUT={op.v_out:.3f}"
    )


def _parse_key(bits: str | None) -> tuple[int, ...] | None:
    if bits is None:
        return None
    try:
        return key_from_string(bits)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_lock(args) -> int:
    nl = parse_bench(_read_text(args.netlist))
    key = _parse_key(args.key)
    if key is not None and len(key) != args.key_bits:
        raise UsageError(f"--key has {len(key)} bits but --key-bits is {args.key_bits}")
    locked = insert_key_gates(nl, LockRequest(args.key_bits, args.strategy, args.seed, key))
    _emit(to_bench(locked.netlist), args.out)
    if args.out:
        for i, wire, kind in locked.site_report:
            _say(args, f"site {i}: {wire} <- {kind} keyinput{i}")
        _say(args, f"key={key_to_string(locked.correct_key)}")
        for w in locked.warnings:
            print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_truth_table(args) -> int:
    nl = parse_bench(_read_text(args.netlist))
    key = _parse_key(args.key)
    if key is None:
        key = nl.stored_key if nl.stored_key is not None else ()
    _emit(format_truth_table_csv(nl, truth_table(nl, key)), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    conf = cfg.load_config(args.config)
    if args.at is not None:
        op = solve_operating_point(conf.device, SolutionSample(args.at, args.temp), conf.cvcc)
        print(f"pH={args.at:g} T={args.temp:g}C {format_operating_point(op)}")
        return EXIT_OK
    if args.steps < 2:
        raise UsageError(f"--steps must be at least 2, got {args.steps}")
    if not args.start < args.end:
        raise UsageError("--start must be below --end")
    points = sweep(conf.device, conf.cvcc, args.start, args.end, args.steps, args.temp)
    _emit(format_sweep_csv(points), args.out)
    slope = fit_slope(points)
    _say(args, f"# slope_v_per_ph={slope:.9f} abs_slope_mv_per_ph={abs(slope) * 1e3:.4f}")
    return EXIT_OK


def cmd_bind(args) -> int:
    conf = cfg.load_config(args.config)
    key = _parse_key(args.key)
    ph_range = None if args.any_ph else DEFAULT_PH_RANGE
    binding = bind_key(conf.device, conf.cvcc, key, args.ph or [], args.temp, args.tolerance, ph_range)
    _emit(cfg.format_binding(binding), args.out)
    return EXIT_OK


def _load_samples(args, n_bits: int):
    samples = cfg.parse_scenario(_read_text(args.scenario), args.scenario)
    if len(samples) != n_bits:
        raise UsageError(
            f"incomplete scenario: {args.scenario} lists {len(samples)} readings, binding needs {n_bits}"
        )
    return samples


def _derive(args, conf):
    binding = cfg.parse_binding(_read_text(args.binding), args.binding)
    samples = _load_samples(args, len(binding))
    noise = NoiseModel(args.sigma, args.seed) if args.sigma else None
    return read_bits(conf.device, conf.cvcc, binding, samples, noise)


def cmd_derive(args) -> int:
    conf = cfg.load_config(args.config)
    readings = _derive(args, conf)
    for r in readings:
        _say(args, f"bit {r.bit}: v_out={r.v_out:.6f} V derived={r.derived} bound={r.bound}"
                   + (" FLIPPED" if r.flipped else ""))
    print(f"key={key_to_string([r.derived for r in readings])}")
    return EXIT_OK


def cmd_verify(args) -> int:
    conf = cfg.load_config(args.config)
    locked = parse_bench(_read_text(args.locked))
    if args.original:
        reference, reference_key = parse_bench(_read_text(args.original)), ()
    elif locked.stored_key is not None:
        reference, reference_key = locked, locked.stored_key
    else:
        raise UsageError("locked netlist has no '# key=' line; pass --original")
    readings = _derive(args, conf)
    key = tuple(r.derived for r in readings)
    if len(key) != locked.n_keys:
        raise UsageError(f"binding yields {len(key)} key bits, netlist has {locked.n_keys} key inputs")
    result = verify_unlock(reference, locked, key, original_key=reference_key)
    print(f"key={key_to_string(key)}")
    print(result.verdict)
    if result.unlocked:
        return EXIT_OK
    print(f"counterexample={result.counterexample}")
    if not args.quiet:
        want = simulate(reference, reference_key)
        got = simulate(locked, key, input_order=reference.primary_inputs)
        cols = [locked.outputs.index(o) for o in reference.outputs]
        got = got[:, cols]
        print("pattern,expected,got")
        for p in np.flatnonzero(np.any(want != got, axis=1)):
            pat = format(int(p), f"0{reference.n_inputs}b")
            print(f"{pat},{''.join(map(str, want[p]))},{''.join(map(str, got[p]))}")
    return EXIT_CORRUPTED


def cmd_attack(args) -> int:
    locked = parse_bench(_read_text(args.locked))
    if args.original:
        original = parse_bench(_read_text(args.original))
        oracle = activated_oracle(original)
    else:
        key = _parse_key(args.key) if args.key is not None else locked.stored_key
        if key is None:
            key = ()
        if len(key) != locked.n_keys:
            raise UsageError("oracle key length does not match the netlist; pass --key or --original")
        oracle = activated_oracle(locked, key)
    report = brute_force_attack(locked, oracle)
    _emit(report.to_csv(), args.out)
    if report.ambiguous:
        print(f"warning: {len(report.consistent_keys)} keys are consistent with the oracle", file=sys.stderr)
    return EXIT_OK


def cmd_robustness(args) -> int:
    conf = cfg.load_config(args.config)
    binding = cfg.parse_binding(_read_text(args.binding), args.binding)
    rows = robustness_eval(conf.device, conf.cvcc, binding, args.sigma, args.trials, args.seed)
    _emit(format_robustness_csv(rows), args.out)
    _say(args, f"# worst_ber={max(r.ber for r in rows):.6e}")
    return EXIT_OK


def demo_report() -> str:
    """Operating point plus both truth-table columns of the demonstrator."""
    conf = cfg.ToolConfig()
    device, cvcc = conf.device, conf.cvcc
    op = solve_operating_point(device, SolutionSample(DEMO_PH, DEMO_TEMP), cvcc)
    locked = parse_bench(data_path("demo_locked.bench").read_text())
    binding = bind_key(device, cvcc, [1], [DEMO_PH], DEMO_TEMP, DEFAULT_TOLERANCE)
    right = read_bits(device, cvcc, binding, [SolutionSample(DEMO_PH, DEMO_TEMP)])[0]
    wrong = read_bits(device, cvcc, binding, [SolutionSample(DEMO_WRONG_PH, DEMO_TEMP)])[0]
    lo, hi = binding.bits[0].window
    good = truth_table(locked, (right.derived,))
    bad = truth_table(locked, (wrong.derived,))
    lines = [
        f"operating point pH={DEMO_PH} T={DEMO_TEMP:.1f}C",
        format_operating_point(op),
        f"comparator window [{lo:.4f}, {hi:.4f}] V",
        f"pH={DEMO_PH} V_OUT={right.v_out:.3f} key={right.derived}",
        f"pH={DEMO_WRONG_PH} V_OUT={wrong.v_out:.3f} key={wrong.derived}",
        f"inputs,led(key={right.derived}),led(key={wrong.derived})",
    ]
    lines += [f"{p},{a},{b}" for (p, a), (_, b) in zip(good, bad)]
    differ = sum(a != b for (_, a), (_, b) in zip(good, bad))
    lines.append(f"differing_rows={differ}")
    return "\n".join(lines) + "\n"


def cmd_demo(args) -> int:
    _emit(demo_report(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="device/cvcc configuration file")
    common.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--quiet", action="store_true", help="suppress informational output")

    parser = argparse.ArgumentParser(prog="phgen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lock", parents=[common], help="insert key gates into a BENCH netlist")
    p.add_argument("netlist")
    p.add_argument("--key-bits", type=int, default=1)
    p.add_argument("--strategy", choices=STRATEGIES, default="random")
    p.add_argument("--key", help="correct key bits, highest index first (default: drawn from seed)")
    p.set_defaults(func=cmd_lock)

    p = sub.add_parser("truth-table", parents=[common], help="exhaustive truth table as CSV")
    p.add_argument("netlist")
    p.add_argument("--key", help="key bits, highest index first (default: stored key)")
    p.set_defaults(func=cmd_truth_table)

    p = sub.add_parser("sweep", parents=[common], help="readout voltage versus pH")
    p.add_argument("--start", type=float, default=4.0)
    p.add_argument("--end", type=float, default=9.0)
    p.add_argument("--steps", type=int, default=6)
    p.add_argument("--temp", type=float, default=30.0, help="temperature in Celsius")
    p.add_argument("--at", type=float, help="print the operating point at a single pH instead")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bind", parents=[common], help="bind key bits to target pH values")
    p.add_argument("--key", required=True, help="key bits, highest index first")
    p.add_argument("--ph", type=float, action="append", help="target pH for each 1-bit, lowest index first")
    p.add_argument("--temp", type=float, default=24.0)
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--any-ph", action="store_true", help="lift the default pH policy range")
    p.set_defaults(func=cmd_bind)

    for name, func, text in (("derive", cmd_derive, "derive a key from solution readings"),
                             ("verify", cmd_verify, "derive a key and check it unlocks a netlist")):
        p = sub.add_parser(name, parents=[common], help=text)
        if name == "verify":
            p.add_argument("locked")
            p.add_argument("--original", help="unlocked reference netlist (default: stored key)")
        p.add_argument("--binding", required=True)
        p.add_argument("--scenario", required=True)
        p.add_argument("--sigma", type=float, default=0.0, help="output noise sigma in volts")
        p.set_defaults(func=func)

    p = sub.add_parser("attack", parents=[common], help="enumerate keys against an activated oracle")
    p.add_argument("locked")
    p.add_argument("--key", help="oracle key (default: stored key)")
    p.add_argument("--original", help="use this unlocked netlist as the oracle")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("robustness", parents=[common], help="Monte Carlo bit-error rate")
    p.add_argument("--binding", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("demo", parents=[common], help="reproduce the demonstrator tables")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 0 <= args.seed < 2**64:
        parser.error("--seed must be a 64-bit unsigned integer")
    try:
        return args.func(args)
    except (SizeLimitError, BiasInfeasibleError, RailViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, NetlistError, cfg.ConfigError, LockingError, KeygenError, ReadoutError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
