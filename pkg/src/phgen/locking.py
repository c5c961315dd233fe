"""Key-gate insertion, unlock verification and a desk-scale oracle attack."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .netlist import (
    MAX_EXHAUSTIVE_INPUTS,
    Gate,
    GateKind,
    Netlist,
    SizeLimitError,
    build_netlist,
    compile_netlist,
    equivalent,
    key_from_string,
    pattern_string,
    simulate,
)

RANDOM = "random"
FANOUT_WEIGHTED = "fanout_weighted"
STRATEGIES = (RANDOM, FANOUT_WEIGHTED)

MAX_ATTACK_KEY_BITS = 16
MAX_ATTACK_INPUTS = 16


class LockingError(ValueError):
    pass


class SiteShortageError(LockingError):
    pass


@dataclass(frozen=True)
class LockRequest:
    num_key_bits: int
    strategy: str = RANDOM
    seed: int = 0
    correct_key: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.num_key_bits < 1:
            raise LockingError(f"num_key_bits must be at least 1, got {self.num_key_bits}")
        if self.strategy not in STRATEGIES:
            raise LockingError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if not 0 <= self.seed < 2**64:
            raise LockingError("seed must be a 64-bit unsigned integer")
        if self.correct_key is not None:
            if len(self.correct_key) != self.num_key_bits:
                raise LockingError("correct_key length differs from num_key_bits")
            if any(b not in (0, 1) for b in self.correct_key):
                raise LockingError("correct_key must contain only 0/1")


@dataclass(frozen=True)
class LockedNetlist:
    netlist: Netlist
    correct_key: tuple[int, ...]
    site_report: tuple[tuple[int, str, str], ...]
    verified: bool | None = None
    warnings: tuple[str, ...] = ()


def lockable_wires(netlist: Netlist) -> list[str]:
    """Wires that can host a key gate, in declaration order.

    Primary inputs need at least one reader and must not be outputs
    themselves; gate outputs need a reader or must be observed as outputs.
    """
    fanout = netlist.fanout_counts()
    outs = set(netlist.outputs)
    wires = [n for n in netlist.primary_inputs if fanout[n] > 0 and n not in outs]
    wires += [g.output for g in netlist.gates if fanout[g.output] > 0 or g.output in outs]
    return wires


def _select_sites(netlist: Netlist, request: LockRequest, rng: np.random.Generator) -> list[str]:
    wires = lockable_wires(netlist)
    if request.num_key_bits > len(wires):
        raise SiteShortageError(
            f"{request.num_key_bits} key bits requested but only {len(wires)} lockable wires exist"
        )
    if request.strategy == RANDOM:
        p = None
    else:
        fanout = netlist.fanout_counts()
        outs = set(netlist.outputs)
        w = np.array([fanout[n] + (n in outs) for n in wires], dtype=float)
        p = w / w.sum()
    picks = rng.choice(len(wires), size=request.num_key_bits, replace=False, p=p)
    return [wires[int(i)] for i in picks]


def _fresh(name: str, taken: set[str]) -> str:
    cand, n = name, 0
    while cand in taken:
        n += 1
        cand = f"{name}_{n}"
    taken.add(cand)
    return cand


def insert_key_gates(netlist: Netlist, request: LockRequest) -> LockedNetlist:
    """Insert one XOR/XNOR key gate per key bit on distinct wires.

    A key bit of 0 gets an XOR gate and a key bit of 1 an XNOR gate, so each
    gate is transparent exactly at its correct key value. The result is
    checked exhaustively against ``netlist`` when it has at most 20 inputs.
    """
    if netlist.n_keys:
        raise LockingError("netlist already has key inputs; lock an unlocked design")
    rng = np.random.default_rng(request.seed)
    sites = _select_sites(netlist, request, rng)
    if request.correct_key is None:
        key = tuple(int(b) for b in rng.integers(0, 2, size=request.num_key_bits))
    else:
        key = tuple(request.correct_key)

    taken = {*netlist.primary_inputs, *(g.output for g in netlist.gates)}
    key_nets = [f"keyinput{i}" for i in range(len(sites))]
    renamed: dict[str, str] = {}  # gate-driven wire -> new name of its original driver
    rewired: dict[str, str] = {}  # primary input -> key gate output
    report = []
    key_gates_after: dict[str | None, list[Gate]] = {}
    for i, wire in enumerate(sites):
        kind = GateKind.XNOR if key[i] else GateKind.XOR
        report.append((i, wire, kind.value))
        if wire in netlist.primary_inputs:
            locked_net = _fresh(f"{wire}_lk{i}", taken)
            rewired[wire] = locked_net
            key_gates_after.setdefault(None, []).append(Gate(locked_net, kind, (wire, key_nets[i])))
        else:
            pre = _fresh(f"{wire}_lk{i}", taken)
            renamed[wire] = pre
            key_gates_after.setdefault(wire, []).append(Gate(wire, kind, (pre, key_nets[i])))

    gates = list(key_gates_after.get(None, []))
    for g in netlist.gates:
        inputs = tuple(rewired.get(n, n) for n in g.inputs)
        gates.append(Gate(renamed.get(g.output, g.output), g.kind, inputs))
        gates.extend(key_gates_after.get(g.output, []))

    locked = build_netlist(
        [*netlist.primary_inputs, *key_nets],
        netlist.outputs,
        gates,
        stored_key=key,
        sites=report,
    )
    verified, warnings = None, []
    if netlist.n_inputs <= MAX_EXHAUSTIVE_INPUTS:
        res = equivalent(netlist, locked, key)
        if not res:
            raise LockingError(f"locked netlist differs from original at pattern {res.counterexample}")
        verified = True
    else:
        warnings.append(f"{netlist.n_inputs} inputs exceed the exhaustive limit; correct-key check skipped")
    return LockedNetlist(locked, key, tuple(report), verified, tuple(warnings))


@dataclass(frozen=True)
class UnlockResult:
    unlocked: bool
    counterexample: str | None = None
    differing_patterns: int = 0

    @property
    def verdict(self) -> str:
        return "UNLOCKED" if self.unlocked else "CORRUPTED"


def verify_unlock(original: Netlist, locked: LockedNetlist | Netlist, key: Sequence[int], original_key: Sequence[int] = ()) -> UnlockResult:
    locked_nl = locked.netlist if isinstance(locked, LockedNetlist) else locked
    res = equivalent(original, locked_nl, tuple(key), key_for_a=tuple(original_key))
    return UnlockResult(res.equivalent, res.counterexample, res.differing_patterns)


@dataclass(frozen=True)
class BitCorruption:
    bit: int
    wire: str | None
    corrupted_patterns: int
    total_patterns: int
    first_counterexample: str | None

    @property
    def fraction(self) -> float:
        return self.corrupted_patterns / self.total_patterns

    @property
    def redundant(self) -> bool:
        """Flipping this bit changes no output: the key gate sits on an unobservable wire."""
        return self.corrupted_patterns == 0


def corruption_report(original: Netlist, locked: LockedNetlist) -> list[BitCorruption]:
    """Flip each key bit alone and count the input patterns whose outputs change."""
    wires = {i: w for i, w, _ in locked.site_report}
    comp = compile_netlist(locked.netlist)
    reference = simulate(original)
    cols = [locked.netlist.outputs.index(o) for o in original.outputs]
    out = []
    for i in range(len(locked.correct_key)):
        wrong = list(locked.correct_key)
        wrong[i] ^= 1
        table = simulate(locked.netlist, wrong, input_order=original.primary_inputs, compiled=comp)
        diff = np.flatnonzero(np.any(table[:, cols] != reference, axis=1))
        first = pattern_string(int(diff[0]), original.n_inputs) if diff.size else None
        out.append(BitCorruption(i, wires.get(i), int(diff.size), len(reference), first))
    return out


Oracle = Callable[[np.ndarray], np.ndarray]


def activated_oracle(netlist: Netlist, key: Sequence[int] = ()) -> Oracle:
    """Black box answering ``(m, n)`` input patterns with ``(m, n_out)`` outputs."""
    table = simulate(netlist, tuple(key))
    weights = 1 << np.arange(netlist.n_inputs - 1, -1, -1, dtype=np.int64)

    def query(patterns: np.ndarray) -> np.ndarray:
        idx = np.asarray(patterns, dtype=np.int64) @ weights if netlist.n_inputs else np.zeros(len(patterns), dtype=np.int64)
        return table[idx]

    return query


@dataclass(frozen=True)
class AttackReport:
    rows: tuple[tuple[str, int, bool], ...]
    n_patterns: int

    @property
    def consistent_keys(self) -> set[str]:
        return {k for k, _, ok in self.rows if ok}

    @property
    def ambiguous(self) -> bool:
        """More than one key explains the oracle, e.g. because a key gate is redundant."""
        return len(self.consistent_keys) > 1

    def to_csv(self) -> str:
        lines = ["key,match_count,consistent"]
        lines += [f"{k},{m},{int(ok)}" for k, m, ok in self.rows]
        return "\n".join(lines) + "\n"


def brute_force_attack(locked: LockedNetlist | Netlist, oracle: Oracle) -> AttackReport:
    """Try every key against the oracle's full truth table.

    Keys are reported as bit strings (highest key index first) in ascending
    numeric order.
    """
    nl = locked.netlist if isinstance(locked, LockedNetlist) else locked
    if nl.n_keys > MAX_ATTACK_KEY_BITS:
        raise SizeLimitError(f"{nl.n_keys} key bits exceed the attack limit of {MAX_ATTACK_KEY_BITS}")
    if nl.n_inputs > MAX_ATTACK_INPUTS:
        raise SizeLimitError(f"{nl.n_inputs} inputs exceed the attack limit of {MAX_ATTACK_INPUTS}")
    n = nl.n_inputs
    patterns = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8).reshape(1 << n, n)
    expected = np.asarray(oracle(patterns), dtype=np.uint8)
    comp = compile_netlist(nl)
    rows = []
    for value in range(1 << nl.n_keys):
        bits = format(value, f"0{nl.n_keys}b") if nl.n_keys else ""
        table = simulate(nl, key_from_string(bits), compiled=comp)
        matches = int(np.all(table == expected, axis=1).sum())
        rows.append((bits, matches, matches == len(patterns)))
    return AttackReport(tuple(rows), len(patterns))

