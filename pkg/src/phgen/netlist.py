"""Gate-level combinational netlists in BENCH format.

Grammar, one statement per line::

    INPUT(net)            primary input, or key input if net is keyinput<N>
    OUTPUT(net)
    net = KIND(a, b, ...)
    # key=<bits>          stored correct key, MSB = highest keyinput index
    # site=<i>:<wire>:<kind>

Other ``#`` comments and blank lines are ignored. Gate kinds are
case-insensitive; net names are not.
"""
from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from . import _kernels

MAX_EXHAUSTIVE_INPUTS = 20

KEY_INPUT_RE = re.compile(r"^keyinput(\d+)$")
_NAME = r"[A-Za-z0-9_.\[\]$:\-]+"
_IO_RE = re.compile(rf"^(INPUT|OUTPUT)\s*\(\s*({_NAME})\s*\)$", re.IGNORECASE)
_GATE_RE = re.compile(rf"^({_NAME})\s*=\s*([A-Za-z_]+)\s*\((.*)\)$")
_NET_RE = re.compile(rf"^{_NAME}$")
_KEY_META_RE = re.compile(r"^#\s*key\s*=\s*([01]*)\s*$")
_SITE_META_RE = re.compile(r"^#\s*site\s*=\s*(\d+):(\S+):(\w+)\s*$")


class GateKind(str, Enum):
    AND = "AND"
    NAND = "NAND"
    OR = "OR"
    NOR = "NOR"
    XOR = "XOR"
    XNOR = "XNOR"
    NOT = "NOT"
    BUF = "BUF"

    @property
    def unary(self) -> bool:
        return self in (GateKind.NOT, GateKind.BUF)


_KIND_ALIASES = {"BUFF": GateKind.BUF, "INV": GateKind.NOT}

_OPCODES = {
    GateKind.AND: _kernels.OP_AND,
    GateKind.NAND: _kernels.OP_NAND,
    GateKind.OR: _kernels.OP_OR,
    GateKind.NOR: _kernels.OP_NOR,
    GateKind.XOR: _kernels.OP_XOR,
    GateKind.XNOR: _kernels.OP_XNOR,
    GateKind.NOT: _kernels.OP_NOT,
    GateKind.BUF: _kernels.OP_BUF,
}


class NetlistError(ValueError):
    """Base class for structural netlist problems; carries an optional location."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)


class BenchSyntaxError(NetlistError):
    pass


class UnknownGateError(NetlistError):
    pass


class ArityError(NetlistError):
    pass


class DuplicateDriverError(NetlistError):
    pass


class UndrivenNetError(NetlistError):
    pass


class CycleError(NetlistError):
    def __init__(self, cycle: Sequence[str], line=None, column=None):
        self.cycle = list(cycle)
        super().__init__("combinational cycle through " + " -> ".join(self.cycle), line, column)


class KeyInputError(NetlistError):
    pass


class IncompleteAssignmentError(NetlistError):
    def __init__(self, net: str):
        self.net = net
        super().__init__(f"no value assigned to input net {net!r}")


class InterfaceMismatchError(NetlistError):
    def __init__(self, missing: Sequence[str], extra: Sequence[str]):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        super().__init__(f"interface mismatch: missing {self.missing}, extra {self.extra}")


class SizeLimitError(NetlistError):
    pass


@dataclass(frozen=True)
class Gate:
    output: str
    kind: GateKind
    inputs: tuple[str, ...]
    line: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.output:
            raise NetlistError("gate output name is empty", self.line)
        n = len(self.inputs)
        if self.kind.unary and n != 1:
            raise ArityError(f"{self.kind.value} takes exactly 1 input, got {n}", self.line)
        if not self.kind.unary and n < 2:
            raise ArityError(f"{self.kind.value} takes at least 2 inputs, got {n}", self.line)


@dataclass(frozen=True)
class Netlist:
    """A validated combinational netlist.

    Construct through :func:`build_netlist` or :func:`parse_bench`; both
    check drivers, acyclicity and the key-input naming convention.
    ``stored_key`` and ``sites`` are metadata only and never influence
    evaluation.
    """

    primary_inputs: tuple[str, ...]
    key_inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    gates: tuple[Gate, ...]
    stored_key: tuple[int, ...] | None = None
    sites: tuple[tuple[int, str, str], ...] = ()

    @property
    def n_inputs(self) -> int:
        return len(self.primary_inputs)

    @property
    def n_keys(self) -> int:
        return len(self.key_inputs)

    def driver_map(self) -> dict[str, Gate]:
        return {g.output: g for g in self.gates}

    def fanout_counts(self) -> dict[str, int]:
        counts = {n: 0 for n in (*self.primary_inputs, *self.key_inputs)}
        counts.update({g.output: 0 for g in self.gates})
        for g in self.gates:
            for i in g.inputs:
                counts[i] += 1
        return counts


def key_index(net: str) -> int | None:
    m = KEY_INPUT_RE.match(net)
    return int(m.group(1)) if m else None


def key_to_string(key: Sequence[int]) -> str:
    """Bit string with the highest key index first."""
    return "".join(str(int(b)) for b in reversed(tuple(key)))


def key_from_string(bits: str) -> tuple[int, ...]:
    bits = bits.strip()
    if any(c not in "01" for c in bits):
        raise ValueError(f"key must be a string of 0/1, got {bits!r}")
    return tuple(int(c) for c in reversed(bits))


def pattern_string(index: int, width: int) -> str:
    return format(index, f"0{width}b") if width else ""


def build_netlist(
    inputs: Sequence[str],
    outputs: Sequence[str],
    gates: Sequence[Gate],
    stored_key: Sequence[int] | None = None,
    sites: Sequence[tuple[int, str, str]] = (),
    input_lines: Mapping[str, int] | None = None,
    output_lines: Mapping[str, int] | None = None,
) -> Netlist:
    """Split inputs into primary and key inputs and validate the structure."""
    input_lines = input_lines or {}
    output_lines = output_lines or {}
    primary, keyed = [], {}
    seen: set[str] = set()
    for net in inputs:
        if net in seen:
            raise DuplicateDriverError(f"input {net!r} declared twice", input_lines.get(net))
        seen.add(net)
        idx = key_index(net)
        if idx is None:
            primary.append(net)
        else:
            keyed[idx] = net
    if sorted(keyed) != list(range(len(keyed))):
        raise KeyInputError(f"key inputs must be indexed densely from 0, got indices {sorted(keyed)}")
    key_inputs = tuple(keyed[i] for i in range(len(keyed)))

    drivers = set(seen)
    for g in gates:
        if g.output in drivers:
            raise DuplicateDriverError(f"net {g.output!r} has more than one driver", g.line)
        if key_index(g.output) is not None:
            raise KeyInputError(f"gate output {g.output!r} uses the reserved keyinput name", g.line)
        drivers.add(g.output)
    for g in gates:
        for net in g.inputs:
            if net not in drivers:
                raise UndrivenNetError(f"net {net!r} is used but never driven", g.line)
    if len(set(outputs)) != len(outputs):
        dup = next(o for o in outputs if list(outputs).count(o) > 1)
        raise BenchSyntaxError(f"output {dup!r} declared twice", output_lines.get(dup))
    for out in outputs:
        if out not in drivers:
            raise UndrivenNetError(f"output {out!r} is never driven", output_lines.get(out))

    nl = Netlist(
        primary_inputs=tuple(primary),
        key_inputs=key_inputs,
        outputs=tuple(outputs),
        gates=tuple(gates),
        stored_key=tuple(stored_key) if stored_key is not None else None,
        sites=tuple(sites),
    )
    topo_order(nl)
    if nl.stored_key is not None and len(nl.stored_key) != nl.n_keys:
        raise KeyInputError(f"stored key has {len(nl.stored_key)} bits but netlist has {nl.n_keys} key inputs")
    return nl


def parse_bench(text: str) -> Netlist:
    inputs: list[str] = []
    outputs: list[str] = []
    gates: list[Gate] = []
    input_lines: dict[str, int] = {}
    output_lines: dict[str, int] = {}
    stored_key = None
    sites = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        col = len(raw) - len(raw.lstrip()) + 1
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = _KEY_META_RE.match(stripped)
            if m:
                stored_key = key_from_string(m.group(1))
                continue
            m = _SITE_META_RE.match(stripped)
            if m:
                sites.append((int(m.group(1)), m.group(2), m.group(3).upper()))
            continue
        # trailing comments
        if "#" in stripped:
            stripped = stripped[: stripped.index("#")].rstrip()
        m = _IO_RE.match(stripped)
        if m:
            net = m.group(2)
            if m.group(1).upper() == "INPUT":
                inputs.append(net)
                input_lines.setdefault(net, lineno)
            else:
                outputs.append(net)
                output_lines.setdefault(net, lineno)
            continue
        m = _GATE_RE.match(stripped)
        if not m:
            raise BenchSyntaxError(f"cannot parse statement {stripped!r}", lineno, col)
        out, kind_name, args = m.group(1), m.group(2).upper(), m.group(3)
        try:
            kind = _KIND_ALIASES.get(kind_name) or GateKind(kind_name)
        except ValueError:
            raise UnknownGateError(f"unknown gate kind {m.group(2)!r}", lineno, col + m.start(2)) from None
        nets = [a.strip() for a in args.split(",")] if args.strip() else []
        for a in nets:
            if not _NET_RE.match(a):
                raise BenchSyntaxError(f"bad net name {a!r}", lineno, col + m.start(3))
        gates.append(Gate(out, kind, tuple(nets), line=lineno))
    return build_netlist(inputs, outputs, gates, stored_key, sites, input_lines, output_lines)


def to_bench(netlist: Netlist) -> str:
    lines = []
    if netlist.stored_key is not None:
        lines.append(f"# key={key_to_string(netlist.stored_key)}")
    for idx, wire, kind in netlist.sites:
        lines.append(f"# site={idx}:{wire}:{kind}")
    lines += [f"INPUT({n})" for n in netlist.primary_inputs]
    lines += [f"INPUT({n})" for n in netlist.key_inputs]
    lines += [f"OUTPUT({n})" for n in netlist.outputs]
    lines += [f"{g.output} = {g.kind.value}({', '.join(g.inputs)})" for g in netlist.gates]
    return "\n".join(lines) + "\n"


def _find_cycle(remaining: Sequence[Gate]) -> list[str]:
    drivers = {g.output: g for g in remaining}
    color: dict[str, int] = {}
    stack: list[str] = []

    def dfs(net):
        color[net] = 1
        stack.append(net)
        for nxt in drivers[net].inputs:
            if nxt not in drivers:
                continue
            if color.get(nxt) == 1:
                return stack[stack.index(nxt):] + [nxt]
            if nxt not in color:
                found = dfs(nxt)
                if found:
                    return found
        stack.pop()
        color[net] = 2
        return None

    for g in remaining:
        if g.output not in color:
            found = dfs(g.output)
            if found:
                return found
    return [g.output for g in remaining]


def topo_order(netlist: Netlist) -> list[Gate]:
    """Gates ordered so every driver precedes its readers.

    Among ready gates the one declared first wins, so the order is
    deterministic.
    """
    gates = netlist.gates
    index = {g.output: i for i, g in enumerate(gates)}
    pending = [0] * len(gates)
    readers: list[list[int]] = [[] for _ in gates]
    for i, g in enumerate(gates):
        for net in g.inputs:
            j = index.get(net)
            if j is not None:
                pending[i] += 1
                readers[j].append(i)
    ready = [i for i, n in enumerate(pending) if n == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(gates[i])
        for r in readers[i]:
            pending[r] -= 1
            if pending[r] == 0:
                heapq.heappush(ready, r)
    if len(order) != len(gates):
        remaining = [g for i, g in enumerate(gates) if pending[i] > 0]
        cycle = _find_cycle(remaining)
        line = next((g.line for g in remaining if g.output == cycle[0]), None)
        raise CycleError(cycle, line)
    return order


def _gate_value(kind: GateKind, vals: Sequence[int]) -> int:
    if kind is GateKind.BUF:
        return vals[0]
    if kind is GateKind.NOT:
        return 1 - vals[0]
    if kind in (GateKind.AND, GateKind.NAND):
        v = int(all(vals))
    elif kind in (GateKind.OR, GateKind.NOR):
        v = int(any(vals))
    else:
        v = 0
        for b in vals:
            v ^= b
    if kind in (GateKind.NAND, GateKind.NOR, GateKind.XNOR):
        v = 1 - v
    return v


def evaluate(netlist: Netlist, assignment: Mapping[str, int]) -> dict[str, int]:
    """Evaluate one input/key assignment gate by gate."""
    values: dict[str, int] = {}
    for net in (*netlist.primary_inputs, *netlist.key_inputs):
        if net not in assignment:
            raise IncompleteAssignmentError(net)
        values[net] = int(assignment[net]) & 1
    for g in topo_order(netlist):
        values[g.output] = _gate_value(g.kind, [values[i] for i in g.inputs])
    return {o: values[o] for o in netlist.outputs}


@dataclass(frozen=True)
class CompiledNetlist:
    """Netlist lowered to index arrays for the propagation kernels."""

    net_index: dict[str, int]
    ops: np.ndarray
    fanin: np.ndarray
    n_nets: int


def compile_netlist(netlist: Netlist, order: Sequence[Gate] | None = None) -> CompiledNetlist:
    order = topo_order(netlist) if order is None else order
    nets = [*netlist.primary_inputs, *netlist.key_inputs, *(g.output for g in order)]
    net_index = {n: i for i, n in enumerate(nets)}
    ops = np.empty((len(order), 4), dtype=np.int64)
    fanin = []
    for row, g in enumerate(order):
        ops[row] = (_OPCODES[g.kind], net_index[g.output], len(fanin), len(g.inputs))
        fanin.extend(net_index[i] for i in g.inputs)
    return CompiledNetlist(net_index, ops, np.asarray(fanin, dtype=np.int64), len(nets))


def _check_size(n: int, limit: int = MAX_EXHAUSTIVE_INPUTS):
    if n > limit:
        raise SizeLimitError(f"{n} inputs exceed the exhaustive limit of {limit}")


def simulate(
    netlist: Netlist,
    key: Sequence[int] = (),
    input_order: Sequence[str] | None = None,
    compiled: CompiledNetlist | None = None,
    order: Sequence[Gate] | None = None,
    limit: int = MAX_EXHAUSTIVE_INPUTS,
) -> np.ndarray:
    """Exhaustively simulate all primary-input patterns with the key fixed.

    Returns a ``(2**n, n_outputs)`` uint8 array; row ``p`` is the pattern whose
    binary expansion, MSB first, gives the inputs in ``input_order``
    (default: declaration order).
    """
    input_order = netlist.primary_inputs if input_order is None else tuple(input_order)
    if sorted(input_order) != sorted(netlist.primary_inputs):
        raise InterfaceMismatchError(
            set(netlist.primary_inputs) - set(input_order), set(input_order) - set(netlist.primary_inputs)
        )
    key = tuple(key)
    if len(key) != netlist.n_keys:
        raise KeyInputError(f"key has {len(key)} bits, netlist expects {netlist.n_keys}")
    n = len(input_order)
    _check_size(n, limit)
    comp = compiled or compile_netlist(netlist, order)
    n_patterns = 1 << n
    n_words = (n_patterns + 63) // 64
    values = np.zeros((comp.n_nets, n_words), dtype=np.uint64)
    stimulus = _kernels.input_words(n, n_words)
    for j, net in enumerate(input_order):
        values[comp.net_index[net]] = stimulus[j]
    for net, bit in zip(netlist.key_inputs, key):
        values[comp.net_index[net]] = _kernels._ALL_ONES if bit else np.uint64(0)
    _kernels.propagate(comp.ops, comp.fanin, values)
    out = np.empty((n_patterns, len(netlist.outputs)), dtype=np.uint8)
    for c, name in enumerate(netlist.outputs):
        out[:, c] = _kernels.unpack_bits(values[comp.net_index[name]], n_patterns)
    return out


def truth_table(netlist: Netlist, key: Sequence[int] = ()) -> list[tuple[str, str]]:
    """All primary-input patterns in ascending order with their output bits."""
    table = simulate(netlist, key)
    n = netlist.n_inputs
    return [(pattern_string(p, n), "".join(map(str, row))) for p, row in enumerate(table.tolist())]


def format_truth_table_csv(netlist: Netlist, rows: Sequence[tuple[str, str]]) -> str:
    header = ",".join(["inputs", *(f"output_{o}" for o in netlist.outputs)])
    lines = [header] + [",".join([pat, *out]) for pat, out in rows]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    counterexample: str | None = None
    differing_patterns: int = 0

    def __bool__(self):
        return self.equivalent


def check_interface(a: Netlist, b: Netlist):
    missing = (set(a.primary_inputs) - set(b.primary_inputs)) | (set(a.outputs) - set(b.outputs))
    extra = (set(b.primary_inputs) - set(a.primary_inputs)) | (set(b.outputs) - set(a.outputs))
    if missing or extra:
        raise InterfaceMismatchError(missing, extra)


def equivalent(a: Netlist, b: Netlist, key_for_b: Sequence[int] = (), key_for_a: Sequence[int] = ()) -> EquivalenceResult:
    """Exhaustive comparison of ``a`` and ``b`` over every primary-input pattern.

    On mismatch the smallest differing pattern (in ``a``'s input order) is
    returned as the counterexample.
    """
    check_interface(a, b)
    ta = simulate(a, key_for_a)
    tb = simulate(b, key_for_b, input_order=a.primary_inputs)
    cols = [b.outputs.index(o) for o in a.outputs]
    diff = np.any(ta != tb[:, cols], axis=1)
    idx = np.flatnonzero(diff)
    if idx.size == 0:
        return EquivalenceResult(True)
    return EquivalenceResult(False, pattern_string(int(idx[0]), a.n_inputs), int(idx.size))


def random_netlist(
    n_inputs: int,
    n_gates: int,
    n_outputs: int = 1,
    seed: int = 0,
    kinds: Sequence[GateKind] = tuple(GateKind),
    max_fanin: int = 3,
) -> Netlist:
    """Random acyclic netlist; every gate reads from earlier nets only.

    Every gate nobody reads becomes an output, plus the last ``n_outputs``
    gates, so no logic is left dangling.
    """
    rng = np.random.default_rng(seed)
    inputs = [f"i{j}" for j in range(n_inputs)]
    nets = list(inputs)
    gates = []
    for g in range(n_gates):
        kind = kinds[int(rng.integers(len(kinds)))]
        arity = 1 if kind.unary else int(rng.integers(2, max(2, min(max_fanin, len(nets))) + 1))
        arity = min(arity, len(nets))
        if not kind.unary and arity < 2:
            kind = GateKind.NOT
            arity = 1
        # bias towards recent nets so depth grows
        weights = np.linspace(1.0, 3.0, len(nets))
        picks = rng.choice(len(nets), size=arity, replace=False, p=weights / weights.sum())
        out = f"g{g}"
        gates.append(Gate(out, kind, tuple(nets[int(p)] for p in picks)))
        nets.append(out)
    n_outputs = max(1, min(n_outputs, n_gates))
    read = {n for g in gates for n in g.inputs}
    tail = {g.output for g in gates[-n_outputs:]}
    outputs = [g.output for g in gates if g.output not in read or g.output in tail]
    return build_netlist(inputs, outputs, gates)
