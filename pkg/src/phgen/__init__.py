"""pH-derived activation keys for logic-locked combinational netlists.

The sensing chain (ISFET model + CVCC readout) turns a solution sample into
a voltage, a comparator window turns the voltage into key bits, and the key
bits unlock XOR/XNOR key gates inserted into a gate-level netlist.
"""
from .device import IsfetDevice, ElectroChemParams, MosfetParams, SolutionSample
from .readout import CvccParams, OperatingPoint, solve_operating_point
from .netlist import Netlist, parse_bench, to_bench, evaluate, truth_table, equivalent
from .locking import LockRequest, LockedNetlist, insert_key_gates, verify_unlock, brute_force_attack
from .keygen import KeyBinding, bind_key, derive_key, robustness_eval

__version__ = "0.1.0"

__all__ = [
    "CvccParams",
    "ElectroChemParams",
    "IsfetDevice",
    "KeyBinding",
    "LockRequest",
    "LockedNetlist",
    "MosfetParams",
    "Netlist",
    "OperatingPoint",
    "SolutionSample",
    "bind_key",
    "brute_force_attack",
    "derive_key",
    "equivalent",
    "evaluate",
    "insert_key_gates",
    "parse_bench",
    "robustness_eval",
    "solve_operating_point",
    "to_bench",
    "truth_table",
    "verify_unlock",
]
