"""Bit-parallel gate propagation kernels.

A compiled netlist is a table of ops ``(kind, out, start, count)`` over a
flat fan-in index array. Net values are ``uint64`` words, 64 input patterns
per word. The numba path is used when numba imports and the environment
variable ``PHGEN_DISABLE_NUMBA`` is unset (or ``0``); otherwise the pure
numpy path runs. Both produce bit-identical results.
"""
import os

import numpy as np

OP_AND, OP_NAND, OP_OR, OP_NOR, OP_XOR, OP_XNOR, OP_NOT, OP_BUF = range(8)

_ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def _numba_requested() -> bool:
    return os.environ.get("PHGEN_DISABLE_NUMBA", "0").strip().lower() in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by PHGEN_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def propagate_numpy(ops, fanin, values):
    """Evaluate every op in order, in place on ``values`` (n_nets x n_words)."""
    for kind, out, start, count in ops:
        src = fanin[start:start + count]
        if kind == OP_BUF:
            values[out] = values[src[0]]
        elif kind == OP_NOT:
            values[out] = ~values[src[0]]
        else:
            acc = values[src[0]].copy()
            if kind == OP_AND or kind == OP_NAND:
                for i in src[1:]:
                    acc &= values[i]
            elif kind == OP_OR or kind == OP_NOR:
                for i in src[1:]:
                    acc |= values[i]
            else:
                for i in src[1:]:
                    acc ^= values[i]
            if kind == OP_NAND or kind == OP_NOR or kind == OP_XNOR:
                acc = ~acc
            values[out] = acc
    return values


def input_words_numpy(n_inputs, n_words):
    """Packed stimulus for exhaustive enumeration.

    Pattern ``p`` lives at bit ``p % 64`` of word ``p // 64``; input ``j``
    carries bit ``n_inputs - 1 - j`` of ``p`` so the first input is the MSB.
    """
    pats = np.arange(n_words * 64, dtype=np.uint64).reshape(n_words, 64)
    weights = np.left_shift(np.uint64(1), np.arange(64, dtype=np.uint64))
    words = np.empty((n_inputs, n_words), dtype=np.uint64)
    for j in range(n_inputs):
        bits = (pats >> np.uint64(n_inputs - 1 - j)) & np.uint64(1)
        words[j] = np.bitwise_or.reduce(bits * weights, axis=1)
    return words


if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def propagate_numba(ops, fanin, values):
        n_words = values.shape[1]
        for g in range(ops.shape[0]):
            kind = ops[g, 0]
            out = values[ops[g, 1]]
            start = ops[g, 2]
            count = ops[g, 3]
            out[:] = values[fanin[start]]
            if kind == OP_AND or kind == OP_NAND:
                for i in range(1, count):
                    src = values[fanin[start + i]]
                    for w in range(n_words):
                        out[w] &= src[w]
            elif kind == OP_OR or kind == OP_NOR:
                for i in range(1, count):
                    src = values[fanin[start + i]]
                    for w in range(n_words):
                        out[w] |= src[w]
            elif kind == OP_XOR or kind == OP_XNOR:
                for i in range(1, count):
                    src = values[fanin[start + i]]
                    for w in range(n_words):
                        out[w] ^= src[w]
            if kind == OP_NAND or kind == OP_NOR or kind == OP_XNOR or kind == OP_NOT:
                for w in range(n_words):
                    out[w] = ~out[w]
        return values

    @njit(cache=True)
    def input_words_numba(n_inputs, n_words):
        words = np.zeros((n_inputs, n_words), dtype=np.uint64)
        for j in range(n_inputs):
            shift = n_inputs - 1 - j
            for w in range(n_words):
                acc = np.uint64(0)
                for b in range(64):
                    p = w * 64 + b
                    if (p >> shift) & 1:
                        acc |= np.uint64(1) << np.uint64(b)
                words[j, w] = acc
        return words

    propagate = propagate_numba
    input_words = input_words_numba
else:
    propagate_numba = None
    input_words_numba = None
    propagate = propagate_numpy
    input_words = input_words_numpy


def unpack_bits(words, n_patterns):
    """Inverse of the packing: ``words`` (n_words,) -> uint8 bits (n_patterns,)."""
    shifts = np.arange(64, dtype=np.uint64)
    bits = (words[:, None] >> shifts) & np.uint64(1)
    return bits.reshape(-1)[:n_patterns].astype(np.uint8)
