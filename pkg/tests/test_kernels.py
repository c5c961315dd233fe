import os
import subprocess
import sys

import numpy as np
import pytest

from phgen import _kernels
from phgen.netlist import compile_netlist, random_netlist

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba path disabled or missing")


@pytest.mark.parametrize("n", [0, 1, 3, 6, 7, 10])
def test_input_words_numpy_layout(n):
    n_pat = 1 << n
    n_words = (n_pat + 63) // 64
    words = _kernels.input_words_numpy(n, n_words)
    for j in range(n):
        bits = _kernels.unpack_bits(words[j], n_pat)
        expected = [(p >> (n - 1 - j)) & 1 for p in range(n_pat)]
        assert bits.tolist() == expected


@needs_numba
@pytest.mark.parametrize("n", [0, 2, 6, 9, 12])
def test_input_words_backends_agree(n):
    n_words = ((1 << n) + 63) // 64
    assert np.array_equal(_kernels.input_words_numba(n, n_words), _kernels.input_words_numpy(n, n_words))


@needs_numba
@pytest.mark.parametrize("seed", range(8))
def test_propagate_backends_agree(seed):
    nl = random_netlist(10, 40, 4, seed=seed)
    comp = compile_netlist(nl)
    rng = np.random.default_rng(seed)
    init = np.zeros((comp.n_nets, 16), dtype=np.uint64)
    init[: nl.n_inputs] = rng.integers(0, 2**63, size=(nl.n_inputs, 16), dtype=np.uint64)
    a = _kernels.propagate_numpy(comp.ops, comp.fanin, init.copy())
    b = _kernels.propagate_numba(comp.ops, comp.fanin, init.copy())
    assert np.array_equal(a, b)


def test_env_flag_selects_numpy_path():
    code = (
        "from phgen import _kernels, netlist;"
        "assert not _kernels.HAVE_NUMBA;"
        "assert _kernels.propagate is _kernels.propagate_numpy;"
        "nl = netlist.parse_bench(open(r'%s').read());"
        "print(''.join(o for _, o in netlist.truth_table(nl, (1,))))"
    )
    from conftest import DATA, TABLE3_CORRECT

    env = dict(os.environ, PHGEN_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", code % (DATA / "demo_locked.bench")], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == TABLE3_CORRECT
