from __future__ import annotations

import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmspaces import _kernels

from conftest import BACKENDS

py = _kernels.python_backend


def int_metric(n, rng, inf_prob=0.0):
    W = rng.integers(1, 20, size=(n, n)).astype(float)
    W[rng.random((n, n)) < inf_prob] = np.inf
    W = np.minimum(W, W.T)
    np.fill_diagonal(W, 0.0)
    return W


def test_backend_selection():
    assert _kernels.BACKEND_NAME in ("compiled", "python")
    assert (_kernels.backend is _kernels.compiled_backend) == (_kernels.BACKEND_NAME == "compiled")


def test_pure_python_forced():
    env = dict(os.environ, DMSPACES_PURE_PYTHON="1")
    proc = subprocess.run([sys.executable, "-c", "from dmspaces import _kernels; print(_kernels.BACKEND_NAME)"],
                          capture_output=True, text=True, env=env, check=True)
    assert proc.stdout.strip() == "python"


def test_constraint_infimum_examples():
    # one unit of mass, target mass 1 at distance 2: infimum is min over (0 -> 1), (2 -> 2) = 1
    assert py.constraint_infimum([2.0], [1.0], 1.0) == 1.0
    assert py.constraint_infimum([0.25], [1.0], 1.0) == 0.25
    assert py.constraint_infimum([0.0], [1.0], 1.0) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10))
def test_floyd_warshall_backends_agree(seed, n):
    W = int_metric(n, np.random.default_rng(seed), inf_prob=0.4)
    ref = py.floyd_warshall(W)
    for k in BACKENDS.values():
        assert np.array_equal(np.asarray(k.floyd_warshall(W)), ref)
    # closure is idempotent and never increases entries
    assert np.array_equal(py.floyd_warshall(ref), ref) and np.all(ref <= W)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_lp_direction_backends_agree(seed, s):
    rng = np.random.default_rng(seed)
    D = py.floyd_warshall(int_metric(2 * s, rng, inf_prob=0.2))
    p = np.zeros(2 * s)
    q = np.zeros(2 * s)
    p[:s] = rng.integers(0, 8, size=s)
    q[s:] = rng.integers(0, 8, size=s)
    S, T = list(range(s)), list(range(s, 2 * s))
    vals = {name: float(k.lp_direction(D, p, q, S, T, 0.0)) for name, k in BACKENDS.items()}
    assert len(set(vals.values())) == 1


@pytest.mark.skipif(_kernels.compiled_backend is None, reason="compiled extension not built")
def test_benchmark_runs():
    bench = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    proc = subprocess.run([sys.executable, str(bench), "--repeat", "1"], capture_output=True, text=True,
                          check=False, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert "floyd_warshall" in proc.stdout
