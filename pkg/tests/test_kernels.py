import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_edge_set
from hodgefast import kernels
from hodgefast.signal_model import partition_windows

NB = kernels.get_backend("numba")
NP = kernels.get_backend("numpy")


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("cuda")


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("true", "numpy"), ("0", "numba")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, HODGEFAST_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from hodgefast import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected


def _flow_inputs(rng, n_ep=3, n_ch=6, n_s=40, n_win=4):
    x = rng.standard_normal((n_ep, n_ch, n_s))
    # correlation mode expects centred signals; centring is harmless for Dirichlet
    x -= x.mean(axis=2, keepdims=True)
    edges = random_edge_set(n_ch, 0.6, rng).edges
    w = rng.random(len(edges))
    win = partition_windows(n_s, n_win)
    return x, edges[:, 0].copy(), edges[:, 1].copy(), w, win.starts, win.ends


def _flow_oracle(x, ei, ej, w, starts, ends, mode):
    out = np.zeros((len(starts), len(ei)))
    for k, (a, b) in enumerate(zip(ei, ej)):
        for t, (s, e) in enumerate(zip(starts, ends)):
            if mode == kernels.DIRICHLET:
                v = (x[:, a, s:e] - x[:, b, s:e]) ** 2
            else:
                v = np.abs(x[:, a, s:e] * x[:, b, s:e])
            out[t, k] = w[k] * v.mean(axis=1).mean()
    return out


@pytest.mark.parametrize("mode", [kernels.DIRICHLET, kernels.CORRELATION])
@pytest.mark.parametrize("impl", [NB, NP], ids=["numba", "numpy"])
def test_windowed_flows_match_loop_oracle(impl, mode):
    rng = np.random.default_rng(0)
    for _ in range(10):
        args = _flow_inputs(rng)
        got = impl.windowed_flows(*args, mode)
        assert np.allclose(got, _flow_oracle(*args, mode), rtol=1e-12, atol=1e-14)


def _spd_system(rng, n, k):
    a = sp.random(n, n, density=0.2, random_state=np.random.RandomState(int(rng.integers(1 << 30))))
    a = (a @ a.T + sp.eye(n)).tocsr()
    a.sort_indices()
    rhs = rng.standard_normal((n, k))
    return a, 1.0 / a.diagonal(), rhs


@pytest.mark.parametrize("impl", [NB, NP], ids=["numba", "numpy"])
def test_pcg_solves_spd_systems(impl):
    rng = np.random.default_rng(1)
    a, inv_d, rhs = _spd_system(rng, 30, 4)
    x, iters, relres = impl.pcg_batch(a.indptr.astype(np.int64), a.indices.astype(np.int64),
                                      a.data, inv_d, rhs, np.zeros(4), 1e-12, 300)
    assert np.allclose(x, np.linalg.solve(a.toarray(), rhs), atol=1e-9)
    assert np.all(relres <= 1e-12) and np.all(iters > 0)


@pytest.mark.parametrize("impl", [NB, NP], ids=["numba", "numpy"])
def test_pcg_zero_rhs_and_reference_scale(impl):
    rng = np.random.default_rng(2)
    a, inv_d, rhs = _spd_system(rng, 20, 3)
    rhs[:, 1] = 0.0
    rhs[:, 2] *= 1e-20
    parts = (a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data, inv_d)
    x, iters, relres = impl.pcg_batch(*parts, rhs, np.array([0.0, 0.0, 1.0]), 1e-10, 200)
    assert not x[:, 1].any() and iters[1] == 0
    # a rhs far below the reference scale converges at once
    assert iters[2] <= 1 and relres[2] <= 1e-10


def test_backends_agree_on_pcg():
    rng = np.random.default_rng(3)
    a, inv_d, rhs = _spd_system(rng, 40, 6)
    parts = (a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data, inv_d, rhs,
             np.zeros(6), 1e-12, 400)
    x0, _, _ = NB.pcg_batch(*parts)
    x1, _, _ = NP.pcg_batch(*parts)
    assert np.allclose(x0, x1, atol=1e-10)


@settings(max_examples=40)
@given(st.integers(0, 30), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_backends_agree_on_triangles(n, p, seed):
    edges = random_edge_set(n, p, np.random.default_rng(seed)).edges
    assert np.array_equal(NB.triangles(n, edges), NP.triangles(n, edges))


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.sampled_from([kernels.DIRICHLET, kernels.CORRELATION]))
def test_backends_agree_on_flows(seed, mode):
    args = _flow_inputs(np.random.default_rng(seed))
    assert np.allclose(NB.windowed_flows(*args, mode), NP.windowed_flows(*args, mode),
                       rtol=1e-12, atol=1e-14)
