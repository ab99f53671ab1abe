import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from spacegnn import _kernels as K
from spacegnn.model import base_forward, init_base_model

from conftest import ring_graph

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


@given(st.integers(1, 12), st.integers(0, 40), st.integers(1, 4), st.integers(0, 10_000))
def test_numpy_kernels_match_loops(n, m, d, seed):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(m, d))
    index = rng.integers(0, n, size=m)
    expect = np.zeros((n, d))
    for r, i in enumerate(index):
        expect[i] += values[r]
    with K.using_backend("numpy"):
        assert_allclose(K.scatter_add_rows(values, index, n), expect, atol=1e-12)
        order = np.argsort(index, kind="stable")
        offsets = np.concatenate([[0], np.cumsum(np.bincount(index, minlength=n))])
        assert_allclose(K.segment_sum(values[order], offsets), expect, atol=1e-12)


@needs_numba
@given(st.integers(1, 12), st.integers(0, 40), st.integers(1, 4), st.integers(0, 10_000))
def test_backends_agree(n, m, d, seed):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(m, d))
    index = rng.integers(0, n, size=m)
    offsets = np.concatenate([[0], np.cumsum(np.bincount(index, minlength=n))])
    with K.using_backend("numpy"):
        a = K.scatter_add_rows(values, index, n), K.segment_sum(values, offsets)
    with K.using_backend("numba"):
        b = K.scatter_add_rows(values, index, n), K.segment_sum(values, offsets)
    assert_allclose(a[0], b[0], atol=1e-12)
    assert_allclose(a[1], b[1], atol=1e-12)


@needs_numba
def test_forward_agrees_across_backends():
    g = ring_graph(30, dim=4, chords=20)
    m = init_base_model("negative", 4, 6, 2, np.random.default_rng(0), kappa_init=-0.3)
    with K.using_backend("numpy"):
        a = base_forward(m, g).data
    with K.using_backend("numba"):
        b = base_forward(m, g).data
    assert_allclose(a, b, atol=1e-13)


def test_backend_switching():
    before = K.backend()
    with K.using_backend("numpy"):
        assert K.backend() == "numpy"
    assert K.backend() == before
    with pytest.raises(ValueError):
        K.set_backend("cuda")
