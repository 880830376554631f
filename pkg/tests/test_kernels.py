import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twincheck import _fallback, kernels
from twincheck.models import get_model
from twincheck.opposition import _neighbors

compiled = pytest.importorskip("twincheck._kernels") if "compiled" in kernels.available() else None
needs_compiled = pytest.mark.skipif(compiled is None, reason="extension not built")

seeds = st.integers(0, 2**32 - 1)


def naive_order(perm):
    ident = np.arange(len(perm))
    cur, k = perm.copy(), 1
    while not (cur == ident).all():
        cur, k = perm[cur], k + 1
    return k


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 12), st.integers(1, 8))
def test_perm_orders_oracle(seed, n, batch):
    rng = np.random.default_rng(seed)
    perms = np.array([rng.permutation(n) for _ in range(batch)])
    expected = [naive_order(p) for p in perms]
    assert _fallback.perm_orders(perms).tolist() == expected
    if compiled is not None:
        assert compiled.perm_orders(perms).tolist() == expected


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 10), st.integers(1, 6))
def test_absolute_counts_parity(seed, n, batch):
    rng = np.random.default_rng(seed)
    incidence = rng.random((n, n)) < 0.4
    duals = np.array([np.concatenate([n + rng.permutation(n), rng.permutation(n)]) for _ in range(batch)])
    a = _fallback.absolute_counts(duals, incidence, n)
    b = compiled.absolute_counts(duals, incidence, n)
    assert a.tolist() == b.tolist()
    assert a.tolist() == [sum(bool(incidence[p, d[p] - n]) for p in range(n)) for d in duals]


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 9), st.integers(1, 4), st.integers(1, 5))
def test_j_opposite_parity(seed, n, k, batch):
    rng = np.random.default_rng(seed)
    opposite = rng.random((n, n)) < 0.6
    members = rng.integers(0, n, size=(n, k))
    maps = np.array([rng.permutation(n) for _ in range(batch)])
    assert _fallback.j_opposite(maps, opposite, members).tolist() == compiled.j_opposite(maps, opposite, members).tolist()


@needs_compiled
@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 5))
def test_local_descent_parity(seed, batch):
    b = get_model("pg", 2).building
    nbrs = _neighbors(b)
    rng = np.random.default_rng(seed)
    lengths = rng.integers(0, 4, size=(batch, b.n_chambers))
    start = int(rng.integers(b.n_chambers))
    ends = _fallback.local_descent(lengths, nbrs, start)
    assert ends.tolist() == compiled.local_descent(lengths, nbrs, start).tolist()
    for row, c in zip(lengths, ends):
        assert (row[nbrs[c]] >= row[c]).all()


def test_switching_backend():
    original = kernels.BACKEND
    try:
        kernels.use("python")
        assert kernels.BACKEND == "python" and kernels.perm_orders is _fallback.perm_orders
        if compiled is None:
            with pytest.raises(RuntimeError):
                kernels.use("compiled")
        else:
            kernels.use("compiled")
            assert kernels.perm_orders is compiled.perm_orders
    finally:
        kernels.use(original)
    assert "python" in kernels.available()
