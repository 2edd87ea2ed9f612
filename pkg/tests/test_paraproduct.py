import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bipara.dyadic import DyadicRect, Exponents, GridFunction, OpenSetMask
from bipara.haar import HaarField
from bipara.paraproduct import (
    apply,
    apply_adjoint,
    domination_check,
    holder_upper_bound,
    operator_ratio,
)

import oracles


def dense_field(n, seed):
    rng = np.random.default_rng(seed)
    m = 2**n - 1
    return HaarField(rng.standard_normal((m, m)) * (rng.random((m, m)) < 0.5))


def test_apply_constant_is_identity():
    g = dense_field(3, 0)
    assert np.array_equal(apply(g, GridFunction.constant(3, 1.0)).coeffs, g.coeffs)


def test_apply_single_average():
    g = HaarField.single(2, DyadicRect.of(0, 0, 0, 0), 2.0)
    f = OpenSetMask.from_rect(2, DyadicRect.of(1, 0, 1, 0)).indicator()
    assert apply(g, f)[DyadicRect.of(0, 0, 0, 0)] == 0.5
    assert apply(g, f).nnz == 1


@pytest.mark.parametrize("n", [2, 3])
def test_apply_matches_oracle(n, rng):
    g = dense_field(n, 5)
    f = rng.standard_normal((2**n, 2**n))
    want = oracles.paraproduct({r.key: c for r, c in g.items()}, f, n)
    got = apply(g, GridFunction(f))
    for k, v in want.items():
        assert got[DyadicRect.of(*k)] == pytest.approx(v, abs=1e-13)


def test_adjoint_examples():
    g = HaarField.single(2, DyadicRect.of(0, 0, 0, 0), 2.0)
    h = HaarField.single(2, DyadicRect.of(0, 0, 0, 0), 1.0)
    np.testing.assert_array_equal(apply_adjoint(g, h).values, np.full((4, 4), 2.0))
    other = HaarField.single(2, DyadicRect.of(1, 0, 1, 0), 1.0)
    assert not apply_adjoint(g, other).values.any()


@given(st.integers(1, 4), st.integers(0, 10**6))
def test_duality_identity(n, seed):
    rng = np.random.default_rng(seed)
    g, h = dense_field(n, seed), dense_field(n, seed + 1)
    f = GridFunction(rng.standard_normal((2**n, 2**n)))
    lhs = (f.values * apply_adjoint(g, h).values).mean()
    rhs = float(np.sum(apply(g, f).coeffs * h.coeffs))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@given(st.integers(1, 5), st.integers(0, 10**6))
def test_pointwise_domination(n, seed):
    g = dense_field(n, seed)
    f = GridFunction(np.random.default_rng(seed).standard_normal((2**n, 2**n)))
    assert domination_check(g, f) <= 1e-10


@settings(max_examples=25)
@given(st.sampled_from([(1, 2), (2, 2), (0.5, 2), (2, 1), (4, 4)]), st.integers(0, 10**6))
def test_holder_bound_dominates_every_input(pr, seed):
    e = Exponents.from_pr(*pr)
    g = dense_field(3, seed)
    f = GridFunction(np.random.default_rng(seed).standard_normal((8, 8)))
    assert operator_ratio(g, f, e.p, e.q) <= holder_upper_bound(g, e) * (1 + 1e-10)


def test_holder_requires_exponents():
    with pytest.raises(TypeError):
        holder_upper_bound(dense_field(2, 0), (1, 2, 2))


def test_resolution_mismatch():
    with pytest.raises(ValueError):
        apply(dense_field(2, 0), GridFunction.zeros(3))


def test_operator_ratio_zero_input():
    assert operator_ratio(dense_field(2, 0), GridFunction.zeros(2), 1, 1) == 0.0
