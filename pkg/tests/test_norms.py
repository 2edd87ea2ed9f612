import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bipara.dyadic import DyadicRect, GridFunction, OpenSetMask, enumerate_rects
from bipara.haar import HaarField, square_function
from bipara.norms import (
    bmo_candidates,
    bmo_norm_lower,
    bmo_search,
    bmo_values,
    dot_hardy_norm,
    hardy_norm,
    john_nirenberg_ratio,
    mask_bmo_value,
    mask_jn_value,
    rect_jn_values,
    rectangle_candidates,
)

import oracles


def sparse_field(n, nnz, seed):
    rng = np.random.default_rng(seed)
    rs = enumerate_rects(n)
    pick = rng.choice(len(rs), size=min(nnz, len(rs)), replace=False)
    return HaarField.from_items(n, [(rs[i], float(rng.standard_normal())) for i in pick])


def as_dict(g):
    return {r.key: c for r, c in g.items()}


def test_hardy_examples():
    assert hardy_norm(GridFunction.constant(3, 1.0), 0.5) == pytest.approx(1.0)
    quarter = OpenSetMask.from_rect(1, DyadicRect.of(1, 0, 1, 0)).indicator()
    assert hardy_norm(quarter, 2) == pytest.approx(5 / 8, abs=1e-15)


@pytest.mark.parametrize("p", [0.5, 1, 2, 3])
def test_hardy_matches_oracle(p, rng):
    f = rng.standard_normal((8, 8))
    assert hardy_norm(GridFunction(f), p) == pytest.approx(oracles.hardy(f, p), rel=1e-12)


@pytest.mark.parametrize("p", [0.5, 0.7, 1, 2, 4])
def test_dot_hardy_single_coefficient(p):
    g = HaarField.single(3, DyadicRect.of(1, 0, 0, 0), -1.5)
    assert dot_hardy_norm(g, p) == pytest.approx(1.5 * math.sqrt(2) * 0.5 ** (1 / p), rel=1e-13)


def test_dot_hardy_p2_is_l2_of_coefficients():
    g = sparse_field(4, 20, 3)
    assert dot_hardy_norm(g, 2) == pytest.approx(math.sqrt(np.sum(g.coeffs**2)), rel=1e-13)


def test_dot_hardy_p07_matches_literal_integral():
    g = sparse_field(3, 10, 4)
    s = oracles.square_function(as_dict(g), 3)
    assert dot_hardy_norm(g, 0.7) == pytest.approx(np.mean(s**0.7) ** (1 / 0.7), rel=1e-12)


@pytest.mark.parametrize("norm", [hardy_norm, dot_hardy_norm])
def test_norms_reject_bad_p(norm):
    arg = GridFunction.zeros(2) if norm is hardy_norm else HaarField.zeros(2)
    with pytest.raises(ValueError):
        norm(arg, 0)


@given(st.floats(-5, 5).filter(lambda c: c == 0 or abs(c) > 1e-6), st.integers(0, 1000))
def test_homogeneity(c, seed):
    g = sparse_field(3, 6, seed)
    f = GridFunction(np.random.default_rng(seed).standard_normal((8, 8)))
    assert dot_hardy_norm(g * c, 0.8) == pytest.approx(abs(c) * dot_hardy_norm(g, 0.8), rel=1e-12, abs=1e-300)
    assert hardy_norm(f * c, 1.5) == pytest.approx(abs(c) * hardy_norm(f, 1.5), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("key", [(0, 0, 0, 0), (1, 1, 0, 0), (1, 0, 1, 1), (2, 3, 1, 0)])
def test_bmo_single_coefficient(key):
    r = DyadicRect.of(*key)
    g = HaarField.single(3, r, 2.5)
    assert bmo_norm_lower(g) == pytest.approx(2.5 / math.sqrt(2.0 ** -(key[0] + key[2])), rel=1e-13)
    assert john_nirenberg_ratio(g, 1) == pytest.approx(bmo_norm_lower(g), rel=1e-12)


def test_bmo_zero_field_is_zero():
    assert bmo_norm_lower(HaarField.zeros(3)) == 0.0


def test_empty_field_candidates_are_rectangles():
    c = bmo_candidates(HaarField.zeros(2))
    assert len(c) == 9 and c.n_rects == 9


def test_candidate_count_small():
    g = HaarField.from_items(2, [(DyadicRect.of(0, 0, 0, 0), 1.0), (DyadicRect.of(1, 1, 1, 0), 1.0)])
    c = bmo_candidates(g)
    assert len(c) >= 9
    masks = c.sets
    assert all(m.count > 0 for m in masks)
    assert len(set(masks)) == len(masks)


@settings(max_examples=15)
@given(st.integers(1, 6), st.integers(0, 10**6))
def test_bmo_matches_exhaustive_at_n2(nnz, seed):
    g = sparse_field(2, nnz, seed)
    assert bmo_norm_lower(g) == pytest.approx(oracles.exhaustive_bmo(as_dict(g), 2), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_bmo_matches_union_enumeration_at_n3(seed):
    g = sparse_field(3, 8, seed)
    d = as_dict(g)
    support = [r for r, c in d.items() if c != 0]
    best = 0.0
    for sub in oracles.subsets(len(support)):
        omega = np.zeros((8, 8), dtype=bool)
        for i in sub:
            omega |= oracles.rect_mask(3, support[i])
        best = max(best, oracles.bmo_value(d, 3, omega))
    assert bmo_norm_lower(g) == pytest.approx(best, rel=1e-12)


def test_more_candidates_never_lower():
    for seed in range(5):
        g = sparse_field(4, 30, seed)
        assert bmo_norm_lower(g, rectangle_candidates(4)) <= bmo_norm_lower(g) * (1 + 1e-12)


def test_bmo_values_consistent_with_search():
    g = sparse_field(3, 14, 7)
    c = bmo_candidates(g)
    vals = bmo_values(g, c)
    best, arg = bmo_search(g, c)
    assert len(vals) == len(c)
    assert vals[arg] == pytest.approx(best, rel=1e-12)
    assert best >= vals.max() * (1 - 1e-12)
    for i in (0, c.n_rects, len(c) - 1):
        assert vals[i] == pytest.approx(mask_bmo_value(g, c.mask(i)), rel=1e-12, abs=1e-300)


def test_john_nirenberg_p2_is_bmo():
    for seed in range(5):
        g = sparse_field(4, 25, seed)
        c = bmo_candidates(g)
        assert john_nirenberg_ratio(g, 2, c) == pytest.approx(bmo_norm_lower(g, c), rel=1e-12)


@pytest.mark.parametrize("p", [0.5, 1, 4])
def test_rect_jn_values_match_mask_values(p):
    g = sparse_field(3, 12, 11)
    tab = rect_jn_values(g, p)
    for r in enumerate_rects(3):
        v = mask_jn_value(g, OpenSetMask.from_rect(3, r), p)
        assert tab[r.heap_index()] == pytest.approx(v, rel=1e-12, abs=1e-300)


def test_candidates_beat_rectangles_on_l_shape():
    # a vertical and a horizontal half: their union (measure 3/4) is not a rectangle
    n = 2
    rs = [DyadicRect.of(1, 0, 0, 0), DyadicRect.of(0, 0, 1, 0)]
    g = HaarField.from_items(n, [(r, 1.0) for r in rs])
    assert bmo_norm_lower(g, rectangle_candidates(n)) == pytest.approx(math.sqrt(2))
    assert bmo_norm_lower(g) == pytest.approx(math.sqrt(8 / 3))


def test_square_function_nonnegative():
    g = sparse_field(3, 10, 1)
    assert np.all(square_function(g).values >= 0)
