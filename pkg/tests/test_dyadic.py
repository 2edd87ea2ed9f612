import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bipara.dyadic import (
    DyadicInterval,
    DyadicRect,
    Exponents,
    GridFunction,
    OpenSetMask,
    ResolutionError,
    average,
    average_table,
    check_resolution,
    containment_table,
    descend,
    enumerate_rects,
    expand,
    load_grid,
    load_mask,
    lp_quasinorm,
    measure,
    pyramid,
    save_grid,
    save_mask,
    superlevel_set,
)

import oracles


@pytest.mark.parametrize("n", [0, 13, -1, 2.0, True])
def test_bad_resolution(n):
    with pytest.raises(ResolutionError):
        check_resolution(n)


def test_grid_must_be_square_power_of_two():
    with pytest.raises(ValueError):
        GridFunction(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        GridFunction(np.zeros((4, 2)))


@pytest.mark.parametrize("j,k", [(0, 0), (1, 1), (3, 5), (5, 31)])
def test_interval_heap_roundtrip(j, k):
    iv = DyadicInterval(j, k)
    assert DyadicInterval.from_heap(iv.heap_index) == iv
    a, b = iv.children()
    assert a.heap_index == 2 * iv.heap_index + 1
    assert b.heap_index == 2 * iv.heap_index + 2
    assert iv.length == 2.0**-j


def test_invalid_interval():
    with pytest.raises(ValueError):
        DyadicInterval(2, 4)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_enumeration_order_matches_heap_flattening(n):
    rs = enumerate_rects(n)
    m = 2**n - 1
    assert len(rs) == m * m
    flat = [a * m + b for a, b in (r.heap_index() for r in rs)]
    assert flat == list(range(m * m))


def test_rect_measure_and_cells():
    r = DyadicRect.of(1, 1, 2, 0)
    assert measure(r) == 1 / 8
    mask = OpenSetMask.from_rect(3, r)
    assert mask.measure == 1 / 8
    assert mask.contains_rect(r)
    assert not mask.contains_rect(DyadicRect.of(1, 0, 2, 0))


def test_average_matches_oracle(rng):
    f = GridFunction(rng.standard_normal((8, 8)))
    tab = average_table(f)
    for jx, kx, jy, ky in oracles.rects(3, carrier=False):
        r = DyadicRect.of(jx, kx, jy, ky)
        a, b = r.heap_index()
        assert tab[a, b] == pytest.approx(oracles.average(f.values, 3, (jx, kx, jy, ky)), abs=1e-14)
        assert average(f, r) == pytest.approx(tab[a, b], abs=1e-14)


@pytest.mark.parametrize("op", ["sum", "max"])
def test_descend_accumulates_over_ancestors(op, rng):
    n = 3
    table = rng.random((2 ** (n + 1) - 1, 2 ** (n + 1) - 1))
    got = expand(descend(descend(table, 0, op), 1, op), n)
    want = np.zeros((8, 8)) if op == "sum" else np.full((8, 8), -np.inf)
    for jx, kx, jy, ky in oracles.rects(n, carrier=False):
        r = DyadicRect.of(jx, kx, jy, ky)
        m = oracles.rect_mask(n, (jx, kx, jy, ky))
        v = table[r.heap_index()]
        want = np.where(m, want + v if op == "sum" else np.maximum(want, v), want)
    np.testing.assert_allclose(got, want, rtol=1e-13)


def test_pyramid_all_is_containment():
    omega = OpenSetMask.union_of(3, [DyadicRect.of(1, 0, 1, 0), DyadicRect.of(2, 3, 0, 0)])
    tab = containment_table(omega)
    for jx, kx, jy, ky in oracles.rects(3, carrier=False):
        r = DyadicRect.of(jx, kx, jy, ky)
        assert bool(tab[r.heap_index()]) == omega.contains_rect(r)


def test_pyramid_mean_top_is_integral(rng):
    f = rng.standard_normal((16, 16))
    top = pyramid(pyramid(f, 0, "mean"), 1, "mean")[0, 0]
    assert top == pytest.approx(f.mean(), abs=1e-14)


@pytest.mark.parametrize("p", [0.25, 0.5, 1, 2, 3.5])
def test_lp_quasinorm(p, rng):
    v = rng.standard_normal((8, 8))
    assert lp_quasinorm(v, p) == pytest.approx(np.mean(np.abs(v) ** p) ** (1 / p), rel=1e-13)


def test_lp_rejects_nonpositive():
    with pytest.raises(ValueError):
        lp_quasinorm(np.ones((2, 2)), 0)


def test_superlevel_is_strict():
    v = np.array([[0.0, 1.0], [2.0, 1.0]])
    assert superlevel_set(v, 1.0).count == 1


def test_mask_algebra():
    a = OpenSetMask.from_rect(2, DyadicRect.of(1, 0, 0, 0))
    b = OpenSetMask.from_rect(2, DyadicRect.of(0, 0, 1, 0))
    assert (a & b).measure == 0.25
    assert (a | b).measure == 0.75
    assert (a & b) <= a
    assert not a <= b
    assert OpenSetMask.empty(2).is_empty()
    assert hash(a) == hash(OpenSetMask(a.mask.copy()))


@pytest.mark.parametrize("p,r", [(1, 2), (2, 2), (0.5, 2), (3, 1.5)])
def test_exponents_from_pr(p, r):
    e = Exponents.from_pr(p, r)
    assert 1 / e.q == pytest.approx(1 / p + 1 / r)
    assert e.t == pytest.approx(r / e.q - 1)


def test_exponents_reject_inconsistent():
    with pytest.raises(ValueError):
        Exponents(1, 1, 2)


def test_csv_roundtrip(tmp_path, rng):
    f = GridFunction(rng.standard_normal((4, 4)))
    save_grid(f, tmp_path / "g.csv")
    assert np.array_equal(load_grid(tmp_path / "g.csv").values, f.values)
    m = OpenSetMask(rng.random((4, 4)) > 0.5)
    save_mask(m, tmp_path / "m.csv")
    assert load_mask(tmp_path / "m.csv") == m


def test_csv_header_required(tmp_path):
    (tmp_path / "bad.csv").write_text("1,2\n3,4\n")
    with pytest.raises(ValueError):
        load_grid(tmp_path / "bad.csv")


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_mask_measure_is_cell_fraction(n, seed):
    m = np.random.default_rng(seed).random((2**n, 2**n)) > 0.5
    assert OpenSetMask(m).measure == m.sum() / 4**n
