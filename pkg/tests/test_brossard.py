import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bipara.brossard import (
    CSV_COLUMNS,
    BrossardTerms,
    brossard_ratio,
    brossard_scan,
    brossard_terms,
    delta_grid,
    scan_to_csv,
)
from bipara.dyadic import GridFunction
from bipara.haar import HaarField, project_biparam, synthesize
from bipara.maximal import dyadic_maximal


def test_constant_function_ratio_zero():
    f = GridFunction.constant(3, 1.0)
    for d in (0.25, 0.5, 0.99):
        assert brossard_ratio(f, d) == 0.0


def test_errors():
    with pytest.raises(ValueError):
        brossard_ratio(GridFunction.zeros(2), 0.5)
    with pytest.raises(ValueError):
        brossard_terms(GridFunction.constant(2, 1.0), 0.0)


def test_ratio_conventions():
    assert BrossardTerms(1.0, 0.0, 0.0).ratio == 0.0
    assert BrossardTerms(1.0, 1.0, 0.0).ratio == math.inf
    assert BrossardTerms(1.0, 1.0, 0.0).degenerate


@settings(max_examples=25)
@given(st.integers(1, 5), st.integers(0, 10**6))
def test_large_delta_ratio_at_most_one_on_biparameter_span(n, seed):
    f = project_biparam(GridFunction(np.random.default_rng(seed).standard_normal((2**n, 2**n))))
    top = float(dyadic_maximal(f).values.max())
    assert brossard_ratio(f, top) <= 1 + 1e-12


def test_delta_grid():
    assert delta_grid(0.3) == [2.0**k for k in range(-10, -1)]
    assert delta_grid(100.0)[-1] == 16.0


def test_scan_and_csv():
    rng = np.random.default_rng(2)
    f = synthesize(HaarField(rng.standard_normal((7, 7))))
    scan = brossard_scan(f)
    assert scan and all(t.ratio >= 0 and math.isfinite(t.ratio) for t in scan)
    text = scan_to_csv(("x", 3, t) for t in scan)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == len(scan) + 1
    assert float(lines[1].split(",")[2]) == scan[0].delta
