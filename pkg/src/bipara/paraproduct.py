"""The dyadic paraproduct pi_g, its companion pi_g^*, and the Hoelder bound."""

from __future__ import annotations

import numpy as np

from .dyadic import Exponents, GridFunction, average_table, descend, expand, lp_quasinorm
from .haar import HaarField, rect_measures, square_function
from .maximal import dyadic_maximal
from .norms import dot_hardy_norm


def _check_same(n1: int, n2: int) -> None:
    if n1 != n2:
        raise ValueError(f"resolution mismatch: {n1} vs {n2}")


def haar_averages(f: GridFunction) -> np.ndarray:
    """<f>_R for every Haar-carrier rectangle, heap x heap."""
    m = (1 << f.n) - 1
    return average_table(f)[:m, :m]


def apply(g: HaarField, f: GridFunction, averages: np.ndarray | None = None) -> HaarField:
    """pi_g(f) as a dyadic distribution: coefficient g_R <f>_R at each R.

    ``averages`` may be passed to reuse a precomputed :func:`haar_averages`
    table for ``f``.
    """
    _check_same(g.n, f.n)
    if averages is None:
        averages = haar_averages(f)
    return HaarField(g.coeffs * averages)


def apply_adjoint(g: HaarField, h: HaarField) -> GridFunction:
    """pi_g^*(h) = sum_R h_R g_R chi_R / |R| on the grid."""
    _check_same(g.n, h.n)
    n = g.n
    w = h.coeffs * g.coeffs / rect_measures(n)
    return GridFunction(expand(descend(descend(w, 0, "sum"), 1, "sum"), n))


def domination_check(g: HaarField, f: GridFunction) -> float:
    """max over cells of S_d(pi_g f) - S_d(g) M_d(f); nonpositive up to roundoff."""
    lhs = square_function(apply(g, f)).values
    rhs = square_function(g).values * dyadic_maximal(f).values
    return float(np.max(lhs - rhs))


def holder_upper_bound(g: HaarField, e: Exponents) -> float:
    """||g||_{Hdot^r}: bounds ||S_d(pi_g f)||_q / ||M_d f||_p for every f."""
    if not isinstance(e, Exponents):
        raise TypeError("expected an Exponents triple")
    return dot_hardy_norm(g, e.r)


def operator_ratio(g: HaarField, f: GridFunction, p: float, q: float) -> float:
    """||S_d(pi_g f)||_q / ||f||_{H^p}; 0 when f has vanishing maximal function."""
    num = lp_quasinorm(square_function(apply(g, f)), q)
    den = lp_quasinorm(dyadic_maximal(f), p)
    return num / den if den > 0 else 0.0
