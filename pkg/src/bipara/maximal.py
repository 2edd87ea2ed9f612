"""Dyadic maximal operators, open-set enlargement, and the family maximal m.

The enlargement uses the dyadic maximal function in place of the strong
one.  For a dyadic rectangle ``R`` not inside ``enlarge(omega)`` some cell of
``R`` has ``M_d(chi_omega) <= 1/2``, hence ``<chi_omega>_R <= 1/2``; that is
the only property the constructions downstream rely on.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .dyadic import GridFunction, OpenSetMask, average_table, descend, superlevel_set


def _sup_over_rects(table: np.ndarray) -> np.ndarray:
    return descend(descend(table, 0, "max"), 1, "max")


def dyadic_maximal(f: GridFunction) -> GridFunction:
    """M_d f(x) = sup over dyadic R containing x of |<f>_R|, levels 0..n."""
    return GridFunction(_sup_over_rects(np.abs(average_table(f))))


def m_s(f: GridFunction, s: float) -> GridFunction:
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    if s == 1:
        return dyadic_maximal(GridFunction(np.abs(f.values)))
    m = dyadic_maximal(GridFunction(np.abs(f.values) ** s))
    return GridFunction(m.values ** (1.0 / s))


def enlarge(omega: OpenSetMask) -> OpenSetMask:
    """{M_d(chi_omega) > 1/2}; always contains omega."""
    if omega.is_empty():
        return omega
    return superlevel_set(dyadic_maximal(omega.indicator()), 0.5)


def family_maximal(g: GridFunction, family) -> GridFunction:
    """m(g)(x) = sup over members containing x of the average of |g| there.

    ``family`` is a ContractingFamily or any iterable of OpenSetMask.
    Zero-measure members are skipped; cells outside every member get 0.
    """
    masks: Iterable[OpenSetMask] = getattr(family, "omegas", family)
    masks = list(masks)
    if not masks:
        raise ValueError("family must be nonempty")
    a = np.abs(g.values)
    out = np.zeros_like(a)
    for omega in masks:
        if omega.n != g.n:
            raise ValueError("resolution mismatch between function and family")
        cnt = omega.count
        if cnt == 0:
            continue
        avg = float(a[omega.mask].sum()) / cnt
        out = np.where(omega.mask, np.maximum(out, avg), out)
    return GridFunction(out)
