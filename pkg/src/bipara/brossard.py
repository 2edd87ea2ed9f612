"""Empirical check of Brossard's distributional inequality.

For ``delta > 0`` compare
    LHS = integral of S_d(f)^2 off the enlargement of {M_d f > delta}
    RHS = delta^2 |{M_d f > delta}| + integral of (M_d f)^2 over {M_d f <= delta}
and report LHS / RHS; the inequality asserts this ratio is bounded by an
absolute constant.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .dyadic import GridFunction, superlevel_set
from .haar import analyze, square_function
from .maximal import dyadic_maximal, enlarge

CSV_COLUMNS = ("corpus_id", "n", "delta", "lhs", "rhs", "ratio")


@dataclass(frozen=True)
class BrossardTerms:
    delta: float
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0 else math.inf

    @property
    def degenerate(self) -> bool:
        return self.rhs == 0 and self.lhs > 0


def brossard_terms(f: GridFunction, delta: float, sd: np.ndarray | None = None, md: np.ndarray | None = None) -> BrossardTerms:
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    cell = 4.0 ** -f.n
    if sd is None:
        sd = square_function(analyze(f)).values
    if md is None:
        md = dyadic_maximal(f).values
    high = superlevel_set(md, delta)
    outside = ~enlarge(high).mask
    lhs = float(np.sum(sd[outside] ** 2)) * cell
    low = ~high.mask
    rhs = delta**2 * high.measure + float(np.sum(md[low] ** 2)) * cell
    return BrossardTerms(delta, lhs, rhs)


def brossard_ratio(f: GridFunction, delta: float) -> float:
    """LHS / RHS; 0 when both vanish, +inf (degenerate) when only RHS does."""
    if not f.values.any():
        raise ValueError("f must not vanish identically")
    return brossard_terms(f, delta).ratio


def delta_grid(md_max: float, k_lo: int = -10, k_hi: int = 4) -> list[float]:
    """Dyadic deltas 2^k, k in [k_lo, k_hi], not exceeding max M_d f."""
    return [2.0**k for k in range(k_lo, k_hi + 1) if 2.0**k <= md_max]


def brossard_scan(f: GridFunction, deltas=None) -> list[BrossardTerms]:
    sd = square_function(analyze(f)).values
    md = dyadic_maximal(f).values
    if deltas is None:
        deltas = delta_grid(float(md.max()))
    return [brossard_terms(f, d, sd, md) for d in deltas]


def scan_to_csv(rows) -> str:
    """rows: iterable of (corpus_id, n, BrossardTerms)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for cid, n, t in rows:
        w.writerow([cid, n] + [repr(float(v)) for v in (t.delta, t.lhs, t.rhs, t.ratio)])
    return buf.getvalue()
