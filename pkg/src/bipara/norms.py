"""Hardy quasi-norms and certified lower bounds for the product BMO norm.

The BMO norm is a supremum over all open sets, which is combinatorial even on
a finite grid.  :func:`bmo_norm_lower` maximizes over an explicit candidate
family instead, so every value it returns is attained by a concrete set and
is a lower bound for the true norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import (
    DyadicInterval,
    DyadicRect,
    GridFunction,
    OpenSetMask,
    descend,
    expand,
    level_slices,
    lp_quasinorm,
    superlevel_set,
)
from .haar import HaarField, contained_rects, rect_measures, square_function, square_function_local
from .maximal import dyadic_maximal

TIE_TOL = 1e-12


def hardy_norm(f: GridFunction, p: float) -> float:
    """||M_d f||_{L^p}."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    return lp_quasinorm(dyadic_maximal(f), p)


def dot_hardy_norm(g: HaarField, p: float) -> float:
    """||S_d g||_{L^p}."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    return lp_quasinorm(square_function(g), p)


def _rect_of_mask(mask: np.ndarray) -> tuple[int, int] | None:
    """Heap index of the Haar-carrier rectangle equal to ``mask``, if any."""
    n = mask.shape[0].bit_length() - 1
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return None
    out = []
    for idx in (rows, cols):
        length = idx[-1] - idx[0] + 1
        if length != idx.size or length & (length - 1) or idx[0] % length or length < 2:
            return None
        j = n - (int(length).bit_length() - 1)
        out.append((1 << j) - 1 + idx[0] // length)
    if not mask[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1].all():
        return None
    return out[0], out[1]


@dataclass(frozen=True, eq=False)
class BmoCandidates:
    """Deterministic search space for the supremum over open sets.

    Iteration order: every Haar-carrier rectangle (lexicographic), then the
    explicit masks in insertion order, then unions of support rectangles
    (subsets in increasing bit order).  Entries are deduplicated and have
    positive measure.
    """

    n: int
    include_rects: bool = True
    masks: tuple[OpenSetMask, ...] = ()
    labels: tuple[str, ...] = ()
    union_rects: tuple[DyadicRect, ...] = ()
    union_subsets: tuple[int, ...] = field(default=())

    @property
    def n_rects(self) -> int:
        return ((1 << self.n) - 1) ** 2 if self.include_rects else 0

    def __len__(self) -> int:
        return self.n_rects + len(self.masks) + len(self.union_subsets)

    def union_mask(self, subset: int) -> OpenSetMask:
        return OpenSetMask.union_of(self.n, (r for b, r in enumerate(self.union_rects) if subset >> b & 1))

    def mask(self, index: int) -> OpenSetMask:
        if index < self.n_rects:
            m = (1 << self.n) - 1
            a, b = divmod(index, m)
            rect = DyadicRect(DyadicInterval.from_heap(a), DyadicInterval.from_heap(b))
            return OpenSetMask.from_rect(self.n, rect)
        index -= self.n_rects
        if index < len(self.masks):
            return self.masks[index]
        return self.union_mask(self.union_subsets[index - len(self.masks)])

    def describe(self, index: int) -> str:
        if index < self.n_rects:
            m = (1 << self.n) - 1
            a, b = divmod(index, m)
            return str(DyadicRect(DyadicInterval.from_heap(a), DyadicInterval.from_heap(b)))
        index -= self.n_rects
        if index < len(self.masks):
            return self.labels[index]
        return f"union:{self.union_subsets[index - len(self.masks)]:#x}"

    @property
    def sets(self) -> list[OpenSetMask]:
        return [self.mask(i) for i in range(len(self))]

    def extra_masks(self):
        """Non-rectangle candidates in iteration order."""
        yield from self.masks
        for s in self.union_subsets:
            yield self.union_mask(s)


class _Collector:
    def __init__(self, n: int, include_rects: bool):
        self.n = n
        self.include_rects = include_rects
        self.seen: set = set()
        self.masks: list[OpenSetMask] = []
        self.labels: list[str] = []

    def fresh(self, omega: OpenSetMask) -> bool:
        if omega.n != self.n or omega.is_empty():
            return False
        if self.include_rects and _rect_of_mask(omega.mask) is not None:
            return False
        if omega in self.seen:
            return False
        self.seen.add(omega)
        return True

    def add(self, omega: OpenSetMask, label: str) -> None:
        if self.fresh(omega):
            self.masks.append(omega)
            self.labels.append(label)


def bmo_candidates(
    g: HaarField,
    family=None,
    *,
    include_rects: bool = True,
    top_m: int = 16,
    max_plateaus: int = 64,
    exhaustive_limit: int = 12,
) -> BmoCandidates:
    """Candidate open sets for the BMO supremum of ``g``.

    (a) every Haar-carrier rectangle; (b) superlevel sets of S_d(g) at
    thresholds 2^k, plus {S_d >= v} for each distinct plateau value v when
    there are at most ``max_plateaus`` of them; (c) the sets of ``family``;
    (d) unions of the top-m rectangles ranked by g_R^2/|R|, m = 1..top_m;
    (e) all unions of support rectangles when the support has at most
    ``exhaustive_limit`` elements.
    """
    n = g.n
    col = _Collector(n, include_rects)
    if not g.is_zero():
        s = square_function(g).values
        smax = float(s.max())
        spos = float(s[s > 0].min())
        k_hi = int(np.ceil(np.log2(smax))) - 1
        k_lo = int(np.floor(np.log2(spos))) - 1
        for k in range(k_hi, k_lo - 1, -1):
            col.add(superlevel_set(s, 2.0**k), f"S_d>2^{k}")
        plateaus = np.unique(s[s > 0])
        if plateaus.size <= max_plateaus:
            for v in plateaus[::-1]:
                col.add(OpenSetMask(s >= v), f"S_d>={v!r}")
    if family is not None:
        for i, omega in enumerate(getattr(family, "omegas", family)):
            col.add(omega, f"family[{i}]")
    items = g.items()
    if items:
        score = np.array([c * c * 2.0 ** (r.ix.j + r.iy.j) for r, c in items])
        order = np.argsort(-score, kind="stable")
        acc = np.zeros((1 << n,) * 2, dtype=bool)
        for m, i in enumerate(order[:top_m], start=1):
            acc[items[i][0].cells(n)] = True
            col.add(OpenSetMask(acc), f"top{m}")
    subsets: list[int] = []
    rects: tuple[DyadicRect, ...] = ()
    if items and len(items) <= exhaustive_limit:
        rects = tuple(r for r, _ in items)
        for subset in range(1, 1 << len(rects)):
            omega = OpenSetMask.union_of(n, (r for b, r in enumerate(rects) if subset >> b & 1))
            if col.fresh(omega):
                subsets.append(subset)
    return BmoCandidates(n, include_rects, tuple(col.masks), tuple(col.labels), rects, tuple(subsets))


def rectangle_candidates(n: int) -> BmoCandidates:
    return BmoCandidates(n)


def _subtree_sum(table: np.ndarray, axis: int) -> np.ndarray:
    t = np.moveaxis(np.array(table, dtype=np.float64), axis, 0)
    sl = level_slices((t.shape[0] + 1).bit_length() - 1)
    for j in range(len(sl) - 2, -1, -1):
        child = t[sl[j + 1]]
        t[sl[j]] += child[0::2] + child[1::2]
    return np.moveaxis(t, 0, axis)


def rect_bmo_values(g: HaarField) -> np.ndarray:
    """(|R|^-1 sum_{R' in R} g_{R'}^2)^{1/2} for every Haar-carrier rectangle R."""
    sub = _subtree_sum(_subtree_sum(g.coeffs**2, 0), 1)
    return np.sqrt(sub / rect_measures(g.n))


def mask_bmo_value(g: HaarField, omega: OpenSetMask) -> float:
    if omega.count == 0:
        raise ValueError("candidate set has zero measure")
    num = float(np.sum(np.where(contained_rects(omega), g.coeffs**2, 0.0)))
    return float(np.sqrt(num / omega.measure))


def rect_jn_values(g: HaarField, p: float) -> np.ndarray:
    """<S_d(g|R)^p>_R^{1/p} for every Haar-carrier rectangle R."""
    n = g.n
    w = g.coeffs**2 / rect_measures(n)
    m = (1 << n) - 1
    out = np.zeros((m, m))
    sl = level_slices(n)
    for jx in range(n):
        part = descend(w, 0, "sum", start=jx)
        for jy in range(n):
            s2 = expand(descend(part, 1, "sum", start=jy), n)
            sp = np.sqrt(s2) ** p if p != 2 else s2
            bx, by = 1 << (n - jx), 1 << (n - jy)
            means = sp.reshape(1 << jx, bx, 1 << jy, by).mean(axis=(1, 3))
            out[sl[jx], sl[jy]] = means ** (1.0 / p)
    return out


def mask_jn_value(g: HaarField, omega: OpenSetMask, p: float) -> float:
    if omega.count == 0:
        raise ValueError("candidate set has zero measure")
    s = square_function_local(g, omega).values
    return float((np.sum(s[omega.mask] ** p) / omega.count) ** (1.0 / p))


def _search(cands: BmoCandidates, rect_values: np.ndarray | None, mask_value) -> tuple[float, int]:
    if len(cands) == 0:
        raise ValueError("no BMO candidates")
    best, arg = -np.inf, -1
    if cands.include_rects:
        flat = rect_values.ravel()
        top = flat.max()
        # first rectangle within the tie tolerance of the maximum wins
        i = int(np.flatnonzero(flat >= top - TIE_TOL * max(1.0, abs(top)))[0])
        best, arg = float(flat[i]), i
    offset = cands.n_rects
    for k, omega in enumerate(cands.extra_masks()):
        v = mask_value(omega)
        if v > best + TIE_TOL * max(1.0, abs(best)):
            best, arg = v, offset + k
    return best, arg


def bmo_search(g: HaarField, cands: BmoCandidates) -> tuple[float, int]:
    """Best BMO value over candidates and the index of the maximizing set."""
    if cands.n != g.n:
        raise ValueError("resolution mismatch between field and candidates")
    rv = rect_bmo_values(g) if cands.include_rects else None
    return _search(cands, rv, lambda om: mask_bmo_value(g, om))


def bmo_values(g: HaarField, cands: BmoCandidates) -> np.ndarray:
    """BMO value of every candidate, in candidate index order."""
    if cands.n != g.n:
        raise ValueError("resolution mismatch between field and candidates")
    rv = rect_bmo_values(g).ravel() if cands.include_rects else np.zeros(0)
    extra = [mask_bmo_value(g, om) for om in cands.extra_masks()]
    return np.concatenate([rv, np.asarray(extra, dtype=np.float64)])


def bmo_norm_lower(g: HaarField, cands: BmoCandidates | None = None) -> float:
    """max over candidates of (|Omega|^-1 sum_{R in Omega} g_R^2)^{1/2}."""
    if cands is None:
        cands = bmo_candidates(g)
    return bmo_search(g, cands)[0]


def john_nirenberg_search(g: HaarField, p: float, cands: BmoCandidates) -> tuple[float, int]:
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    if cands.n != g.n:
        raise ValueError("resolution mismatch between field and candidates")
    rv = rect_jn_values(g, p) if cands.include_rects else None
    return _search(cands, rv, lambda om: mask_jn_value(g, om, p))


def john_nirenberg_ratio(g: HaarField, p: float, cands: BmoCandidates | None = None) -> float:
    """max over candidates of <S_d(g|Omega)^p>_Omega^{1/p}."""
    if cands is None:
        cands = bmo_candidates(g)
    return john_nirenberg_search(g, p, cands)[0]
