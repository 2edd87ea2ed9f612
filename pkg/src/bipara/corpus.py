"""Deterministic corpora of symbols, grid functions and open sets."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .construction import ContractingFamily
from .dyadic import DyadicRect, GridFunction, OpenSetMask, check_resolution, save_grid
from .haar import HaarField, analyze, rect_measures, synthesize
from .rng import substream_seed


class CorpusKind(str, Enum):
    SINGLE_COEFF = "single_coeff"
    BAND_GAUSSIAN = "band_gaussian"
    DIAGONAL_LACUNARY = "diagonal_lacunary"
    INDICATOR_DERIVED = "indicator_derived"
    DENSE_RANDOM = "dense_random"


@dataclass(frozen=True)
class CorpusSpec:
    kind: CorpusKind
    n: int
    sparsity: int = 16
    seed: int = 0
    count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", CorpusKind(self.kind))
        check_resolution(self.n)
        if self.sparsity < 1 or self.count < 0:
            raise ValueError("sparsity must be >= 1 and count >= 0")


@dataclass(frozen=True, eq=False)
class CorpusItem:
    id: str
    field: HaarField
    grid: GridFunction
    mask: OpenSetMask | None = None


def instance_rng(seed: int, stream: str, *words: int) -> np.random.Generator:
    return np.random.default_rng(substream_seed(seed, stream, *words))


BAND = (1, 3)


def band_levels(n: int) -> range:
    """Scale band for band_gaussian symbols.

    Levels BAND[0]..BAND[1] per axis, independent of n (clipped to n - 1), so
    that the same symbol geometry is sampled at every resolution.
    """
    lo, hi = BAND
    if n <= lo:
        return range(n)
    return range(lo, min(hi, n - 1) + 1)


def _band_indices(n: int) -> np.ndarray:
    """Flat heap x heap indices of Haar-carrier rectangles with both levels in the band."""
    axis = np.concatenate([np.arange((1 << j) - 1, (1 << (j + 1)) - 1) for j in band_levels(n)])
    m = (1 << n) - 1
    return (axis[:, None] * m + axis[None, :]).ravel()


def random_rect(n: int, rng: np.random.Generator, levels=None) -> DyadicRect:
    lv = range(n) if levels is None else levels
    jx, jy = int(rng.choice(lv)), int(rng.choice(lv))
    return DyadicRect.of(jx, int(rng.integers(1 << jx)), jy, int(rng.integers(1 << jy)))


def random_mask(n: int, rng: np.random.Generator, pieces: int | None = None, max_area_level: int = 4) -> OpenSetMask:
    """Union of 1..4 random dyadic rectangles, each of area >= 2^-max_area_level.

    Levels per axis stay below n, so the geometry is the same at every
    resolution that can represent it.
    """
    pieces = int(rng.integers(1, 5)) if pieces is None else pieces
    rects = []
    for _ in range(pieces):
        jx = int(rng.integers(0, min(n - 1, max_area_level) + 1))
        jy = int(rng.integers(0, min(n - 1, max_area_level - jx) + 1))
        rects.append(DyadicRect.of(jx, int(rng.integers(1 << jx)), jy, int(rng.integers(1 << jy))))
    return OpenSetMask.union_of(n, rects)


def random_grid(n: int, rng: np.random.Generator) -> GridFunction:
    return GridFunction(rng.standard_normal((1 << n, 1 << n)))


def _blob(omega: OpenSetMask, size: int, rng: np.random.Generator) -> np.ndarray:
    """The ``size`` cells of omega nearest a random centre."""
    n = omega.n
    cells = np.argwhere(omega.mask)
    centre = rng.uniform(0, 1 << n, size=2)
    d = np.sum((cells + 0.5 - centre) ** 2, axis=1)
    keep = cells[np.argsort(d, kind="stable")[:size]]
    out = np.zeros_like(omega.mask)
    out[keep[:, 0], keep[:, 1]] = True
    return out


def random_contracting_family(n: int, rng: np.random.Generator, length: int) -> ContractingFamily:
    """Nested blobs, each between 10% and 50% of the previous set."""
    omegas = [OpenSetMask.full(n)]
    while len(omegas) < length:
        prev = omegas[-1]
        if prev.count < 2:
            break
        size = max(1, int(prev.count * rng.uniform(0.1, 0.5)))
        omegas.append(OpenSetMask(_blob(prev, size, rng)))
    return ContractingFamily.from_sets(omegas)


def random_large_subsets(family: ContractingFamily, eta: float, rng: np.random.Generator) -> list[OpenSetMask]:
    """E_i inside omega_i with |E_i| >= eta |omega_i|."""
    out = []
    for omega in family.omegas:
        lo = int(np.ceil(eta * omega.count))
        size = int(rng.integers(lo, omega.count + 1))
        cells = np.argwhere(omega.mask)
        pick = cells[rng.choice(len(cells), size=size, replace=False)]
        m = np.zeros_like(omega.mask)
        m[pick[:, 0], pick[:, 1]] = True
        out.append(OpenSetMask(m))
    return out


def _make(spec: CorpusSpec, i: int) -> CorpusItem:
    n, s = spec.n, spec.sparsity
    rng = instance_rng(spec.seed, spec.kind.value, n, s, i)
    cid = f"{spec.kind.value}/n{n}/s{spec.seed}/{i}"
    m = (1 << n) - 1
    c = np.zeros(m * m)
    mask = None
    if spec.kind is CorpusKind.SINGLE_COEFF:
        c[rng.integers(m * m)] = 1.0
    elif spec.kind is CorpusKind.BAND_GAUSSIAN:
        band = _band_indices(n)
        pick = rng.choice(band.size, size=min(s, band.size), replace=False)
        c[band[np.sort(pick)]] = rng.standard_normal(pick.size)
    elif spec.kind is CorpusKind.DIAGONAL_LACUNARY:
        diag = [(j, kx, ky) for j in range(n) for kx in range(1 << j) for ky in range(1 << j)]
        pick = np.sort(rng.choice(len(diag), size=min(s, len(diag)), replace=False))
        for t in pick:
            j, kx, ky = diag[t]
            r = DyadicRect.of(j, kx, j, ky)
            a, b = r.heap_index()
            c[a * m + b] = (1.0 if rng.integers(2) else -1.0) * 2.0**-j
    elif spec.kind is CorpusKind.INDICATOR_DERIVED:
        levels = range(1, n) if n > 1 else range(n)
        mask = OpenSetMask.union_of(n, [random_rect(n, rng, levels) for _ in range(s)])
        field = analyze(mask.indicator())
        return CorpusItem(cid, field, mask.indicator(), mask)
    elif spec.kind is CorpusKind.DENSE_RANDOM:
        c = rng.standard_normal(m * m) * np.sqrt(rect_measures(n)).ravel()
    field = HaarField(c.reshape(m, m))
    return CorpusItem(cid, field, synthesize(field), mask)


def generate_corpus(spec: CorpusSpec) -> list[CorpusItem]:
    return [_make(spec, i) for i in range(spec.count)]


def write_corpus(items: list[CorpusItem], out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, item in enumerate(items):
        stem = f"item{i:04d}"
        fp = out / f"{stem}.field.json"
        item.field.save(fp)
        gp = out / f"{stem}.grid.csv"
        save_grid(item.grid, gp)
        paths += [fp, gp]
    return paths

