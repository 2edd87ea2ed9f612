"""Dyadic geometry on the unit square and grid-level primitives.

Grid convention: a resolution-``n`` grid has ``2**n x 2**n`` cells over
``[0,1)^2``.  ``values[i1, i2]`` is the value on the cell
``[i1 2^-n, (i1+1) 2^-n) x [i2 2^-n, (i2+1) 2^-n)``; axis 0 is the first
coordinate.  Storage is row-major (numpy default).

Dyadic intervals are addressed in heap order: level ``j``, position ``k``
maps to index ``2**j - 1 + k``.  With levels ``0..n`` a per-axis table has
``2**(n+1) - 1`` entries; restricted to Haar-carrier levels ``0..n-1`` it
has ``2**n - 1`` entries and is a prefix of the full table.  Every rectangle
table in this package is the outer product of two such axes, so all the
bulk operators below are separable: a reduction along axis 0 followed by the
same reduction along axis 1.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAX_LEVEL = 12


class ResolutionError(ValueError):
    pass


def check_resolution(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ResolutionError(f"resolution must be an integer, got {n!r}")
    if not 1 <= n <= MAX_LEVEL:
        raise ResolutionError(f"resolution must lie in [1, {MAX_LEVEL}], got {n}")
    return int(n)


def level_of_size(size: int) -> int:
    n = int(size).bit_length() - 1
    if size < 2 or 1 << n != size:
        raise ResolutionError(f"grid side {size} is not a power of two >= 2")
    return n


@dataclass(frozen=True, order=True)
class DyadicInterval:
    j: int
    k: int

    def __post_init__(self):
        if self.j < 0 or not 0 <= self.k < (1 << self.j):
            raise ValueError(f"invalid dyadic interval (j={self.j}, k={self.k})")

    @property
    def length(self) -> float:
        return 2.0 ** -self.j

    @property
    def left(self) -> float:
        return self.k * 2.0 ** -self.j

    @property
    def heap_index(self) -> int:
        return (1 << self.j) - 1 + self.k

    def cells(self, n: int) -> slice:
        """Slice of finest-grid indices covered by the interval."""
        if self.j > n:
            raise ValueError(f"interval level {self.j} exceeds resolution {n}")
        w = 1 << (n - self.j)
        return slice(self.k * w, (self.k + 1) * w)

    def children(self) -> tuple[DyadicInterval, DyadicInterval]:
        return DyadicInterval(self.j + 1, 2 * self.k), DyadicInterval(self.j + 1, 2 * self.k + 1)

    @classmethod
    def from_heap(cls, index: int) -> DyadicInterval:
        j = (index + 1).bit_length() - 1
        return cls(j, index + 1 - (1 << j))


@dataclass(frozen=True, order=True)
class DyadicRect:
    ix: DyadicInterval
    iy: DyadicInterval

    @classmethod
    def of(cls, jx: int, kx: int, jy: int, ky: int) -> DyadicRect:
        return cls(DyadicInterval(jx, kx), DyadicInterval(jy, ky))

    @property
    def key(self) -> tuple[int, int, int, int]:
        return self.ix.j, self.ix.k, self.iy.j, self.iy.k

    def cells(self, n: int) -> tuple[slice, slice]:
        return self.ix.cells(n), self.iy.cells(n)

    def is_haar_carrier(self, n: int) -> bool:
        return self.ix.j <= n - 1 and self.iy.j <= n - 1

    def heap_index(self) -> tuple[int, int]:
        return self.ix.heap_index, self.iy.heap_index

    def __str__(self):
        return "R(jx={}, kx={}, jy={}, ky={})".format(*self.key)


UNIT_SQUARE = DyadicRect.of(0, 0, 0, 0)


def measure(rect: DyadicRect) -> float:
    return 2.0 ** -(rect.ix.j + rect.iy.j)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant function on the finest dyadic cells."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"grid must be square, got shape {v.shape}")
        check_resolution(level_of_size(v.shape[0]))
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self) -> int:
        return level_of_size(self.values.shape[0])

    @classmethod
    def zeros(cls, n: int) -> GridFunction:
        return cls(np.zeros((1 << check_resolution(n),) * 2))

    @classmethod
    def constant(cls, n: int, c: float) -> GridFunction:
        return cls(np.full((1 << check_resolution(n),) * 2, float(c)))

    def __add__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.values - other.values)

    def __mul__(self, c: float) -> GridFunction:
        return GridFunction(self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> GridFunction:
        return GridFunction(-self.values)

    def integral(self) -> float:
        return float(self.values.sum()) * 4.0 ** -self.n


@dataclass(frozen=True, eq=False)
class OpenSetMask:
    """Union of finest cells; stands in for an open subset of the square."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"mask must be square, got shape {m.shape}")
        check_resolution(level_of_size(m.shape[0]))
        object.__setattr__(self, "mask", _frozen(m.astype(bool)))

    @property
    def n(self) -> int:
        return level_of_size(self.mask.shape[0])

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def measure(self) -> float:
        return self.count * 4.0 ** -self.n

    def is_empty(self) -> bool:
        return not self.mask.any()

    @classmethod
    def empty(cls, n: int) -> OpenSetMask:
        return cls(np.zeros((1 << check_resolution(n),) * 2, dtype=bool))

    @classmethod
    def full(cls, n: int) -> OpenSetMask:
        return cls(np.ones((1 << check_resolution(n),) * 2, dtype=bool))

    @classmethod
    def from_rect(cls, n: int, rect: DyadicRect) -> OpenSetMask:
        m = np.zeros((1 << check_resolution(n),) * 2, dtype=bool)
        m[rect.cells(n)] = True
        return cls(m)

    @classmethod
    def union_of(cls, n: int, rects) -> OpenSetMask:
        m = np.zeros((1 << check_resolution(n),) * 2, dtype=bool)
        for r in rects:
            m[r.cells(n)] = True
        return cls(m)

    def indicator(self) -> GridFunction:
        return GridFunction(self.mask.astype(np.float64))

    def __and__(self, other: OpenSetMask) -> OpenSetMask:
        return OpenSetMask(self.mask & other.mask)

    def __or__(self, other: OpenSetMask) -> OpenSetMask:
        return OpenSetMask(self.mask | other.mask)

    def __le__(self, other: OpenSetMask) -> bool:
        return bool(np.all(~self.mask | other.mask))

    def __eq__(self, other) -> bool:
        return isinstance(other, OpenSetMask) and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.mask.shape, np.packbits(self.mask).tobytes()))

    def contains_rect(self, rect: DyadicRect) -> bool:
        return bool(self.mask[rect.cells(self.n)].all())


@dataclass(frozen=True)
class Exponents:
    """Exponent triple with 1/q = 1/p + 1/r."""

    p: float
    q: float
    r: float

    def __post_init__(self):
        for name in ("p", "q", "r"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"exponent {name} must be positive and finite, got {v}")
        if abs(1 / self.q - 1 / self.p - 1 / self.r) > 1e-12:
            raise ValueError(f"exponents violate 1/q = 1/p + 1/r: {self}")

    @classmethod
    def from_pr(cls, p: float, r: float) -> Exponents:
        return cls(p, 1.0 / (1.0 / p + 1.0 / r), r)

    @property
    def t(self) -> float:
        return self.r / self.q - 1.0


# -- scalar operations --------------------------------------------------------


def average(f: GridFunction, rect: DyadicRect) -> float:
    n = f.n
    if rect.ix.j > n or rect.iy.j > n:
        raise ValueError(f"{rect} is finer than the grid (n={n})")
    return float(f.values[rect.cells(n)].mean())


def lp_quasinorm(f: GridFunction | np.ndarray, p: float) -> float:
    """(4^-n sum |v|^p)^(1/p); accepts a GridFunction or a raw square array."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    v = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=np.float64)
    a = np.abs(v)
    if p == 1:
        return float(a.mean())
    if p == 2:
        return float(np.sqrt(np.mean(a * a)))
    return float(np.mean(a**p) ** (1.0 / p))


def enumerate_rects(n: int) -> list[DyadicRect]:
    n = check_resolution(n)
    return [
        DyadicRect.of(jx, kx, jy, ky)
        for jx in range(n)
        for kx in range(1 << jx)
        for jy in range(n)
        for ky in range(1 << jy)
    ]


def superlevel_set(f: GridFunction | np.ndarray, lam: float) -> OpenSetMask:
    v = f.values if isinstance(f, GridFunction) else np.asarray(f)
    return OpenSetMask(v > lam)


# -- separable tree pyramids ---------------------------------------------------

_COMBINE = {
    "mean": lambda a, b: (a + b) * 0.5,
    "sum": np.add,
    "all": np.logical_and,
    "max": np.maximum,
}


def pyramid(arr: np.ndarray, axis: int, op: str = "mean", levels: int | None = None) -> np.ndarray:
    """Reduce cells into dyadic intervals along ``axis``, heap-ordered.

    The input has ``2**n`` cells along ``axis``; the output has
    ``2**levels - 1`` entries covering levels ``0..levels-1`` (default
    ``levels = n + 1``, i.e. down to the cells themselves).
    """
    a = np.moveaxis(np.asarray(arr), axis, 0)
    n = level_of_size(a.shape[0])
    levels = n + 1 if levels is None else levels
    combine = _COMBINE[op]
    out = [a]
    for _ in range(n):
        a = combine(a[0::2], a[1::2])
        out.append(a)
    out.reverse()
    return np.moveaxis(np.concatenate(out[:levels], axis=0), 0, axis)


def descend(table: np.ndarray, axis: int, op: str = "sum", start: int = 0) -> np.ndarray:
    """Accumulate a heap-ordered table down to cells along ``axis``.

    Each output cell reduces (``sum`` or ``max``) the table entries of its
    ancestor intervals at levels ``start..L-1``, where the table holds ``L``
    levels.  Cells below the finest stored level inherit their ancestor's
    value.
    """
    t = np.moveaxis(np.asarray(table), axis, 0)
    L = (t.shape[0] + 1).bit_length() - 1
    if (1 << L) - 1 != t.shape[0]:
        raise ValueError(f"table length {t.shape[0]} is not 2**L - 1")
    combine = _COMBINE[op]
    acc = t[(1 << start) - 1:(1 << (start + 1)) - 1]
    for j in range(start + 1, L):
        acc = combine(np.repeat(acc, 2, axis=0), t[(1 << j) - 1:(1 << (j + 1)) - 1])
    return np.moveaxis(acc, 0, axis)


def expand(arr: np.ndarray, n: int) -> np.ndarray:
    """Upsample a per-block array (one entry per dyadic block) to the grid."""
    a = np.asarray(arr)
    return np.repeat(np.repeat(a, (1 << n) // a.shape[0], axis=0), (1 << n) // a.shape[1], axis=1)


def average_table(f: GridFunction) -> np.ndarray:
    """Averages over every dyadic rectangle (levels 0..n per axis), heap x heap."""
    return pyramid(pyramid(f.values, 0, "mean"), 1, "mean")


def containment_table(omega: OpenSetMask, levels: int | None = None) -> np.ndarray:
    """``table[a, b]`` is True when rectangle (a, b) lies inside ``omega``."""
    return pyramid(pyramid(omega.mask, 0, "all", levels), 1, "all", levels)


def level_slices(levels: int) -> list[slice]:
    return [slice((1 << j) - 1, (1 << (j + 1)) - 1) for j in range(levels)]


def heap_measures(levels: int) -> np.ndarray:
    """Interval lengths along one heap axis."""
    return np.concatenate([np.full(1 << j, 2.0 ** -j) for j in range(levels)])


# -- file formats -------------------------------------------------------------

GRID_HEADER = "# bipara-grid v1 n={n}"
MASK_HEADER = "# bipara-mask v1 n={n}"


def _write_csv(path, header: str, rows: np.ndarray, fmt) -> None:
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def _read_csv(path, kind: str) -> tuple[int, np.ndarray]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(f"# bipara-{kind} v1 n="):
        raise ValueError(f"{path}: missing '# bipara-{kind} v1 n=<n>' header")
    n = check_resolution(int(lines[0].rsplit("=", 1)[1]))
    rows = [r for r in csv.reader(lines[1:]) if r]
    data = np.array([[float(x) for x in r] for r in rows])
    if data.shape != (1 << n, 1 << n):
        raise ValueError(f"{path}: expected {1 << n}x{1 << n} entries, got {data.shape}")
    return n, data


def save_grid(f: GridFunction, path) -> None:
    _write_csv(path, GRID_HEADER.format(n=f.n), f.values, lambda v: repr(float(v)))


def load_grid(path) -> GridFunction:
    _, data = _read_csv(path, "grid")
    return GridFunction(data)


def save_mask(omega: OpenSetMask, path) -> None:
    _write_csv(path, MASK_HEADER.format(n=omega.n), omega.mask, lambda v: str(int(v)))


def load_mask(path) -> OpenSetMask:
    _, data = _read_csv(path, "mask")
    if not np.isin(data, (0.0, 1.0)).all():
        raise ValueError(f"{path}: mask entries must be 0 or 1")
    return OpenSetMask(data.astype(bool))
