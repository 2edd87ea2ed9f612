"""Bi-parameter Haar analysis, synthesis and dyadic square functions.

Sign convention: ``h_I = |I|^{-1/2}`` on the left (lower-coordinate) half of
``I`` and ``-|I|^{-1/2}`` on the right half, along both axes.  Only genuine
bi-parameter coefficients (both intervals at levels ``0..n-1``) are kept; the
constant and one-variable components of a grid function are discarded by
:func:`analyze`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dyadic import (
    DyadicInterval,
    DyadicRect,
    GridFunction,
    OpenSetMask,
    _frozen,
    average_table,
    check_resolution,
    containment_table,
    descend,
    expand,
    heap_measures,
    level_of_size,
)

FIELD_FORMAT = "bipara-field"
FIELD_VERSION = 1


def _haar_scale(n: int) -> np.ndarray:
    """2^{-j/2-1} per Haar heap index: averages of children -> coefficient."""
    return np.concatenate([np.full(1 << j, 2.0 ** (-j / 2 - 1)) for j in range(n)])


@dataclass(frozen=True, eq=False)
class HaarField:
    """Finitely supported bi-parameter Haar coefficients at resolution n.

    ``coeffs[a, b]`` is the coefficient of the rectangle whose axis intervals
    have heap indices ``a`` and ``b`` (levels ``0..n-1``).  Storage is dense;
    zero entries are simply absent from :meth:`items`.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"coefficient table must be square, got {c.shape}")
        check_resolution(level_of_size(c.shape[0] + 1))
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def n(self) -> int:
        return level_of_size(self.coeffs.shape[0] + 1)

    @classmethod
    def zeros(cls, n: int) -> HaarField:
        m = (1 << check_resolution(n)) - 1
        return cls(np.zeros((m, m)))

    @classmethod
    def from_items(cls, n: int, items) -> HaarField:
        """Build from ``{DyadicRect | (jx,kx,jy,ky): value}`` or pairs."""
        m = (1 << check_resolution(n)) - 1
        c = np.zeros((m, m))
        pairs = items.items() if isinstance(items, dict) else items
        for rect, v in pairs:
            if not isinstance(rect, DyadicRect):
                rect = DyadicRect.of(*rect)
            if not rect.is_haar_carrier(n):
                raise ValueError(f"{rect} is not a Haar carrier at n={n}")
            c[rect.heap_index()] = v
        return cls(c)

    @classmethod
    def single(cls, n: int, rect: DyadicRect, c: float = 1.0) -> HaarField:
        return cls.from_items(n, [(rect, c)])

    def items(self) -> list[tuple[DyadicRect, float]]:
        """Nonzero coefficients in lexicographic (jx, kx, jy, ky) order."""
        a, b = np.nonzero(self.coeffs)
        return [
            (DyadicRect(DyadicInterval.from_heap(int(i)), DyadicInterval.from_heap(int(k))), float(self.coeffs[i, k]))
            for i, k in zip(a, b)
        ]

    def __getitem__(self, rect: DyadicRect) -> float:
        return float(self.coeffs[rect.heap_index()])

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.coeffs))

    def support(self) -> np.ndarray:
        return self.coeffs != 0

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def energy(self) -> float:
        return float(np.sum(self.coeffs**2))

    def restrict(self, keep: np.ndarray) -> HaarField:
        return HaarField(np.where(keep, self.coeffs, 0.0))

    def __add__(self, other: HaarField) -> HaarField:
        return HaarField(self.coeffs + other.coeffs)

    def __sub__(self, other: HaarField) -> HaarField:
        return HaarField(self.coeffs - other.coeffs)

    def __mul__(self, c) -> HaarField:
        return HaarField(self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self) -> HaarField:
        return HaarField(-self.coeffs)

    def to_json(self) -> str:
        coeffs = [
            {"jx": r.ix.j, "kx": r.ix.k, "jy": r.iy.j, "ky": r.iy.k, "c": c}
            for r, c in self.items()
        ]
        doc = {FIELD_FORMAT: True, "version": FIELD_VERSION, "n": self.n, "coeffs": coeffs}
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> HaarField:
        doc = json.loads(text)
        if not isinstance(doc, dict) or not doc.get(FIELD_FORMAT) or doc.get("version") != FIELD_VERSION:
            raise ValueError("not a bipara-field v1 document")
        items = [((e["jx"], e["kx"], e["jy"], e["ky"]), float(e["c"])) for e in doc["coeffs"]]
        return cls.from_items(int(doc["n"]), items)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> HaarField:
        return cls.from_json(Path(path).read_text())


def rect_measures(n: int) -> np.ndarray:
    """|R| for every Haar-carrier rectangle, heap x heap."""
    m = heap_measures(n)
    return np.outer(m, m)


def analyze(f: GridFunction) -> HaarField:
    n = f.n
    t = average_table(f)
    s = _haar_scale(n)
    d = (t[1::2] - t[2::2]) * s[:, None]
    return HaarField((d[:, 1::2] - d[:, 2::2]) * s[None, :])


def _inverse_axis(c: np.ndarray, axis: int) -> np.ndarray:
    c = np.moveaxis(c, axis, 0)
    n = level_of_size(c.shape[0] + 1)
    v = np.zeros((1,) + c.shape[1:])
    for j in range(n):
        step = c[(1 << j) - 1:(1 << (j + 1)) - 1] * 2.0 ** (j / 2)
        v = np.repeat(v, 2, axis=0)
        v[0::2] += step
        v[1::2] -= step
    return np.moveaxis(v, 0, axis)


def synthesize(g: HaarField) -> GridFunction:
    return GridFunction(_inverse_axis(_inverse_axis(g.coeffs, 0), 1))


def project_biparam(f: GridFunction) -> GridFunction:
    return synthesize(analyze(f))


def _square_from_weights(w: np.ndarray, n: int) -> np.ndarray:
    s2 = descend(descend(w, 0, "sum"), 1, "sum")
    return np.sqrt(expand(s2, n))


def square_function(g: HaarField) -> GridFunction:
    """S_d(g)(x) = (sum_R g_R^2 chi_R(x) / |R|)^{1/2}."""
    n = g.n
    return GridFunction(_square_from_weights(g.coeffs**2 / rect_measures(n), n))


def contained_rects(omega: OpenSetMask) -> np.ndarray:
    """Boolean heap table: Haar-carrier rectangle lies inside ``omega``."""
    return containment_table(omega, levels=omega.n)


def square_function_local(g: HaarField, omega: OpenSetMask) -> GridFunction:
    """S_d(g | Omega): only rectangles R contained in Omega contribute."""
    n = g.n
    if omega.n != n:
        raise ValueError(f"resolution mismatch: field n={n}, mask n={omega.n}")
    w = np.where(contained_rects(omega), g.coeffs**2, 0.0) / rect_measures(n)
    return GridFunction(_square_from_weights(w, n))
