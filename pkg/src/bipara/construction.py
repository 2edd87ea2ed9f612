"""Contracting decompositions, test functions, and randomized witnesses.

These are the constructions used to bound the paraproduct norm from below:
a symbol ``g`` is split along a contracting family of open sets, each set
gets a test function that has large averages on most of it, and random
signed sums of those test functions are fed to ``pi_g``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import (
    Exponents,
    GridFunction,
    OpenSetMask,
    average_table,
    containment_table,
    descend,
    lp_quasinorm,
    superlevel_set,
)
from .haar import HaarField, analyze, contained_rects, square_function_local, synthesize
from .maximal import dyadic_maximal, enlarge
from .norms import dot_hardy_norm, hardy_norm
from .paraproduct import haar_averages, operator_ratio
from . import rng

NEG_INF = -math.inf
DEFAULT_ETA = 2.0**-6
MAX_RETRIES = 20
MAX_HALVINGS = 20


class DecompositionError(RuntimeError):
    pass


class CalibrationError(RuntimeError):
    def __init__(self, message: str, trace: list[dict]):
        super().__init__(message)
        self.trace = trace


def pow2(lam: float, scale: float = 1.0) -> float:
    """2^(scale*lam) with 2^-inf = 0."""
    return 0.0 if lam == NEG_INF else 2.0 ** (scale * lam)


@dataclass(frozen=True, eq=False)
class FamilyItem:
    omega: OpenSetMask
    lam: float
    superlevel: OpenSetMask | None = None
    measure_below: float = 0.0  # |{S_d(g|omega) > 2^(lam-1)}|


@dataclass(frozen=True, eq=False)
class ContractingFamily:
    items: tuple[FamilyItem, ...]
    eta: float = DEFAULT_ETA
    retries: int = 0

    @classmethod
    def from_sets(cls, omegas, lambdas=None, eta: float = DEFAULT_ETA) -> ContractingFamily:
        omegas = list(omegas)
        lambdas = [0] * len(omegas) if lambdas is None else list(lambdas)
        return cls(tuple(FamilyItem(o, lam) for o, lam in zip(omegas, lambdas)), eta)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def omegas(self) -> list[OpenSetMask]:
        return [it.omega for it in self.items]

    @property
    def lambdas(self) -> list[float]:
        return [it.lam for it in self.items]

    def next_omega(self, i: int) -> OpenSetMask:
        if i + 1 < len(self.items):
            return self.items[i + 1].omega
        return OpenSetMask.empty(self.items[0].omega.n)

    def is_contracting(self) -> bool:
        for a, b in zip(self.omegas, self.omegas[1:]):
            if not (b <= a and 2 * b.count <= a.count):
                return False
        return True

    def trace(self) -> list[dict]:
        return [
            {
                "i": i,
                "lambda": None if it.lam == NEG_INF else int(it.lam),
                "measure_omega": it.omega.measure,
                "measure_superlevel": None if it.superlevel is None else it.superlevel.measure,
                "measure_below": it.measure_below,
                "retries": self.retries,
            }
            for i, it in enumerate(self.items)
        ]

    def to_json(self) -> str:
        doc = {"eta": self.eta, "retries": self.retries, "items": self.trace()}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def smallest_lambda(s: np.ndarray, count: int, eta: float) -> float:
    """Smallest lam in Z u {-inf} with #{s > 2^lam} <= eta * count.

    ``s`` is nonnegative and takes finitely many values, so the answer is
    ``ceil(log2 v)`` where ``v`` is the (K+1)-th largest value and
    ``K = floor(eta * count)``; it is ``-inf`` when fewer than K+1 cells are
    positive.
    """
    k = math.floor(eta * count)
    pos = s[s > 0]
    if pos.size <= k:
        return NEG_INF
    v = float(np.partition(pos, pos.size - 1 - k)[pos.size - 1 - k])
    m, e = math.frexp(v)
    return e - 1 if m == 0.5 else e


class _HalvingFailure(Exception):
    pass


def _decompose(g: HaarField, omega0: OpenSetMask, eta: float) -> list[FamilyItem]:
    support = g.support()
    items = []
    omega = omega0
    while True:
        s = square_function_local(g, omega).values
        lam = smallest_lambda(s, omega.count, eta)
        sup = superlevel_set(s, pow2(lam))
        below = float(np.count_nonzero(s > pow2(lam - 1))) * 4.0 ** -g.n
        items.append(FamilyItem(omega, lam, sup, below))
        nxt = enlarge(sup) & omega
        if nxt.is_empty() or not (contained_rects(nxt) & support).any():
            return items
        if 2 * nxt.count > omega.count:
            raise _HalvingFailure(len(items))
        omega = nxt


def contracting_decomposition(
    g: HaarField,
    omega0: OpenSetMask | None = None,
    eta: float = DEFAULT_ETA,
    max_retries: int = MAX_RETRIES,
) -> ContractingFamily:
    """Contracting family and levels lambda_i for ``g`` starting from ``omega0``.

    If some step fails to halve the measure, the whole construction restarts
    with eta/2, at most ``max_retries`` times.
    """
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if omega0 is None:
        omega0 = OpenSetMask.full(g.n)
    if omega0.n != g.n:
        raise ValueError("resolution mismatch between field and initial set")
    if (g.support() & ~contained_rects(omega0)).any():
        raise DecompositionError("support of g is not contained in the initial set")
    for attempt in range(max_retries + 1):
        e = eta / 2**attempt
        try:
            return ContractingFamily(tuple(_decompose(g, omega0, e)), e, attempt)
        except _HalvingFailure:
            continue
    raise DecompositionError(f"halving failed for every eta down to {eta / 2**max_retries}")


def family_violations(family: ContractingFamily, g: HaarField | None = None) -> list[str]:
    """Post-hoc check of the contracting and level-selection properties."""
    out = []
    eta = family.eta
    for i, it in enumerate(family.items):
        if i + 1 < len(family):
            nxt = family.items[i + 1].omega
            if not nxt <= it.omega:
                out.append(f"item {i + 1} not nested in item {i}")
            if 2 * nxt.count > it.omega.count:
                out.append(f"item {i + 1} exceeds half of item {i}")
        if g is None:
            continue
        s = square_function_local(g, it.omega).values
        cnt = it.omega.count
        above = np.count_nonzero(s > pow2(it.lam))
        if above > eta * cnt:
            out.append(f"item {i}: |{{S > 2^lam}}| too large")
        if it.lam != NEG_INF:
            if np.count_nonzero(s > pow2(it.lam - 1)) < eta * cnt:
                out.append(f"item {i}: |{{S > 2^(lam-1)}}| < eta |omega|")
        if i + 1 < len(family):
            expect = enlarge(superlevel_set(s, pow2(it.lam))) & it.omega
            if expect != family.items[i + 1].omega:
                out.append(f"item {i + 1} is not the enlarged superlevel set of item {i}")
    return out


def sparse_norm(family: ContractingFamily, r: float) -> float:
    """(sum_i 2^(r lam_i) |omega_i|)^(1/r), with -inf levels contributing 0."""
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    total = sum(pow2(it.lam, r) * it.omega.measure for it in family.items)
    return total ** (1.0 / r)


def atomic_decomposition(g: HaarField, family: ContractingFamily) -> list[HaarField]:
    """Pieces g_i over rectangles inside omega_i but not inside omega_{i+1}."""
    if not family.items or family.items[0].omega.n != g.n:
        raise ValueError("family does not match the field")
    inside = [contained_rects(o) for o in family.omegas]
    inside.append(np.zeros_like(inside[0]))
    pieces = [g.restrict(inside[i] & ~inside[i + 1]) for i in range(len(family))]
    if (g.support() & ~inside[0]).any():
        raise ValueError("field has support outside the first set of the family")
    return pieces


def atomic_energy_violations(pieces: list[HaarField], family: ContractingFamily) -> list[str]:
    """Pieces whose energy exceeds 2 * 2^(2 lam_i) * |omega_i|."""
    out = []
    for i, (piece, it) in enumerate(zip(pieces, family.items)):
        bound = 2.0 * pow2(it.lam, 2) * it.omega.measure
        if piece.energy() > bound * (1 + 1e-12):
            out.append(f"piece {i}: energy {piece.energy()!r} > {bound!r}")
    return out


# -- test functions -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TestFunctionParts:
    __test__ = False  # not a pytest class

    chi: GridFunction
    omega1: OpenSetMask
    omega2: OpenSetMask
    omega3: OpenSetMask
    tail: HaarField


def test_function_parts(omega: OpenSetMask, delta: float) -> TestFunctionParts:
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if omega.count == 0:
        raise ValueError("test function needs a set of positive measure")
    ind = omega.indicator()
    omega1 = superlevel_set(dyadic_maximal(ind), delta)
    omega2 = enlarge(omega1)
    omega3 = superlevel_set(dyadic_maximal(omega2.indicator()), delta)
    tail = analyze(ind).restrict(~contained_rects(omega3))
    chi = ind - synthesize(tail) if not tail.is_zero() else ind
    return TestFunctionParts(chi, omega1, omega2, omega3, tail)


test_function_parts.__test__ = False


def test_function(omega: OpenSetMask, delta: float) -> GridFunction:
    """chi_omega minus its Haar coefficients on rectangles outside omega_3."""
    return test_function_parts(omega, delta).chi


test_function.__test__ = False


def good_set(chi: GridFunction, omega: OpenSetMask) -> OpenSetMask:
    """Cells of omega where every dyadic R with cell in R inside omega has <chi>_R >= 1/2."""
    if chi.n != omega.n:
        raise ValueError("resolution mismatch")
    bad = containment_table(omega) & (average_table(chi) < 0.5)
    hit = descend(descend(bad, 0, "max"), 1, "max")
    return OpenSetMask(omega.mask & ~hit)


@dataclass(frozen=True, eq=False)
class Calibration:
    delta: float
    chi: GridFunction
    good: OpenSetMask
    halvings: int
    hardy_ratio: float  # ||chi||_{H^p} / |omega|^(1/p)
    trace: tuple = ()


def calibrate_delta(omega: OpenSetMask, eps: float, p: float, max_halvings: int = MAX_HALVINGS) -> Calibration:
    """Halve delta from 1/2 until the good set covers (1 - eps) of omega."""
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    trace = []
    delta = 0.5
    for h in range(max_halvings + 1):
        chi = test_function(omega, delta)
        good = good_set(chi, omega)
        trace.append({"delta": delta, "good_fraction": good.count / omega.count})
        if good.count >= (1 - eps) * omega.count:
            ratio = hardy_norm(chi, p) / omega.measure ** (1.0 / p)
            return Calibration(delta, chi, good, h, ratio, tuple(trace))
        delta /= 2
    raise CalibrationError(f"no delta >= 2^-{max_halvings + 1} gives a large good set", trace)


# -- randomized witnesses ---------------------------------------------------------


@dataclass(frozen=True)
class WitnessParams:
    """Exponents and randomness for f_omega = sum_i omega_i 2^(t lam_i) chi_i.

    ``t = r/q - 1`` for the Hdot^r characterization; ``t = 0`` with ``q = p``
    for the BMO characterization.
    """

    p: float
    q: float
    t: float
    epsilon: float
    seed: int

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ValueError("p and q must be positive")
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")

    @classmethod
    def for_hdot(cls, e: Exponents, eta: float, seed: int) -> WitnessParams:
        return cls(e.p, e.q, e.t, eta / 2, seed)

    @classmethod
    def for_bmo(cls, p: float, eta: float, seed: int) -> WitnessParams:
        return cls(p, p, 0.0, eta / 2, seed)


@dataclass(frozen=True, eq=False)
class WitnessBasis:
    """Weighted building blocks 2^(t lam_i) chi_i of the random witness."""

    index: tuple[int, ...]
    weights: tuple[float, ...]
    blocks: tuple[np.ndarray, ...]
    calibrations: tuple = ()

    def combine(self, signs) -> GridFunction:
        if not self.blocks:
            raise ValueError("empty witness basis")
        out = np.zeros_like(self.blocks[0])
        for s, w, b in zip(signs, self.weights, self.blocks):
            out += (s * w) * b
        return GridFunction(out)


def witness_basis(family: ContractingFamily, wp: WitnessParams) -> WitnessBasis:
    idx, weights, blocks, cals = [], [], [], []
    for i, it in enumerate(family.items):
        if it.lam == NEG_INF:
            continue
        if wp.p <= 1:
            cal = calibrate_delta(it.omega, wp.epsilon, wp.p)
            chi = cal.chi.values
            cals.append(cal)
        else:
            chi = it.omega.indicator().values
        idx.append(i)
        weights.append(pow2(it.lam, wp.t))
        blocks.append(chi)
    return WitnessBasis(tuple(idx), tuple(weights), tuple(blocks), tuple(cals))


def witness_signs(basis: WitnessBasis, seed: int, trial: int) -> np.ndarray:
    return rng.signs(seed, "omega", np.array(basis.index, dtype=np.uint64), trial)


def random_witness(g: HaarField, family: ContractingFamily, wp: WitnessParams, trial: int = 0) -> GridFunction:
    """One draw of the random test function; zero when every level is -inf."""
    basis = witness_basis(family, wp)
    if not basis.blocks:
        return GridFunction.zeros(g.n)
    return basis.combine(witness_signs(basis, wp.seed, trial))


@dataclass
class LowerBound:
    ratio: float
    trial_ratios: list[float] = field(default_factory=list)
    best_trial: int = -1
    family: ContractingFamily | None = None
    khintchine_exact: float = 0.0
    khintchine_mc: float = 0.0
    witness_norm_q: float = 0.0
    calibration_ratios: list[float] = field(default_factory=list)


def _khintchine(g: HaarField, basis: WitnessBasis, wp: WitnessParams, avgs: list) -> tuple[float, float]:
    """Exact ||F||_1^(1/q) and its Monte-Carlo counterpart over (omega, eps) signs."""
    acc = np.zeros_like(g.coeffs)
    for w, b in zip(basis.weights, basis.blocks):
        a = haar_averages(GridFunction(b))
        acc += (w * a) ** 2
    exact = dot_hardy_norm(HaarField(g.coeffs * np.sqrt(acc)), wp.q)
    flat = np.arange(g.coeffs.size, dtype=np.uint64)
    mc = 0.0
    for trial, a in enumerate(avgs):
        eps = rng.signs(wp.seed, "eps", flat, trial).reshape(g.coeffs.shape)
        u = synthesize(HaarField(eps * g.coeffs * a))
        mc += lp_quasinorm(u, wp.q) ** wp.q
    mc = (mc / max(len(avgs), 1)) ** (1.0 / wp.q)
    return exact, mc


def witness_lower_bound(
    g: HaarField,
    family: ContractingFamily,
    wp: WitnessParams,
    trials: int,
    symbol: HaarField | None = None,
    diagnostics: bool = True,
) -> LowerBound:
    """Max over trials of ||S_d(pi_g f_omega)||_q / ||f_omega||_{H^p}.

    ``symbol`` is the operator symbol (defaults to ``g``); the family may be
    built from a localized piece of it.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    op = g if symbol is None else symbol
    basis = witness_basis(family, wp)
    out = LowerBound(0.0, family=family, calibration_ratios=[c.hardy_ratio for c in basis.calibrations])
    if not basis.blocks:
        return out
    avgs, hq = [], 0.0
    for trial in range(trials):
        f = basis.combine(witness_signs(basis, wp.seed, trial))
        ratio = operator_ratio(op, f, wp.p, wp.q)
        out.trial_ratios.append(ratio)
        if ratio > out.ratio:
            out.ratio, out.best_trial = ratio, trial
        if diagnostics:
            avgs.append(haar_averages(f))
            hq += hardy_norm(f, wp.p) ** wp.q
    if diagnostics:
        out.khintchine_exact, out.khintchine_mc = _khintchine(op, basis, wp, avgs)
        out.witness_norm_q = (hq / trials) ** (1.0 / wp.q)
    return out


def lower_bound_details(
    g: HaarField,
    e: Exponents,
    trials: int = 64,
    seed: int = 0,
    eta: float = DEFAULT_ETA,
    diagnostics: bool = True,
) -> LowerBound:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if g.is_zero():
        return LowerBound(0.0)
    family = contracting_decomposition(g, OpenSetMask.full(g.n), eta)
    wp = WitnessParams.for_hdot(e, family.eta, seed)
    return witness_lower_bound(g, family, wp, trials, diagnostics=diagnostics)


def lower_bound_estimate(g: HaarField, e: Exponents, trials: int = 64, seed: int = 0, eta: float = DEFAULT_ETA) -> float:
    """Certified lower bound on sup_f ||S_d(pi_g f)||_q / ||f||_{H^p}."""
    return lower_bound_details(g, e, trials, seed, eta, diagnostics=False).ratio


def local_lower_bound(
    g: HaarField,
    omega0: OpenSetMask,
    p: float,
    trials: int = 64,
    seed: int = 0,
    eta: float = DEFAULT_ETA,
) -> LowerBound:
    """BMO-mode (t = 0, q = p) lower bound built from g restricted to omega0.

    For p > 1 the indicator of omega0 itself is also tried as an input.
    """
    local = g.restrict(contained_rects(omega0))
    if local.is_zero():
        return LowerBound(0.0)
    family = contracting_decomposition(local, omega0, eta)
    wp = WitnessParams.for_bmo(p, family.eta, seed)
    out = witness_lower_bound(local, family, wp, trials, symbol=g, diagnostics=False)
    if p > 1:
        direct = operator_ratio(g, omega0.indicator(), p, p)
        if direct > out.ratio:
            out.ratio, out.best_trial = direct, -1
    return out
