"""Verification experiments over generated corpora, with replayable reports.

Every experiment is a pure function of its arguments: per-instance work may
run on a thread pool, but results are collected in corpus order and all
randomness is keyed by (seed, stream, index), so a report serializes to the
same bytes for any thread count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import rng as crng
from .brossard import brossard_scan
from .construction import (
    DEFAULT_ETA,
    CalibrationError,
    DecompositionError,
    atomic_decomposition,
    atomic_energy_violations,
    calibrate_delta,
    contracting_decomposition,
    family_violations,
    local_lower_bound,
    lower_bound_details,
    sparse_norm,
)
from .corpus import (
    CorpusSpec,
    generate_corpus,
    instance_rng,
    random_contracting_family,
    random_grid,
    random_large_subsets,
    random_mask,
)
from .dyadic import Exponents, GridFunction, OpenSetMask, lp_quasinorm, measure, superlevel_set
from .haar import HaarField, analyze, project_biparam, square_function
from .maximal import family_maximal, m_s
from .norms import bmo_candidates, bmo_search, bmo_values, dot_hardy_norm, hardy_norm, john_nirenberg_ratio
from .paraproduct import apply_adjoint, domination_check, holder_upper_bound, operator_ratio

REPORT_VERSION = 1
SLACK = 1e-8

# -- parallelism -----------------------------------------------------------------


def thread_count() -> int:
    """Worker count from BIPARA_THREADS (unset or 0 means one per CPU)."""
    raw = os.environ.get("BIPARA_THREADS", "0").strip() or "0"
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"BIPARA_THREADS must be an integer, got {raw!r}") from None
    if k < 0:
        raise ValueError("BIPARA_THREADS must be >= 0")
    return k or (os.cpu_count() or 1)


def ordered_map(fn, items) -> list:
    items = list(items)
    k = min(thread_count(), max(len(items), 1))
    if k <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


# -- reports ---------------------------------------------------------------------


def _plain(x):
    """JSON-ready copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return x


def summarize(values) -> dict:
    """count/min/median/max over the finite entries of ``values``."""
    v = np.array([x for x in values if x is not None and math.isfinite(x)], dtype=np.float64)
    if v.size == 0:
        return {"count": 0, "min": None, "median": None, "max": None}
    return {"count": int(v.size), "min": float(v.min()), "median": float(np.median(v)), "max": float(v.max())}


@dataclass
class VerificationReport:
    experiment: str
    seed: int
    params: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    version: str = __version__

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return _plain(
            {
                "report_version": REPORT_VERSION,
                "experiment": self.experiment,
                "seed": self.seed,
                "params": self.params,
                "records": self.records,
                "aggregate": self.aggregate,
                "failures": self.failures,
                "passed": self.passed,
                "version": self.version,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def rows(self) -> list[dict]:
        """Flat per-instance rows; nested ``scan`` lists expand to one row each."""
        out = []
        for rec in _plain(self.records):
            flat = {k: v for k, v in rec.items() if not isinstance(v, (list, dict))}
            if isinstance(rec.get("scan"), list):
                out.extend({**flat, **row} for row in rec["scan"])
            else:
                out.append(flat)
        return out

    def to_csv(self) -> str:
        rows = self.rows()
        cols: list[str] = []
        for r in rows:
            cols.extend(k for k in r if k not in cols)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()


def _spec_params(spec: CorpusSpec) -> dict:
    return {"kind": spec.kind.value, "n": spec.n, "sparsity": spec.sparsity, "corpus_seed": spec.seed, "count": spec.count}


def _le(a: float, b: float, rel: float = SLACK) -> bool:
    return a <= b * (1 + rel) + 1e-300


# -- Hdot^r characterization -------------------------------------------------------


def verify_theorem_I(
    spec: CorpusSpec,
    e: Exponents,
    trials: int = 64,
    seed: int | None = None,
    eta: float = DEFAULT_ETA,
    diagnostics: bool = False,
) -> VerificationReport:
    """Sandwich L <= ||pi_g||_{H^p -> Hdot^q} <= U = ||g||_{Hdot^r} per symbol."""
    seed = spec.seed if seed is None else seed
    items = generate_corpus(spec)

    def one(item):
        g = item.field
        rec = {"id": item.id, "nnz": g.nnz}
        if g.is_zero():
            return {**rec, "skipped": "zero symbol"}
        try:
            lb = lower_bound_details(g, e, trials, seed, eta, diagnostics=diagnostics)
        except (DecompositionError, CalibrationError) as exc:
            return {**rec, "error": str(exc)}
        u = holder_upper_bound(g, e)
        rec.update(U=u, L=lb.ratio, ratio=lb.ratio / u, best_trial=lb.best_trial)
        rec.update(family_length=len(lb.family), eta=lb.family.eta, retries=lb.family.retries)
        if diagnostics:
            rec.update(khintchine_exact=lb.khintchine_exact, khintchine_mc=lb.khintchine_mc, witness_norm_q=lb.witness_norm_q)
        return rec

    records = ordered_map(one, items)
    failures = []
    for rec in records:
        if "error" in rec:
            failures.append(f"{rec['id']}: {rec['error']}")
        elif "U" in rec and not (0 < rec["L"] and _le(rec["L"], rec["U"])):
            failures.append(f"{rec['id']}: L={rec['L']!r} outside (0, U={rec['U']!r}]")
    params = {**_spec_params(spec), "p": e.p, "q": e.q, "r": e.r, "trials": trials, "eta": eta}
    agg = {"L_over_U": summarize(r.get("ratio") for r in records), "errors": sum("error" in r for r in records)}
    return VerificationReport("t1", seed, params, records, agg, failures)


# -- BMO characterization ------------------------------------------------------------


def _probe_grids(n: int, seed: int, count: int) -> list[GridFunction]:
    """Random sign grids on dyadic blocks of every size."""
    cells = np.arange(4**n, dtype=np.uint64)
    out = []
    for k in range(count):
        s = crng.signs(seed, "probe", cells, k).reshape(1 << n, 1 << n)
        block = 1 << (k % (n + 1))
        coarse = s[::block, ::block]
        out.append(GridFunction(np.kron(coarse, np.ones((block, block)))))
    return out


def theorem_II_record(
    g: HaarField,
    p: float,
    trials: int = 16,
    seed: int = 0,
    eta: float = DEFAULT_ETA,
    top_k: int = 8,
    grids: list[GridFunction] | None = None,
) -> dict:
    """Per-symbol BMO-mode quantities: B_low, the lower estimate L, observed and dominating ratios.

    L maximizes the t = 0 lower bound over the full square and the ``top_k``
    candidate sets with the largest BMO values; ``observed`` also includes
    the indicator of the BMO-maximizing set and the probe ``grids``.
    """
    rec = {"nnz": g.nnz}
    if g.is_zero():
        return {**rec, "B_low": 0.0, "L": 0.0, "observed": 0.0, "U_dom": 0.0}
    full = OpenSetMask.full(g.n)
    cands = bmo_candidates(g)
    b_low, arg = bmo_search(g, cands)
    vals = bmo_values(g, cands)
    order = [int(i) for i in np.argsort(-vals, kind="stable")[:top_k]]
    if arg not in order:
        order = [arg] + order[:-1]
    sets = [(c, cands.mask(c)) for c in order]
    if all(om != full for _, om in sets):
        sets.append((-1, full))
    best, best_set = 0.0, None
    try:
        for c, om in sets:
            lb = local_lower_bound(g, om, p, trials, seed, eta)
            if lb.ratio > best:
                best, best_set = lb.ratio, ("full" if c < 0 else cands.describe(c))
    except (DecompositionError, CalibrationError) as exc:
        return {**rec, "error": str(exc)}
    probe_argmax = operator_ratio(g, cands.mask(arg).indicator(), p, p)
    observed = max([best, probe_argmax] + [operator_ratio(g, f, p, p) for f in grids or ()])
    u_dom = float(square_function(g).values.max())
    rec.update(B_low=b_low, B_set=cands.describe(arg), L=best, L_set=best_set)
    rec.update(probe_argmax=probe_argmax, observed=observed, U_dom=u_dom)
    rec.update(ratio=best / b_low, observed_over_U=observed / u_dom)
    return rec


def verify_theorem_II(
    spec: CorpusSpec,
    p: float,
    trials: int = 16,
    seed: int | None = None,
    eta: float = DEFAULT_ETA,
    top_k: int = 8,
    probes: int = 8,
) -> VerificationReport:
    """L <= observed sup of ||S_d(pi_g f)||_p / ||f||_{H^p} <= sup S_d(g), and L vs B_low."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    seed = spec.seed if seed is None else seed
    items = generate_corpus(spec)
    grids = _probe_grids(spec.n, seed, probes)

    def one(item):
        return {"id": item.id, **theorem_II_record(item.field, p, trials, seed, eta, top_k, grids)}

    records = ordered_map(one, items)
    failures = []
    for rec in records:
        if "error" in rec:
            failures.append(f"{rec['id']}: {rec['error']}")
            continue
        if rec["nnz"] and not rec["L"] > 0:
            failures.append(f"{rec['id']}: lower estimate is zero")
        if not _le(rec["L"], rec["observed"]):
            failures.append(f"{rec['id']}: L exceeds observed ratio")
        if not _le(rec["observed"], rec["U_dom"]):
            failures.append(f"{rec['id']}: observed ratio exceeds sup S_d(g)")
    params = {**_spec_params(spec), "p": p, "trials": trials, "eta": eta, "top_k": top_k, "probes": probes}
    agg = {
        "L_over_B": summarize(r.get("ratio") for r in records),
        "observed_over_U": summarize(r.get("observed_over_U") for r in records),
        "errors": sum("error" in r for r in records),
    }
    return VerificationReport("t2", seed, params, records, agg, failures)


def verify_adjoint_corollary(spec: CorpusSpec, seed: int | None = None) -> VerificationReport:
    """Lower estimate of ||pi_g^*||_{BMO -> BMO} from rectangle atoms, against B_low(g).

    Atoms h = |R|^{1/2} h_R over the support of g have BMO norm exactly 1.
    """
    seed = spec.seed if seed is None else seed
    items = generate_corpus(spec)

    def one(item):
        g = item.field
        rec = {"id": item.id, "nnz": g.nnz}
        if g.is_zero():
            return {**rec, "B_low": 0.0, "adjoint_low": 0.0}
        best = 0.0
        for r, _ in g.items():
            h = HaarField.single(g.n, r, math.sqrt(measure(r)))
            out = analyze(apply_adjoint(g, h))
            if not out.is_zero():
                best = max(best, bmo_search(out, bmo_candidates(out))[0])
        b_low = bmo_search(g, bmo_candidates(g))[0]
        self_probe = analyze(apply_adjoint(g, g * (1.0 / b_low)))
        self_val = 0.0 if self_probe.is_zero() else bmo_search(self_probe, bmo_candidates(self_probe))[0]
        rec.update(B_low=b_low, adjoint_low=best, ratio=best / b_low, self_probe=self_val)
        return rec

    records = ordered_map(one, items)
    failures = [f"{r['id']}: non-finite value" for r in records if not all(math.isfinite(v) for k, v in r.items() if isinstance(v, float))]
    agg = {"adjoint_over_B": summarize(r.get("ratio") for r in records)}
    return VerificationReport("adjoint", seed, _spec_params(spec), records, agg, failures)


# -- Brossard -----------------------------------------------------------------------


def verify_brossard(spec: CorpusSpec, deltas=None) -> VerificationReport:
    """LHS/RHS over a dyadic delta grid for every corpus function; C_emp = max."""
    items = generate_corpus(spec)

    def one(item):
        f = item.grid
        rec = {"id": item.id, "n": spec.n}
        if not f.values.any():
            return {**rec, "skipped": "zero function"}
        scan = brossard_scan(f, deltas)
        ratios = [t.ratio for t in scan]
        rec["max_ratio"] = max(ratios) if ratios else 0.0
        rec["degenerate"] = sum(t.degenerate for t in scan)
        rec["scan"] = [{"delta": t.delta, "lhs": t.lhs, "rhs": t.rhs, "ratio": t.ratio} for t in scan]
        return rec

    records = ordered_map(one, items)
    c_emp = max((r.get("max_ratio", 0.0) for r in records), default=0.0)
    failures = [] if math.isfinite(c_emp) else ["C_emp is infinite"]
    agg = {"C_emp": c_emp, "max_ratio": summarize(r.get("max_ratio") for r in records)}
    params = {**_spec_params(spec), "deltas": None if deltas is None else list(deltas)}
    return VerificationReport("brossard", spec.seed, params, records, agg, failures)


# -- structural lemmas ------------------------------------------------------------------

LEMMA_SECTIONS = (
    "lemma22",
    "lemma23",
    "weak11",
    "decomposition",
    "calibration",
    "domination",
    "fefferman_stein",
    "john_nirenberg",
    "hardy_equivalence",
)
HARDY_P = (0.5, 1.0, 2.0)
LEMMA22_P = (0.5, 1.0, 2.0, 3.0)
SPARSE_R = (0.5, 1.0, 2.0, 4.0)
CALIBRATION_P = (0.5, 1.0)
JN_P = (1.0, 2.0, 4.0)
CALIBRATION_EPS = 2.0**-7


def _lemma22(n, count, seed, eta):
    recs, fails = [], []
    for i in range(count):
        g = instance_rng(seed, "lemma22", n, i)
        fam = random_contracting_family(n, g, int(g.integers(2, 9)))
        a = g.exponential(size=len(fam)) * 2.0 ** g.integers(-2, 3, size=len(fam))
        meas = np.array([o.measure for o in fam.omegas])
        f = sum(ai * o.indicator().values for ai, o in zip(a, fam.omegas))
        for p in LEMMA22_P:
            lhs = lp_quasinorm(f, p)
            total = float(np.sum(a**p * meas))
            low, up = (0.5 * total) ** (1 / p), total ** (1 / p)
            recs.append({"section": "lemma22", "instance": i, "p": p, "lhs": lhs, "lower": low, "upper": up, "ratio": lhs / up})
            if lhs < low * (1 - 1e-12):
                fails.append(f"lemma22 instance {i} p={p}: lower bound violated")
            if p <= 1 and lhs > up * (1 + 1e-12):
                fails.append(f"lemma22 instance {i} p={p}: upper bound violated")
            if p > 1 and lhs > 8 * up:
                fails.append(f"lemma22 instance {i} p={p}: ratio above 8")
    agg = {f"ratio_p{p:g}": summarize(r["ratio"] for r in recs if r["p"] == p) for p in LEMMA22_P}
    return recs, fails, agg


def lemma23_k(eta: float) -> int:
    """min k >= 0 with 2^-k / eta <= 1/4."""
    return max(0, math.ceil(math.log2(4 / eta) - 1e-12))


def _lemma23(n, count, seed, eta):
    recs, fails = [], []
    for e in (2.0**-4, 2.0**-6):
        k = lemma23_k(e)
        for i in range(count // 2 or 1):
            g = instance_rng(seed, "lemma23", n, i, int(-math.log2(e)))
            fam = random_contracting_family(n, g, 12)
            subs = random_large_subsets(fam, e, g)
            bits = np.zeros(4**n, dtype=np.int64)
            for b, s in enumerate(subs):
                bits |= s.mask.ravel().astype(np.int64) << b
            sizes = np.array([s.measure for s in subs])
            sets = np.arange(1, 1 << len(subs), dtype=np.int64)
            member = (sets[:, None] >> np.arange(len(subs))[None, :]) & 1
            lhs = member @ sizes
            union = np.count_nonzero((bits[None, :] & sets[:, None]) != 0, axis=1) * 4.0**-n
            ratio = lhs / ((4 / 3) * k * union)
            worst = float(ratio.max())
            recs.append({"section": "lemma23", "instance": i, "eta": e, "k": k, "length": len(subs), "subsets": int(sets.size), "max_ratio": worst})
            if worst > 1 + 1e-12:
                fails.append(f"lemma23 instance {i} eta={e}: ratio {worst!r} > 1")
    return recs, fails, {"max_ratio": summarize(r["max_ratio"] for r in recs)}


def _weak11(n, count, seed, eta):
    recs, fails = [], []
    for i in range(count):
        g = instance_rng(seed, "weak11", n, i)
        f = random_grid(n, g)
        fam = random_contracting_family(n, g, int(g.integers(2, 9)))
        m = family_maximal(f, fam).values
        lam = float(m.max()) * float(g.uniform(0.05, 1.0))
        lhs = superlevel_set(m, lam).measure
        rhs = lp_quasinorm(f, 1) / lam
        recs.append({"section": "weak11", "instance": i, "lambda": lam, "measure": lhs, "bound": rhs, "ratio": lhs / rhs})
        if lhs > rhs * (1 + 1e-12):
            fails.append(f"weak11 instance {i}: {lhs!r} > {rhs!r}")
    return recs, fails, {"ratio": summarize(r["ratio"] for r in recs)}


def _decomposition(n, count, seed, eta):
    recs, fails = [], []
    for item in generate_corpus(CorpusSpec("band_gaussian", n, 16, seed, count)):
        g = item.field
        try:
            fam = contracting_decomposition(g, eta=eta)
        except DecompositionError as exc:
            fails.append(f"{item.id}: {exc}")
            continue
        viol = family_violations(fam, g)
        pieces = atomic_decomposition(g, fam)
        total = sum((pc.coeffs for pc in pieces), np.zeros_like(g.coeffs))
        sum_err = float(np.max(np.abs(total - g.coeffs)))
        energy = atomic_energy_violations(pieces, fam)
        rec = {"section": "decomposition", "id": item.id, "length": len(fam), "eta": fam.eta, "retries": fam.retries}
        rec.update(violations=len(viol), sum_error=sum_err, energy_violations=len(energy))
        for r in SPARSE_R:
            rec[f"ratio_r{r:g}"] = dot_hardy_norm(g, r) / sparse_norm(fam, r)
        recs.append(rec)
        fails += [f"{item.id}: {v}" for v in viol + energy]
        if sum_err != 0.0:
            fails.append(f"{item.id}: pieces do not sum to g")
    agg = {}
    for r in SPARSE_R:
        s = summarize(rec[f"ratio_r{r:g}"] for rec in recs)
        band = max(s["max"], 1 / s["min"]) if s["count"] else None
        agg[f"r{r:g}"] = {**s, "C": band}
    return recs, fails, agg


def _calibration(n, count, seed, eta):
    recs, fails = [], []
    for i in range(count):
        omega = random_mask(n, instance_rng(seed, "mask", n, i))
        for p in CALIBRATION_P:
            try:
                cal = calibrate_delta(omega, CALIBRATION_EPS, p)
            except CalibrationError as exc:
                fails.append(f"calibration mask {i} p={p}: {exc}")
                continue
            recs.append({"section": "calibration", "instance": i, "p": p, "measure": omega.measure, "delta": cal.delta, "halvings": cal.halvings, "hardy_ratio": cal.hardy_ratio})
    agg = {}
    for p in CALIBRATION_P:
        rs = [r for r in recs if r["p"] == p]
        agg[f"p{p:g}"] = {"C": max((r["hardy_ratio"] for r in rs), default=None), "max_halvings": max((r["halvings"] for r in rs), default=None)}
    return recs, fails, agg


def _domination(n, count, seed, eta):
    recs, fails = [], []
    syms = generate_corpus(CorpusSpec("dense_random", n, 16, seed, count))
    for i, item in enumerate(syms):
        f = random_grid(n, instance_rng(seed, "domination", n, i))
        v = domination_check(item.field, f)
        recs.append({"section": "domination", "id": item.id, "max_violation": v})
        if v > 1e-10:
            fails.append(f"{item.id}: domination violated by {v!r}")
    return recs, fails, {"max_violation": max((r["max_violation"] for r in recs), default=None)}


def _fefferman_stein(n, count, seed, eta, s=0.5, p=2.0):
    recs = []
    for i in range(count):
        g = instance_rng(seed, "fefferman_stein", n, i)
        fs = [random_grid(n, g) for _ in range(int(g.integers(1, 5)))]
        num = np.sqrt(sum(m_s(f, s).values ** 2 for f in fs))
        den = np.sqrt(sum(f.values**2 for f in fs))
        recs.append({"section": "fefferman_stein", "instance": i, "terms": len(fs), "ratio": lp_quasinorm(num, p) / lp_quasinorm(den, p)})
    return recs, [], {"ratio": summarize(r["ratio"] for r in recs)}


def _john_nirenberg(n, count, seed, eta):
    recs, fails = [], []
    for item in generate_corpus(CorpusSpec("band_gaussian", n, 16, seed, count)):
        g = item.field
        cands = bmo_candidates(g)
        b = bmo_search(g, cands)[0]
        rec = {"section": "john_nirenberg", "id": item.id, "B_low": b}
        for p in JN_P:
            rec[f"ratio_p{p:g}"] = john_nirenberg_ratio(g, p, cands) / b
        if abs(rec["ratio_p2"] - 1) > 1e-12:
            fails.append(f"{item.id}: p=2 probe differs from the BMO value")
        recs.append(rec)
    return recs, fails, {f"p{p:g}": summarize(r[f"ratio_p{p:g}"] for r in recs) for p in JN_P}


def _hardy_equivalence(n, count, seed, eta):
    recs = []
    for i in range(count):
        f = project_biparam(random_grid(n, instance_rng(seed, "hardy_equivalence", n, i)))
        g = analyze(f)
        rec = {"section": "hardy_equivalence", "instance": i}
        for p in HARDY_P:
            rec[f"ratio_p{p:g}"] = hardy_norm(f, p) / dot_hardy_norm(g, p)
        recs.append(rec)
    agg = {}
    for p in HARDY_P:
        s = summarize(r[f"ratio_p{p:g}"] for r in recs)
        agg[f"p{p:g}"] = {**s, "C": max(s["max"], 1 / s["min"]) if s["count"] else None}
    return recs, [], agg


_SECTION_FNS = {
    "lemma22": _lemma22,
    "lemma23": _lemma23,
    "weak11": _weak11,
    "decomposition": _decomposition,
    "calibration": _calibration,
    "domination": _domination,
    "fefferman_stein": _fefferman_stein,
    "john_nirenberg": _john_nirenberg,
    "hardy_equivalence": _hardy_equivalence,
}


def verify_lemmas(n: int = 5, count: int = 100, seed: int = 0, eta: float = DEFAULT_ETA, sections=LEMMA_SECTIONS) -> VerificationReport:
    """Structural checks at resolution n; each section draws ``count`` instances."""
    sections = tuple(sections)
    unknown = set(sections) - set(_SECTION_FNS)
    if unknown:
        raise ValueError(f"unknown sections: {sorted(unknown)}")
    results = ordered_map(lambda name: _SECTION_FNS[name](n, count, seed, eta), sections)
    records, failures, agg = [], [], {}
    for name, (recs, fails, a) in zip(sections, results):
        records += recs
        failures += fails
        agg[name] = a
    params = {"n": n, "count": count, "eta": eta, "sections": list(sections)}
    return VerificationReport("lemmas", seed, params, records, agg, failures)
