import csv
import io
import json
import math

import pytest

from bipara.corpus import CorpusSpec
from bipara.dyadic import Exponents
from bipara.experiments import (
    LEMMA_SECTIONS,
    VerificationReport,
    lemma23_k,
    ordered_map,
    summarize,
    thread_count,
    verify_adjoint_corollary,
    verify_brossard,
    verify_lemmas,
    verify_theorem_I,
    verify_theorem_II,
)

SMALL = CorpusSpec("band_gaussian", 4, 8, 3, 4)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("BIPARA_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("BIPARA_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.setenv("BIPARA_THREADS", "x")
    with pytest.raises(ValueError):
        thread_count()


@pytest.mark.parametrize("threads", ["1", "4"])
def test_ordered_map_keeps_order(threads, monkeypatch):
    monkeypatch.setenv("BIPARA_THREADS", threads)
    assert ordered_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]


def test_summarize_skips_non_finite():
    s = summarize([1.0, None, math.inf, 3.0, 2.0])
    assert s == {"count": 3, "min": 1.0, "median": 2.0, "max": 3.0}
    assert summarize([])["count"] == 0


def test_report_json_is_plain_and_stable():
    rep = VerificationReport("x", 7, {"a": 1}, [{"v": math.inf, "w": -math.inf}], {}, [])
    doc = json.loads(rep.to_json())
    assert doc["records"][0] == {"v": "inf", "w": "-inf"}
    assert doc["seed"] == 7 and doc["passed"] is True
    assert rep.to_json() == rep.to_json()


@pytest.mark.parametrize("lam,k", [(2.0**-4, 6), (2.0**-6, 8), (1.0, 2)])
def test_lemma23_k(lam, k):
    assert lemma23_k(lam) == k


def test_theorem_I_small():
    rep = verify_theorem_I(SMALL, Exponents.from_pr(1, 2), trials=8)
    assert rep.passed
    for r in rep.records:
        assert 0 < r["L"] <= r["U"] * (1 + 1e-8)
    assert rep.aggregate["L_over_U"]["count"] == 4


def test_theorem_I_zero_symbols_are_skipped():
    rep = verify_theorem_I(CorpusSpec("band_gaussian", 1, 1, 0, 1), Exponents.from_pr(1, 2), trials=2)
    assert rep.passed


def test_theorem_II_small():
    rep = verify_theorem_II(SMALL, 1.0, trials=4, top_k=3, probes=3)
    assert rep.passed
    for r in rep.records:
        assert r["L"] <= r["observed"] * (1 + 1e-8) and r["observed"] <= r["U_dom"] * (1 + 1e-8)


def test_theorem_II_rejects_bad_p():
    with pytest.raises(ValueError):
        verify_theorem_II(SMALL, 0.0)


def test_adjoint_single_coefficient():
    rep = verify_adjoint_corollary(CorpusSpec("single_coeff", 3, seed=1, count=3))
    for r in rep.records:
        assert r["adjoint_low"] >= 0 and r["B_low"] > 0


def test_brossard_report_csv():
    rep = verify_brossard(CorpusSpec("dense_random", 3, count=2))
    assert rep.passed and math.isfinite(rep.aggregate["C_emp"])
    rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
    assert {"id", "delta", "lhs", "rhs", "ratio"} <= set(rows[0])
    assert len(rows) == sum(len(r["scan"]) for r in rep.records)


def test_lemmas_all_sections_small():
    rep = verify_lemmas(4, 6)
    assert rep.passed, rep.failures
    assert set(rep.aggregate) == set(LEMMA_SECTIONS)


def test_lemmas_unknown_section():
    with pytest.raises(ValueError):
        verify_lemmas(3, 2, sections=["nope"])


@pytest.mark.parametrize(
    "run",
    [
        lambda: verify_theorem_I(SMALL, Exponents.from_pr(1, 2), trials=4),
        lambda: verify_theorem_II(SMALL, 0.5, trials=2, top_k=2, probes=2),
        lambda: verify_adjoint_corollary(SMALL),
        lambda: verify_brossard(SMALL),
        lambda: verify_lemmas(3, 4),
    ],
)
def test_reports_independent_of_thread_count(run, monkeypatch):
    monkeypatch.setenv("BIPARA_THREADS", "1")
    one = run().to_json()
    monkeypatch.setenv("BIPARA_THREADS", "4")
    assert run().to_json() == one


STABLE_SECTIONS = {
    "john_nirenberg": lambda a: max(a[k]["max"] for k in a),
    "hardy_equivalence": lambda a: max(a[k]["C"] for k in a),
    "fefferman_stein": lambda a: a["ratio"]["max"],
}


@pytest.mark.slow
@pytest.mark.parametrize("section", sorted(STABLE_SECTIONS))
def test_sections_stable_in_resolution(section):
    pick = STABLE_SECTIONS[section]
    lo = pick(verify_lemmas(4, 20, sections=[section]).aggregate[section])
    hi = pick(verify_lemmas(7, 20, sections=[section]).aggregate[section])
    assert 0 < lo and hi / lo < 2
