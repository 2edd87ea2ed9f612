"""Command-line entry point ``bipara``.

Exit codes: 0 success, 1 verification failure (report still written),
2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .construction import (
    DEFAULT_ETA,
    CalibrationError,
    DecompositionError,
    calibrate_delta,
    contracting_decomposition,
    test_function_parts,
)
from .corpus import CorpusKind, CorpusSpec, generate_corpus, write_corpus
from .dyadic import Exponents, load_grid, load_mask, save_grid
from .experiments import (
    verify_adjoint_corollary,
    verify_brossard,
    verify_lemmas,
    verify_theorem_I,
    verify_theorem_II,
)
from .haar import HaarField, analyze, synthesize
from .norms import bmo_norm_lower, dot_hardy_norm, hardy_norm, john_nirenberg_ratio

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
EXPONENT_TOL = 1e-8


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _load(loader, path):
    try:
        return loader(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from exc


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def exponents_from_args(p, q, r) -> Exponents:
    """Triple from any two of p, q, r; a given third value must agree to 1e-8."""
    given = sum(v is not None for v in (p, q, r))
    if given < 2:
        raise UsageError("need at least two of --p, --q, --r")
    if p is None:
        p = 1.0 / (1.0 / q - 1.0 / r)
    if r is None:
        r = 1.0 / (1.0 / q - 1.0 / p)
    if min(p, r) <= 0:
        raise UsageError("exponents must be positive with 1/q = 1/p + 1/r")
    e = Exponents.from_pr(p, r)
    if q is not None and abs(q - e.q) > EXPONENT_TOL * max(1.0, e.q):
        raise UsageError(f"--q {q} is inconsistent with --p {p} --r {r} (expected {e.q!r})")
    return e


# -- subcommands --------------------------------------------------------------------


def cmd_transform(a) -> int:
    if (a.input is None) == (a.field is None):
        raise UsageError("transform needs exactly one of --in (grid) or --field")
    if a.input is not None:
        _emit(analyze(_load(load_grid, a.input)).to_json(), a.out)
    else:
        g = _load(HaarField.load, a.field)
        f = synthesize(g)
        if a.out is None:
            for row in f.values:
                sys.stdout.write(",".join(repr(float(v)) for v in row) + "\n")
        else:
            try:
                save_grid(f, a.out)
            except OSError as exc:
                raise InputError(f"cannot write {a.out}: {exc}") from exc
    return EXIT_OK


def cmd_norms(a) -> int:
    kind = a.kind or ("hardy" if a.input is not None else "dot-hardy")
    p = 2.0 if a.p is None else a.p
    if kind == "hardy":
        if a.input is None:
            raise UsageError("--kind hardy needs --in <grid.csv>")
        value = hardy_norm(_load(load_grid, a.input), p)
    else:
        if a.field is None:
            raise UsageError(f"--kind {kind} needs --field <field.json>")
        g = _load(HaarField.load, a.field)
        if kind == "dot-hardy":
            value = dot_hardy_norm(g, p)
        elif kind == "bmo":
            value = 0.0 if g.is_zero() else bmo_norm_lower(g)
        else:
            value = 0.0 if g.is_zero() else john_nirenberg_ratio(g, p)
    if a.format == "json":
        _emit(_dump({"kind": kind, "p": p, "value": value}), a.out)
    else:
        _emit(f"{value!r}\n", a.out)
    return EXIT_OK


def cmd_decompose(a) -> int:
    if a.field is None:
        raise UsageError("decompose needs --field")
    g = _load(HaarField.load, a.field)
    omega0 = None if a.mask is None else _load(load_mask, a.mask)
    try:
        fam = contracting_decomposition(g, omega0, a.eta)
    except DecompositionError as exc:
        sys.stderr.write(f"bipara: {exc}\n")
        return EXIT_FAIL
    _emit(fam.to_json(), a.out)
    return EXIT_OK


def cmd_testfn(a) -> int:
    if a.mask is None:
        raise UsageError("testfn needs --mask")
    omega = _load(load_mask, a.mask)
    if omega.is_empty():
        raise UsageError("mask is empty")
    p = 1.0 if a.p is None else a.p
    if a.delta is not None:
        parts = test_function_parts(omega, a.delta)
        doc = {"delta": a.delta, "halvings": None, "hardy_ratio": hardy_norm(parts.chi, p) / omega.measure ** (1 / p)}
    else:
        try:
            cal = calibrate_delta(omega, a.eps, p)
        except CalibrationError as exc:
            sys.stderr.write(f"bipara: {exc}\n")
            return EXIT_FAIL
        parts = test_function_parts(omega, cal.delta)
        doc = {"delta": cal.delta, "halvings": cal.halvings, "hardy_ratio": cal.hardy_ratio, "trace": list(cal.trace)}
    doc.update(
        p=p,
        measure_omega=omega.measure,
        measure_omega1=parts.omega1.measure,
        measure_omega2=parts.omega2.measure,
        measure_omega3=parts.omega3.measure,
        tail_nnz=parts.tail.nnz,
    )
    if a.out is not None:
        try:
            save_grid(parts.chi, a.out)
        except OSError as exc:
            raise InputError(f"cannot write {a.out}: {exc}") from exc
    sys.stdout.write(_dump(doc))
    return EXIT_OK


def _spec(a, kind_default: str = "band_gaussian") -> CorpusSpec:
    return CorpusSpec(a.kind or kind_default, a.n or 5, a.sparsity, a.seed, a.count if a.count is not None else 50)


def cmd_verify(a) -> int:
    which = a.experiment
    if which == "t1":
        e = exponents_from_args(a.p if a.p is not None else 1.0, a.q, a.r if a.r is not None else 2.0)
        rep = verify_theorem_I(_spec(a), e, a.trials or 64, eta=a.eta)
    elif which == "t2":
        rep = verify_theorem_II(_spec(a), a.p if a.p is not None else 1.0, a.trials or 16, eta=a.eta)
    elif which == "adjoint":
        rep = verify_adjoint_corollary(_spec(a))
    elif which == "brossard":
        rep = verify_brossard(_spec(a, "dense_random"), None if a.delta is None else [a.delta])
    else:
        rep = verify_lemmas(a.n or 5, a.count if a.count is not None else 100, a.seed, a.eta)
    _emit(rep.to_csv() if a.format == "csv" else rep.to_json(), a.out)
    if not rep.passed:
        sys.stderr.write(f"bipara: {len(rep.failures)} verification failure(s)\n")
        return EXIT_FAIL
    return EXIT_OK


def cmd_corpus(a) -> int:
    if a.out is None:
        raise UsageError("corpus needs --out <directory>")
    items = generate_corpus(_spec(a))
    try:
        paths = write_corpus(items, a.out)
    except OSError as exc:
        raise InputError(f"cannot write corpus to {a.out}: {exc}") from exc
    for it, i in zip(items, range(len(items))):
        sys.stdout.write(f"{it.id}\t{paths[2 * i]}\n")
    return EXIT_OK


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--p", type=float)
    common.add_argument("--q", type=float)
    common.add_argument("--r", type=float)
    common.add_argument("--eta", type=float, default=DEFAULT_ETA)
    common.add_argument("--eps", type=float, default=2.0**-7)
    common.add_argument("--delta", type=float)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--in", dest="input")
    common.add_argument("--field")
    common.add_argument("--mask")
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--kind")
    common.add_argument("--count", type=int)
    common.add_argument("--sparsity", type=int, default=16)

    ap = argparse.ArgumentParser(prog="bipara", description="Bi-parameter dyadic paraproduct harness.")
    ap.add_argument("--version", action="version", version=f"bipara {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("transform", parents=[common], help="grid <-> Haar field").set_defaults(func=cmd_transform)
    sub.add_parser("norms", parents=[common], help="hardy / dot-hardy / bmo / jn values").set_defaults(func=cmd_norms)
    sub.add_parser("decompose", parents=[common], help="contracting decomposition trace").set_defaults(func=cmd_decompose)
    sub.add_parser("testfn", parents=[common], help="calibrated test function for a mask").set_defaults(func=cmd_testfn)
    v = sub.add_parser("verify", parents=[common], help="run a verification experiment")
    v.add_argument("experiment", choices=("t1", "t2", "adjoint", "brossard", "lemmas"))
    v.set_defaults(func=cmd_verify)
    sub.add_parser("corpus", parents=[common], help="write corpus files").set_defaults(func=cmd_corpus)
    return ap


NORM_KINDS = ("hardy", "dot-hardy", "bmo", "jn")


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if a.command == "norms" and a.kind is not None and a.kind not in NORM_KINDS:
            raise UsageError(f"--kind must be one of {', '.join(NORM_KINDS)}")
        if a.command in ("verify", "corpus") and a.kind is not None:
            try:
                CorpusKind(a.kind)
            except ValueError:
                raise UsageError(f"unknown corpus kind {a.kind!r}") from None
        return a.func(a)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        sys.stderr.write(f"bipara: error: {exc}\n")
        return EXIT_USAGE
    except InputError as exc:
        sys.stderr.write(f"bipara: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        sys.stderr.write(f"bipara: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
