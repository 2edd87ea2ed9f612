"""Run the sparse-mode and BMO-mode checks on a band-limited corpus and print summaries."""

import argparse

from bipara.corpus import CorpusSpec
from bipara.dyadic import Exponents
from bipara.experiments import verify_theorem_I, verify_theorem_II

TRIPLES = [(1.0, 2.0), (2.0, 2.0), (0.5, 2.0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=32)
    args = ap.parse_args()
    spec = CorpusSpec("band_gaussian", args.n, 16, args.seed, args.count)
    for p, r in TRIPLES:
        e = Exponents.from_pr(p, r)
        rep = verify_theorem_I(spec, e, trials=args.trials)
        s = rep.aggregate["L_over_U"]
        print(f"sparse p={p:g} q={e.q:.4g} r={r:g}: L/U median {s['median']:.3f} min {s['min']:.3f} passed={rep.passed}")
    for p in (0.5, 1.0, 2.0):
        rep = verify_theorem_II(spec, p, trials=max(4, args.trials // 4))
        s = rep.aggregate["L_over_B"]
        print(f"bmo p={p:g}: L/B_low median {s['median']:.3f} max {s['max']:.3f} passed={rep.passed}")


if __name__ == "__main__":
    main()
