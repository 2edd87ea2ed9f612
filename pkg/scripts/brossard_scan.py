"""Scan delta for every corpus kind and report the empirical constant per resolution."""

import argparse

from bipara.corpus import CorpusKind, CorpusSpec
from bipara.experiments import verify_brossard


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[3, 4, 5, 6, 7])
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", help="write the full scan of the largest resolution here")
    args = ap.parse_args()
    for n in args.resolutions:
        row = []
        for kind in CorpusKind:
            rep = verify_brossard(CorpusSpec(kind, n, 16, args.seed, args.count))
            row.append(f"{kind.value}={rep.aggregate['C_emp']:.4f}")
        print(f"n={n}: " + " ".join(row))
    if args.csv:
        n = max(args.resolutions)
        rep = verify_brossard(CorpusSpec("band_gaussian", n, 16, args.seed, args.count))
        with open(args.csv, "w") as fh:
            fh.write(rep.to_csv())


if __name__ == "__main__":
    main()
