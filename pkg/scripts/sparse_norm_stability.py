"""Print the empirical constants of the structural checks as the resolution grows."""

import argparse

from bipara.experiments import verify_lemmas

SECTIONS = ["decomposition", "calibration", "john_nirenberg", "hardy_equivalence", "fefferman_stein"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[4, 5, 6, 7])
    ap.add_argument("--count", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for n in args.resolutions:
        rep = verify_lemmas(n, args.count, args.seed, sections=SECTIONS)
        agg = rep.aggregate
        parts = [f"dec r={k[1:]}:{v['C']:.3f}" for k, v in agg["decomposition"].items()]
        parts += [f"cal p={k[1:]}:{v['C']:.3f}" for k, v in agg["calibration"].items()]
        parts += [f"jn p={k[1:]}:{v['max']:.3f}" for k, v in agg["john_nirenberg"].items()]
        parts += [f"hardy p={k[1:]}:{v['C']:.3f}" for k, v in agg["hardy_equivalence"].items()]
        parts.append(f"fs:{agg['fefferman_stein']['ratio']['max']:.3f}")
        print(f"n={n} passed={rep.passed} " + " ".join(parts))


if __name__ == "__main__":
    main()
