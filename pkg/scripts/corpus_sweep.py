"""Cross-validate every gallery chain against the dense oracle and tabulate the outcome.

    python3 scripts/corpus_sweep.py --seed 7 --n-max 6
"""

from __future__ import annotations

import argparse
import time
from collections import defaultdict

from mpukit.oracle import DEFAULT_SEED, cross_validate, gallery_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--n-max", type=int, default=8)
    args = parser.parse_args()
    t0 = time.perf_counter()
    counts = defaultdict(lambda: [0, 0])
    bad = []
    for entry in gallery_corpus(args.seed, n_max=args.n_max):
        rep = cross_validate(entry.chain)
        tally = counts[entry.family]
        tally[0] += 1
        if rep.agree and rep.dense_passed == entry.unitary:
            tally[1] += 1
        else:
            bad.append((entry.family, entry.n, rep.disagreements))
    for family, (total, ok) in sorted(counts.items()):
        print(f"{family:28s} {ok:3d}/{total:<3d}")
    for family, n, dis in bad:
        print(f"disagreement: {family} N={n} {dis}")
    print(f"{sum(c[0] for c in counts.values())} chains in {time.perf_counter() - t0:.1f} s")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
