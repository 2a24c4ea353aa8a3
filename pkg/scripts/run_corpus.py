#!/usr/bin/env python3
"""Cross-validate every built-in jet and print a table of statuses and exponents.

    python3 scripts/run_corpus.py [--names hopf cusp] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import math
import time

from jetcheck.corpus import CORPUS
from jetcheck.lojas import SamplerConfig
from jetcheck.verdict import cross_validate

COLUMNS = ("R", "T", "Kuo", "KuiperKuo")


def fmt(v):
    if v is None:
        return "-"
    k = v.kappa_hat
    ks = "inf" if k == math.inf else ("nan" if math.isnan(k) else f"{k:.3f}")
    return f"{v.status[:5]}({ks})"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--names", nargs="*", default=list(CORPUS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--starts", type=int, default=64)
    ap.add_argument("--json", help="write statuses and exponents here")
    args = ap.parse_args()

    cfg = SamplerConfig(seed=args.seed, nstarts=args.starts)
    rows = {}
    print(f"{'entry':<16}{'expected':<14}" + "".join(f"{c:<22}" for c in COLUMNS) + "agree  secs")
    for name in args.names:
        e = CORPUS[name]
        t0 = time.perf_counter()
        cv = cross_validate(e.polymap(), e.r, cfg)
        dt = time.perf_counter() - t0
        cells = "".join(f"{fmt(cv.verdicts.get(c)):<22}" for c in COLUMNS)
        print(f"{name:<16}{e.expected:<14}{cells}{str(cv.agree):<7}{dt:.1f}")
        rows[name] = {k: {"status": v.status, "kappa_hat": v.kappa_hat, "flags": list(v.flags)}
                      for k, v in cv.verdicts.items()}
        rows[name]["agree"] = cv.agree
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, default=str)


if __name__ == "__main__":
    main()
