"""Run every config in configs/ and print a band summary.

Usage::

    python scripts/run_all.py [--out DIR] [--workers N] [--only fig2 fig6 ...]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from geomgate import config as cf
from geomgate.experiments import run_experiment

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--only", nargs="*", help="config stems to run (default: all)")
    args = p.parse_args(argv)

    paths = sorted((ROOT / "configs").glob("*.toml"))
    if args.only:
        paths = [q for q in paths if q.stem in set(args.only)]
    failed = []
    for path in paths:
        cfg = cf.load(path)
        t0 = time.perf_counter()
        rep = run_experiment(cfg, out_dir=args.out, workers=args.workers)
        print(f"== {cfg.name} ({time.perf_counter() - t0:.1f}s) -> {', '.join(map(str, rep.paths))}")
        for band in rep.bands:
            print("   " + band.line())
        if not rep.ok:
            failed.append(cfg.name)
    print(f"\n{len(paths) - len(failed)}/{len(paths)} configs within all bands"
          + (f"; outside: {', '.join(failed)}" if failed else ""))
    return 0 if not failed else 4


if __name__ == "__main__":
    sys.exit(main())
