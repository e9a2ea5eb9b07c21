"""Run every shipped example through derive, simulate and check all.

Outputs go to ``--out/<name>/``: derived.json, <name>.csv and report.json.
"""

import argparse
import sys
import time
from pathlib import Path

from contactmech.cli import main as cli
from contactmech.config import catalog_names


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/catalog"))
    ap.add_argument("--points", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    failed = []
    for name in catalog_names():
        out = str(a.out / name)
        t0 = time.perf_counter()
        codes = [cli(["derive", name, "--out", out]),
                 cli(["simulate", name, "--out", out]),
                 cli(["check", name, "--points", str(a.points), "--seed", str(a.seed), "--json", "--out", out])]
        print(f"== {name}: exit codes {codes} in {time.perf_counter() - t0:.2f}s\n")
        if any(codes):
            failed.append(name)
    if failed:
        print("failed: " + ", ".join(failed))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
