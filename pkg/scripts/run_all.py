"""Run every subcommand with --check on its default instance and collect the CSVs.

    python scripts/run_all.py [outdir]
"""
import sys
from pathlib import Path

from zlab.cli import main

RUNS = {
    "converge_random": ["converge"],
    "converge_canonical": ["converge", "--instance", "canonical", "--variant", "symmetric"],
    "converge_rotating": ["converge", "--family", "rotating", "--dim", "4", "--rank", "2"],
    "chernoff_random": ["chernoff"],
    "box": ["box"],
    "probes_random": ["probes"],
    "probes_canonical": ["probes", "--instance", "canonical"],
    "hypothesis_rotating": ["hypothesis", "--family", "rotating", "--dim", "4", "--rank", "2"],
}


def run(outdir: Path) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    worst = 0
    for name, argv in RUNS.items():
        code = main([*argv, "--check", "--out", str(outdir / f"{name}.csv")])
        print(f"{name:22s} exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run(Path(sys.argv[1] if len(sys.argv) > 1 else "results")))
