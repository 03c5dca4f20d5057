"""Run the full benchmark grid over the shipped synthetic fixtures.

Equivalent to `lwrbench run --config configs/fixtures.cfg`, with a worker
count picked from the machine.  The china-shaped fixture makes this a
full-scale run; expect minutes, not seconds.
"""

from __future__ import annotations

import os
import sys
import time
from pathlib import Path

from lwrbench.cli import main as cli_main

REPO_ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    workers = max(1, (os.cpu_count() or 2) - 1)
    argv = [
        "run",
        "--config",
        str(REPO_ROOT / "configs" / "fixtures.cfg"),
        "--workers",
        str(workers),
    ]
    argv.extend(sys.argv[1:])
    start = time.perf_counter()
    code = cli_main(argv)
    print(f"elapsed: {time.perf_counter() - start:.1f}s with {workers} workers")
    return code


if __name__ == "__main__":
    sys.exit(main())
