#!/usr/bin/env python
"""Run the holomart test suite.

Usage:
    python test.py              # fast tests only (small grids, a few thousand paths)
    python test.py --all        # fast + desk-scale acceptance runs
    python test.py --slow       # acceptance runs only
    python test.py --slow -k correct
"""

import os
import subprocess
import sys


def main():
    args = sys.argv[1:]
    passthrough_args = [
        arg for arg in args
        if arg not in {"--all", "--slow"}
    ]

    env = dict(os.environ)
    if "--slow" in args:
        env["HOLOMART_RUN_SLOW"] = "1"
        cmd = [sys.executable, "-m", "pytest", "tests/test_acceptance.py", "-v"]
    elif "--all" in args:
        env["HOLOMART_RUN_SLOW"] = "1"
        cmd = [sys.executable, "-m", "pytest", "tests/", "-v"]
    else:
        cmd = [
            sys.executable, "-m", "pytest", "tests/", "-v",
            "--ignore=tests/test_acceptance.py",
        ]
    cmd.extend(passthrough_args)

    print(f"Running: {' '.join(cmd)}\n")
    sys.exit(subprocess.call(cmd, env=env))


if __name__ == "__main__":
    main()
