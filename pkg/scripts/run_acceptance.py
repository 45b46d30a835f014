"""Run every acceptance check without pytest; one PASS/FAIL line each.

    python3 scripts/run_acceptance.py [C4 C10 ...]

Exit status is the number of failing checks.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from test_acceptance import CRITERIA, run_one  # noqa: E402


def main(argv):
    wanted = set(argv)
    failed = 0
    for name, check in CRITERIA:
        if wanted and name.split()[0] not in wanted:
            continue
        ok, line = run_one(name, check)
        print(line, flush=True)
        failed += not ok
    return failed


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
