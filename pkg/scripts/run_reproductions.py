#!/usr/bin/env python3
"""Run every canonical study case and print its check report.

Exit status is the number of failing cases (0 when everything passes).
"""

import sys

from allocgen.reproduce import CASES, reproduce


def main() -> int:
    failures = 0
    for case in CASES:
        report = reproduce(case)
        for line in report.lines():
            print(line)
        print()
        failures += 0 if report.passed else 1
    print(f"{len(CASES) - failures}/{len(CASES)} cases pass")
    return failures


if __name__ == "__main__":
    sys.exit(main())
