from __future__ import annotations

import math


def trial_is_prime(n: int) -> bool:
    n = abs(n)
    if n < 2:
        return False
    for p in range(2, math.isqrt(n) + 1):
        if n % p == 0:
            return False
    return True


ACCEPTANCE_LINES: list[str] = []


def verdict(number: int, name: str, ok: bool, detail: str) -> None:
    """Print and record one acceptance line, then assert it."""
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
