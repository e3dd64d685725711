"""Collects one verdict line per acceptance criterion for the terminal summary."""

RESULTS: dict[int, str] = {}


def record(criterion: int, passed: bool, detail: str) -> bool:
    RESULTS[criterion] = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(RESULTS[criterion])
    return passed
