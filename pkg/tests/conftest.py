"""Collects acceptance verdicts and prints one line per criterion after the run."""

from collections import OrderedDict

_VERDICTS: "OrderedDict[int, list[tuple[bool, str]]]" = OrderedDict()


def record(criterion: int, passed: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(line)
    _VERDICTS.setdefault(criterion, []).append((passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_VERDICTS):
        parts = _VERDICTS[criterion]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
