"""Collects acceptance results and prints one verdict line per criterion."""

from __future__ import annotations

from dataclasses import dataclass, field

import pytest

_LOG = pytest.StashKey["AcceptanceLog"]()


@dataclass
class AcceptanceLog:
    titles: dict[int, str] = field(default_factory=dict)
    checks: dict[int, list[tuple[str, bool | None, str]]] = field(default_factory=dict)

    def record(self, criterion: int, title: str, part: str, ok: bool | None, detail: str = "") -> bool | None:
        """``ok=None`` marks an informational line that does not affect the verdict."""
        self.titles[criterion] = title
        self.checks.setdefault(criterion, []).append((part, ok, detail))
        tag = "INFO" if ok is None else "pass" if ok else "FAIL"
        print(f"[criterion {criterion}] {tag}: {part} {detail}".rstrip())
        return ok

    def lines(self) -> list[str]:
        out = []
        for c in sorted(self.checks):
            graded = [(p, ok, d) for p, ok, d in self.checks[c] if ok is not None]
            failed = [p for p, ok, _ in graded if not ok]
            verdict = "PASS" if graded and not failed else "FAIL"
            head = f"criterion {c:2d} {verdict}  {self.titles[c]}"
            if failed:
                head += f"  (failed: {'; '.join(failed)})"
            out.append(head)
            out.extend(f"      {'info' if ok is None else 'ok  ' if ok else 'FAIL'}  {p} {d}".rstrip()
                       for p, ok, d in self.checks[c])
        return out


@pytest.fixture(scope="session")
def acceptance(request) -> AcceptanceLog:
    return request.config.stash.setdefault(_LOG, AcceptanceLog())


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_LOG, None)
    if log is None or not log.checks:
        return
    terminalreporter.section("acceptance criteria")
    for line in log.lines():
        terminalreporter.write_line(line)
