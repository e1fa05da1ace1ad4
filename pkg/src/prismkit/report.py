"""Verification reports and the machine-readable run report."""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Literal

from . import __version__

SCHEMA_VERSION = 1

Status = Literal["pass", "fail", "exhausted"]


@dataclass
class IdentityReport:
    """Outcome of a successful identity check.

    margin is the total degree up to which the identity was compared, or
    None when the check is not degree-bounded.
    """

    name: str
    margin: int | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class CheckResult:
    """One named check inside a command run."""

    name: str
    status: Status
    verdict: str = ""
    margin: int | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class Report:
    """Everything a command produced, ready for JSON emission."""

    command: str
    checks: list[CheckResult] = field(default_factory=list)
    elapsed_seconds: float = 0.0
    version: str = __version__
    input_hashes: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    results: dict[str, Any] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def add(self, check: CheckResult) -> None:
        self.checks.append(check)

    def hash_input(self, path: str | Path) -> None:
        self.input_hashes[str(path)] = hashlib.sha256(Path(path).read_bytes()).hexdigest()

    @property
    def exit_code(self) -> int:
        statuses = {c.status for c in self.checks}
        if "fail" in statuses:
            return 1
        if "exhausted" in statuses:
            return 3
        return 0

    def sorted_checks(self) -> list[CheckResult]:
        return sorted(self.checks, key=lambda c: c.name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "input_hashes": self.input_hashes,
            "elapsed_seconds": round(self.elapsed_seconds, 3),
            "exit_code": self.exit_code,
            "checks": [c.to_dict() for c in self.sorted_checks()],
            "results": self.results,
        }
