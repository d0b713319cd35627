"""Verification report records and JSON (de)serialisation."""
from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List

TOOL_NAME = "superhs"
TOOL_VERSION = "0.1.0"


@dataclass
class CheckResult:
    check_id: str
    passed: bool
    residual: str = ""  # serialized nonzero residual, empty on pass
    elapsed: float = 0.0
    detail: str = ""


@dataclass
class VerificationReport:
    entries: List[CheckResult]
    metadata: Dict[str, str] = field(default_factory=dict)

    def all_passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    def to_json(self) -> str:
        payload = {
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "metadata": self.metadata,
            "entries": [asdict(entry) for entry in self.entries],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "VerificationReport":
        payload = json.loads(text)
        entries = [CheckResult(**entry) for entry in payload["entries"]]
        return VerificationReport(entries=entries, metadata=payload.get("metadata", {}))


def make_metadata(config_hash: str) -> Dict[str, str]:
    return {
        "tool_version": TOOL_VERSION,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config_hash": config_hash,
    }


def write_atomic(path: str, text: str) -> None:
    """Write-temp-then-rename so readers never observe a partial file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-report-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
