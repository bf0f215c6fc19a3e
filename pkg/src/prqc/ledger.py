"""Append-only store of optimized circuit parameters (the warm-start ledger).

One JSON record per line. A record is keyed by the model fingerprint, layer
mode, depth and system size; written records are never modified.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping, Optional

from .circuit import ParameterVector, PulseSchedule

LEDGER_ENV = "PRQC_LEDGER"
DEFAULT_LEDGER = "prqc-ledger.jsonl"


class LedgerError(RuntimeError):
    pass


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def fingerprint(data: Mapping[str, Any]) -> str:
    """Short stable hash of a JSON-compatible description."""
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()[:16]


def model_fingerprint(target, resource, extra: Optional[Mapping[str, Any]] = None) -> str:
    """Fingerprint of a (target, resource) pair independent of system size."""
    t = target.to_dict()
    r = resource.to_dict()
    t.pop("n_sites")
    r.pop("n_sites")
    # the range value is a control, only the profile family identifies the model
    r["profile"] = {"kind": r["profile"]["kind"]}
    return fingerprint({"target": t, "resource": r, **(extra or {})})


def default_path() -> Path:
    return Path(os.environ.get(LEDGER_ENV, DEFAULT_LEDGER))


@dataclass(frozen=True)
class LedgerEntry:
    fingerprint: str
    mode: str
    depth: int
    n_sites: int
    params: dict
    metrics: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    timestamp: float = 0.0

    @property
    def key(self) -> tuple:
        return (self.fingerprint, self.mode, self.depth, self.n_sites)

    def theta(self):
        if "n_steps" in self.params:
            return PulseSchedule.from_dict(self.params)
        return ParameterVector.from_dict(self.params)

    def to_json(self) -> str:
        return canonical_json(
            {
                "fingerprint": self.fingerprint,
                "mode": self.mode,
                "depth": self.depth,
                "n_sites": self.n_sites,
                "params": self.params,
                "metrics": self.metrics,
                "meta": self.meta,
                "timestamp": self.timestamp,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "LedgerEntry":
        d = json.loads(line)
        return cls(
            d["fingerprint"], d["mode"], int(d["depth"]), int(d["n_sites"]),
            d["params"], d.get("metrics", {}), d.get("meta", {}), float(d.get("timestamp", 0.0)),
        )


def make_entry(fp: str, theta, n_sites: int, metrics=None, meta=None) -> LedgerEntry:
    if isinstance(theta, PulseSchedule):
        mode, depth = "schedule", theta.n_steps
    else:
        mode, depth = theta.mode.value, theta.depth
    clean = {k: (None if v is None else float(v)) for k, v in (metrics or {}).items()}
    return LedgerEntry(fp, mode, depth, int(n_sites), theta.to_dict(), clean, dict(meta or {}), time.time())


class WarmStartLedger:
    """Line-delimited ledger; in-memory when ``path`` is None."""

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[tuple, LedgerEntry] = {}
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path) as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    entry = LedgerEntry.from_json(line)
                except (ValueError, KeyError, TypeError) as exc:
                    raise LedgerError(f"{self.path}:{lineno}: corrupt ledger record ({exc})") from exc
                self._entries.setdefault(entry.key, entry)

    def __len__(self):
        return len(self._entries)

    def __iter__(self) -> Iterator[LedgerEntry]:
        return iter(self._entries.values())

    def __contains__(self, key) -> bool:
        return tuple(key) in self._entries

    def get(self, fp: str, mode: str, depth: int, n_sites: int) -> Optional[LedgerEntry]:
        return self._entries.get((fp, mode, depth, n_sites))

    def append(self, entry: LedgerEntry) -> bool:
        """Write a new entry; returns False (and writes nothing) if the key exists."""
        if entry.key in self._entries:
            return False
        self._entries[entry.key] = entry
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a") as fh:
                fcntl.flock(fh, fcntl.LOCK_EX)  # one writer at a time
                fh.write(entry.to_json() + "\n")
                fh.flush()
                fcntl.flock(fh, fcntl.LOCK_UN)
        return True

    def find(self, fp: Optional[str] = None, mode: Optional[str] = None) -> list[LedgerEntry]:
        return [
            e for e in self._entries.values()
            if (fp is None or e.fingerprint == fp) and (mode is None or e.mode == mode)
        ]

    def latest(self, fp: str, mode: str, depth: int, max_n: Optional[int] = None) -> Optional[LedgerEntry]:
        """Largest-size entry for (fp, mode, depth), optionally capped at ``max_n``."""
        cands = [
            e for e in self._entries.values()
            if e.fingerprint == fp and e.mode == mode and e.depth == depth
            and (max_n is None or e.n_sites <= max_n)
        ]
        return max(cands, key=lambda e: e.n_sites) if cands else None
