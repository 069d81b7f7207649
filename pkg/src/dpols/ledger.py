"""Running account of privacy spends, composing additively."""

import json
import threading
import time
from dataclasses import dataclass


@dataclass(frozen=True)
class LedgerEntry:
    mechanism: str
    epsilon: float
    delta: float
    timestamp: float


class BudgetLedger:
    """Append-only record of (epsilon, delta) spends.

    Totals are plain sums over entries (basic sequential composition).
    Appends are serialized with a lock so concurrent release calls can
    share one ledger.
    """

    def __init__(self):
        self._entries: list[LedgerEntry] = []
        self._lock = threading.Lock()

    def spend(self, mechanism: str, epsilon: float, delta: float) -> LedgerEntry:
        entry = LedgerEntry(str(mechanism), float(epsilon), float(delta), time.time())
        with self._lock:
            self._entries.append(entry)
        return entry

    @property
    def entries(self) -> tuple[LedgerEntry, ...]:
        with self._lock:
            return tuple(self._entries)

    @property
    def total_epsilon(self) -> float:
        return sum(e.epsilon for e in self.entries)

    @property
    def total_delta(self) -> float:
        return sum(e.delta for e in self.entries)

    @property
    def totals(self) -> tuple[float, float]:
        entries = self.entries
        return sum(e.epsilon for e in entries), sum(e.delta for e in entries)

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        entries = self.entries
        return json.dumps(
            {
                "entries": [
                    {
                        "mechanism": e.mechanism,
                        "epsilon": e.epsilon,
                        "delta": e.delta,
                        "timestamp": e.timestamp,
                    }
                    for e in entries
                ],
                "total_epsilon": sum(e.epsilon for e in entries),
                "total_delta": sum(e.delta for e in entries),
            },
            indent=2,
        )
