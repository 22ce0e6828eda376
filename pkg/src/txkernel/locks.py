"""Strict two-phase lock manager with partition-based range locks.

Keyed operations lock (table, key); range reads lock every cell of a fixed
equal-width partitioning of the key space that overlaps the range, and every
write also takes its covering partition in intention-exclusive mode so range
readers and writers in the same region conflict.  Locks are only ever
released all at once at transaction end (strictness).

Deadlocks are found by cycle search over the waits-for graph at park time;
the youngest transaction in the cycle (largest id) is denied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

S = "S"
X = "X"
IX = "IX"

_COMPAT = {(S, S), (IX, IX)}


def modes_compatible(a: str, b: str) -> bool:
    return (a, b) in _COMPAT


def partition_of(key: bytes, n: int) -> int:
    """Equal-width cell over the 8-byte big-endian key prefix."""
    v = int.from_bytes((key + b"\x00" * 8)[:8], "big")
    return (v * n) >> 64


def partitions_overlapping(low: bytes, high_incl: bytes, n: int) -> list[int]:
    return list(range(partition_of(low, n), partition_of(high_incl, n) + 1))


Resource = tuple  # ("key", table, key) | ("part", table, index)


@dataclass
class _Waiter:
    txn: int
    resource: Resource
    mode: str
    grant_cb: Callable[[], None]
    deny_cb: Callable[[], None]


class LockManager:
    def __init__(self):
        self.holders: dict[Resource, dict[int, set[str]]] = {}
        self.queues: dict[Resource, list[_Waiter]] = {}
        self.held_by_txn: dict[int, set[Resource]] = {}

    def _conflicts(self, res: Resource, txn: int, mode: str) -> set[int]:
        out = set()
        for other, modes in self.holders.get(res, {}).items():
            if other != txn and any(not modes_compatible(mode, m) for m in modes):
                out.add(other)
        return out

    def _grant(self, res: Resource, txn: int, mode: str) -> None:
        self.holders.setdefault(res, {}).setdefault(txn, set()).add(mode)
        self.held_by_txn.setdefault(txn, set()).add(res)

    def try_acquire(self, txn: int, res: Resource, mode: str,
                    grant_cb: Callable[[], None],
                    deny_cb: Callable[[], None]) -> str:
        """Returns "granted", "blocked" or "deadlock".

        On "blocked" the request is queued and exactly one of the callbacks
        fires later.  On "deadlock" the caller itself was chosen as victim
        and nothing was queued.
        """
        held = self.holders.get(res, {}).get(txn, set())
        if mode in held:
            return "granted"
        queue = self.queues.setdefault(res, [])
        # a holder changing its mode bypasses the queue (upgrade priority)
        bypass = bool(held)
        if not self._conflicts(res, txn, mode) and (bypass or not queue):
            self._grant(res, txn, mode)
            return "granted"
        waiter = _Waiter(txn, res, mode, grant_cb, deny_cb)
        queue.append(waiter)
        victim = self._detect_deadlock(txn)
        if victim is not None:
            if victim == txn:
                queue.remove(waiter)
                return "deadlock"
            self._deny_waiters_of(victim)
        return "blocked"

    def _waits_for(self, txn: int) -> set[int]:
        out: set[int] = set()
        for queue in self.queues.values():
            for i, w in enumerate(queue):
                if w.txn != txn:
                    continue
                out |= self._conflicts(w.resource, txn, w.mode)
                out |= {q.txn for q in queue[:i] if q.txn != txn}
        return out

    def _detect_deadlock(self, start: int) -> Optional[int]:
        """Cycle through `start` in the waits-for graph -> youngest member."""
        path: list[int] = []
        seen: set[int] = set()

        def dfs(t: int) -> Optional[list[int]]:
            if t in path:
                return path[path.index(t):]
            if t in seen:
                return None
            seen.add(t)
            path.append(t)
            for n in sorted(self._waits_for(t)):
                cycle = dfs(n)
                if cycle is not None:
                    return cycle
            path.pop()
            return None

        cycle = dfs(start)
        return max(cycle) if cycle else None

    def _deny_waiters_of(self, txn: int) -> None:
        denied = []
        for queue in self.queues.values():
            for w in list(queue):
                if w.txn == txn:
                    queue.remove(w)
                    denied.append(w)
        for w in denied:
            w.deny_cb()

    def release_all(self, txn: int) -> None:
        for res in sorted(self.held_by_txn.pop(txn, ())):
            holders = self.holders.get(res)
            if holders:
                holders.pop(txn, None)
                if not holders:
                    del self.holders[res]
        self._pump()

    def _pump(self) -> None:
        """Grant queued requests in FIFO order wherever now compatible."""
        progressed = True
        while progressed:
            progressed = False
            for res in sorted(self.queues, key=repr):
                queue = self.queues[res]
                while queue:
                    w = queue[0]
                    held = self.holders.get(res, {}).get(w.txn, set())
                    if self._conflicts(res, w.txn, w.mode) and w.mode not in held:
                        break
                    queue.pop(0)
                    self._grant(res, w.txn, w.mode)
                    w.grant_cb()
                    progressed = True

    def held(self, txn: int) -> set[Resource]:
        return set(self.held_by_txn.get(txn, ()))
