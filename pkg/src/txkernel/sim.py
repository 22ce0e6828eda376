"""Deterministic simulated environment.

Components (TCs and DCs) are single-threaded state machines driven by one
seeded scheduler; all concurrency is modeled as interleavings of scheduler
events: message deliveries, timer fires, internal component steps, and fault
injections.  Identical (seed, fault plan, workload) produces a bit-identical
trace, which is what makes exhaustive crash-point enumeration possible.

Stable storage is explicit: a slot-addressed page file with atomic whole-page
writes plus an append-only log with a force frontier.  A crash discards every
volatile structure (caches, buffers, pending continuations and timers of the
crashed component, the unforced log tail) and leaves stable content intact.

Message envelopes carry the sender's incarnation number so a component can
discard traffic that originated before a peer's crash; without that guard a
delayed pre-crash message could resurrect state the restart protocol just
reset.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Callable, Optional


class SimError(Exception):
    pass


class LogStore:
    """Append-only record log with an explicit force frontier.

    Records past the frontier are volatile and vanish at a crash; stability
    is prefix-closed by construction.
    """

    def __init__(self):
        self.records: list[bytes] = []
        self.forced = 0  # records[:forced] are stable

    def log_append(self, record: bytes, force: bool = False) -> int:
        self.records.append(record)
        if force:
            self.force()
        return len(self.records) - 1

    def force(self) -> None:
        self.forced = len(self.records)

    def log_scan(self, from_pos: int = 0) -> list[bytes]:
        if from_pos > self.forced:
            raise SimError(f"scan position {from_pos} beyond force frontier")
        return self.records[from_pos:self.forced]

    def crash(self) -> None:
        del self.records[self.forced:]

    def __len__(self) -> int:
        return len(self.records)


class PageFile:
    """Slot-addressed stable page store with atomic whole-slot writes."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.slots: dict[int, bytes] = {}
        self.meta: bytes = b""  # small metadata blob, atomically replaced

    def write_page_atomic(self, slot: int, data: bytes) -> None:
        if len(data) > self.capacity:
            raise SimError(f"page image {len(data)}B exceeds capacity "
                           f"{self.capacity}B")
        self.slots[slot] = data

    def read(self, slot: int) -> Optional[bytes]:
        return self.slots.get(slot)

    def delete(self, slot: int) -> None:
        self.slots.pop(slot, None)

    def write_meta(self, data: bytes) -> None:
        self.meta = data


@dataclass
class StableStore:
    """Per-component stable storage: survives any crash."""
    log: LogStore
    pages: PageFile

    @staticmethod
    def make(page_capacity: int = 4096) -> "StableStore":
        return StableStore(LogStore(), PageFile(page_capacity))


@dataclass(frozen=True)
class Envelope:
    src: str
    dst: str
    msg: object
    src_epoch: int
    re_epoch: Optional[int] = None  # epoch of the request a reply answers


@dataclass
class NetPolicy:
    reorder: bool = False       # deliver an arbitrary queued message, not the head
    dup_p: float = 0.0          # probability a delivery leaves a duplicate behind
    drop_p: float = 0.0         # probability a message is lost at delivery


@dataclass
class FaultPlan:
    """Declarative fault schedule; crashes fire at the start of their step."""
    crashes: dict[int, list[str]] = field(default_factory=dict)
    drops: list[dict] = field(default_factory=list)    # {match..., count}
    delays: list[dict] = field(default_factory=list)   # {match..., steps, count}

    @staticmethod
    def from_dict(doc: dict) -> "FaultPlan":
        plan = FaultPlan()
        for ev in doc.get("events", []):
            kind = ev["kind"]
            if kind == "crash":
                plan.crashes.setdefault(int(ev["at_step"]), []).append(
                    ev["component"])
            elif kind == "drop":
                plan.drops.append({"match": ev.get("match", {}),
                                   "count": int(ev.get("count", 1))})
            elif kind == "delay":
                plan.delays.append({"match": ev.get("match", {}),
                                    "steps": int(ev["steps"]),
                                    "count": int(ev.get("count", 1))})
            else:
                raise SimError(f"unknown fault kind {kind}")
        return plan


def _match_env(match: dict, env: Envelope) -> bool:
    if "src" in match and match["src"] != env.src:
        return False
    if "dst" in match and match["dst"] != env.dst:
        return False
    if "kind" in match:
        name = type(env.msg).__name__
        if match["kind"] not in (name, getattr(env.msg, "kind", None)):
            return False
    if "lsn" in match and getattr(env.msg, "lsn", None) != match["lsn"]:
        return False
    return True


class Trace:
    """Audited event history: one (step, component, kind, payload) per event."""

    def __init__(self):
        self.events: list[tuple[int, str, str, dict]] = []

    def emit(self, step: int, comp: str, kind: str, **payload) -> None:
        self.events.append((step, comp, kind, payload))

    def of_kind(self, *kinds: str) -> list[tuple[int, str, str, dict]]:
        ks = set(kinds)
        return [e for e in self.events if e[2] in ks]

    def export_lines(self) -> list[str]:
        import hashlib
        out = []
        for step, comp, kind, payload in self.events:
            blob = json.dumps(payload, sort_keys=True, default=repr)
            digest = hashlib.sha1(blob.encode()).hexdigest()[:12]
            out.append(json.dumps({"step": step, "comp": comp, "kind": kind,
                                   "digest": digest, "payload": payload},
                                  sort_keys=True, default=repr))
        return out


class Simulator:
    """Seeded scheduler over components, channels, timers and faults."""

    def __init__(self, seed: int, policy: Optional[NetPolicy] = None,
                 plan: Optional[FaultPlan] = None):
        self.rng = random.Random(seed)
        self.seed = seed
        self.policy = policy or NetPolicy()
        self.plan = plan or FaultPlan()
        self.trace = Trace()
        self.step = 0
        self.components: dict[str, object] = {}
        self.channels: dict[tuple[str, str], list[Envelope]] = {}
        self._chan_keys: list[tuple[str, str]] = []  # stable ordering
        self.ready: list[tuple[str, int, Callable, str]] = []
        self.timers: list[tuple[int, int, str, int, Callable, str]] = []
        self._seq = 0

    # -- wiring ------------------------------------------------------------

    def add_component(self, comp) -> None:
        self.components[comp.name] = comp

    def _channel(self, src: str, dst: str) -> list[Envelope]:
        key = (src, dst)
        ch = self.channels.get(key)
        if ch is None:
            ch = self.channels[key] = []
            self._chan_keys.append(key)
            self._chan_keys.sort()
        return ch

    # -- component services --------------------------------------------------

    def send(self, src: str, dst: str, msg, re_epoch: Optional[int] = None) -> None:
        env = Envelope(src, dst, msg, self.components[src].epoch, re_epoch)
        for rule in self.plan.drops:
            if rule["count"] > 0 and _match_env(rule["match"], env):
                rule["count"] -= 1
                self.trace.emit(self.step, "net", "fault_drop",
                                kind=type(msg).__name__, src=src, dst=dst)
                return
        for rule in self.plan.delays:
            if rule["count"] > 0 and _match_env(rule["match"], env):
                rule["count"] -= 1
                self.schedule("net", rule["steps"],
                              lambda e=env: self._channel(e.src, e.dst).append(e),
                              "delayed_delivery")
                return
        self._channel(src, dst).append(env)

    def post(self, comp: str, fn: Callable, label: str) -> None:
        """Queue an internal step; invalidated if the component crashes first."""
        epoch = self.components[comp].epoch if comp in self.components else 0
        self.ready.append((comp, epoch, fn, label))

    def schedule(self, comp: str, delay: int, fn: Callable, label: str) -> None:
        epoch = self.components[comp].epoch if comp in self.components else 0
        self._seq += 1
        heapq.heappush(self.timers,
                       (self.step + max(delay, 1), self._seq, comp, epoch, fn,
                        label))

    # -- faults --------------------------------------------------------------

    def crash(self, name: str) -> None:
        comp = self.components[name]
        self.trace.emit(self.step, name, "crash")
        comp.on_crash()  # wipes volatile state, bumps epoch, posts recovery

    # -- scheduling ----------------------------------------------------------

    def _live(self, comp: str, epoch: int) -> bool:
        c = self.components.get(comp)
        return comp == "net" or (c is not None and c.epoch == epoch)

    def scheduler_step(self) -> bool:
        """Run one event; returns False when nothing is runnable."""
        self.step += 1
        for name in self.plan.crashes.pop(self.step, []):
            self.crash(name)

        candidates: list[tuple] = []
        while self.ready and not self._live(self.ready[0][0], self.ready[0][1]):
            self.ready.pop(0)  # stale continuation of a crashed incarnation
        if self.ready:
            candidates.append(("task",))
        while self.timers and not self._live(self.timers[0][2], self.timers[0][3]):
            heapq.heappop(self.timers)
        if self.timers and self.timers[0][0] <= self.step:
            candidates.append(("timer",))
        for key in self._chan_keys:
            if self.channels[key]:
                candidates.append(("chan", key))
        if not candidates:
            if self.timers:
                # idle until the next timer is due, but never skip a planned
                # crash step
                nxt = self.timers[0][0]
                pending = [s for s in self.plan.crashes if s > self.step]
                if pending:
                    nxt = min(nxt, min(pending))
                self.step = max(self.step, nxt - 1)
                return True
            return False

        choice = candidates[self.rng.randrange(len(candidates))]
        if choice[0] == "task":
            comp, epoch, fn, label = self.ready.pop(0)
            self.trace.emit(self.step, comp, "task", label=label)
            fn()
        elif choice[0] == "timer":
            _, _, comp, epoch, fn, label = heapq.heappop(self.timers)
            self.trace.emit(self.step, comp, "timer", label=label)
            fn()
        else:
            key = choice[1]
            ch = self.channels[key]
            idx = self.rng.randrange(len(ch)) if self.policy.reorder else 0
            env = ch[idx]
            if self.policy.drop_p and self.rng.random() < self.policy.drop_p:
                del ch[idx]
                self.trace.emit(self.step, "net", "drop",
                                kind=type(env.msg).__name__, src=env.src,
                                dst=env.dst)
                return True
            if self.policy.dup_p and self.rng.random() < self.policy.dup_p:
                pass  # leave the message queued: it will be delivered again
            else:
                del ch[idx]
            self.trace.emit(self.step, env.dst, "deliver",
                            kind=type(env.msg).__name__, src=env.src)
            self.components[env.dst].handle(env)
        return True

    def run(self, budget: int = 200_000,
            until: Optional[Callable[[], bool]] = None) -> int:
        """Step until quiescence (or `until` holds); returns steps taken."""
        taken = 0
        while taken < budget:
            if until is not None and until():
                return taken
            if not self.scheduler_step():
                return taken
            taken += 1
        raise SimError(f"step budget {budget} exceeded at step {self.step}")
