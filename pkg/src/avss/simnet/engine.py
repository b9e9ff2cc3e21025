"""Deterministic discrete-event host for replicas and clients.

Time is an integer tick count. Each node owns an inbox and processes one
item at a time; under the cost model an item keeps the node busy for the
ticks it charged and its outputs leave when it is done. Message delays are
drawn from one seeded generator, so a scenario and its seed fix the trace.
"""
from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from random import Random
from typing import Any

from ..kvstore.client import Client, DealerMisbehaviour, Operation
from ..kvstore.costs import CostModel
from ..kvstore.messages import Envelope, replica_name
from ..kvstore.node import Node, Note, Send
from ..kvstore.replica import Replica, ReplicaConfig
from ..kvstore.signing import KeyRing, Signer
from ..savss import SavssParams, savss_init
from .byzantine import ByzantineReplica
from .scenario import Fault, Scenario

_TICK = object()
_RESTART = object()


@dataclass
class Trace:
    """Totally ordered event log of one run plus what the checkers need."""

    scenario: str
    seed: int
    n: int
    f: int
    window: int
    events: list[tuple[int, str, str, dict[str, Any]]] = field(default_factory=list)
    deliveries: list[tuple[int, str, str, Envelope]] = field(default_factory=list)
    dealers: dict[str, SavssParams] = field(default_factory=dict)
    faulty: tuple[int, ...] = ()
    final: dict[str, dict[str, Any]] = field(default_factory=dict)
    end_time: int = 0

    @property
    def k(self) -> int:
        return self.f + 1

    def record(self, time: int, kind: str, node: str, detail: dict[str, Any]) -> None:
        self.events.append((time, kind, node, detail))

    def of_kind(self, kind: str) -> list[tuple[int, str, str, dict[str, Any]]]:
        return [e for e in self.events if e[1] == kind]

    def adversary_view(self, corrupt: set[int]) -> list[tuple[int, str, str, Envelope]]:
        names = {replica_name(i) for i in corrupt}
        return [d for d in self.deliveries if d[1] in names or d[2] in names]

    def export_lines(self) -> list[str]:
        return [
            f"{t}\t{kind}\t{node}\t{json.dumps(detail, sort_keys=True, separators=(',', ':'))}"
            for t, kind, node, detail in self.events
        ]

    def export(self) -> str:
        return "\n".join(self.export_lines()) + "\n"


@dataclass
class _Slot:
    node: Node
    inbox: deque = field(default_factory=deque)
    busy_until: int = 0
    run_scheduled: bool = False
    wakes: set[int] = field(default_factory=set)
    crashed: bool = False


class Simulation:
    def __init__(self, scenario: Scenario, record_messages: bool = True):
        scenario.validate()
        self.sc = scenario
        self.n, self.f = scenario.n, scenario.f
        self.record_messages = record_messages
        self.net_rng = Random(f"net/{scenario.seed}")
        self.costs = CostModel() if scenario.costs else CostModel.free()
        self.trace = Trace(scenario.name, scenario.seed, self.n, self.f, scenario.window)
        self.trace.faulty = tuple(scenario.faulty_replicas())
        self.now = 0
        self._heap: list[tuple[int, int, str, Any]] = []
        self._counter = 0
        self.partitions: list[tuple[int, int, list[set[str]]]] = []
        self._build()

    # ------------------------------------------------------------ setup

    def _build(self) -> None:
        sc = self.sc
        keys = KeyRing()
        signers: dict[str, Signer] = {}
        clients = sc.clients()
        for name in [replica_name(i) for i in range(1, self.n + 1)] + clients:
            signers[name] = Signer.seeded(name, sc.seed)
            keys.add(name, signers[name].public_key)
        dealers: dict[str, SavssParams] = {}
        dprf: dict[str, list] = {}
        for c in clients:
            params, sks = savss_init(sc.k, self.n, sc.scheme, Random(f"setup/{sc.seed}/{c}"), dealer_id=c)
            dealers[c], dprf[c] = params, sks
        self.trace.dealers = dealers
        cfg = ReplicaConfig(
            self.n,
            self.f,
            window=sc.window,
            checkpoint_period=sc.checkpoint_period,
            delta=sc.delta,
            vc_timeout=sc.vc_timeout,
            sharing=sc.sharing,
        )
        self.slots: dict[str, _Slot] = {}
        faulty = set(sc.faulty_replicas())
        for i in range(1, self.n + 1):
            cls = ByzantineReplica if i in faulty else Replica
            node = cls(
                i,
                cfg,
                signers[replica_name(i)],
                keys,
                dealers,
                {c: dprf[c][i - 1] for c in clients},
                self.costs,
                Random(f"replica/{sc.seed}/{i}"),
            )
            self.slots[node.name] = _Slot(node)
        for c in clients:
            node = Client(
                c,
                self.n,
                self.f,
                signers[c],
                keys,
                dealers,
                dprf[c],
                None,
                Random(f"client/{sc.seed}/{c}"),
                sharing=sc.sharing,
                retry_timeout=max(2000, sc.vc_timeout // 2),
            )
            self.slots[c] = _Slot(node)
        by_client: dict[str, list[Operation]] = {c: [] for c in clients}
        for o in sc.all_ops():
            by_client[o.client].append(Operation(o.op, o.key, o.value, o.readers, o.time))
        for c in clients:
            self.slots[c].node.submit(by_client[c])
            self._arm(self.slots[c])
        for fault in sc.faults:
            self._push(fault.time, "fault", fault)
            if fault.until is not None:
                self._push(fault.until, "heal", fault)

    @property
    def replicas(self) -> list[Replica]:
        return [self.slots[replica_name(i)].node for i in range(1, self.n + 1)]

    @property
    def clients(self) -> list[Client]:
        return [s.node for s in self.slots.values() if isinstance(s.node, Client)]

    # ------------------------------------------------------------ event plumbing

    def _push(self, time: int, kind: str, payload: Any) -> None:
        self._counter += 1
        heapq.heappush(self._heap, (time, self._counter, kind, payload))

    def _arm(self, slot: _Slot) -> None:
        deadline = slot.node.next_deadline()
        if deadline is None:
            return
        deadline = max(deadline, self.now)
        if deadline not in slot.wakes:
            slot.wakes.add(deadline)
            self._push(deadline, "wake", slot.node.name)

    def _enqueue(self, slot: _Slot, item: Any) -> None:
        slot.inbox.append(item)
        if not slot.run_scheduled:
            slot.run_scheduled = True
            self._push(max(self.now, slot.busy_until), "run", slot.node.name)

    def _delay(self, t: int) -> int:
        for start, end, bound in self.sc.async_phases:
            if start <= t < end:
                return self.net_rng.randint(1, bound)
        return self.net_rng.randint(1, self.sc.delta)

    def _separated(self, a: str, b: str, t: int) -> int | None:
        """End of a partition currently separating a and b, if any."""
        for start, end, groups in self.partitions:
            if start <= t < end:
                ga = next((i for i, g in enumerate(groups) if a in g), None)
                gb = next((i for i, g in enumerate(groups) if b in g), None)
                if ga is not None and gb is not None and ga != gb:
                    return end
        return None

    def _transmit(self, src: str, dst: str, env: Envelope, t: int) -> None:
        if dst not in self.slots:
            return
        held = self._separated(src, dst, t)
        at = (held if held is not None else t) + self._delay(t)
        self.trace.record(t, "send", src, {"dst": dst, "type": type(env.body).__name__, "at": at})
        self._push(at, "deliver", (src, dst, env))

    # ------------------------------------------------------------ faults

    def _apply_fault(self, fault: Fault) -> None:
        self.trace.record(self.now, "fault", fault.target or "net", {"kind": fault.kind, "mode": fault.mode})
        if fault.kind == "crash":
            slot = self.slots[fault.target]
            slot.crashed = True
            slot.inbox.clear()
        elif fault.kind == "equivocate-leader":
            node = self.slots[fault.target].node
            if fault.mode == "omit":
                node.omit_newview = True
            else:
                node.equivocate = True
        elif fault.kind == "garbage-reply":
            self.slots[fault.target].node.garbage = True
        elif fault.kind == "byzantine-dealer":
            victims = frozenset(fault.victims)
            self.slots[fault.target].node.misbehaviour = DealerMisbehaviour(withhold=victims, bad_masks=victims)
        elif fault.kind == "drop-share":
            victims = frozenset(fault.victims)
            mis = DealerMisbehaviour(corrupt=victims) if fault.mode == "corrupt" else DealerMisbehaviour(withhold=victims)
            self.slots[fault.target].node.misbehaviour = mis
        elif fault.kind == "partition":
            end = fault.until if fault.until is not None else self.sc.max_time
            self.partitions.append((fault.time, end, [set(g) for g in fault.groups]))

    def _heal(self, fault: Fault) -> None:
        self.trace.record(self.now, "heal", fault.target or "net", {"kind": fault.kind})
        if fault.kind == "crash":
            slot = self.slots[fault.target]
            slot.crashed = False
            slot.busy_until = max(slot.busy_until, self.now)
            self._enqueue(slot, _RESTART)
        elif fault.kind == "equivocate-leader":
            node = self.slots[fault.target].node
            node.equivocate = node.omit_newview = False
        elif fault.kind == "garbage-reply":
            self.slots[fault.target].node.garbage = False
        elif fault.kind in ("byzantine-dealer", "drop-share"):
            self.slots[fault.target].node.misbehaviour = DealerMisbehaviour()

    # ------------------------------------------------------------ main loop

    def _step(self, slot: _Slot) -> None:
        slot.run_scheduled = False
        if slot.crashed or not slot.inbox:
            return
        item = slot.inbox.popleft()
        node = slot.node
        t0 = max(self.now, slot.busy_until)
        if item is _TICK:
            node.tick(t0)
        elif item is _RESTART:
            node.restart(t0)
        else:
            src, env = item
            if self.record_messages:
                self.trace.deliveries.append((t0, src, node.name, env))
            node.inject(env, t0)
        cost = node.take_spent() if isinstance(node, Replica) else 0
        slot.busy_until = t0 + cost
        for out in node.drain():
            if isinstance(out, Send):
                self._transmit(node.name, out.dst, out.env, slot.busy_until)
            elif isinstance(out, Note):
                self.trace.record(t0, out.kind, node.name, out.detail)
        self._arm(slot)
        if slot.inbox:
            slot.run_scheduled = True
            self._push(slot.busy_until, "run", node.name)

    def _settled(self) -> bool:
        return all(c.idle for c in self.clients)

    def run(self, settle: int = 50_000) -> Trace:
        deadline = self.sc.max_time
        quiet_at: int | None = None
        while self._heap:
            t, _, kind, payload = heapq.heappop(self._heap)
            if t > deadline:
                break
            self.now = t
            if kind == "run":
                self._step(self.slots[payload])
            elif kind == "wake":
                slot = self.slots[payload]
                slot.wakes.discard(t)
                if not slot.crashed:
                    self._enqueue(slot, _TICK)
            elif kind == "deliver":
                src, dst, env = payload
                slot = self.slots[dst]
                if slot.crashed:
                    self.trace.record(t, "drop", dst, {"src": src, "type": type(env.body).__name__})
                else:
                    self._enqueue(slot, (src, env))
            elif kind == "fault":
                self._apply_fault(payload)
            elif kind == "heal":
                self._heal(payload)
            if quiet_at is None and self._settled():
                quiet_at = t
                deadline = min(deadline, t + settle)
        self.trace.end_time = self.now
        for r in self.replicas:
            slot = self.slots[r.name]
            self.trace.final[r.name] = {
                "last_executed": r.last_executed,
                "digest": r.public_digest().hex(),
                "view": r.view,
                "status": r.status,
                "crashed": slot.crashed,
                "faulty": r.index in self.trace.faulty,
                "max_pending": r.max_pending,
                "stable": r.stable_seq,
                "missing_shares": sorted(k for k, sid in r.private.items() if sid not in r.held and sid not in r.exposed),
            }
        self.trace.record(self.now, "end", "sim", {"replicas": {k: v["digest"] for k, v in self.trace.final.items()}})
        return self.trace


def run_scenario(scenario: Scenario, record_messages: bool = True) -> Trace:
    return Simulation(scenario, record_messages).run()
