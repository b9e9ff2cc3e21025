"""Host-facing event interface shared by replicas and clients.

A host feeds messages with ``inject``, fires timers with ``tick`` and
collects outputs with ``drain``. Nodes never block and never read a clock.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any

from .costs import CostModel
from .messages import Envelope, Message, check, seal
from .signing import KeyRing, Signer


@dataclass(frozen=True)
class Send:
    dst: str
    env: Envelope


@dataclass(frozen=True)
class Note:
    """A state transition worth recording in a trace."""

    kind: str
    detail: dict[str, Any]


class Node:
    def __init__(self, name: str, signer: Signer, keys: KeyRing, costs: CostModel | None = None):
        self.name = name
        self.signer = signer
        self.keys = keys
        self.costs = costs or CostModel.free()
        self.now = 0
        self.spent = 0
        self._outbox: list[Send | Note] = []
        self._timers: dict[tuple, int] = {}
        self._local: deque[Envelope] = deque()

    # -- host interface

    def inject(self, env: Envelope, now: int) -> None:
        self.now = max(self.now, now)
        self.charge(self.costs.message + self.costs.verify_sig)
        if check(self.keys, env):
            self.handle(env)
        self._flush_local()

    def tick(self, now: int) -> None:
        self.now = max(self.now, now)
        due = sorted((at, repr(tag), tag) for tag, at in self._timers.items() if at <= now)
        for _, _, tag in due:
            if self._timers.get(tag, now + 1) <= now:
                del self._timers[tag]
                self.on_timer(tag)
        self._flush_local()

    def drain(self) -> list[Send | Note]:
        out, self._outbox = self._outbox, []
        return out

    def next_deadline(self) -> int | None:
        return min(self._timers.values(), default=None)

    def take_spent(self) -> int:
        spent, self.spent = self.spent, 0
        return spent

    # -- for subclasses

    def handle(self, env: Envelope) -> None:
        raise NotImplementedError

    def on_timer(self, tag: tuple) -> None:
        pass

    def charge(self, ticks: int) -> None:
        self.spent += ticks

    def set_timer(self, tag: tuple, at: int) -> None:
        self._timers[tag] = at

    def has_timer(self, tag: tuple) -> bool:
        return tag in self._timers

    def cancel_timer(self, tag: tuple) -> None:
        self._timers.pop(tag, None)

    def seal(self, body: Message) -> Envelope:
        self.charge(self.costs.sign)
        return seal(self.signer, body)

    def send(self, dst: str, body: Message) -> Envelope:
        env = self.seal(body)
        self.forward(dst, env)
        return env

    def forward(self, dst: str, env: Envelope) -> None:
        if dst == self.name:
            self._local.append(env)
        else:
            self.charge(self.costs.message)
            self._outbox.append(Send(dst, env))

    def multicast(self, dsts: list[str], body: Message) -> Envelope:
        env = self.seal(body)
        for d in dsts:
            self.forward(d, env)
        return env

    def note(self, kind: str, **detail: Any) -> None:
        self._outbox.append(Note(kind, detail))

    def _flush_local(self) -> None:
        while self._local:
            self.handle(self._local.popleft())
