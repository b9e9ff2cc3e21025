"""Client of the private key-value store.

A PUT secret-shares the value: the CommitmentVec goes to the leader inside
the ordered request, replica i receives ShareVec i directly. A GET is ordered
like any request and reconstructed from f+1 verifying shares.
"""
from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass
from random import Random
from typing import Any

from ..algebra import Q, Polynomial
from ..dprf import DprfPrivateKey
from ..savss import SavssParams, deal_with_bad_masks, savss_reconstruct, savss_share, savss_verify
from .costs import CostModel
from .messages import Envelope, PutShare, Reply, Request, replica_name, sharing_digest
from .node import Node
from .replica import leader_of
from .signing import KeyRing, Signer


@dataclass(frozen=True)
class Operation:
    op: str  # put, get or acl
    key: str
    value: int | None = None
    readers: tuple[str, ...] = ()
    at: int = 0


@dataclass
class DealerMisbehaviour:
    """Fault injection for a Byzantine client acting as dealer."""

    withhold: frozenset[int] = frozenset()  # replicas that never get a share
    corrupt: frozenset[int] = frozenset()  # replicas that get a tampered share
    bad_masks: frozenset[int] = frozenset()  # indices whose masks disagree with the DPRF

    @property
    def hiding_forfeited(self) -> bool:
        return bool(self.bad_masks)


@dataclass
class _InFlight:
    rseq: int
    op: Operation
    env: Envelope
    started: int
    replies: dict[int, Reply]
    verified: dict[bytes, dict[int, Any]]
    retry: int


class Client(Node):
    def __init__(
        self,
        name: str,
        n: int,
        f: int,
        signer: Signer,
        keys: KeyRing,
        dealers: dict[str, SavssParams],
        dprf_keys: list[DprfPrivateKey] | None = None,
        costs: CostModel | None = None,
        rng: Random | None = None,
        sharing: bool = True,
        retry_timeout: int = 2000,
    ):
        super().__init__(name, signer, keys, costs)
        self.n, self.f = n, f
        self.dealers = dealers
        self.dprf_keys = dprf_keys or []
        self.rng = rng or Random(name)
        self.sharing = sharing
        self.retry_timeout = retry_timeout
        self.misbehaviour = DealerMisbehaviour()
        self.queue: deque[Operation] = deque()
        self.current: _InFlight | None = None
        self.rseq = 0
        self.view_guess = 0
        self.completed: list[tuple[Operation, Any]] = []

    @property
    def params(self) -> SavssParams:
        return self.dealers[self.name]

    def submit(self, ops: list[Operation]) -> None:
        self.queue.extend(sorted(ops, key=lambda o: o.at))
        self._schedule_next()

    @property
    def idle(self) -> bool:
        return self.current is None and not self.queue

    def _schedule_next(self) -> None:
        if self.current is None and self.queue:
            self.set_timer(("start",), max(self.now, self.queue[0].at))

    def on_timer(self, tag: tuple) -> None:
        if tag[0] == "start":
            if self.current is None and self.queue and self.queue[0].at <= self.now:
                self._start(self.queue.popleft())
            else:
                self._schedule_next()
        elif tag[0] == "retry":
            cur = self.current
            if cur is not None and cur.rseq == tag[1]:
                # the leader may be faulty: hand the request to everyone
                for i in range(1, self.n + 1):
                    self.forward(replica_name(i), cur.env)
                cur.retry *= 2
                self.set_timer(("retry", cur.rseq), self.now + cur.retry)

    # ------------------------------------------------------------ issuing

    def _start(self, op: Operation) -> None:
        self.rseq += 1
        detail: dict[str, Any] = {"client": self.name, "rseq": self.rseq, "op": op.op, "key": op.key}
        shares: list = []
        if op.op == "put" and self.sharing:
            req, shares = self._deal(op)
            detail["sharing"] = sharing_digest(self.name, req.cvec).hex()
            detail["protected"] = not self.misbehaviour.hiding_forfeited
        elif op.op == "put":
            req = Request("put", op.key, self.name, self.rseq, value=op.value)
        elif op.op == "acl":
            req = Request("acl", op.key, self.name, self.rseq, readers=tuple(op.readers))
        else:
            req = Request("get", op.key, self.name, self.rseq)
        if op.op == "put":
            detail["value"] = op.value
        if op.op == "acl":
            detail["readers"] = list(op.readers)
        self.note("invoke", **detail)
        env = self.seal(req)
        self.current = _InFlight(self.rseq, op, env, self.now, {}, {}, self.retry_timeout)
        for i, share in enumerate(shares, start=1):
            if i in self.misbehaviour.withhold:
                continue
            if i in self.misbehaviour.corrupt:
                e0 = dataclasses.replace(share.entries[0], value=(share.entries[0].value + 1) % Q)
                share = dataclasses.replace(share, entries=(e0,) + share.entries[1:])
            self.send(replica_name(i), PutShare(self.name, self.rseq, op.key, req.cvec, share))
        self.forward(replica_name(leader_of(self.view_guess, self.n)), env)
        self.set_timer(("retry", self.rseq), self.now + self.retry_timeout)

    def _deal(self, op: Operation):
        params = self.params
        poly = Polynomial.random(params.k - 1, self.rng, constant=op.value)
        if self.misbehaviour.bad_masks:
            offsets = {i: 1 for i in sorted(self.misbehaviour.bad_masks)}
            cvec, shares = deal_with_bad_masks(poly, params, self.dprf_keys, offsets, self.rng)
        else:
            cvec, shares = savss_share(poly, params, self.dprf_keys, self.rng)
        return Request("put", op.key, self.name, self.rseq, cvec=cvec), shares

    # ------------------------------------------------------------ replies

    def handle(self, env: Envelope) -> None:
        rep = env.body
        cur = self.current
        if not isinstance(rep, Reply) or cur is None or rep.client != self.name or rep.rseq != cur.rseq:
            return
        if env.sender != replica_name(rep.replica) or rep.replica in cur.replies:
            return
        self.view_guess = max(self.view_guess, rep.view)
        cur.replies[rep.replica] = rep
        result = self._outcome(cur, rep)
        if result is not None:
            self._finish(*result)

    def _outcome(self, cur: _InFlight, rep: Reply) -> tuple[str, Any] | None:
        if cur.op.op in ("put", "acl"):
            need = 2 * self.f + 1
            for kind in ("ack", "denied"):
                if sum(1 for r in cur.replies.values() if r.kind == kind) >= need:
                    return ("ok" if kind == "ack" else "denied", cur.op.value if kind == "ack" else None)
            return None
        need = self.f + 1
        if rep.kind == "value":
            params = self.dealers.get(rep.dealer)
            if params is None or rep.cvec is None or rep.share is None or rep.share.index != rep.replica:
                return None
            if not savss_verify(params, rep.cvec, rep.share):
                self.note("bad_reply", client=self.name, replica=rep.replica)
                return None
            sid = sharing_digest(rep.dealer, rep.cvec)
            group = cur.verified.setdefault(sid, {})
            group[rep.replica] = rep.share
            if len(group) >= need:
                poly = savss_reconstruct(params, rep.cvec, group)
                if poly is not None:
                    return ("ok", poly(0))
            return None
        same = [r for r in cur.replies.values() if r.kind == rep.kind and r.value == rep.value]
        if len(same) >= need:
            if rep.kind == "denied":
                return ("denied", None)
            return ("ok", rep.value)
        return None

    def _finish(self, status: str, value: Any) -> None:
        cur = self.current
        self.cancel_timer(("retry", cur.rseq))
        self.note(
            "complete",
            client=self.name,
            rseq=cur.rseq,
            op=cur.op.op,
            key=cur.op.key,
            status=status,
            value=value,
            latency=self.now - cur.started,
        )
        self.completed.append((cur.op, value))
        self.current = None
        self._schedule_next()
