"""Replica of the private key-value store.

Ordering is three-phase (pre-prepare, prepare, commit) with per-sequence
prepared certificates, a bounded window above the last stable checkpoint,
view change and state transfer. Each PUT is stored as a public half
(CommitmentVec) that every replica sees and a private half (this replica's
ShareVec) that arrives directly from the client. A replica that lacks its
share holds back its prepare and recovers the share from its peers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Any

from ..dprf import DprfPrivateKey
from ..savss import (
    CommitmentVec,
    DealerFault,
    RecoveryShare,
    SavssParams,
    ShareVec,
    savss_expose_dealer,
    savss_recover,
    savss_recover_contrib,
    savss_recover_verify,
    savss_verify,
    verify_fault_evidence,
)
from .costs import CostModel
from .messages import (
    Checkpoint,
    Commit,
    CommittedEntry,
    Envelope,
    Expose,
    FaultNotice,
    NewView,
    PrePrepare,
    Prepare,
    PreparedCert,
    PutShare,
    RecoveryRequest,
    RecoveryResponse,
    Reply,
    Request,
    StateRequest,
    StateResponse,
    ViewChange,
    check,
    replica_name,
    request_digest,
    sharing_digest,
)
from .node import Node
from .signing import KeyRing, Signer
from .store import (
    GENESIS_DIGEST,
    RESERVED_PREFIX,
    AclEntry,
    ClientEntry,
    PublicEntry,
    acl_key,
    client_key,
    store_digest,
)


@dataclass
class ReplicaConfig:
    n: int
    f: int
    window: int = 128
    checkpoint_period: int = 64
    delta: int = 10
    recovery_delay: int | None = None  # default: two round trips
    vc_timeout: int = 3000
    state_timeout: int = 400
    sharing: bool = True

    def __post_init__(self):
        if self.n < 3 * self.f + 1:
            raise ValueError(f"n={self.n} cannot tolerate f={self.f}")
        if not 0 < self.checkpoint_period <= self.window:
            raise ValueError("checkpoint period must be in 1..window")
        if self.recovery_delay is None:
            self.recovery_delay = 4 * self.delta

    @property
    def quorum(self) -> int:
        return 2 * self.f + 1


@dataclass
class LogEntry:
    seq: int
    view: int
    request: Envelope | None
    digest: bytes
    status: str = "pre-prepared"
    cert: PreparedCert | None = None
    sent_prepare: bool = False
    sent_commit: bool = False


@dataclass
class RecoverySession:
    dealer: str
    started: int
    responses: dict[int, RecoveryShare] = field(default_factory=dict)


def leader_of(view: int, n: int) -> int:
    return view % n + 1


class Replica(Node):
    def __init__(
        self,
        index: int,
        config: ReplicaConfig,
        signer: Signer,
        keys: KeyRing,
        dealers: dict[str, SavssParams],
        dprf_keys: dict[str, DprfPrivateKey],
        costs: CostModel | None = None,
        rng: Random | None = None,
    ):
        super().__init__(replica_name(index), signer, keys, costs)
        self.index = index
        self.cfg = config
        self.n, self.f = config.n, config.f
        self.dealers = dealers
        self.dprf_keys = dprf_keys
        self.rng = rng or Random(index)

        self.view = 0
        self.status = "normal"
        self.vc_attempt = 0
        self.last_executed = 0
        self.next_seq = 0
        self.log: dict[int, LogEntry] = {}
        self.prepares: dict[tuple[int, int, bytes], dict[int, Envelope]] = {}
        self.commits: dict[tuple[int, int, bytes], dict[int, Envelope]] = {}
        self.committed: dict[int, CommittedEntry] = {}
        self.best_cert: dict[int, PreparedCert] = {}
        self.evidence: dict[tuple[int, int], list[Envelope]] = {}

        self.public: dict[str, PublicEntry | AclEntry | ClientEntry] = {}
        self.private: dict[str, bytes | None] = {}  # key -> sharing id of the current value
        self.sharings: dict[bytes, tuple[str, CommitmentVec]] = {}
        self.held: dict[bytes, ShareVec] = {}
        self.exposed: dict[bytes, int] = {}

        self.stable_seq = 0
        self.stable_digest = GENESIS_DIGEST
        self.stable_proof: tuple[Envelope, ...] = ()
        self.snapshots: dict[int, tuple[dict, bytes]] = {0: ({}, GENESIS_DIGEST)}
        self.ckpt_votes: dict[tuple[int, bytes], dict[int, Envelope]] = {}
        self.behind: tuple[int, bytes, tuple[Envelope, ...]] | None = None
        self.st_attempt = 0

        self.pending: dict[tuple[str, int], tuple[Envelope, int]] = {}
        self.forwarded: set[tuple[str, int]] = set()
        self.proposed: set[bytes] = set()
        self.backlog: list[Envelope] = []
        self.replies: dict[tuple[str, int], Envelope | None] = {}
        self.deferred: dict[bytes, list[tuple[str, int, str]]] = {}
        self.waiting: dict[bytes, set[int]] = {}

        self.recovering: dict[bytes, RecoverySession] = {}
        self.contrib_waiting: dict[bytes, set[int]] = {}
        self.contrib_cache: dict[tuple[bytes, int], Envelope] = {}
        self.fault_evidence: dict[bytes, Any] = {}
        self.exposures: dict[bytes, dict[int, Any]] = {}
        self.exposed_sent: set[bytes] = set()

        self.early: list[Envelope] = []  # pre-prepares for a view not yet entered
        self.vcs: dict[int, dict[int, Envelope]] = {}
        self.newview_sent: set[int] = set()
        self.max_pending = 0

    # ------------------------------------------------------------ helpers

    @property
    def leader(self) -> int:
        return leader_of(self.view, self.n)

    @property
    def is_leader(self) -> bool:
        return self.leader == self.index and self.status == "normal"

    def peers(self) -> list[str]:
        return [replica_name(i) for i in range(1, self.n + 1)]

    def others(self) -> list[str]:
        return [replica_name(i) for i in range(1, self.n + 1) if i != self.index]

    def pending_log_length(self) -> int:
        return sum(1 for s in self.log if s > self.last_executed)

    def public_digest(self) -> bytes:
        return store_digest(self.public)

    def _params(self, dealer: str) -> SavssParams | None:
        return self.dealers.get(dealer)

    def _sharing_of(self, req: Request) -> bytes:
        return sharing_digest(req.client, req.cvec)

    def _share_ready(self, env: Envelope | None) -> bool:
        if env is None or not self.cfg.sharing:
            return True
        req = env.body
        if req.op != "put":
            return True
        sid = self._sharing_of(req)
        return sid in self.held or sid in self.exposed

    def _valid_request(self, env: Envelope) -> bool:
        req = env.body
        if not isinstance(req, Request) or env.sender != req.client:
            return False
        if req.op == "put":
            if req.key.startswith(RESERVED_PREFIX):
                return False
            if not self.cfg.sharing:
                return req.value is not None and req.cvec is None
            params = self._params(req.client)
            return (
                params is not None
                and req.cvec is not None
                and len(req.cvec.entries) == params.ell + 1
            )
        if req.op == "acl":
            return not req.key.startswith(RESERVED_PREFIX)
        return req.op == "get"

    def _executed(self, req: Request) -> bool:
        entry = self.public.get(client_key(req.client))
        return entry is not None and req.rseq <= entry.last_rseq

    def _track(self, env: Envelope) -> None:
        req = env.body
        key = (req.client, req.rseq)
        if key in self.pending or self._executed(req):
            return
        self.pending[key] = (env, self.now)
        if req.op == "put" and self.cfg.sharing:
            self.sharings.setdefault(self._sharing_of(req), (req.client, req.cvec))
        self._arm_vc_timer()

    def _arm_vc_timer(self) -> None:
        if self.pending and self.status == "normal" and not self.has_timer(("vc",)):
            oldest = min(t for _, t in self.pending.values())
            self.set_timer(("vc",), max(self.now, oldest + self.cfg.vc_timeout))

    # ------------------------------------------------------------ dispatch

    def handle(self, env: Envelope) -> None:
        body = env.body
        if isinstance(body, Request):
            self.on_request(env)
            return
        if isinstance(body, PutShare):
            if env.sender == body.client:
                self.on_put_share(body)
            return
        sender_idx = getattr(body, "replica", None)
        if sender_idx is None:
            if isinstance(body, PrePrepare):
                sender_idx = leader_of(body.view, self.n)
            else:
                return
        if env.sender != replica_name(sender_idx):
            return
        handler = {
            PrePrepare: self.on_preprepare,
            Prepare: self.on_prepare,
            Commit: self.on_commit,
            Checkpoint: self.on_checkpoint,
            ViewChange: self.on_view_change,
            NewView: self.on_new_view,
            RecoveryRequest: self.on_recovery_request,
            RecoveryResponse: self.on_recovery_response,
            FaultNotice: self.on_fault_notice,
            Expose: self.on_expose,
            StateRequest: self.on_state_request,
            StateResponse: self.on_state_response,
        }.get(type(body))
        if handler is not None:
            handler(env)

    def on_timer(self, tag: tuple) -> None:
        kind = tag[0]
        if kind == "vc":
            self._on_vc_timer()
        elif kind == "newview":
            if self.status == "view-change" and self.view == tag[1]:
                self.start_view_change(self.view + 1)
        elif kind == "recover":
            self._on_recover_timer(tag[1])
        elif kind == "state":
            self._on_state_timer()

    # ------------------------------------------------------------ client requests

    def on_request(self, env: Envelope) -> None:
        req: Request = env.body
        key = (req.client, req.rseq)
        if self._executed(req):
            cached = self.replies.get(key)
            if cached is not None:
                self.forward(req.client, cached)
            return
        if not self._valid_request(env):
            return
        self._track(env)
        if self.is_leader:
            self.propose(env)
        elif key not in self.forwarded and self.status == "normal":
            self.forwarded.add(key)
            self.forward(replica_name(self.leader), env)

    def on_put_share(self, msg: PutShare) -> None:
        params = self._params(msg.client)
        if params is None or not self.cfg.sharing:
            return
        sid = sharing_digest(msg.client, msg.cvec)
        if sid in self.held:
            return
        self.charge(self.costs.dealt_verify(params.scheme, params.k, params.ell))
        if msg.share.index != self.index or not savss_verify(params, msg.cvec, msg.share):
            self.note("bad_share", replica=self.index, client=msg.client, rseq=msg.rseq)
            return
        self.sharings.setdefault(sid, (msg.client, msg.cvec))
        self.held[sid] = msg.share
        self._share_available(sid)

    # ------------------------------------------------------------ ordering

    def propose(self, env: Envelope) -> None:
        d = request_digest(env)
        if d in self.proposed:
            return
        if self.next_seq + 1 > self.stable_seq + self.cfg.window:
            if all(request_digest(e) != d for e in self.backlog):
                self.backlog.append(env)
            return
        self.proposed.add(d)
        self.next_seq += 1
        self.send_preprepare(self.next_seq, env)

    def send_preprepare(self, seq: int, env: Envelope | None) -> None:
        self.multicast(self.peers(), PrePrepare(self.view, seq, env))

    def _drain_backlog(self) -> None:
        if not self.is_leader:
            return
        backlog, self.backlog = self.backlog, []
        for env in backlog:
            if not self._executed(env.body):
                self.propose(env)

    def on_preprepare(self, env: Envelope) -> None:
        pp: PrePrepare = env.body
        if pp.view > self.view or (pp.view == self.view and self.status != "normal"):
            if len(self.early) < 2 * self.cfg.window:
                self.early.append(env)
            return
        if pp.view != self.view:
            return
        if not self.stable_seq < pp.seq <= self.stable_seq + self.cfg.window:
            self.note("window_reject", replica=self.index, seq=pp.seq)
            return
        d = request_digest(pp.request)
        existing = self.log.get(pp.seq)
        if existing is not None and existing.view == pp.view:
            if existing.digest != d:
                self.evidence.setdefault((pp.view, pp.seq), []).append(env)
                self.note("equivocation", replica=self.index, view=pp.view, seq=pp.seq)
                self.start_view_change(self.view + 1)
            return
        if pp.request is not None:
            self.charge(self.costs.verify_sig)
            if not check(self.keys, pp.request) or not self._valid_request(pp.request):
                return
            self._track(pp.request)
        entry = LogEntry(pp.seq, pp.view, pp.request, d)
        self.log[pp.seq] = entry
        self.max_pending = max(self.max_pending, self.pending_log_length())
        self._maybe_prepare(entry)

    def _maybe_prepare(self, entry: LogEntry) -> None:
        if entry.sent_prepare:
            return
        if not self._share_ready(entry.request):
            sid = self._sharing_of(entry.request.body)
            self.waiting.setdefault(sid, set()).add(entry.seq)
            self._schedule_recovery(sid, entry.request.body.client)
            return
        entry.sent_prepare = True
        self.multicast(self.peers(), Prepare(entry.view, entry.seq, entry.digest, self.index))
        self._check_prepared(entry.view, entry.seq, entry.digest)

    def on_prepare(self, env: Envelope) -> None:
        p: Prepare = env.body
        if p.seq <= self.stable_seq:
            return
        votes = self.prepares.setdefault((p.view, p.seq, p.rdigest), {})
        votes.setdefault(p.replica, env)
        entry = self.log.get(p.seq)
        if entry is not None and entry.view == p.view and entry.digest != p.rdigest and len(votes) == self.f + 1:
            # f+1 prepares for another request: the leader sent conflicting proposals
            self.evidence.setdefault((p.view, p.seq), []).extend(votes.values())
            self.note("equivocation", replica=self.index, view=p.view, seq=p.seq)
            if p.view == self.view and self.status == "normal":
                self.start_view_change(self.view + 1)
            return
        self._check_prepared(p.view, p.seq, p.rdigest)

    def _check_prepared(self, view: int, seq: int, digest: bytes) -> None:
        entry = self.log.get(seq)
        if entry is None or entry.view != view or entry.digest != digest:
            return
        votes = self.prepares.get((view, seq, digest), {})
        if entry.cert is None and len(votes) >= self.cfg.quorum:
            chosen = tuple(votes[i] for i in sorted(votes)[: self.cfg.quorum])
            entry.cert = PreparedCert(view, seq, entry.request, chosen)
            if entry.status == "pre-prepared":
                entry.status = "prepared"
            best = self.best_cert.get(seq)
            if best is None or best.view < view:
                self.best_cert[seq] = entry.cert
        if entry.cert is not None and entry.sent_prepare and not entry.sent_commit:
            entry.sent_commit = True
            self.multicast(self.peers(), Commit(view, seq, digest, self.index, entry.request))

    def on_commit(self, env: Envelope) -> None:
        c: Commit = env.body
        if c.seq <= self.last_executed or c.seq in self.committed:
            return
        key = (c.view, c.seq, c.rdigest)
        votes = self.commits.setdefault(key, {})
        if votes and c.replica in votes:
            return
        if request_digest(c.request) != c.rdigest:
            return
        votes[c.replica] = env
        if len(votes) >= self.cfg.quorum:
            if c.request is not None and not self._valid_request(c.request):
                return
            proof = tuple(votes[i] for i in sorted(votes)[: self.cfg.quorum])
            self._mark_committed(CommittedEntry(c.seq, c.request, proof), c.rdigest)

    def _mark_committed(self, ce: CommittedEntry, digest: bytes) -> None:
        self.committed[ce.seq] = ce
        entry = self.log.get(ce.seq)
        if entry is not None and entry.digest == digest:
            entry.status = "committed"
        self.note("commit", replica=self.index, seq=ce.seq, digest=digest.hex())
        self._try_execute()

    def _try_execute(self) -> None:
        while self.last_executed + 1 in self.committed:
            seq = self.last_executed + 1
            ce = self.committed[seq]
            self.execute(seq, ce.request)
            self.last_executed = seq
            entry = self.log.get(seq)
            if entry is not None:
                entry.status = "executed"
            self.note("execute", replica=self.index, seq=seq, digest=request_digest(ce.request).hex())
            if seq % self.cfg.checkpoint_period == 0:
                self._take_checkpoint(seq)
        if self.behind is not None and self.behind[0] <= self.last_executed:
            self.behind = None

    # ------------------------------------------------------------ execution

    def execute(self, seq: int, env: Envelope | None) -> None:
        self._progress()
        if env is None:
            return
        req: Request = env.body
        rkey = (req.client, req.rseq)
        if self._executed(req):
            return
        self.pending.pop(rkey, None)
        self.proposed.discard(request_digest(env))
        self.public[client_key(req.client)] = ClientEntry(req.rseq, seq)
        current = self.public.get(req.key)
        if req.op == "put":
            if current is not None and current.owner != req.client:
                self._reply(req, "denied")
                return
            owner = current.owner if current is not None else req.client
            self.public[req.key] = PublicEntry(owner, req.client, req.rseq, seq, req.cvec, req.value)
            if not self.cfg.sharing:
                self._reply(req, "ack")
                return
            sid = self._sharing_of(req)
            self.sharings.setdefault(sid, (req.client, req.cvec))
            self.private[req.key] = sid
            if sid in self.held or sid in self.exposed:
                self._reply(req, "ack")
            else:
                self.deferred.setdefault(sid, []).append((req.client, req.rseq, "ack"))
                self._schedule_recovery(sid, req.client)
        elif req.op == "acl":
            if current is None or current.owner != req.client:
                self._reply(req, "denied")
                return
            self.public[acl_key(req.key)] = AclEntry(tuple(sorted(set(req.readers))), seq)
            self._reply(req, "ack")
        else:
            self._execute_get(req)

    def _execute_get(self, req: Request) -> None:
        current = self.public.get(req.key)
        if current is None:
            self._reply(req, "none")
            return
        acl = self.public.get(acl_key(req.key))
        allowed = req.client == current.owner or (acl is not None and req.client in acl.readers)
        if not allowed:
            self._reply(req, "denied")
            return
        if not self.cfg.sharing:
            self._reply(req, "plain", value=current.value)
            return
        sid = self.private.get(req.key) or sharing_digest(current.writer, current.cvec)
        if sid in self.exposed:
            self._reply(req, "exposed", value=self.exposed[sid])
        elif sid in self.held:
            self._reply(req, "value", dealer=current.writer, cvec=current.cvec, share=self.held[sid])
        else:
            self.deferred.setdefault(sid, []).append((req.client, req.rseq, "get"))
            self._schedule_recovery(sid, current.writer)

    def _reply(self, req: Request, kind: str, **fields: Any) -> None:
        env = self.seal(self.make_reply(req.client, req.rseq, kind, **fields))
        self.replies[(req.client, req.rseq)] = env
        self.forward(req.client, env)

    def make_reply(self, client: str, rseq: int, kind: str, **fields: Any) -> Reply:
        return Reply(self.view, client, rseq, self.index, kind, **fields)

    def _progress(self) -> None:
        self.vc_attempt = 0
        for key, (env, _) in list(self.pending.items()):
            self.pending[key] = (env, self.now)

    def _on_vc_timer(self) -> None:
        if self.status != "normal" or not self.pending:
            return
        oldest = min(t for _, t in self.pending.values())
        if self.now - oldest >= self.cfg.vc_timeout:
            self.note("timeout", replica=self.index, view=self.view)
            self.start_view_change(self.view + 1)
        else:
            self.set_timer(("vc",), oldest + self.cfg.vc_timeout)

    # ------------------------------------------------------------ shares and recovery

    def _share_available(self, sid: bytes) -> None:
        self.recovering.pop(sid, None)
        self.cancel_timer(("recover", sid))
        for client, rseq, kind in self.deferred.pop(sid, []):
            req = Request(kind, "", client, rseq)
            if kind == "ack":
                self._reply(req, "ack")
            elif sid in self.exposed:
                self._reply(req, "exposed", value=self.exposed[sid])
            else:
                dealer, cvec = self.sharings[sid]
                self._reply(req, "value", dealer=dealer, cvec=cvec, share=self.held[sid])
        for seq in sorted(self.waiting.pop(sid, ())):
            entry = self.log.get(seq)
            if entry is not None and entry.view == self.view and self.status == "normal":
                self._maybe_prepare(entry)
        if sid in self.held and self.held[sid].is_dealt:
            for target in sorted(self.contrib_waiting.pop(sid, ())):
                self._contribute(sid, target)

    def _schedule_recovery(self, sid: bytes, dealer: str) -> None:
        if sid in self.held or sid in self.exposed or sid in self.recovering:
            return
        if sid in self.fault_evidence:
            return
        self.recovering[sid] = RecoverySession(dealer, self.now)
        self.set_timer(("recover", sid), self.now + self.cfg.recovery_delay)

    def _on_recover_timer(self, sid: bytes) -> None:
        session = self.recovering.get(sid)
        if session is None or sid in self.held or sid in self.exposed:
            return
        self.note("recover_start", replica=self.index, sharing=sid.hex())
        self.multicast(self.others(), RecoveryRequest(self.index, session.dealer, sid))
        self.set_timer(("recover", sid), self.now + 20 * self.cfg.delta)

    def on_recovery_request(self, env: Envelope) -> None:
        rr: RecoveryRequest = env.body
        target = rr.replica
        if target == self.index or not 1 <= target <= self.n:
            return
        share = self.held.get(rr.sharing)
        if share is None or not share.is_dealt:
            self.contrib_waiting.setdefault(rr.sharing, set()).add(target)
            return
        self._contribute(rr.sharing, target)

    def _contribute(self, sid: bytes, target: int) -> None:
        cached = self.contrib_cache.get((sid, target))
        if cached is not None:
            self.forward(replica_name(target), cached)
            return
        dealer, cvec = self.sharings[sid]
        params = self._params(dealer)
        sk = self.dprf_keys.get(dealer)
        if params is None or sk is None:
            return
        self.charge(self.costs.recover_contrib(params.scheme))
        rs = self.make_recovery_share(params, cvec, sk, self.held[sid], target)
        env = self.send(replica_name(target), RecoveryResponse(self.index, target, dealer, sid, rs))
        self.contrib_cache[(sid, target)] = env

    def make_recovery_share(
        self, params: SavssParams, cvec: CommitmentVec, sk: DprfPrivateKey, share: ShareVec, target: int
    ) -> RecoveryShare:
        return savss_recover_contrib(params, cvec, sk, share, target, self.rng)

    def on_recovery_response(self, env: Envelope) -> None:
        msg: RecoveryResponse = env.body
        session = self.recovering.get(msg.sharing)
        if session is None or msg.target != self.index or msg.share.contributor != msg.replica:
            return
        if msg.replica in session.responses or msg.sharing not in self.sharings:
            return
        dealer, cvec = self.sharings[msg.sharing]
        params = self._params(dealer)
        self.charge(self.costs.recover_verify(params.scheme, params.k))
        if not savss_recover_verify(params, cvec, msg.share, self.index):
            self.note("bad_recovery_share", replica=self.index, contributor=msg.replica)
            return
        session.responses[msg.replica] = msg.share
        if len(session.responses) < params.k:
            return
        self.charge(self.costs.recover(params.scheme, params.k))
        try:
            share = savss_recover(params, cvec, session.responses, self.index)
        except DealerFault as fault:
            self.note("dealer_fault", replica=self.index, sharing=msg.sharing.hex(), dealer=dealer)
            self.recovering.pop(msg.sharing, None)
            self.cancel_timer(("recover", msg.sharing))
            self.fault_evidence[msg.sharing] = fault.evidence
            self.multicast(self.peers(), FaultNotice(self.index, dealer, msg.sharing, fault.evidence))
            return
        if share is None:
            return
        self.held[msg.sharing] = share
        self.note("recovered", replica=self.index, sharing=msg.sharing.hex())
        self._share_available(msg.sharing)

    def on_fault_notice(self, env: Envelope) -> None:
        msg: FaultNotice = env.body
        sid = msg.sharing
        params = self._params(msg.dealer)
        if params is None or sid in self.exposed:
            return
        if msg.replica != self.index:
            if sid in self.fault_evidence and sid in self.exposed_sent:
                return
            dealer_cvec = self.sharings.get(sid)
            if dealer_cvec is not None and dealer_cvec[1] != msg.evidence.commitments:
                return
            if dealer_cvec is None and sharing_digest(msg.dealer, msg.evidence.commitments) != sid:
                return
            self.charge(params.k * self.costs.recover_verify(params.scheme, params.k))
            if not verify_fault_evidence(params, msg.evidence):
                return
            self.fault_evidence.setdefault(sid, msg.evidence)
            self.sharings.setdefault(sid, (msg.dealer, msg.evidence.commitments))
        share = self.held.get(sid)
        if share is not None and share.is_dealt and sid not in self.exposed_sent:
            self.exposed_sent.add(sid)
            self.multicast(self.peers(), Expose(self.index, msg.dealer, sid, share.entries[0]))
        self._try_expose(sid)

    def on_expose(self, env: Envelope) -> None:
        msg: Expose = env.body
        self.exposures.setdefault(msg.sharing, {}).setdefault(msg.replica, msg.share)
        self._try_expose(msg.sharing)

    def _try_expose(self, sid: bytes) -> None:
        ev = self.fault_evidence.get(sid)
        revealed = self.exposures.get(sid, {})
        if ev is None or sid in self.exposed or sid not in self.sharings:
            return
        dealer, _ = self.sharings[sid]
        params = self._params(dealer)
        if len(revealed) < params.k:
            return
        self.charge(len(revealed) * self.costs.vss_verify(params.scheme, params.k))
        poly = savss_expose_dealer(params, ev, revealed)
        if poly is None:
            return
        self.exposed[sid] = poly(0)
        self.note("exposed", replica=self.index, sharing=sid.hex(), dealer=dealer, value=poly(0))
        self._share_available(sid)

    # ------------------------------------------------------------ checkpoints

    def _take_checkpoint(self, seq: int) -> None:
        d = self.public_digest()
        self.snapshots[seq] = (dict(self.public), d)
        self.multicast(self.peers(), Checkpoint(seq, d, self.index))

    def on_checkpoint(self, env: Envelope) -> None:
        cp: Checkpoint = env.body
        if cp.seq <= self.stable_seq:
            return
        votes = self.ckpt_votes.setdefault((cp.seq, cp.sdigest), {})
        votes.setdefault(cp.replica, env)
        if len(votes) < self.cfg.quorum:
            return
        proof = tuple(votes[i] for i in sorted(votes)[: self.cfg.quorum])
        mine = self.snapshots.get(cp.seq)
        if mine is not None and mine[1] == cp.sdigest:
            self._make_stable(cp.seq, cp.sdigest, proof)
        elif cp.seq > self.last_executed:
            if self.behind is None or self.behind[0] < cp.seq:
                self.behind = (cp.seq, cp.sdigest, proof)
            self.note("lagging", replica=self.index, seq=cp.seq, executed=self.last_executed)
            self.request_state()
        else:
            self.note("digest_mismatch", replica=self.index, seq=cp.seq)
            self.behind = (cp.seq, cp.sdigest, proof)
            self.request_state()

    def _make_stable(self, seq: int, digest: bytes, proof: tuple[Envelope, ...]) -> None:
        if seq <= self.stable_seq:
            return
        self.stable_seq, self.stable_digest, self.stable_proof = seq, digest, proof
        self.note("stable", replica=self.index, seq=seq, digest=digest.hex())
        for s in [s for s in self.log if s <= seq]:
            del self.log[s]
        for table in (self.prepares, self.commits):
            for key in [k for k in table if k[1] <= seq]:
                del table[key]
        for s in [s for s in self.committed if s <= seq]:
            del self.committed[s]
        for s in [s for s in self.best_cert if s <= seq]:
            del self.best_cert[s]
        for s in [s for s in self.snapshots if s < seq]:
            del self.snapshots[s]
        for key in [k for k in self.ckpt_votes if k[0] <= seq]:
            del self.ckpt_votes[key]
        self.next_seq = max(self.next_seq, seq)
        self._drain_backlog()

    def _valid_checkpoint_proof(self, seq: int, digest: bytes, proof: tuple[Envelope, ...]) -> bool:
        if seq == 0:
            return digest == GENESIS_DIGEST
        senders = set()
        for env in proof:
            cp = env.body
            if not isinstance(cp, Checkpoint) or cp.seq != seq or cp.sdigest != digest:
                return False
            if env.sender != replica_name(cp.replica):
                return False
            self.charge(self.costs.verify_sig)
            if not check(self.keys, env):
                return False
            senders.add(cp.replica)
        return len(senders) >= self.cfg.quorum

    # ------------------------------------------------------------ view change

    def start_view_change(self, new_view: int) -> None:
        if new_view <= self.view:
            return
        self.view = new_view
        self.status = "view-change"
        self.cancel_timer(("vc",))
        timeout = self.cfg.vc_timeout * (2 ** min(self.vc_attempt, 5))
        self.vc_attempt += 1
        self.set_timer(("newview", new_view), self.now + timeout)
        certs = tuple(self.best_cert[s] for s in sorted(self.best_cert) if s > self.stable_seq)
        self.note("view_change", replica=self.index, view=new_view)
        self.multicast(
            self.peers(),
            ViewChange(new_view, self.index, self.stable_seq, self.stable_digest, self.stable_proof, certs),
        )

    def _valid_cert(self, cert: PreparedCert) -> bool:
        d = request_digest(cert.request)
        senders = set()
        for env in cert.prepares:
            p = env.body
            if not isinstance(p, Prepare) or (p.view, p.seq, p.rdigest) != (cert.view, cert.seq, d):
                return False
            if env.sender != replica_name(p.replica):
                return False
            self.charge(self.costs.verify_sig)
            if not check(self.keys, env):
                return False
            senders.add(p.replica)
        if cert.request is not None:
            self.charge(self.costs.verify_sig)
            if not check(self.keys, cert.request) or not self._valid_request(cert.request):
                return False
        return len(senders) >= self.cfg.quorum

    def _valid_view_change(self, env: Envelope, view: int) -> bool:
        vc = env.body
        if not isinstance(vc, ViewChange) or vc.view != view or env.sender != replica_name(vc.replica):
            return False
        if not self._valid_checkpoint_proof(vc.stable_seq, vc.stable_digest, vc.stable_proof):
            return False
        seqs = set()
        for cert in vc.prepared:
            if not vc.stable_seq < cert.seq <= vc.stable_seq + self.cfg.window or cert.seq in seqs:
                return False
            if cert.view >= view or not self._valid_cert(cert):
                return False
            seqs.add(cert.seq)
        return True

    def on_view_change(self, env: Envelope) -> None:
        vc: ViewChange = env.body
        if vc.view < self.view or (vc.view == self.view and self.status == "normal"):
            return
        if vc.replica in self.vcs.get(vc.view, {}):
            return
        if vc.replica != self.index and not self._valid_view_change(env, vc.view):
            return
        self.vcs.setdefault(vc.view, {})[vc.replica] = env
        higher: dict[int, int] = {}
        for v in sorted(self.vcs):
            if v > self.view:
                for r in self.vcs[v]:
                    higher.setdefault(r, v)
        if len(higher) >= self.f + 1:
            # f+1 replicas moved on, at least one of them honest: join them
            self.start_view_change(min(higher.values()))
        self._maybe_new_view()

    def build_new_view_log(self, proofs: tuple[Envelope, ...]) -> tuple[tuple[int, Envelope | None], ...]:
        return compute_new_view_log(proofs)

    def _maybe_new_view(self) -> None:
        v = self.view
        if self.status != "view-change" or leader_of(v, self.n) != self.index or v in self.newview_sent:
            return
        msgs = self.vcs.get(v, {})
        if len(msgs) < self.cfg.quorum:
            return
        proofs = tuple(msgs[i] for i in sorted(msgs)[: self.cfg.quorum])
        self.newview_sent.add(v)
        self.multicast(self.peers(), NewView(v, self.index, proofs, self.build_new_view_log(proofs)))

    def on_new_view(self, env: Envelope) -> None:
        nv: NewView = env.body
        if nv.replica != leader_of(nv.view, self.n):
            return
        if nv.view < self.view or (nv.view == self.view and self.status == "normal"):
            return
        if not self._valid_new_view(nv):
            self.note("newview_rejected", replica=self.index, view=nv.view)
            if nv.view >= self.view:
                self.start_view_change(nv.view + 1)
            return
        self._enter_view(nv)

    def _valid_new_view(self, nv: NewView) -> bool:
        senders = set()
        for env in nv.proofs:
            if env.body.replica in senders:
                return False
            if env.body.replica != self.index or env.sender != self.name:
                self.charge(self.costs.verify_sig)
                if not check(self.keys, env) or not self._valid_view_change(env, nv.view):
                    return False
            senders.add(env.body.replica)
        if len(senders) < self.cfg.quorum:
            return False
        return compute_new_view_log(nv.proofs) == nv.log

    def _enter_view(self, nv: NewView) -> None:
        self.view = nv.view
        self.status = "normal"
        self.cancel_timer(("newview", nv.view))
        self.note("new_view", replica=self.index, view=nv.view)
        best = max((e.body for e in nv.proofs), key=lambda vc: vc.stable_seq)
        if best.stable_seq > self.last_executed:
            if self.behind is None or self.behind[0] < best.stable_seq:
                self.behind = (best.stable_seq, best.stable_digest, best.stable_proof)
            self.request_state()
        elif best.stable_seq > self.stable_seq:
            snap = self.snapshots.get(best.stable_seq)
            if snap is not None and snap[1] == best.stable_digest:
                self._make_stable(best.stable_seq, best.stable_digest, best.stable_proof)
        self.log = {}
        self.proposed = set()
        self.forwarded = set()
        top = max([best.stable_seq] + [s for s, _ in nv.log])
        self.next_seq = max(top, self.stable_seq)
        for key, (env, _) in list(self.pending.items()):
            self.pending[key] = (env, self.now)
        for seq, req in nv.log:
            if req is not None:
                self._track(req)
            entry = LogEntry(seq, nv.view, req, request_digest(req))
            self.log[seq] = entry
            if self.leader == self.index:
                self.proposed.add(entry.digest)
            self._maybe_prepare(entry)
            self._check_prepared(entry.view, entry.seq, entry.digest)
        early, self.early = self.early, []
        for env in early:
            if env.body.view >= nv.view:
                self.on_preprepare(env)
        self._arm_vc_timer()
        if self.leader == self.index:
            for env, _ in sorted(self.pending.values(), key=lambda p: (p[0].body.client, p[0].body.rseq)):
                if request_digest(env) not in self.proposed:
                    self.propose(env)
        else:
            for env, _ in list(self.pending.values()):
                self.forward(replica_name(self.leader), env)

    # ------------------------------------------------------------ state transfer

    def restart(self, now: int) -> None:
        """Called by the host after a crash-recovery outage."""
        self.now = max(self.now, now)
        self.note("restart", replica=self.index)
        self.st_attempt = 0
        # request ages from before the outage say nothing about the leader now
        self.cancel_timer(("vc",))
        self._progress()
        self._arm_vc_timer()
        self.request_state(force=True)

    def request_state(self, force: bool = False) -> None:
        if self.has_timer(("state",)) and not force:
            return
        others = [i for i in range(1, self.n + 1) if i != self.index]
        start = (self.index + self.st_attempt * (self.f + 1)) % len(others)
        targets = [others[(start + j) % len(others)] for j in range(self.f + 1)]
        self.note("state_request", replica=self.index, from_seq=self.last_executed, peers=targets)
        self.multicast([replica_name(i) for i in targets], StateRequest(self.index, self.last_executed))
        self.set_timer(("state",), self.now + self.cfg.state_timeout)

    def _on_state_timer(self) -> None:
        if self.behind is not None and self.behind[0] > self.last_executed:
            self.st_attempt += 1
            self.request_state()

    def on_state_request(self, env: Envelope) -> None:
        sr: StateRequest = env.body
        snap = self.snapshots.get(self.stable_seq)
        delta: tuple = ()
        if snap is not None and sr.from_seq < self.stable_seq:
            public, _ = snap
            delta = tuple(
                (k, public[k]) for k in sorted(public) if public[k].mod_seq > sr.from_seq
            )
        committed = tuple(self.committed[s] for s in sorted(self.committed) if s > max(self.stable_seq, sr.from_seq))
        self.send(
            replica_name(sr.replica),
            StateResponse(self.index, self.stable_seq, self.stable_digest, self.stable_proof, delta, committed),
        )

    def _valid_commit_proof(self, ce: CommittedEntry) -> bool:
        d = request_digest(ce.request)
        senders = set()
        views = set()
        for env in ce.commits:
            c = env.body
            if not isinstance(c, Commit) or c.seq != ce.seq or c.rdigest != d:
                return False
            if env.sender != replica_name(c.replica):
                return False
            self.charge(self.costs.verify_sig)
            if not check(self.keys, env):
                return False
            senders.add(c.replica)
            views.add(c.view)
        return len(senders) >= self.cfg.quorum and len(views) == 1

    def on_state_response(self, env: Envelope) -> None:
        resp: StateResponse = env.body
        if resp.ckpt_seq > self.last_executed:
            if not self._valid_checkpoint_proof(resp.ckpt_seq, resp.ckpt_digest, resp.proof):
                self.note("state_rejected", replica=self.index, peer=resp.replica)
                return
            public = dict(self.public)
            for key, entry in resp.delta:
                public[key] = entry
            if store_digest(public) != resp.ckpt_digest:
                self.note("state_rejected", replica=self.index, peer=resp.replica)
                return
            self.public = public
            self.last_executed = resp.ckpt_seq
            self.snapshots[resp.ckpt_seq] = (dict(public), resp.ckpt_digest)
            self._make_stable(resp.ckpt_seq, resp.ckpt_digest, resp.proof)
            self._progress()
            self.pending = {k: v for k, v in self.pending.items() if not self._executed(v[0].body)}
            for key, entry in resp.delta:
                self._install_transferred(key, entry)
            self.note(
                "state_installed", replica=self.index, seq=resp.ckpt_seq, keys=[k for k, _ in resp.delta]
            )
        for ce in resp.committed:
            if ce.seq <= self.last_executed or ce.seq in self.committed:
                continue
            if self._valid_commit_proof(ce):
                self._mark_committed(ce, request_digest(ce.request))
        if self.behind is not None and self.behind[0] <= self.last_executed:
            self.behind = None
            self.cancel_timer(("state",))

    def _install_transferred(self, key: str, entry: PublicEntry | AclEntry) -> None:
        if not isinstance(entry, PublicEntry) or not self.cfg.sharing or entry.cvec is None:
            return
        sid = sharing_digest(entry.writer, entry.cvec)
        self.sharings.setdefault(sid, (entry.writer, entry.cvec))
        self.private[key] = sid
        if sid not in self.held and sid not in self.exposed:
            self._schedule_recovery(sid, entry.writer)


def compute_new_view_log(proofs: tuple[Envelope, ...]) -> tuple[tuple[int, Envelope | None], ...]:
    """Leader log for a new view: per sequence above the highest stable
    checkpoint, the request of the highest-view prepared certificate, or a
    null request where no certificate exists."""
    vcs = [e.body for e in proofs]
    low = max(vc.stable_seq for vc in vcs)
    best: dict[int, PreparedCert] = {}
    for vc in vcs:
        for cert in vc.prepared:
            if cert.seq > low and (cert.seq not in best or best[cert.seq].view < cert.view):
                best[cert.seq] = cert
    high = max(best, default=low)
    return tuple((s, best[s].request if s in best else None) for s in range(low + 1, high + 1))
