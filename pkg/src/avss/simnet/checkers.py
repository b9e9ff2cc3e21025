"""Correctness checkers over simulation traces."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..kvstore.messages import Expose, PutShare, RecoveryResponse, replica_name, sharing_digest
from ..savss import DealerFault, ShareVec, savss_reconstruct, savss_recover, savss_recover_verify, savss_verify
from .engine import Trace

INF = float("inf")


@dataclass
class Verdict:
    ok: bool
    message: str = ""
    witness: list[Any] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


# ------------------------------------------------------------------ linearizability


@dataclass(frozen=True)
class RegisterOp:
    client: str
    rseq: int
    kind: str  # put | get
    value: int | None
    invoked: float
    returned: float


def history(trace: Trace) -> dict[str, list[RegisterOp]]:
    """Client-visible register operations per key; denied and ACL ops are
    not register operations and are left out."""
    invokes: dict[tuple[str, int], tuple[int, dict]] = {}
    done: dict[tuple[str, int], tuple[int, dict]] = {}
    for t, kind, _, d in trace.events:
        if kind == "invoke":
            invokes[(d["client"], d["rseq"])] = (t, d)
        elif kind == "complete":
            done[(d["client"], d["rseq"])] = (t, d)
    out: dict[str, list[RegisterOp]] = {}
    for key, (t, d) in invokes.items():
        if d["op"] not in ("put", "get"):
            continue
        fin = done.get(key)
        if fin is not None and fin[1]["status"] != "ok":
            continue
        if fin is None and d["op"] == "get":
            continue  # a read that never returned constrains nothing
        value = d.get("value") if d["op"] == "put" else fin[1]["value"]
        out.setdefault(d["key"], []).append(
            RegisterOp(d["client"], d["rseq"], d["op"], value, t, fin[0] if fin else INF)
        )
    return out


def _linearizable(ops: list[RegisterOp]) -> bool:
    """Wing-Gong search with memoisation on (linearized set, register value).

    Puts that never returned may take effect at any point after their
    invocation, or not at all.
    """
    ops = sorted(ops, key=lambda o: o.invoked)
    count = len(ops)
    required = 0
    for i, o in enumerate(ops):
        if o.returned != INF:
            required |= 1 << i
    seen: set[tuple[int, Any]] = set()
    stack: list[tuple[int, Any]] = [(0, None)]
    while stack:
        done, value = stack.pop()
        if done & required == required:
            return True
        if (done, value) in seen:
            continue
        seen.add((done, value))
        horizon = min(ops[i].returned for i in range(count) if not done >> i & 1)
        for i in range(count):
            if done >> i & 1:
                continue
            o = ops[i]
            if o.invoked > horizon:
                break
            if o.kind == "get":
                if o.value == value:
                    stack.append((done | 1 << i, value))
            else:
                stack.append((done | 1 << i, o.value))
    return False


def check_linearizability(trace: Trace) -> Verdict:
    for key, ops in sorted(history(trace).items()):
        if not _linearizable(ops):
            return Verdict(False, f"key {key!r} is not linearizable", sorted(ops, key=lambda o: o.invoked))
    return Verdict(True)


# ------------------------------------------------------------------ privacy


def check_privacy(trace: Trace, corrupt: set[int]) -> Verdict:
    """Assemble what the corrupt replicas saw and make sure no protected value
    is reconstructible from it."""
    if len(corrupt) > trace.f:
        raise ValueError(f"at most f={trace.f} corrupt replicas")
    protected: dict[bytes, str] = {}
    for _, kind, _, d in trace.events:
        if kind == "invoke" and d.get("sharing") and d.get("protected"):
            protected[bytes.fromhex(d["sharing"])] = d["client"]
    names = {replica_name(i) for i in corrupt}
    dealt: dict[bytes, dict[int, ShareVec]] = {}
    cvecs: dict[bytes, Any] = {}
    recovery: dict[tuple[bytes, int], dict[int, Any]] = {}
    exposed: dict[bytes, dict[int, Any]] = {}
    for _, src, dst, env in trace.adversary_view(corrupt):
        body = env.body
        if isinstance(body, PutShare):
            sid = sharing_digest(body.client, body.cvec)
            if sid in protected and dst in names:
                cvecs[sid] = body.cvec
                dealt.setdefault(sid, {})[body.share.index] = body.share
        elif isinstance(body, RecoveryResponse) and body.sharing in protected:
            recovery.setdefault((body.sharing, body.target), {})[body.share.contributor] = body.share
        elif isinstance(body, Expose) and body.sharing in protected:
            exposed.setdefault(body.sharing, {})[body.replica] = body.share
    for sid, dealer in protected.items():
        params = trace.dealers[dealer]
        cvec = cvecs.get(sid)
        if cvec is None:
            cvec = next((rs_cvec for rs_cvec in _cvec_from_trace(trace, sid)), None)
        if cvec is None:
            continue
        view: dict[int, ShareVec] = {i: s for i, s in dealt.get(sid, {}).items() if savss_verify(params, cvec, s)}
        for (rsid, target), contribs in recovery.items():
            if rsid != sid or target in view:
                continue
            good = {i: rs for i, rs in contribs.items() if savss_recover_verify(params, cvec, rs, target)}
            if len(good) >= params.k:
                try:
                    rec = savss_recover(params, cvec, good, target)
                except DealerFault:
                    rec = None
                if rec is not None:
                    view[target] = rec
        points = set(view)
        c0 = cvec.entries[0]
        points |= {i for i, s in exposed.get(sid, {}).items() if params.vss.verify(c0, s)}
        if len(points) >= params.k:
            return Verdict(False, f"{len(points)} verifying shares of a protected value leak", [sid.hex(), sorted(points)])
        if savss_reconstruct(params, cvec, view) is not None:
            return Verdict(False, "adversary view reconstructs a protected value", [sid.hex()])
    return Verdict(True)


def _cvec_from_trace(trace: Trace, sid: bytes):
    for _, _, _, env in trace.deliveries:
        body = env.body
        cvec = getattr(body, "cvec", None)
        client = getattr(body, "client", None)
        if cvec is not None and client is not None and sharing_digest(client, cvec) == sid:
            yield cvec


# ------------------------------------------------------------------ safety, liveness, window


def check_safety(trace: Trace) -> Verdict:
    """One request per sequence number across honest replicas, and equal
    public stores among the honest replicas that are up at the end."""
    honest = {replica_name(i) for i in range(1, trace.n + 1) if i not in trace.faulty}
    decided: dict[int, str] = {}
    for _, kind, node, d in trace.events:
        if kind == "execute" and node in honest:
            prior = decided.setdefault(d["seq"], d["digest"])
            if prior != d["digest"]:
                return Verdict(False, f"sequence {d['seq']} executed two different requests", [prior, d["digest"]])
    live = {r: v for r, v in trace.final.items() if r in honest and not v["crashed"]}
    digests = {v["digest"] for v in live.values()}
    heights = {v["last_executed"] for v in live.values()}
    if len(digests) > 1 or len(heights) > 1:
        return Verdict(False, "honest replicas ended with different public stores", sorted(live.items()))
    return Verdict(True)


def check_liveness(trace: Trace) -> Verdict:
    invoked = {(d["client"], d["rseq"]) for _, k, _, d in trace.events if k == "invoke"}
    completed = {(d["client"], d["rseq"]) for _, k, _, d in trace.events if k == "complete"}
    missing = sorted(invoked - completed)
    if missing:
        return Verdict(False, f"{len(missing)} requests never completed", missing)
    return Verdict(True)


def check_window(trace: Trace) -> Verdict:
    over = {r: v["max_pending"] for r, v in trace.final.items() if v["max_pending"] > trace.window}
    if over:
        return Verdict(False, "pending log exceeded the window", sorted(over.items()))
    return Verdict(True)
