"""Replica variants that deviate from the protocol on command."""
from __future__ import annotations

import dataclasses

from ..algebra import Q
from ..kvstore.messages import Envelope, PrePrepare, Reply
from ..kvstore.replica import Replica, compute_new_view_log


class ByzantineReplica(Replica):
    equivocate = False  # as leader, propose different requests to two halves
    omit_newview = False  # as new leader, drop a committed request from the new log
    garbage = False  # answer reads and recovery requests with tampered data

    def send_preprepare(self, seq: int, env: Envelope | None) -> None:
        if not self.equivocate:
            super().send_preprepare(seq, env)
            return
        peers = self.peers()
        half = (len(peers) + 1) // 2
        self.multicast(peers[:half], PrePrepare(self.view, seq, env))
        self.multicast(peers[half:], PrePrepare(self.view, seq, None))

    def build_new_view_log(self, proofs):
        log = compute_new_view_log(proofs)
        if not self.omit_newview:
            return log
        for pos, (seq, req) in enumerate(log):
            if req is not None:
                return log[:pos] + ((seq, None),) + log[pos + 1 :]
        return log

    def make_reply(self, client: str, rseq: int, kind: str, **fields) -> Reply:
        if self.garbage and kind == "value":
            share = fields["share"]
            e0 = share.entries[0]
            tampered = dataclasses.replace(e0, value=(e0.value + 1) % Q)
            fields["share"] = dataclasses.replace(share, entries=(tampered,) + share.entries[1:])
        return super().make_reply(client, rseq, kind, **fields)

    def make_recovery_share(self, params, cvec, sk, share, target):
        rs = super().make_recovery_share(params, cvec, sk, share, target)
        if not self.garbage:
            return rs
        return dataclasses.replace(rs, blinded=dataclasses.replace(rs.blinded, value=(rs.blinded.value + 1) % Q))
