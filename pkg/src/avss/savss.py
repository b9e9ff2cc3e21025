"""Secret sharing with DPRF-masked share recovery.

A sharing carries the secret polynomial in slot 0 and ``ell`` recovery
polynomials m_1..m_ell in slots 1..ell. Replica indices are split into groups
of k-1; m_j is pinned, at every index of group j, to the DPRF value of
(nonce, component, index). A replica that never got its share asks k peers
for (s + m_j)(i) plus a DPRF contribution on its own index, rebuilds
(s + m_j)(target) and strips the mask.

Pedersen shares are pairs, so the blinding polynomial of every slot is masked
the same way under DPRF component 1.

KZG dealt shares also carry g^{s(i)} with a Schnorr proof of knowledge. During
recovery those let the recovering replica interpolate a genuine witness for
s at its own index, so a recovered share verifies against c[0] directly and a
dealer whose masks disagree with the DPRF is caught on the spot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random
from typing import Mapping, Sequence

from . import dprf as _dprf
from .algebra import (
    G1_BYTES,
    Q,
    SCALAR_BYTES,
    Point,
    Polynomial,
    decode_scalar,
    default_rng,
    encode_scalar,
    hash_to_scalar,
    interpolate_at,
    lagrange_coefficients,
    lagrange_interpolate,
    multi_exp,
)
from .dprf import DprfContribution, DprfInput, DprfPrivateKey, DprfPublicKey
from .vss import (
    SHARE_BYTES,
    KzgCommitment,
    KzgParams,
    KzgShare,
    PedersenParams,
    PedersenShare,
    Scheme,
    VssCommitment,
    VssParams,
    VssShare,
    decode_commitment,
    decode_share,
    vss_init,
)

NONCE_BYTES = _dprf.NONCE_BYTES
OPENING_TAG = b"avss/opening-pok"


@dataclass(frozen=True)
class SavssParams:
    vss: VssParams
    dprf_pk: DprfPublicKey
    dealer_id: str = ""

    @property
    def scheme(self) -> Scheme:
        return self.vss.scheme

    @property
    def k(self) -> int:
        return self.vss.k

    @property
    def n(self) -> int:
        return self.vss.n

    @property
    def ell(self) -> int:
        return math.ceil(self.n / (self.k - 1))

    @property
    def components(self) -> int:
        return 2 if self.scheme is Scheme.PEDERSEN else 1

    def group_of(self, i: int) -> int:
        return math.ceil(i / (self.k - 1))

    def group_members(self, j: int) -> range:
        return range((j - 1) * (self.k - 1) + 1, min(j * (self.k - 1), self.n) + 1)


@dataclass(frozen=True)
class ShareOpening:
    """g^{s(i)} plus a Schnorr proof that the prover knows s(i)."""

    value_point: Point
    c: int
    z: int

    def to_bytes(self) -> bytes:
        return self.value_point.to_bytes() + encode_scalar(self.c) + encode_scalar(self.z)

    @classmethod
    def from_bytes(cls, data: bytes) -> ShareOpening:
        if len(data) != G1_BYTES + 2 * SCALAR_BYTES:
            raise ValueError("malformed opening")
        return cls(
            Point.from_bytes(data[:G1_BYTES]),
            decode_scalar(data[G1_BYTES : G1_BYTES + SCALAR_BYTES]),
            decode_scalar(data[G1_BYTES + SCALAR_BYTES :]),
        )


def _opening_challenge(c0: KzgCommitment, index: int, witness: Point, a: Point, r: Point) -> int:
    parts = [c0.to_bytes(), index.to_bytes(4, "big"), witness.to_bytes(), a.to_bytes(), r.to_bytes()]
    return hash_to_scalar(OPENING_TAG, parts)


def make_opening(g: Point, c0: KzgCommitment, share: KzgShare, rng: Random) -> ShareOpening:
    a = g * share.value
    rho = rng.randrange(Q)
    c = _opening_challenge(c0, share.index, share.witness, a, g * rho)
    return ShareOpening(a, c, (rho + c * share.value) % Q)


def check_opening(g: Point, c0: KzgCommitment, index: int, witness: Point, op: ShareOpening) -> bool:
    r = multi_exp([g, op.value_point], [op.z, -op.c % Q])
    return _opening_challenge(c0, index, witness, op.value_point, r) == op.c


@dataclass(frozen=True)
class CommitmentVec:
    entries: tuple[VssCommitment, ...]
    nonce: bytes

    def to_bytes(self) -> bytes:
        out = [self.nonce, len(self.entries).to_bytes(2, "big")]
        for c in self.entries:
            b = c.to_bytes()
            out.append(len(b).to_bytes(2, "big") + b)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> CommitmentVec:
        r = _Reader(data)
        nonce = r.take(NONCE_BYTES)
        count = r.u16()
        entries = []
        for _ in range(count):
            blob = r.take(r.u16())
            c, used = decode_commitment(blob)
            if used != len(blob):
                raise ValueError("trailing bytes in commitment")
            entries.append(c)
        r.done()
        return cls(tuple(entries), nonce)


@dataclass(frozen=True)
class RecoveryCertificate:
    """Evidence behind a recovered share.

    ``contribs[comp]`` holds k verifying DPRF contributions on the recovered
    index; ``blinded`` is (s + m_j) evaluated there (for KZG together with the
    interpolated witness against the combined commitment).
    """

    contribs: tuple[tuple[tuple[int, DprfContribution], ...], ...]
    blinded: VssShare

    def to_bytes(self) -> bytes:
        out = [bytes([len(self.contribs)])]
        for comp in self.contribs:
            out.append(bytes([len(comp)]))
            for i, con in comp:
                out.append(i.to_bytes(4, "big") + con.to_bytes())
        out.append(self.blinded.to_bytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> RecoveryCertificate:
        r = _Reader(data)
        comps = []
        for _ in range(r.u8()):
            items = []
            for _ in range(r.u8()):
                i = r.u32()
                items.append((i, DprfContribution.from_bytes(r.take(_dprf.WIRE_BYTES))))
            comps.append(tuple(items))
        blinded = decode_share(r.take(SHARE_BYTES))
        r.done()
        return cls(tuple(comps), blinded)


@dataclass(frozen=True)
class ShareVec:
    index: int
    entries: tuple[VssShare | None, ...]
    certificate: RecoveryCertificate | None = None
    opening: ShareOpening | None = None

    @property
    def is_recovered(self) -> bool:
        return self.certificate is not None

    @property
    def is_dealt(self) -> bool:
        return self.certificate is None and all(e is not None for e in self.entries)

    def to_bytes(self) -> bytes:
        out = [self.index.to_bytes(4, "big"), len(self.entries).to_bytes(2, "big")]
        for e in self.entries:
            out.append(_blob(e.to_bytes() if e is not None else b""))
        out.append(_blob(self.opening.to_bytes() if self.opening else b""))
        out.append(_blob(self.certificate.to_bytes() if self.certificate else b""))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> ShareVec:
        r = _Reader(data)
        index = r.u32()
        entries = []
        for _ in range(r.u16()):
            blob = r.take(r.u16())
            entries.append(decode_share(blob) if blob else None)
        op = r.take(r.u16())
        cert = r.take(r.u16())
        r.done()
        return cls(
            index,
            tuple(entries),
            RecoveryCertificate.from_bytes(cert) if cert else None,
            ShareOpening.from_bytes(op) if op else None,
        )


@dataclass(frozen=True)
class RecoveryShare:
    contributor: int
    target: int
    contribs: tuple[DprfContribution, ...]
    blinded: VssShare
    witness: Point | None = None  # KZG: contributor's own witness for s
    opening: ShareOpening | None = None

    def to_bytes(self) -> bytes:
        out = [
            self.contributor.to_bytes(4, "big"),
            self.target.to_bytes(4, "big"),
            bytes([len(self.contribs)]),
            *(c.to_bytes() for c in self.contribs),
            self.blinded.to_bytes(),
        ]
        if self.witness is not None and self.opening is not None:
            out.append(self.witness.to_bytes() + self.opening.to_bytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> RecoveryShare:
        r = _Reader(data)
        contributor, target = r.u32(), r.u32()
        contribs = tuple(DprfContribution.from_bytes(r.take(_dprf.WIRE_BYTES)) for _ in range(r.u8()))
        blinded = decode_share(r.take(SHARE_BYTES))
        witness = opening = None
        if r.remaining():
            witness = Point.from_bytes(r.take(G1_BYTES))
            opening = ShareOpening.from_bytes(r.take(G1_BYTES + 2 * SCALAR_BYTES))
        r.done()
        return cls(contributor, target, contribs, blinded, witness, opening)


@dataclass(frozen=True)
class DealerFaultEvidence:
    commitments: CommitmentVec
    target: int
    shares: tuple[RecoveryShare, ...]


class DealerFault(Exception):
    """Recovery succeeded arithmetically but the result contradicts c[0]."""

    def __init__(self, evidence: DealerFaultEvidence):
        super().__init__(f"dealer fault detected while recovering index {evidence.target}")
        self.evidence = evidence


def _blob(b: bytes) -> bytes:
    return len(b).to_bytes(2, "big") + b


class _Reader:
    def __init__(self, data: bytes):
        self.data = bytes(data)
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated encoding")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def done(self) -> None:
        if self.remaining():
            raise ValueError("trailing bytes")


# ------------------------------------------------------------------ operations


def savss_init(
    k: int,
    n: int,
    scheme: Scheme | str,
    rng: Random | None = None,
    dealer_id: str = "",
    kappa: int = 128,
    retain_trapdoor: bool = False,
) -> tuple[SavssParams, list[DprfPrivateKey]]:
    """Public parameters plus the n DPRF private keys (one per replica).

    The dealer keeps all private keys; replica i receives ``keys[i - 1]``.
    """
    if not 2 <= k <= n:
        raise ValueError(f"recovery needs 2 <= k <= n, got k={k}, n={n}")
    rng = rng or default_rng()
    vss = vss_init(k, n, scheme, rng, kappa, retain_trapdoor)
    keys = _dprf.dprf_init(k, n, rng)
    return SavssParams(vss, keys[0][0], dealer_id), [sk for _, sk in keys]


def _deal(
    s: Polynomial,
    params: SavssParams,
    dprf_sks: Sequence[DprfPrivateKey],
    rng: Random,
    mask_offsets: Mapping[int, int] | None = None,
) -> tuple[CommitmentVec, list[ShareVec]]:
    vss, n, k = params.vss, params.n, params.k
    if s.degree > k - 1:
        raise ValueError(f"polynomial degree {s.degree} exceeds k-1 = {k - 1}")
    nonce = rng.getrandbits(8 * NONCE_BYTES).to_bytes(NONCE_BYTES, "big")
    alpha = _dprf.master_secret(list(dprf_sks), k)
    ys = [
        {i: _dprf.dealer_eval(DprfInput(nonce, comp, i), alpha) for i in range(1, n + 1)}
        for comp in range(params.components)
    ]
    offsets = mask_offsets or {}

    def mask_poly(j: int, comp: int) -> Polynomial:
        members = params.group_members(j)
        pts = [(i, (ys[comp][i] + (offsets.get(i, 0) if comp == 0 else 0)) % Q) for i in members]
        pts += [(n + a, rng.randrange(Q)) for a in range(1, k - len(members))]
        return vss.make_poly(pts, rng)

    commitments: list[VssCommitment] = []
    columns: list[list[VssShare]] = []
    if isinstance(vss, PedersenParams):
        c, sh = vss.share(s, rng)
        commitments.append(c)
        columns.append(sh)
        for j in range(1, params.ell + 1):
            c, sh = vss.share(mask_poly(j, 0), rng, blinding=mask_poly(j, 1))
            commitments.append(c)
            columns.append(sh)
    else:
        assert isinstance(vss, KzgParams)
        for poly in [s] + [mask_poly(j, 0) for j in range(1, params.ell + 1)]:
            c, sh = vss.share(poly, rng)
            commitments.append(c)
            columns.append(sh)

    cvec = CommitmentVec(tuple(commitments), nonce)
    out = []
    for i in range(n):
        opening = None
        if isinstance(vss, KzgParams):
            opening = make_opening(vss.g, commitments[0], columns[0][i], rng)
        out.append(ShareVec(i + 1, tuple(col[i] for col in columns), None, opening))
    return cvec, out


def savss_share(
    s: Polynomial, params: SavssParams, dprf_sks: Sequence[DprfPrivateKey], rng: Random | None = None
) -> tuple[CommitmentVec, list[ShareVec]]:
    """Deal ``s``; the nonce travels inside the returned CommitmentVec."""
    return _deal(s, params, dprf_sks, rng or default_rng())


def deal_with_bad_masks(
    s: Polynomial,
    params: SavssParams,
    dprf_sks: Sequence[DprfPrivateKey],
    offsets: Mapping[int, int],
    rng: Random | None = None,
) -> tuple[CommitmentVec, list[ShareVec]]:
    """Fault injection: shift m_j(i) away from the DPRF value by offsets[i]."""
    return _deal(s, params, dprf_sks, rng or default_rng(), offsets)


def _shape_ok(params: SavssParams, cvec: CommitmentVec, share: ShareVec) -> bool:
    return (
        len(cvec.entries) == params.ell + 1
        and len(share.entries) == params.ell + 1
        and len(cvec.nonce) == NONCE_BYTES
        and 1 <= share.index <= params.n
        and share.entries[0] is not None
        and share.entries[0].index == share.index
    )


def savss_verify(params: SavssParams, cvec: CommitmentVec, share: ShareVec) -> bool:
    if not _shape_ok(params, cvec, share):
        return False
    vss = params.vss
    entry0 = share.entries[0]
    if not vss.verify(cvec.entries[0], entry0):
        return False
    if share.certificate is None:
        if not share.is_dealt:
            return False
        for j in range(1, params.ell + 1):
            e = share.entries[j]
            if e.index != share.index or not vss.verify(cvec.entries[j], e):
                return False
        if isinstance(vss, KzgParams):
            op = share.opening
            if op is None or op.value_point != vss.g * entry0.value:
                return False
            return check_opening(vss.g, cvec.entries[0], share.index, entry0.witness, op)
        return share.opening is None
    if any(e is not None for e in share.entries[1:]) or share.opening is not None:
        return False
    return _check_certificate(params, cvec, share.index, entry0, share.certificate)


def _check_certificate(
    params: SavssParams, cvec: CommitmentVec, target: int, entry0: VssShare, cert: RecoveryCertificate
) -> bool:
    if len(cert.contribs) != params.components or cert.blinded.index != target:
        return False
    ys = []
    for comp, items in enumerate(cert.contribs):
        contribs = dict(items)
        if len(contribs) != len(items):
            return False
        y = _dprf.dprf_eval(DprfInput(cvec.nonce, comp, target), contribs, params.dprf_pk, params.k, params.vss.table)
        if y is None:
            return False
        ys.append(y)
    j = params.group_of(target)
    combined = params.vss.combine_commitments(cvec.entries[0], cvec.entries[j])
    if not params.vss.verify(combined, cert.blinded):
        return False
    if entry0.value != (cert.blinded.value - ys[0]) % Q:
        return False
    if isinstance(entry0, PedersenShare):
        return entry0.blinding == (cert.blinded.blinding - ys[1]) % Q
    return True


def savss_reconstruct(
    params: SavssParams, cvec: CommitmentVec, shares: Mapping[int, ShareVec]
) -> Polynomial | None:
    if len(shares) < params.k:
        return None
    for i, sh in shares.items():
        if sh.index != i or not savss_verify(params, cvec, sh):
            return None
    chosen = sorted(shares)[: params.k]
    return lagrange_interpolate([(i, shares[i].entries[0].value) for i in chosen], params.vss.table)


def savss_recover_contrib(
    params: SavssParams,
    cvec: CommitmentVec,
    sk: DprfPrivateKey,
    share: ShareVec,
    target: int,
    rng: Random | None = None,
) -> RecoveryShare:
    if not share.is_dealt:
        raise ValueError("only a dealt share can help recover another")
    if not 1 <= target <= params.n or target == share.index:
        raise ValueError(f"bad recovery target {target}")
    if sk.index != share.index:
        raise ValueError("private key does not belong to this share")
    j = params.group_of(target)
    contribs = tuple(
        _dprf.dprf_contrib(sk, DprfInput(cvec.nonce, comp, target), params.dprf_pk, rng)
        for comp in range(params.components)
    )
    blinded = share.entries[0] + share.entries[j]
    if isinstance(params.vss, KzgParams):
        return RecoveryShare(share.index, target, contribs, blinded, share.entries[0].witness, share.opening)
    return RecoveryShare(share.index, target, contribs, blinded)


def savss_recover_verify(params: SavssParams, cvec: CommitmentVec, rs: RecoveryShare, target: int) -> bool:
    i = rs.contributor
    if rs.target != target or not 1 <= i <= params.n or i == target or not 1 <= target <= params.n:
        return False
    if len(rs.contribs) != params.components or rs.blinded.index != i:
        return False
    if len(cvec.entries) != params.ell + 1:
        return False
    for comp, con in enumerate(rs.contribs):
        if not _dprf.dprf_verify(params.dprf_pk, i, DprfInput(cvec.nonce, comp, target), con):
            return False
    vss = params.vss
    j = params.group_of(target)
    combined = vss.combine_commitments(cvec.entries[0], cvec.entries[j])
    if not vss.verify(combined, rs.blinded):
        return False
    if isinstance(vss, KzgParams):
        if rs.witness is None or rs.opening is None:
            return False
        c0 = cvec.entries[0]
        if not check_opening(vss.g, c0, i, rs.witness, rs.opening):
            return False
        return vss.verify_opening(c0, i, rs.opening.value_point, rs.witness)
    return rs.witness is None and rs.opening is None


def _assemble(
    params: SavssParams, cvec: CommitmentVec, chosen: Sequence[RecoveryShare], target: int
) -> ShareVec:
    """Rebuild the target's entry-0 share from k verified recovery shares."""
    vss = params.vss
    xs = [rs.contributor for rs in chosen]
    lams = lagrange_coefficients(xs, target, vss.table)
    ys = []
    for comp in range(params.components):
        deltas = {rs.contributor: rs.contribs[comp].delta for rs in chosen}
        ys.append(_dprf.output_of(_dprf.combine(deltas, params.k, vss.table)))
    b_val = sum(l * rs.blinded.value for l, rs in zip(lams, chosen)) % Q
    contribs = tuple(tuple((rs.contributor, rs.contribs[comp]) for rs in chosen) for comp in range(params.components))
    if isinstance(vss, PedersenParams):
        b_blind = sum(l * rs.blinded.blinding for l, rs in zip(lams, chosen)) % Q
        blinded: VssShare = PedersenShare(target, b_val, b_blind)
        entry0: VssShare = PedersenShare(target, (b_val - ys[0]) % Q, (b_blind - ys[1]) % Q)
    else:
        # witnesses lie on a polynomial of degree <= k-2 in the index
        w_blinded = multi_exp([rs.blinded.witness for rs in chosen], lams)
        w_secret = multi_exp([rs.witness for rs in chosen], lams)
        blinded = KzgShare(target, b_val, w_blinded)
        entry0 = KzgShare(target, (b_val - ys[0]) % Q, w_secret)
    cert = RecoveryCertificate(contribs, blinded)
    return ShareVec(target, (entry0,) + (None,) * params.ell, cert)


def savss_recover(
    params: SavssParams, cvec: CommitmentVec, shares: Mapping[int, RecoveryShare], target: int
) -> ShareVec | None:
    """None below k verifying recovery shares; raises DealerFault on a bad dealer."""
    chosen: list[RecoveryShare] = []
    for i in sorted(shares):
        rs = shares[i]
        if rs.contributor == i and savss_recover_verify(params, cvec, rs, target):
            chosen.append(rs)
            if len(chosen) == params.k:
                break
    if len(chosen) < params.k:
        return None
    out = _assemble(params, cvec, chosen, target)
    if not savss_verify(params, cvec, out):
        raise DealerFault(DealerFaultEvidence(cvec, target, tuple(chosen)))
    return out


def verify_fault_evidence(params: SavssParams, ev: DealerFaultEvidence) -> bool:
    """True iff the evidence consists of k verifying recovery shares whose
    honest combination contradicts the dealer's commitment."""
    if len(ev.shares) != params.k or len({rs.contributor for rs in ev.shares}) != params.k:
        return False
    if not all(savss_recover_verify(params, ev.commitments, rs, ev.target) for rs in ev.shares):
        return False
    rebuilt = _assemble(params, ev.commitments, sorted(ev.shares, key=lambda r: r.contributor), ev.target)
    return not savss_verify(params, ev.commitments, rebuilt)


def savss_expose_dealer(
    params: SavssParams, evidence: DealerFaultEvidence, revealed: Mapping[int, VssShare]
) -> Polynomial | None:
    """Rebuild a faulty dealer's secret polynomial from revealed entry-0 shares.

    Raises ValueError for invalid evidence; returns None while fewer than k
    revealed shares verify against c[0].
    """
    if not verify_fault_evidence(params, evidence):
        raise ValueError("dealer-fault evidence rejected")
    c0 = evidence.commitments.entries[0]
    good = {i: sh for i, sh in sorted(revealed.items()) if sh.index == i and params.vss.verify(c0, sh)}
    if len(good) < params.k:
        return None
    return params.vss.reconstruct(c0, dict(list(good.items())[: params.k]))


def share_bytes(cvec: CommitmentVec, share: ShareVec) -> int:
    """Per-replica storage for one sharing: its ShareVec plus the CommitmentVec."""
    return len(cvec.to_bytes()) + len(share.to_bytes())


def blinded_value_at(params: SavssParams, shares: Sequence[RecoveryShare], x: int) -> int:
    return interpolate_at([(rs.contributor, rs.blinded.value) for rs in shares], x, params.vss.table)
