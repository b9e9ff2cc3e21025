"""Polynomial-commitment VSS: Pedersen coefficient commitments and KZG.

Both schemes share one interface (``share``, ``verify``, ``reconstruct``,
``make_poly``, ``combine_commitments``) and are additively homomorphic:
summing shares index-wise verifies against the combined commitment.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from random import Random
from typing import Mapping, Sequence, Union

from .algebra import (
    G1_BYTES,
    Q,
    SCALAR_BYTES,
    G2Point,
    GtElement,
    InterpolationTable,
    Point,
    Polynomial,
    decode_scalar,
    default_rng,
    encode_scalar,
    hash_to_group,
    lagrange_interpolate,
    multi_exp,
    pairing,
    poly_div_linear,
)


class Scheme(enum.Enum):
    PEDERSEN = "ped"
    KZG = "kzg"

    @property
    def tag(self) -> int:
        return 0x50 if self is Scheme.PEDERSEN else 0x4B

    @classmethod
    def parse(cls, name: str | Scheme) -> Scheme:
        if isinstance(name, Scheme):
            return name
        key = name.lower()
        for s in cls:
            if key in (s.value, s.name.lower()):
                return s
        raise ValueError(f"unknown scheme {name!r}")


@dataclass(frozen=True)
class PedersenCommitment:
    points: tuple[Point, ...]

    def to_bytes(self) -> bytes:
        body = b"".join(p.to_bytes() for p in self.points)
        return bytes([Scheme.PEDERSEN.tag]) + len(self.points).to_bytes(2, "big") + body


@dataclass(frozen=True)
class KzgCommitment:
    point: Point

    def to_bytes(self) -> bytes:
        return bytes([Scheme.KZG.tag]) + self.point.to_bytes()


@dataclass(frozen=True)
class PedersenShare:
    index: int
    value: int
    blinding: int

    def __add__(self, other: PedersenShare) -> PedersenShare:
        if self.index != other.index:
            raise ValueError("cannot add shares at different indices")
        return PedersenShare(self.index, (self.value + other.value) % Q, (self.blinding + other.blinding) % Q)

    def to_bytes(self) -> bytes:
        return (
            bytes([Scheme.PEDERSEN.tag])
            + self.index.to_bytes(4, "big")
            + encode_scalar(self.value)
            + encode_scalar(self.blinding)
        )


@dataclass(frozen=True)
class KzgShare:
    index: int
    value: int
    witness: Point

    def __add__(self, other: KzgShare) -> KzgShare:
        if self.index != other.index:
            raise ValueError("cannot add shares at different indices")
        return KzgShare(self.index, (self.value + other.value) % Q, self.witness + other.witness)

    def to_bytes(self) -> bytes:
        return (
            bytes([Scheme.KZG.tag])
            + self.index.to_bytes(4, "big")
            + encode_scalar(self.value)
            + self.witness.to_bytes()
        )


VssCommitment = Union[PedersenCommitment, KzgCommitment]
VssShare = Union[PedersenShare, KzgShare]

SHARE_BYTES = 1 + 4 + 2 * SCALAR_BYTES  # both schemes: tag, index, two 32-byte fields


def decode_commitment(data: bytes) -> tuple[VssCommitment, int]:
    """Parse one commitment from the front of ``data``; returns (commitment, bytes used)."""
    if not data:
        raise ValueError("empty commitment encoding")
    if data[0] == Scheme.KZG.tag:
        end = 1 + G1_BYTES
        if len(data) < end:
            raise ValueError("truncated commitment")
        return KzgCommitment(Point.from_bytes(data[1:end])), end
    if data[0] == Scheme.PEDERSEN.tag:
        if len(data) < 3:
            raise ValueError("truncated commitment")
        count = int.from_bytes(data[1:3], "big")
        end = 3 + count * G1_BYTES
        if count == 0 or len(data) < end:
            raise ValueError("truncated commitment")
        pts = tuple(Point.from_bytes(data[3 + j * G1_BYTES : 3 + (j + 1) * G1_BYTES]) for j in range(count))
        return PedersenCommitment(pts), end
    raise ValueError("unknown commitment tag")


def decode_share(data: bytes) -> VssShare:
    if len(data) != SHARE_BYTES:
        raise ValueError("malformed share encoding")
    index = int.from_bytes(data[1:5], "big")
    value = decode_scalar(data[5 : 5 + SCALAR_BYTES])
    rest = data[5 + SCALAR_BYTES :]
    if data[0] == Scheme.PEDERSEN.tag:
        return PedersenShare(index, value, decode_scalar(rest))
    if data[0] == Scheme.KZG.tag:
        return KzgShare(index, value, Point.from_bytes(rest))
    raise ValueError("unknown share tag")


class VssParams:
    """Common behaviour of both schemes; subclasses supply the commitment math."""

    scheme: Scheme
    k: int
    n: int
    q: int = Q

    def __init__(self, k: int, n: int, g: Point):
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
        self.k = k
        self.n = n
        self.g = g
        # indices 0..n plus room for padding anchors above n
        self.table = InterpolationTable.for_range(n + k)

    def _check_degree(self, s: Polynomial) -> None:
        if s.degree > self.k - 1:
            raise ValueError(f"polynomial degree {s.degree} exceeds k-1 = {self.k - 1}")

    def make_poly(self, points: Sequence[tuple[int, int]], rng: Random | None = None) -> Polynomial:
        """Random degree <= k-1 polynomial through ``points`` (exactly k-1 of them)."""
        pts = list(points)
        if len(pts) != self.k - 1:
            raise ValueError(f"need exactly k-1 = {self.k - 1} points, got {len(pts)}")
        if any(x % Q == 0 for x, _ in pts):
            raise ValueError("x = 0 is reserved for the secret")
        anchor = (0, (rng or default_rng()).randrange(Q))
        return lagrange_interpolate(pts + [anchor], self.table)

    def reconstruct(self, c: VssCommitment, shares: Mapping[int, VssShare]) -> Polynomial | None:
        if len(shares) < self.k:
            return None
        for i, sh in shares.items():
            if sh.index != i or not self.verify(c, sh):
                return None
        chosen = sorted(shares)[: self.k]
        return lagrange_interpolate([(i, shares[i].value) for i in chosen], self.table)

    def share(self, s: Polynomial, rng: Random | None = None):
        raise NotImplementedError

    def verify(self, c: VssCommitment, share: VssShare) -> bool:
        raise NotImplementedError

    def combine_commitments(self, a: VssCommitment, b: VssCommitment) -> VssCommitment:
        raise NotImplementedError


class PedersenParams(VssParams):
    scheme = Scheme.PEDERSEN

    def __init__(self, k: int, n: int, g: Point | None = None):
        super().__init__(k, n, g or Point.generator())
        self.h = hash_to_group(b"pedersen-h", self.g.to_bytes())

    def commit(self, s: Polynomial, t: Polynomial) -> PedersenCommitment:
        sc = list(s.coeffs) + [0] * (self.k - len(s.coeffs))
        tc = list(t.coeffs) + [0] * (self.k - len(t.coeffs))
        return PedersenCommitment(tuple(multi_exp([self.g, self.h], [a, b]) for a, b in zip(sc, tc)))

    def share(
        self, s: Polynomial, rng: Random | None = None, blinding: Polynomial | None = None
    ) -> tuple[PedersenCommitment, list[PedersenShare]]:
        """``blinding`` pins the second polynomial; fresh random when omitted."""
        self._check_degree(s)
        t = blinding if blinding is not None else Polynomial.random(self.k - 1, rng or default_rng())
        self._check_degree(t)
        shares = [PedersenShare(i, s(i), t(i)) for i in range(1, self.n + 1)]
        return self.commit(s, t), shares

    def verify(self, c: VssCommitment, share: VssShare) -> bool:
        if not isinstance(c, PedersenCommitment) or not isinstance(share, PedersenShare):
            return False
        if len(c.points) != self.k or not 1 <= share.index < Q:
            return False
        powers = [pow(share.index, j, Q) for j in range(self.k)]
        # g^v h^t == prod C_j^(i^j), checked as a single multi-exponentiation
        total = multi_exp(list(c.points) + [self.g, self.h], powers + [-share.value % Q, -share.blinding % Q])
        return total.is_identity()

    def reconstruct_pair(
        self, c: VssCommitment, shares: Mapping[int, PedersenShare]
    ) -> tuple[Polynomial, Polynomial] | None:
        value = self.reconstruct(c, shares)
        if value is None:
            return None
        chosen = sorted(shares)[: self.k]
        return value, lagrange_interpolate([(i, shares[i].blinding) for i in chosen], self.table)

    def combine_commitments(self, a: VssCommitment, b: VssCommitment) -> PedersenCommitment:
        if not isinstance(a, PedersenCommitment) or not isinstance(b, PedersenCommitment):
            raise TypeError("scheme mismatch")
        if len(a.points) != len(b.points):
            raise ValueError("commitment length mismatch")
        return PedersenCommitment(tuple(x + y for x, y in zip(a.points, b.points)))


class KzgParams(VssParams):
    scheme = Scheme.KZG

    def __init__(self, k: int, n: int, rng: Random | None = None, retain_trapdoor: bool = False):
        super().__init__(k, n, Point.generator())
        tau = (rng or default_rng()).randrange(1, Q)
        self.g2 = G2Point.generator()
        self.powers: tuple[Point, ...] = tuple(self.g * pow(tau, j, Q) for j in range(k))
        self.g2_tau = self.g2 * tau
        self.e_gg: GtElement = pairing(self.g, self.g2)
        # g2^(tau - i) for every replica index
        self.shifts: dict[int, G2Point] = {i: self.g2_tau - self.g2 * i for i in range(1, n + 1)}
        # production setups forget tau; tests may keep it as an oracle
        self.tau: int | None = tau if retain_trapdoor else None

    def _shift(self, i: int) -> G2Point:
        got = self.shifts.get(i)
        return got if got is not None else self.g2_tau - self.g2 * i

    def commit(self, s: Polynomial) -> KzgCommitment:
        self._check_degree(s)
        return KzgCommitment(multi_exp(self.powers[: len(s.coeffs)], s.coeffs))

    def witness(self, s: Polynomial, i: int) -> Point:
        if s.degree < 1:
            return Point.identity()
        quotient, _ = poly_div_linear(s, i)
        return multi_exp(self.powers[: len(quotient.coeffs)], quotient.coeffs)

    def share(self, s: Polynomial, rng: Random | None = None) -> tuple[KzgCommitment, list[KzgShare]]:
        c = self.commit(s)
        return c, [KzgShare(i, s(i), self.witness(s, i)) for i in range(1, self.n + 1)]

    def verify(self, c: VssCommitment, share: VssShare) -> bool:
        if not isinstance(c, KzgCommitment) or not isinstance(share, KzgShare):
            return False
        if not 1 <= share.index < Q:
            return False
        lhs = pairing(c.point, self.g2)
        rhs = pairing(share.witness, self._shift(share.index)) * (self.e_gg**share.value)
        return lhs == rhs

    def verify_opening(self, c: KzgCommitment, index: int, value_point: Point, witness: Point) -> bool:
        """Check e(c / g^v, g2) == e(w, g2^(tau-i)) when only g^v is known."""
        return pairing(c.point - value_point, self.g2) == pairing(witness, self._shift(index))

    def combine_commitments(self, a: VssCommitment, b: VssCommitment) -> KzgCommitment:
        if not isinstance(a, KzgCommitment) or not isinstance(b, KzgCommitment):
            raise TypeError("scheme mismatch")
        return KzgCommitment(a.point + b.point)


def vss_init(
    k: int,
    n: int,
    scheme: Scheme | str,
    rng: Random | None = None,
    kappa: int = 128,
    retain_trapdoor: bool = False,
) -> VssParams:
    if kappa > 254:
        raise ValueError("the BN254 group supports at most 254-bit security parameters")
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.PEDERSEN:
        return PedersenParams(k, n)
    return KzgParams(k, n, rng, retain_trapdoor)


def vss_share(s: Polynomial, params: VssParams, rng: Random | None = None):
    return params.share(s, rng)


def vss_verify(params: VssParams, c: VssCommitment, share: VssShare) -> bool:
    return params.verify(c, share)


def vss_reconstruct(c: VssCommitment, shares: Mapping[int, VssShare], params: VssParams) -> Polynomial | None:
    return params.reconstruct(c, shares)


def vss_make_poly(points: Sequence[tuple[int, int]], params: VssParams, rng: Random | None = None) -> Polynomial:
    return params.make_poly(points, rng)


def vss_combine_commitments(params: VssParams, a: VssCommitment, b: VssCommitment) -> VssCommitment:
    return params.combine_commitments(a, b)
