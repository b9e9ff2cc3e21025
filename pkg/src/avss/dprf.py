"""Threshold PRF x -> hash(H(x)^alpha) with Shamir-shared alpha.

Each key holder contributes H(x)^alpha_i together with a Chaum-Pedersen
proof that the same exponent sits behind its public key g^alpha_i. Any k
verifying contributions are combined by interpolation in the exponent.
"""
from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Mapping

from .algebra import (
    G1_BYTES,
    Q,
    SCALAR_BYTES,
    InterpolationTable,
    Point,
    Polynomial,
    SystemParams,
    decode_scalar,
    default_rng,
    encode_scalar,
    hash_to_group,
    hash_to_scalar,
    interpolate_in_exponent,
    lagrange_coefficients,
    random_scalar,
)

INPUT_TAG = 0x01
NONCE_BYTES = 16
H_TAG = b"avss/dprf/H"
OUT_TAG = b"avss/dprf/out"
DLEQ_TAG = b"avss/dprf/dleq"


@dataclass(frozen=True)
class DprfInput:
    nonce: bytes
    component: int
    index: int

    def __post_init__(self):
        if len(self.nonce) != NONCE_BYTES:
            raise ValueError(f"nonce must be {NONCE_BYTES} bytes")
        if not 0 <= self.component < 1 << 16:
            raise ValueError("component out of range")
        if not 0 <= self.index < 1 << 32:
            raise ValueError("index out of range")

    def to_bytes(self) -> bytes:
        return (
            bytes([INPUT_TAG])
            + self.nonce
            + self.component.to_bytes(2, "big")
            + self.index.to_bytes(4, "big")
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> DprfInput:
        if len(data) != 1 + NONCE_BYTES + 6 or data[0] != INPUT_TAG:
            raise ValueError("malformed DPRF input")
        return cls(
            data[1 : 1 + NONCE_BYTES],
            int.from_bytes(data[1 + NONCE_BYTES : 3 + NONCE_BYTES], "big"),
            int.from_bytes(data[3 + NONCE_BYTES :], "big"),
        )

    def base(self) -> Point:
        return hash_to_group(H_TAG, self.to_bytes())


@dataclass(frozen=True)
class DprfPublicKey:
    g: Point
    g_alpha: Point
    g_alpha_i: tuple[Point, ...]

    @property
    def n(self) -> int:
        return len(self.g_alpha_i)

    def share_key(self, i: int) -> Point:
        if not 1 <= i <= self.n:
            raise ValueError(f"index {i} outside 1..{self.n}")
        return self.g_alpha_i[i - 1]


@dataclass(frozen=True)
class DprfPrivateKey:
    index: int
    alpha_i: int


@dataclass(frozen=True)
class DprfContribution:
    delta: Point
    c: int
    z: int

    def to_bytes(self) -> bytes:
        return self.delta.to_bytes() + encode_scalar(self.c) + encode_scalar(self.z)

    @classmethod
    def from_bytes(cls, data: bytes) -> DprfContribution:
        if len(data) != G1_BYTES + 2 * SCALAR_BYTES:
            raise ValueError("malformed DPRF contribution")
        return cls(
            Point.from_bytes(data[:G1_BYTES]),
            decode_scalar(data[G1_BYTES : G1_BYTES + SCALAR_BYTES]),
            decode_scalar(data[G1_BYTES + SCALAR_BYTES :]),
        )


WIRE_BYTES = G1_BYTES + 2 * SCALAR_BYTES


def dprf_init(
    k: int, n: int, rng: Random | None = None, params: SystemParams | None = None
) -> list[tuple[DprfPublicKey, DprfPrivateKey]]:
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    params = params or SystemParams()
    rng = rng or default_rng()
    poly = Polynomial.random(k - 1, rng)
    g = params.g
    alphas = [poly(i) for i in range(1, n + 1)]
    pk = DprfPublicKey(g, g * poly.coeffs[0], tuple(g * a for a in alphas))
    return [(pk, DprfPrivateKey(i, a)) for i, a in enumerate(alphas, start=1)]


def _challenge(h: Point, g: Point, delta: Point, g_ai: Point, a1: Point, a2: Point) -> int:
    return hash_to_scalar(DLEQ_TAG, [p.to_bytes() for p in (h, g, delta, g_ai, a1, a2)])


def dprf_contrib(
    sk: DprfPrivateKey,
    x: DprfInput,
    pk: DprfPublicKey,
    rng: Random | None = None,
    base: Point | None = None,
) -> DprfContribution:
    h = base or x.base()
    delta = h * sk.alpha_i
    r = random_scalar(rng)
    c = _challenge(h, pk.g, delta, pk.share_key(sk.index), h * r, pk.g * r)
    return DprfContribution(delta, c, (sk.alpha_i * c + r) % Q)


def dprf_verify(
    pk: DprfPublicKey, i: int, x: DprfInput, contrib: DprfContribution, base: Point | None = None
) -> bool:
    """``base`` lets callers checking many contributions hash x only once."""
    try:
        g_ai = pk.share_key(i)
    except ValueError:
        return False
    h = base or x.base()
    a1 = h * contrib.z - contrib.delta * contrib.c
    a2 = pk.g * contrib.z - g_ai * contrib.c
    return _challenge(h, pk.g, contrib.delta, g_ai, a1, a2) == contrib.c


def combine(points: Mapping[int, Point], k: int, table: InterpolationTable | None = None) -> Point:
    """Interpolate k partial values H(x)^alpha_i at zero."""
    chosen = sorted(points)[:k]
    return interpolate_in_exponent([(i, points[i]) for i in chosen], 0, table)


def output_of(value: Point) -> int:
    return hash_to_scalar(OUT_TAG, [value.to_bytes()])


def dprf_eval(
    x: DprfInput,
    contribs: Mapping[int, DprfContribution],
    pk: DprfPublicKey,
    k: int,
    table: InterpolationTable | None = None,
) -> int | None:
    """Combine contributions; None when fewer than k of them verify."""
    if len(contribs) < k:
        return None
    h = x.base()
    valid: dict[int, Point] = {}
    for i in sorted(contribs):
        if dprf_verify(pk, i, x, contribs[i], h):
            valid[i] = contribs[i].delta
            if len(valid) == k:
                break
    if len(valid) < k:
        return None
    return output_of(combine(valid, k, table))


def master_secret(sks: list[DprfPrivateKey], k: int) -> int:
    """Interpolate alpha from k private keys (dealer side only)."""
    chosen = sorted(sks, key=lambda s: s.index)[:k]
    if len(chosen) < k:
        raise ValueError("not enough keys")
    lams = lagrange_coefficients([s.index for s in chosen], 0)
    return sum(l * s.alpha_i for l, s in zip(lams, chosen)) % Q


def dealer_eval(x: DprfInput, alpha: int) -> int:
    """Same value as dprf_eval over honest contributions, one exponentiation."""
    return output_of(x.base() * alpha)
