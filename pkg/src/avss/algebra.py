"""Field, group, pairing and polynomial primitives over BN254.

Scalars are plain Python ints reduced mod ``Q``. Group elements wrap the mcl
backend: ``Point`` lives in the source group G1 (commitments, witnesses, DPRF
values), ``G2Point`` in the second source group (KZG verification key only)
and ``GtElement`` in the target group.
"""
from __future__ import annotations

import hashlib
import secrets
from ctypes import c_char_p, create_string_buffer
from dataclasses import dataclass, field
from random import Random
from typing import Iterable, Sequence

from mclbn256 import mclbn256 as _mcl

_lib = _mcl.lib

Q = 0x2523648240000001BA344D8000000007FF9F800000000010A10000000000000D
SCALAR_BYTES = 32
G1_BYTES = 32
G2_BYTES = 64
GT_BYTES = 384


def default_rng() -> Random:
    return secrets.SystemRandom()


def random_scalar(rng: Random | None = None) -> int:
    return (rng or default_rng()).randrange(Q)


def random_nonzero_scalar(rng: Random | None = None) -> int:
    return (rng or default_rng()).randrange(1, Q)


def inv(x: int) -> int:
    x %= Q
    if x == 0:
        raise ZeroDivisionError("zero has no inverse mod q")
    return pow(x, -1, Q)


def encode_scalar(x: int) -> bytes:
    if not 0 <= x < Q:
        raise ValueError("scalar out of range")
    return x.to_bytes(SCALAR_BYTES, "big")


def decode_scalar(data: bytes) -> int:
    if len(data) != SCALAR_BYTES:
        raise ValueError(f"scalar encoding must be {SCALAR_BYTES} bytes")
    x = int.from_bytes(data, "big")
    if x >= Q:
        raise ValueError("non-canonical scalar encoding")
    return x


def _fr(x: int) -> _mcl.Fr:
    f = _mcl.Fr(0)
    buf = (x % Q).to_bytes(SCALAR_BYTES, "little")
    if _lib.mclBnFr_setLittleEndian(f.s, buf, SCALAR_BYTES) != 0:
        raise ValueError("backend rejected scalar")
    return f


def _serialize(fn, obj, size: int) -> bytes:
    buf = create_string_buffer(size)
    n = fn(buf, size, obj)
    if n != size:
        raise ValueError("backend serialization failed")
    return buf.raw


class Point:
    """Element of the prime-order group G1."""

    __slots__ = ("_p",)

    def __init__(self, raw: _mcl.G1):
        self._p = raw

    @classmethod
    def generator(cls) -> Point:
        return cls(_mcl.G1.base_point())

    @classmethod
    def identity(cls) -> Point:
        return cls(_mcl.G1())

    def __add__(self, other: Point) -> Point:
        out = _mcl.G1()
        _lib.mclBnG1_add(out.d, self._p.d, other._p.d)
        return Point(out)

    def __sub__(self, other: Point) -> Point:
        out = _mcl.G1()
        _lib.mclBnG1_sub(out.d, self._p.d, other._p.d)
        return Point(out)

    def __neg__(self) -> Point:
        out = _mcl.G1()
        _lib.mclBnG1_neg(out.d, self._p.d)
        return Point(out)

    def __mul__(self, k: int) -> Point:
        out = _mcl.G1()
        _lib.mclBnG1_mul(out.d, self._p.d, _fr(k).s)
        return Point(out)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Point):
            return NotImplemented
        return bool(_lib.mclBnG1_isEqual(self._p.d, other._p.d))

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"Point({self.to_bytes().hex()[:16]}...)"

    def is_identity(self) -> bool:
        return bool(_lib.mclBnG1_isZero(self._p.d))

    def to_bytes(self) -> bytes:
        return _serialize(_lib.mclBnG1_serialize, self._p.d, G1_BYTES)

    @classmethod
    def from_bytes(cls, data: bytes) -> Point:
        if len(data) != G1_BYTES:
            raise ValueError(f"G1 encoding must be {G1_BYTES} bytes")
        raw = _mcl.G1()
        if _lib.mclBnG1_deserialize(raw.d, c_char_p(bytes(data)), G1_BYTES) != G1_BYTES:
            raise ValueError("invalid G1 encoding")
        if not (_lib.mclBnG1_isValid(raw.d) and _lib.mclBnG1_isValidOrder(raw.d)):
            raise ValueError("point not in the prime-order subgroup")
        p = cls(raw)
        # the backend tolerates a few redundant flag patterns; insist on one
        if p.to_bytes() != data:
            raise ValueError("non-canonical G1 encoding")
        return p


class G2Point:
    """Element of G2, used only for the KZG verification key."""

    __slots__ = ("_p",)

    def __init__(self, raw: _mcl.G2):
        self._p = raw

    @classmethod
    def generator(cls) -> G2Point:
        return cls(_mcl.G2.base_point())

    def __add__(self, other: G2Point) -> G2Point:
        out = _mcl.G2()
        _lib.mclBnG2_add(out.d2, self._p.d2, other._p.d2)
        return G2Point(out)

    def __sub__(self, other: G2Point) -> G2Point:
        out = _mcl.G2()
        _lib.mclBnG2_sub(out.d2, self._p.d2, other._p.d2)
        return G2Point(out)

    def __mul__(self, k: int) -> G2Point:
        out = _mcl.G2()
        _lib.mclBnG2_mul(out.d2, self._p.d2, _fr(k).s)
        return G2Point(out)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, G2Point):
            return NotImplemented
        return bool(_lib.mclBnG2_isEqual(self._p.d2, other._p.d2))

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def to_bytes(self) -> bytes:
        return _serialize(_lib.mclBnG2_serialize, self._p.d2, G2_BYTES)

    @classmethod
    def from_bytes(cls, data: bytes) -> G2Point:
        if len(data) != G2_BYTES:
            raise ValueError(f"G2 encoding must be {G2_BYTES} bytes")
        raw = _mcl.G2()
        if _lib.mclBnG2_deserialize(raw.d2, c_char_p(bytes(data)), G2_BYTES) != G2_BYTES:
            raise ValueError("invalid G2 encoding")
        if not (_lib.mclBnG2_isValid(raw.d2) and _lib.mclBnG2_isValidOrder(raw.d2)):
            raise ValueError("point not in the prime-order subgroup")
        p = cls(raw)
        if p.to_bytes() != data:
            raise ValueError("non-canonical G2 encoding")
        return p


class GtElement:
    """Element of the target group, written multiplicatively."""

    __slots__ = ("_e",)

    def __init__(self, raw: _mcl.GT):
        self._e = raw

    def __mul__(self, other: GtElement) -> GtElement:
        out = _mcl.GT()
        _lib.mclBnGT_mul(out.d12, self._e.d12, other._e.d12)
        return GtElement(out)

    def __truediv__(self, other: GtElement) -> GtElement:
        out = _mcl.GT()
        _lib.mclBnGT_div(out.d12, self._e.d12, other._e.d12)
        return GtElement(out)

    def __pow__(self, k: int) -> GtElement:
        out = _mcl.GT()
        _lib.mclBnGT_pow(out.d12, self._e.d12, _fr(k).s)
        return GtElement(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GtElement):
            return NotImplemented
        return bool(_lib.mclBnGT_isEqual(self._e.d12, other._e.d12))

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def is_one(self) -> bool:
        return bool(_lib.mclBnGT_isOne(self._e.d12))

    def to_bytes(self) -> bytes:
        return _serialize(_lib.mclBnGT_serialize, self._e.d12, GT_BYTES)


def pairing(p: Point, q: G2Point) -> GtElement:
    # the backend caches the Miller-loop lines on the G2 object
    return GtElement(p._p.pairing(q._p))


def multi_exp(points: Sequence[Point], scalars: Sequence[int]) -> Point:
    """Sum of scalars[i] * points[i]."""
    if len(points) != len(scalars):
        raise ValueError("length mismatch")
    n = len(points)
    if n == 0:
        return Point.identity()
    pts = (_mcl.G1 * n)(*(p._p for p in points))
    scs = (_mcl.Fr * n)(*(_fr(s) for s in scalars))
    out = _mcl.G1()
    _lib.mclBnG1_mulVec(out.d, pts, scs, n)
    return Point(out)


def _frame(tag: bytes, parts: Iterable[bytes]) -> bytes:
    h = hashlib.sha512()
    h.update(len(tag).to_bytes(2, "big") + tag)
    for part in parts:
        h.update(len(part).to_bytes(4, "big") + part)
    return h.digest()


def hash_to_group(domain_tag: bytes, msg: bytes) -> Point:
    digest = _frame(domain_tag, [msg])
    out = _mcl.G1()
    if _lib.mclBnG1_hashAndMapTo(out.d, c_char_p(digest), len(digest)) != 0:
        raise ValueError("hash-to-curve failed")
    return Point(out)


def hash_to_scalar(domain_tag: bytes, parts: Iterable[bytes]) -> int:
    # 512 bits reduced mod a 254-bit prime: bias is below 2^-250
    return int.from_bytes(_frame(domain_tag, parts), "big") % Q


@dataclass(frozen=True)
class SystemParams:
    q: int = Q
    kappa: int = 128
    group_id: str = "BN254/Fp254BNb"
    g: Point = field(default_factory=Point.generator)


# ---------------------------------------------------------------- polynomials


class Polynomial:
    """Immutable polynomial over Z_q; coeffs[j] multiplies x**j."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[int]):
        cs = [c % Q for c in coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[int, ...] = tuple(cs) if cs else (0,)

    @classmethod
    def random(cls, degree: int, rng: Random | None = None, constant: int | None = None) -> Polynomial:
        rng = rng or default_rng()
        cs = [rng.randrange(Q) for _ in range(degree + 1)]
        if constant is not None:
            cs[0] = constant % Q
        return cls(cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0,)

    def __call__(self, x: int) -> int:
        return poly_eval(self, x)

    def __add__(self, other: Polynomial) -> Polynomial:
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return Polynomial([x + (b[i] if i < len(b) else 0) for i, x in enumerate(a)])

    def __neg__(self) -> Polynomial:
        return Polynomial([-c for c in self.coeffs])

    def __sub__(self, other: Polynomial) -> Polynomial:
        return self + (-other)

    def __mul__(self, other: Polynomial | int) -> Polynomial:
        if isinstance(other, int):
            return Polynomial([c * other for c in self.coeffs])
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = (out[i + j] + a * b) % Q
        return Polynomial(out)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"Polynomial(degree={self.degree})"


def poly_eval(p: Polynomial, x: int) -> int:
    acc = 0
    for c in reversed(p.coeffs):
        acc = (acc * x + c) % Q
    return acc


def poly_div_linear(p: Polynomial, i: int) -> tuple[Polynomial, int]:
    """Divide p by (x - i) with Horner's scheme; returns (quotient, p(i))."""
    if p.degree < 1:
        raise ValueError("cannot divide a constant polynomial by a linear factor")
    cs = p.coeffs
    # running Horner values are the quotient coefficients, highest first
    acc = cs[-1]
    quotient = [acc]
    for c in reversed(cs[1:-1]):
        acc = (acc * i + c) % Q
        quotient.append(acc)
    remainder = (acc * i + cs[0]) % Q
    quotient.reverse()
    return Polynomial(quotient), remainder


def _check_distinct(xs: Sequence[int]) -> None:
    if len({x % Q for x in xs}) != len(xs):
        raise ValueError("duplicate x-coordinate")


def lagrange_coefficients(xs: Sequence[int], x0: int, table: InterpolationTable | None = None) -> list[int]:
    if table is not None:
        return table.coefficients(xs, x0)
    _check_distinct(xs)
    out = []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if i != j:
                num = num * (x0 - xj) % Q
                den = den * (xi - xj) % Q
        out.append(num * inv(den) % Q)
    return out


def lagrange_interpolate(points: Iterable[tuple[int, int]], table: InterpolationTable | None = None) -> Polynomial:
    pts = list(points)
    if not pts:
        raise ValueError("need at least one point")
    xs = [x for x, _ in pts]
    _check_distinct(xs)
    if table is not None:
        weights = table.weights(xs)
    else:
        weights = []
        for i, xi in enumerate(xs):
            den = 1
            for j, xj in enumerate(xs):
                if i != j:
                    den = den * (xi - xj) % Q
            weights.append(inv(den))
    # master polynomial prod (x - x_i), then peel one factor per point
    master = Polynomial([1])
    for x in xs:
        master = master * Polynomial([-x, 1])
    acc = [0] * len(pts)
    for (x, y), w in zip(pts, weights):
        basis, _ = poly_div_linear(master, x)
        scale = y * w % Q
        for j, c in enumerate(basis.coeffs):
            acc[j] = (acc[j] + c * scale) % Q
    return Polynomial(acc)


def interpolate_at(points: Iterable[tuple[int, int]], x0: int, table: InterpolationTable | None = None) -> int:
    pts = list(points)
    lams = lagrange_coefficients([x for x, _ in pts], x0, table)
    return sum(l * y for l, (_, y) in zip(lams, pts)) % Q


def interpolate_in_exponent(
    points: Iterable[tuple[int, Point]], x0: int, table: InterpolationTable | None = None
) -> Point:
    pts = list(points)
    if not pts:
        raise ValueError("need at least one point")
    lams = lagrange_coefficients([x for x, _ in pts], x0, table)
    return multi_exp([p for _, p in pts], lams)


class InterpolationTable:
    """Precomputed inverses of pairwise differences for a fixed set of points.

    Built once for the small integer abscissae used by the protocol so that
    Lagrange coefficients need multiplications only.
    """

    def __init__(self, xs: Sequence[int]):
        xs = [x % Q for x in xs]
        _check_distinct(xs)
        self.xs: tuple[int, ...] = tuple(xs)
        self._inv: dict[int, int] = {}
        for a in xs:
            for b in xs:
                d = (a - b) % Q
                if d and d not in self._inv:
                    self._inv[d] = inv(d)
        self.inv_diffs: list[list[int]] = [
            [self._inv[(a - b) % Q] if a != b else 0 for b in xs] for a in xs
        ]
        self.barycentric: tuple[int, ...] = tuple(self.weights(xs))

    @classmethod
    def for_range(cls, upto: int) -> InterpolationTable:
        return cls(range(upto + 1))

    def _inverse(self, d: int) -> int:
        d %= Q
        got = self._inv.get(d)
        return got if got is not None else inv(d)

    def weights(self, xs: Sequence[int]) -> list[int]:
        out = []
        for i, xi in enumerate(xs):
            w = 1
            for j, xj in enumerate(xs):
                if i != j:
                    w = w * self._inverse(xi - xj) % Q
            out.append(w)
        return out

    def coefficients(self, xs: Sequence[int], x0: int) -> list[int]:
        _check_distinct(xs)
        out = []
        for i, xi in enumerate(xs):
            lam = 1
            for j, xj in enumerate(xs):
                if i != j:
                    lam = lam * (x0 - xj) % Q * self._inverse(xi - xj) % Q
            out.append(lam)
        return out
