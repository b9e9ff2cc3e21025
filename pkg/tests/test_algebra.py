"""Field, group and polynomial primitives."""
from random import Random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from avss.algebra import (
    G1_BYTES,
    Q,
    G2Point,
    InterpolationTable,
    Point,
    Polynomial,
    SystemParams,
    decode_scalar,
    encode_scalar,
    hash_to_group,
    hash_to_scalar,
    interpolate_in_exponent,
    lagrange_coefficients,
    lagrange_interpolate,
    multi_exp,
    pairing,
    poly_div_linear,
    poly_eval,
)

scalars = st.integers(min_value=0, max_value=Q - 1)
polys = st.lists(scalars, min_size=1, max_size=8).map(Polynomial)
nonconstant = st.lists(scalars, min_size=2, max_size=8).filter(lambda cs: cs[-1] != 0).map(Polynomial)

G = Point.generator()


def naive_eval(p, x):
    return sum(c * pow(x, j, Q) for j, c in enumerate(p.coeffs)) % Q


def test_system_params_shape():
    sp = SystemParams()
    assert sp.q == Q and Q.bit_length() == 254
    assert pow(3, Q - 1, Q) == 1  # Fermat witness; Q is prime
    assert sp.kappa <= Q.bit_length()
    assert (sp.g * Q).is_identity() and not sp.g.is_identity()


# ------------------------------------------------------------------ evaluation and division


def test_eval_constant():
    assert poly_eval(Polynomial([5]), 7) == 5


def test_eval_linear():
    assert poly_eval(Polynomial([1, 2]), 3) == 7


def test_eval_matches_power_sum(rng):
    p = Polynomial.random(9, rng)
    x = rng.randrange(Q)
    assert poly_eval(p, x) == naive_eval(p, x)


def test_div_by_root():
    q, r = poly_div_linear(Polynomial([Q - 1, 0, 1]), 1)  # x^2 - 1
    assert q == Polynomial([1, 1]) and r == 0


def test_div_with_remainder():
    q, r = poly_div_linear(Polynomial([1, 0, 1]), 0)
    assert q == Polynomial([0, 1]) and r == 1


def test_div_reconstructs_dividend(rng):
    p = Polynomial.random(6, rng)
    q, r = poly_div_linear(p, 3)
    assert q * Polynomial([-3, 1]) + Polynomial([r]) == p


def test_div_rejects_constant():
    with pytest.raises(ValueError):
        poly_div_linear(Polynomial([4]), 2)


@given(nonconstant, scalars)
def test_remainder_is_evaluation(p, x):
    q, r = poly_div_linear(p, x)
    assert r == poly_eval(p, x)
    assert q * Polynomial([-x, 1]) + Polynomial([r]) == p


def test_normalisation():
    assert Polynomial([3, 0, 0]).coeffs == (3,)
    assert Polynomial([]).coeffs == (0,) and Polynomial([0, 0]).is_zero()
    assert Polynomial([Q + 2]).coeffs == (2,)


# ------------------------------------------------------------------ interpolation


def test_interpolate_single_point():
    assert lagrange_interpolate([(1, 5)]) == Polynomial([5])


def test_interpolate_line():
    p = lagrange_interpolate([(1, 3), (2, 5)])
    assert p == Polynomial([1, 2]) and p(0) == 1


def test_interpolate_recovers_degree_six(rng):
    p = Polynomial.random(6, rng)
    pts = [(x, p(x)) for x in rng.sample(range(1, 100), 7)]
    assert lagrange_interpolate(pts) == p


def test_interpolate_duplicate_x():
    with pytest.raises(ValueError):
        lagrange_interpolate([(1, 2), (1, 3)])
    with pytest.raises(ValueError):
        lagrange_coefficients([2, 2], 0)


@given(polys, st.data())
def test_interpolation_inverts_evaluation(p, data):
    xs = data.draw(st.lists(st.integers(1, 10**6), min_size=p.degree + 1, max_size=p.degree + 1, unique=True))
    assert lagrange_interpolate([(x, p(x)) for x in xs]) == p


@given(polys)
def test_table_agrees_with_direct(p):
    table = InterpolationTable.for_range(12)
    xs = list(range(1, p.degree + 2))
    pts = [(x, p(x)) for x in xs]
    assert lagrange_interpolate(pts, table) == lagrange_interpolate(pts) == p
    assert lagrange_coefficients(xs, 0, table) == lagrange_coefficients(xs, 0)


def test_table_inverse_differences():
    t = InterpolationTable([1, 2, 5, 9])
    for i, a in enumerate(t.xs):
        for j, b in enumerate(t.xs):
            if i != j:
                assert t.inv_diffs[i][j] * (a - b) % Q == 1


def test_table_rejects_duplicates():
    with pytest.raises(ValueError):
        InterpolationTable([1, 2, 1])


def test_exponent_constant():
    assert interpolate_in_exponent([(1, G * 4)], 17) == G * 4


def test_exponent_line():
    assert interpolate_in_exponent([(1, G * 3), (2, G * 5)], 0) == G * 1


def test_exponent_interpolates_kzg_witnesses():
    from avss.vss import vss_init

    rng = Random(3)
    params = vss_init(4, 10, "kzg", rng, retain_trapdoor=True)
    s = Polynomial.random(3, rng)
    tau = params.tau
    # witness of s at i is g^((s(tau) - s(i)) / (tau - i)); as a function of i it has degree <= k-2
    direct = {i: G * ((s(tau) - s(i)) * pow(tau - i, -1, Q) % Q) for i in (1, 2, 3, 4)}
    assert all(params.witness(s, i) == direct[i] for i in direct)
    got = interpolate_in_exponent([(i, direct[i]) for i in (1, 2, 3)], 4)
    assert got == direct[4]


@given(st.lists(scalars, min_size=1, max_size=5), scalars)
def test_exponent_commutes_with_scalar_interpolation(ys, x0):
    pts = list(enumerate(ys, start=1))
    expected = G * poly_eval(lagrange_interpolate(pts), x0)
    assert interpolate_in_exponent([(x, G * y) for x, y in pts], x0) == expected


# ------------------------------------------------------------------ hashing


def test_hash_to_group_deterministic():
    assert hash_to_group(b"t", b"m") == hash_to_group(b"t", b"m")
    assert hash_to_group(b"t", b"m") != hash_to_group(b"t", b"m2")
    assert hash_to_group(b"t1", b"m") != hash_to_group(b"t2", b"m")


def test_hash_to_group_in_subgroup(rng):
    for _ in range(100):
        p = hash_to_group(b"avss/test", rng.randbytes(16))
        assert not p.is_identity() and (p * Q).is_identity()
        assert Point.from_bytes(p.to_bytes()) == p


def test_hash_to_scalar_range_and_spread():
    seen = set()
    for i in range(10_000):
        x = hash_to_scalar(b"avss/test", [i.to_bytes(4, "big")])
        assert 0 <= x < Q
        seen.add(x)
    assert len(seen) == 10_000
    assert hash_to_scalar(b"a", [b"x"]) == hash_to_scalar(b"a", [b"x"])


def test_hash_to_scalar_framing():
    # part boundaries matter
    assert hash_to_scalar(b"t", [b"ab", b"c"]) != hash_to_scalar(b"t", [b"a", b"bc"])


# ------------------------------------------------------------------ encodings and group ops


@given(scalars)
def test_scalar_round_trip(x):
    assert decode_scalar(encode_scalar(x)) == x


def test_scalar_rejects_noncanonical():
    with pytest.raises(ValueError):
        decode_scalar(Q.to_bytes(32, "big"))
    with pytest.raises(ValueError):
        decode_scalar(b"\x00" * 31)
    with pytest.raises(ValueError):
        encode_scalar(Q)


@given(scalars)
def test_point_round_trip(x):
    p = G * x
    assert Point.from_bytes(p.to_bytes()) == p
    assert len(p.to_bytes()) == G1_BYTES


def test_point_rejects_garbage(rng):
    rejected = 0
    for _ in range(200):
        blob = bytearray((G * rng.randrange(1, Q)).to_bytes())
        blob[rng.randrange(G1_BYTES)] ^= 1 << rng.randrange(8)
        try:
            Point.from_bytes(bytes(blob))
        except ValueError:
            rejected += 1
    # a flipped bit either lands off-curve (rejected) or on another valid point
    assert rejected > 0
    with pytest.raises(ValueError):
        Point.from_bytes(b"\xff" * G1_BYTES)
    with pytest.raises(ValueError):
        Point.from_bytes(b"\x00" * 5)


def test_g2_round_trip(rng):
    q = G2Point.generator() * rng.randrange(1, Q)
    assert G2Point.from_bytes(q.to_bytes()) == q


@given(scalars, scalars)
def test_group_arithmetic(a, b):
    assert G * a + G * b == G * ((a + b) % Q)
    assert G * a - G * a == Point.identity()
    assert multi_exp([G, G * 2], [a, b]) == G * ((a + 2 * b) % Q)


def test_pairing_bilinear(rng):
    a, b = rng.randrange(1, Q), rng.randrange(1, Q)
    h = G2Point.generator()
    assert pairing(G * a, h * b) == pairing(G, h) ** (a * b % Q)
    assert pairing(G * a, h) == pairing(G, h * a)
