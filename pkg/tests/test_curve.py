"""Curve arithmetic against independent oracles.

Oracle one: a naive affine double-and-add implementation kept in this file
(different formulas, different algorithm).  Oracle two: the OpenSSL-backed
``cryptography`` package for base-point multiplication.
"""

import random

import pytest
from cryptography.hazmat.primitives.asymmetric import ec

from zkpot import curve


# --- naive affine oracle (independent of the package's Jacobian code) --------

def affine_add(p, q):
    if p is None:
        return q
    if q is None:
        return p
    (x1, y1), (x2, y2) = p, q
    if x1 == x2 and (y1 + y2) % curve.P == 0:
        return None
    if p == q:
        lam = (3 * x1 * x1) * pow(2 * y1, -1, curve.P) % curve.P
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, curve.P) % curve.P
    x3 = (lam * lam - x1 - x2) % curve.P
    return x3, (lam * (x1 - x3) - y1) % curve.P


def affine_mul(k, p):
    acc = None
    while k:
        if k & 1:
            acc = affine_add(acc, p)
        p = affine_add(p, p)
        k >>= 1
    return acc


G = (curve.GX, curve.GY)
RND = random.Random(0xC0FFEE)


def test_generator_on_curve():
    assert curve.is_on_curve(G)
    assert curve.mul_g(1) == G


def test_mul_g_matches_affine_oracle():
    for _ in range(25):
        k = RND.randrange(1, curve.N)
        assert curve.mul_g(k) == affine_mul(k, G)


def test_mul_g_matches_openssl():
    for _ in range(25):
        k = RND.randrange(1, curve.N)
        pub = ec.derive_private_key(k, ec.SECP256K1()).public_key().public_numbers()
        assert curve.mul_g(k) == (pub.x, pub.y)


def test_mul_g_edge_scalars():
    assert curve.mul_g(0) is None
    assert curve.mul_g(curve.N) is None
    assert curve.mul_g(curve.N - 1) == affine_mul(curve.N - 1, G)
    # n-1 multiple is the negation of G
    x, y = curve.mul_g(curve.N - 1)
    assert (x, (curve.P - y) % curve.P) == G


def test_mul_point_matches_oracle():
    for _ in range(10):
        base = curve.mul_g(RND.randrange(1, curve.N))
        k = RND.randrange(1, curve.N)
        assert curve.mul_point(k, base) == affine_mul(k, base)


def test_dual_mul_matches_oracle():
    for _ in range(10):
        a = RND.randrange(0, curve.N)
        b = RND.randrange(1, curve.N)
        point = curve.mul_g(RND.randrange(1, curve.N))
        expect = affine_add(affine_mul(a, G), affine_mul(b, point))
        assert curve.dual_mul(a, b, point) == expect


def test_dual_mul_degenerate_cases():
    point = curve.mul_g(7)
    assert curve.dual_mul(5, 0, point) == curve.mul_g(5)
    assert curve.dual_mul(0, 3, point) == affine_mul(3, point)
    assert curve.dual_mul(0, 0, point) is None


def test_point_compression_roundtrip():
    for _ in range(20):
        point = curve.mul_g(RND.randrange(1, curve.N))
        data = curve.point_to_compressed(point)
        assert len(data) == 33 and data[0] in (2, 3)
        assert curve.compressed_to_point(data) == point


def test_compressed_rejects_bad_encodings():
    with pytest.raises(ValueError):
        curve.compressed_to_point(b"\x04" + b"\x00" * 32)
    with pytest.raises(ValueError):
        curve.compressed_to_point(b"\x02" + b"\x00" * 31)
    # x = 5 is not on secp256k1
    with pytest.raises(ValueError):
        curve.compressed_to_point(b"\x02" + (5).to_bytes(32, "big"))


def test_sqrt_mod_p():
    for _ in range(20):
        v = RND.randrange(1, curve.P)
        square = v * v % curve.P
        root = curve.sqrt_mod_p(square)
        assert root is not None and root * root % curve.P == square
    # a known non-residue has no root
    assert curve.sqrt_mod_p(5) is None or pow(5, (curve.P - 1) // 2, curve.P) == 1


def test_rfc6979_known_vector():
    # secp256k1/SHA-256, key=1, message "Satoshi Nakamoto" (widely published)
    import hashlib
    msg = hashlib.sha256(b"Satoshi Nakamoto").digest()
    nonce = next(curve.rfc6979_nonces(1, msg))
    assert nonce == 0x8F8A276C19F4149656B280621E358CCE24F5F52542772691EE69063B74F15D15


def test_rfc6979_deterministic_and_in_range():
    for _ in range(10):
        sk = RND.randrange(1, curve.N)
        msg = RND.getrandbits(256).to_bytes(32, "big")
        a = next(curve.rfc6979_nonces(sk, msg))
        b = next(curve.rfc6979_nonces(sk, msg))
        assert a == b and 0 < a < curve.N
