"""secp256k1 arithmetic for recoverable signatures.

Self-contained big-integer implementation: Jacobian-coordinate point math,
a precomputed 4-bit window table for the base point, and the RFC 6979
deterministic nonce stream.  Tuned for the sustained signing/recovery load
of the simulator; no external crypto dependency.

Affine points are ``(x, y)`` int tuples, the point at infinity is ``None``.
"""

from __future__ import annotations

import hashlib
import hmac

try:  # GMP roughly halves field-op latency; plain ints work the same
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover
    def _mpz(x):
        return x

# Curve parameters (y^2 = x^3 + 7 over F_P, base point G of prime order N).
P = _mpz(0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F)
N = _mpz(0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141)
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

HALF_N = N >> 1
_SQRT_EXP = (P + 1) >> 2  # P % 4 == 3, so sqrt(a) = a^((P+1)/4)


# --- Jacobian point arithmetic -------------------------------------------
# A Jacobian point (X, Y, Z) represents the affine point (X/Z^2, Y/Z^3);
# Z == 0 encodes the point at infinity.

def _jac_double(X1, Y1, Z1):
    if not Y1:
        return 0, 0, 0
    A = X1 * X1 % P
    B = Y1 * Y1 % P
    C = B * B % P
    D = 2 * ((X1 + B) * (X1 + B) - A - C) % P
    E = 3 * A % P
    X3 = (E * E - 2 * D) % P
    Y3 = (E * (D - X3) - 8 * C) % P
    Z3 = 2 * Y1 * Z1 % P
    return X3, Y3, Z3


def _jac_add_affine(X1, Y1, Z1, x2, y2):
    """Add an affine point to a Jacobian point (mixed addition)."""
    if not Z1:
        return x2, y2, 1
    Z1Z1 = Z1 * Z1 % P
    U2 = x2 * Z1Z1 % P
    S2 = y2 * Z1Z1 % P * Z1 % P
    H = (U2 - X1) % P
    R = (S2 - Y1) % P
    if not H:
        if not R:
            return _jac_double(X1, Y1, Z1)
        return 0, 0, 0
    HH = H * H % P
    HHH = HH * H % P
    V = X1 * HH % P
    X3 = (R * R - HHH - 2 * V) % P
    Y3 = (R * (V - X3) - Y1 * HHH) % P
    Z3 = Z1 * H % P
    return X3, Y3, Z3


def _jac_add(X1, Y1, Z1, X2, Y2, Z2):
    if not Z1:
        return X2, Y2, Z2
    if not Z2:
        return X1, Y1, Z1
    Z1Z1 = Z1 * Z1 % P
    Z2Z2 = Z2 * Z2 % P
    U1 = X1 * Z2Z2 % P
    U2 = X2 * Z1Z1 % P
    S1 = Y1 * Z2Z2 % P * Z2 % P
    S2 = Y2 * Z1Z1 % P * Z1 % P
    H = (U2 - U1) % P
    R = (S2 - S1) % P
    if not H:
        if not R:
            return _jac_double(X1, Y1, Z1)
        return 0, 0, 0
    HH = H * H % P
    HHH = HH * H % P
    V = U1 * HH % P
    X3 = (R * R - HHH - 2 * V) % P
    Y3 = (R * (V - X3) - S1 * HHH) % P
    Z3 = Z1 * Z2 % P * H % P
    return X3, Y3, Z3


def _jac_to_affine(X, Y, Z):
    if not Z:
        return None
    zinv = pow(Z, -1, P)
    zinv2 = zinv * zinv % P
    return int(X * zinv2 % P), int(Y * zinv2 % P * zinv % P)


# --- Base-point window table ----------------------------------------------
# _G_WINDOWS[i][w-1] is the affine point (w << 4i) * G for w in 1..15, so a
# base-point multiply is at most 64 mixed additions and no doublings.

def _build_g_windows():
    jac_rows = []
    d = (GX, GY, 1)
    for _ in range(64):
        row = []
        acc = d
        for _ in range(15):
            row.append(acc)
            acc = _jac_add(acc[0], acc[1], acc[2], d[0], d[1], d[2])
        jac_rows.append(row)
        d = acc  # acc == 16 * d
    # Batch-normalize all 960 entries with a single field inversion.
    flat = [pt for row in jac_rows for pt in row]
    prefix = [1]
    for X, Y, Z in flat:
        prefix.append(prefix[-1] * Z % P)
    inv = pow(prefix[-1], -1, P)
    affine = [None] * len(flat)
    for i in range(len(flat) - 1, -1, -1):
        X, Y, Z = flat[i]
        zinv = inv * prefix[i] % P
        inv = inv * Z % P
        zinv2 = zinv * zinv % P
        affine[i] = (X * zinv2 % P, Y * zinv2 % P * zinv % P)  # mpz is fine here
    return [affine[i * 15:(i + 1) * 15] for i in range(64)]


_G_WINDOWS = _build_g_windows()


def mul_g(k):
    """Return k*G as an affine point (None for k ≡ 0 mod N)."""
    k %= N
    acc = (0, 0, 0)
    i = 0
    while k:
        w = k & 15
        if w:
            gx, gy = _G_WINDOWS[i][w - 1]
            acc = _jac_add_affine(acc[0], acc[1], acc[2], gx, gy)
        k >>= 4
        i += 1
    return _jac_to_affine(*acc)


def _point_table(x, y):
    """Affine multiples 1..15 of (x, y) for 4-bit windowing."""
    table = [(x, y)]
    acc = (x, y, 1)
    for _ in range(14):
        acc = _jac_add_affine(acc[0], acc[1], acc[2], x, y)
        table.append(_jac_to_affine(*acc))
    return table


def mul_point(k, point):
    """Return k*point for an affine point."""
    k %= N
    if not k or point is None:
        return None
    table = _point_table(*point)
    acc = (0, 0, 0)
    for shift in range((k.bit_length() + 3) // 4 * 4 - 4, -1, -4):
        if acc[2]:
            acc = _jac_double(*acc)
            acc = _jac_double(*acc)
            acc = _jac_double(*acc)
            acc = _jac_double(*acc)
        w = (k >> shift) & 15
        if w:
            px, py = table[w - 1]
            acc = _jac_add_affine(acc[0], acc[1], acc[2], px, py)
    return _jac_to_affine(*acc)


def dual_mul(a, b, point):
    """Return a*G + b*point (the public-key recovery combination).

    Shamir's trick: one shared doubling chain with interleaved windowed
    additions from the 1..15 multiples of G and of ``point``.
    """
    a %= N
    b %= N
    if not b or point is None:
        return mul_g(a) if a else None
    g_row = _G_WINDOWS[0]  # 1..15 times G
    table = _point_table(*point)
    acc = (0, 0, 0)
    for shift in range(252, -1, -4):
        if acc[2]:
            acc = _jac_double(*acc)
            acc = _jac_double(*acc)
            acc = _jac_double(*acc)
            acc = _jac_double(*acc)
        w = (b >> shift) & 15
        if w:
            px, py = table[w - 1]
            acc = _jac_add_affine(acc[0], acc[1], acc[2], px, py)
        wa = (a >> shift) & 15
        if wa:
            gx, gy = g_row[wa - 1]
            acc = _jac_add_affine(acc[0], acc[1], acc[2], gx, gy)
    return _jac_to_affine(*acc)


def is_on_curve(point):
    if point is None:
        return False
    x, y = point
    return 0 <= x < P and 0 <= y < P and (y * y - x * x * x - 7) % P == 0


def sqrt_mod_p(a):
    """Square root of a mod P, or None when a is not a residue."""
    a %= P
    r = pow(a, _SQRT_EXP, P)
    if r * r % P != a:
        return None
    return int(r)


# --- Point codec -----------------------------------------------------------

def point_to_compressed(point):
    x, y = point
    return bytes([2 | (y & 1)]) + int(x).to_bytes(32, "big")


def compressed_to_point(data):
    """Decode a 33-byte compressed point; raises ValueError when invalid."""
    if len(data) != 33 or data[0] not in (2, 3):
        raise ValueError("bad compressed point encoding")
    x = int.from_bytes(data[1:], "big")
    if x >= P:
        raise ValueError("x out of field range")
    y = sqrt_mod_p(x * x % P * x % P + 7)
    if y is None:
        raise ValueError("x not on curve")
    if (y & 1) != (data[0] & 1):
        y = int(P - y)
    return x, y


# --- RFC 6979 nonce stream ---------------------------------------------------

def rfc6979_nonces(secret, msg_hash32):
    """Yield deterministic nonce candidates in (0, N) per RFC 6979 (SHA-256).

    The generator form supports the retry loop a signer needs when a
    candidate produces r == 0, s == 0, or an R.x beyond the group order.
    """
    qlen_bytes = 32
    x = int(secret).to_bytes(qlen_bytes, "big")
    h1 = int(int.from_bytes(msg_hash32, "big") % N)
    bh = h1.to_bytes(qlen_bytes, "big")
    V = b"\x01" * 32
    K = b"\x00" * 32
    K = hmac.new(K, V + b"\x00" + x + bh, hashlib.sha256).digest()
    V = hmac.new(K, V, hashlib.sha256).digest()
    K = hmac.new(K, V + b"\x01" + x + bh, hashlib.sha256).digest()
    V = hmac.new(K, V, hashlib.sha256).digest()
    while True:
        V = hmac.new(K, V, hashlib.sha256).digest()
        k = int.from_bytes(V, "big")
        if 0 < k < N:
            yield k
        K = hmac.new(K, V + b"\x00", hashlib.sha256).digest()
        V = hmac.new(K, V, hashlib.sha256).digest()
