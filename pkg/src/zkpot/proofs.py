"""Proof-of-shared-secret primitives.

Two observers that both saw a vehicle's number plate and heard its pseudonym
hold the same secret.  Hashing that secret yields an ECDSA private key; each
observer publishes a recoverable signature over its own salt, and any third
party can recover the public keys and match them without learning the secret.

All operations are pure functions of their inputs: nonces follow RFC 6979,
signatures are low-s normalized, so one (secret, salt) pair has exactly one
byte encoding.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from functools import lru_cache

from . import curve


class RecoveryFailure(Exception):
    """The (v, r, s, salt) tuple is not a consistent recoverable signature."""


class KdfMode(enum.Enum):
    PLAIN_HASH = "plain_hash"
    ITERATED_HASH = "iterated_hash"


@dataclass(frozen=True)
class KdfConfig:
    """Secret-to-scalar hardening knob.

    PLAIN_HASH is a single SHA-256 and is what the simulator runs with;
    ITERATED_HASH chains SHA-256 ``iterations`` times to stretch brute-force
    attacks on low-entropy plates.
    """

    mode: KdfMode = KdfMode.PLAIN_HASH
    iterations: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


DEFAULT_KDF = KdfConfig()


@dataclass(frozen=True)
class SharedSecret:
    """Identity material linking a pseudonym to a number plate.

    station_id is the target's 32-bit pseudonym; plate is the UTF-8 plate
    text.  Serialization is 4 bytes big-endian id, a 0x00 separator, then
    the plate bytes, so distinct (id, plate) pairs never collide.
    """

    station_id: int
    plate: bytes

    def __post_init__(self):
        if not 0 <= self.station_id < 1 << 32:
            raise ValueError("station_id must fit in 32 bits")
        if not self.plate:
            raise ValueError("plate must be non-empty")

    @classmethod
    def from_text(cls, station_id: int, plate: str) -> "SharedSecret":
        return cls(station_id, plate.encode("utf-8"))

    def serialize(self) -> bytes:
        return self.station_id.to_bytes(4, "big") + b"\x00" + self.plate


@dataclass(frozen=True)
class PublicPoint:
    """A secp256k1 point in compressed 33-byte form (the recovered key)."""

    data: bytes

    def __post_init__(self):
        curve.compressed_to_point(self.data)  # validates curve membership

    @classmethod
    def from_affine(cls, point) -> "PublicPoint":
        return cls(curve.point_to_compressed(point))

    def to_affine(self):
        return curve.compressed_to_point(self.data)


@dataclass(frozen=True)
class TrafficProof:
    """A recoverable signature (v, r, s) over ``salt``.

    v is the parity of the nonce point's y coordinate; r and s are scalars
    in (0, N) with s in canonical low form; salt is the message that was
    signed (the prover's own pseudonym on the wire).
    """

    v: bool
    r: int
    s: int
    salt: bytes

    def signature_bytes(self) -> bytes:
        """The 65-byte v || r || s encoding used by test vectors."""
        return bytes([self.v]) + self.r.to_bytes(32, "big") + self.s.to_bytes(32, "big")


def _digest(data: bytes, kdf: KdfConfig) -> bytes:
    """Hash ``data`` per the KDF config (chained SHA-256 for ITERATED_HASH)."""
    out = hashlib.sha256(data).digest()
    if kdf.mode is KdfMode.ITERATED_HASH:
        for _ in range(kdf.iterations - 1):
            out = hashlib.sha256(out).digest()
    return out


def scalar_from_bytes(data: bytes, kdf: KdfConfig = DEFAULT_KDF) -> int:
    """Map a serialized secret to a scalar in (0, N).

    The digest is read as a big-endian integer; on the (astronomically rare)
    out-of-range result the input is re-hashed with one more concatenated
    copy of itself per round until the scalar lands in range.
    """
    reps = 1
    while True:
        value = int.from_bytes(_digest(data * reps, kdf), "big")
        if 0 < value < curve.N:
            return value
        reps += 1


def derive_scalar(secret: SharedSecret, kdf: KdfConfig = DEFAULT_KDF) -> int:
    return scalar_from_bytes(secret.serialize(), kdf)


def derive_keypair(secret: SharedSecret, kdf: KdfConfig = DEFAULT_KDF):
    """Return (scalar, PublicPoint) for the secret; same secret, same point."""
    sk = derive_scalar(secret, kdf)
    return sk, PublicPoint.from_affine(curve.mul_g(sk))


def _hash_salt(salt: bytes) -> int:
    return int(int.from_bytes(hashlib.sha256(salt).digest(), "big") % curve.N)


def _sign_scalar(sk: int, salt: bytes):
    z = _hash_salt(salt)
    for k in curve.rfc6979_nonces(sk, hashlib.sha256(salt).digest()):
        x, y = curve.mul_g(k)
        if x >= curve.N:  # keep the recovery flag a plain parity bit
            continue
        r = x
        if r == 0:
            continue
        s = int(pow(k, -1, curve.N) * (z + r * sk) % curve.N)
        if s == 0:
            continue
        v = bool(y & 1)
        if s > curve.HALF_N:
            s = int(curve.N - s)
            v = not v
        return v, r, s


def sign_proof(secret: SharedSecret, salt: bytes, kdf: KdfConfig = DEFAULT_KDF) -> TrafficProof:
    """Sign ``salt`` under the key derived from ``secret``.

    Deterministic: the same (secret, salt, kdf) always yields byte-identical
    proofs, which is what lets the verifier database deduplicate repeats.
    """
    if not salt:
        raise ValueError("salt must be non-empty")
    v, r, s = _sign_scalar(derive_scalar(secret, kdf), salt)
    return TrafficProof(v, r, s, salt)


def recover_public_key(proof: TrafficProof) -> PublicPoint:
    """Recover the unique public key that verifies ``proof``.

    Raises RecoveryFailure for anything non-canonical: r or s out of range,
    s in high form, or an r that is not the x coordinate of a curve point.
    """
    point = _recover_point(proof.v, proof.r, proof.s, proof.salt)
    if point is None:
        raise RecoveryFailure("proof does not encode a consistent signature")
    return PublicPoint.from_affine(point)


def _recover_point(v, r, s, salt):
    if not 0 < r < curve.N or not 0 < s <= curve.HALF_N:
        return None
    y = curve.sqrt_mod_p(r * r % curve.P * r % curve.P + 7)
    if y is None:
        return None
    if bool(y & 1) != bool(v):
        y = curve.P - y
    rinv = pow(r, -1, curve.N)
    u1 = -_hash_salt(salt) * rinv % curve.N
    u2 = s * rinv % curve.N
    return curve.dual_mul(u1, u2, (r, y))


def proofs_corroborate(a: TrafficProof, b: TrafficProof) -> bool:
    """True iff both proofs recover to the same key under *different* salts.

    Never raises: a malformed proof simply fails to corroborate.  Identical
    salts are rejected so a single prover cannot vouch for itself.
    """
    if a.salt == b.salt:
        return False
    pa = _recover_point(a.v, a.r, a.s, a.salt)
    if pa is None:
        return False
    pb = _recover_point(b.v, b.r, b.s, b.salt)
    return pb is not None and pa == pb


# --- Memoized station-facing helpers ----------------------------------------
# Proof construction and recovery are pure, so stations share one process-wide
# memo; the same proof bytes recur every repeat interval and at every receiver.

@lru_cache(maxsize=1 << 16)
def cached_keypair(station_id: int, plate: bytes, kdf: KdfConfig = DEFAULT_KDF):
    sk, point = derive_keypair(SharedSecret(station_id, plate), kdf)
    return sk, point.data


@lru_cache(maxsize=1 << 16)
def cached_sign(station_id: int, plate: bytes, salt: bytes, kdf: KdfConfig = DEFAULT_KDF):
    """(v, r, s) for the proof of (station_id, plate) salted with ``salt``."""
    sk = cached_keypair(station_id, plate, kdf)[0]
    return _sign_scalar(sk, salt)


@lru_cache(maxsize=1 << 18)
def cached_recover(v: bool, r: int, s: int, salt: bytes):
    """Compressed key bytes for (v, r, s, salt), or None when inconsistent."""
    point = _recover_point(v, r, s, salt)
    return None if point is None else curve.point_to_compressed(point)


def clear_caches():
    cached_keypair.cache_clear()
    cached_sign.cache_clear()
    cached_recover.cache_clear()
