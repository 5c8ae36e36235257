"""Proof primitive contracts: scalar derivation, signing, recovery,
corroboration, and the protocol's completeness/soundness/zero-knowledge
properties at unit scale (the acceptance suite re-runs the 10k-trial
versions)."""

import hashlib
import random

import pytest
from cryptography.hazmat.primitives.asymmetric import ec

from zkpot import curve, proofs
from zkpot.proofs import (KdfConfig, KdfMode, RecoveryFailure, SharedSecret,
                          TrafficProof, derive_keypair, derive_scalar,
                          proofs_corroborate, recover_public_key,
                          scalar_from_bytes, sign_proof)

RND = random.Random(0xBEEF)


def random_secret(rnd=RND):
    return SharedSecret.from_text(rnd.getrandbits(32), f"PLATE-{rnd.getrandbits(40):x}")


# --- SharedSecret serialization ------------------------------------------------

def test_serialization_layout():
    s = SharedSecret.from_text(0x01020304, "AB")
    assert s.serialize() == bytes([1, 2, 3, 4, 0]) + b"AB"


def test_serialization_disambiguates():
    # same concatenation, different split; the separator keeps them apart
    a = SharedSecret(1, b"\x01AB")
    b = SharedSecret(1, b"\x01\x00AB"[1:])
    assert a.serialize() != SharedSecret(1, b"AB").serialize()
    assert b.serialize() == SharedSecret(1, b"\x00AB").serialize()


def test_secret_validation():
    with pytest.raises(ValueError):
        SharedSecret(1 << 32, b"A")
    with pytest.raises(ValueError):
        SharedSecret(1, b"")


# --- derive_scalar --------------------------------------------------------------

def test_scalar_sha256_reference_vector():
    # SHA-256("abc"), below the group order so no re-hash round fires
    expected = 0xBA7816BF8F01CFEA414140DE5DAE2223B00361A396177A9CB410FF61F20015AD
    assert scalar_from_bytes(b"abc") == expected


def test_scalar_deterministic():
    s = random_secret()
    assert derive_scalar(s) == derive_scalar(s)


def test_scalar_range_against_hash_oracle():
    # the oracle recomputes the digest with hashlib directly and checks range
    for _ in range(1000):
        data = RND.getrandbits(8 * 12).to_bytes(12, "big")
        value = scalar_from_bytes(data)
        assert 0 < value < curve.N
        assert value == int.from_bytes(hashlib.sha256(data).digest(), "big") or \
            int.from_bytes(hashlib.sha256(data).digest(), "big") >= curve.N


def test_rehash_loop_on_out_of_range_digest(monkeypatch):
    """P(SHA-256 >= n) ~ 2^-128 makes a natural trigger unfindable, so the
    loop is exercised by injecting digests: first round maps >= n, the
    doubled input maps to a valid scalar."""
    calls = []

    def fake_digest(data, kdf):
        calls.append(data)
        if data == b"xy":
            return (curve.N + 5).to_bytes(32, "big")
        return hashlib.sha256(data).digest()

    monkeypatch.setattr(proofs, "_digest", fake_digest)
    value = scalar_from_bytes(b"xy")
    assert calls == [b"xy", b"xyxy"]
    assert value == int.from_bytes(hashlib.sha256(b"xyxy").digest(), "big")


def test_rehash_loop_excludes_zero(monkeypatch):
    def fake_digest(data, kdf):
        if data == b"z":
            return bytes(32)  # zero is not a valid private key
        return hashlib.sha256(data).digest()

    monkeypatch.setattr(proofs, "_digest", fake_digest)
    value = scalar_from_bytes(b"z")
    assert value == int.from_bytes(hashlib.sha256(b"zz").digest(), "big")


def test_iterated_kdf_chains_sha256():
    kdf = KdfConfig(KdfMode.ITERATED_HASH, iterations=3)
    expect = hashlib.sha256(hashlib.sha256(hashlib.sha256(b"abc").digest()).digest()).digest()
    assert scalar_from_bytes(b"abc", kdf) == int.from_bytes(expect, "big")
    # one iteration is exactly the plain hash
    assert scalar_from_bytes(b"abc", KdfConfig(KdfMode.ITERATED_HASH, 1)) == \
        scalar_from_bytes(b"abc")


def test_kdf_validation():
    with pytest.raises(ValueError):
        KdfConfig(KdfMode.ITERATED_HASH, 0)


# --- derive_keypair ---------------------------------------------------------------

def test_keypair_scalar_one_yields_generator(monkeypatch):
    monkeypatch.setattr(proofs, "_digest", lambda data, kdf: (1).to_bytes(32, "big"))
    _, point = derive_keypair(SharedSecret(5, b"X"))
    assert point.to_affine() == (curve.GX, curve.GY)


def test_keypair_shared_secret_premise():
    sid, plate = RND.getrandbits(32), "XY-99-Z"
    a = derive_keypair(SharedSecret.from_text(sid, plate))
    b = derive_keypair(SharedSecret.from_text(sid, plate))
    assert a[1] == b[1]


def test_keypair_matches_openssl_oracle():
    for _ in range(10):
        secret = random_secret()
        sk, point = derive_keypair(secret)
        pub = ec.derive_private_key(sk, ec.SECP256K1()).public_key().public_numbers()
        assert point.to_affine() == (pub.x, pub.y)


# --- sign / recover -----------------------------------------------------------------

def test_sign_recover_roundtrip():
    secret = random_secret()
    proof = sign_proof(secret, b"salt")
    assert recover_public_key(proof) == derive_keypair(secret)[1]


def test_sign_is_low_s_and_in_range():
    for _ in range(20):
        proof = sign_proof(random_secret(), b"s")
        assert 0 < proof.r < curve.N
        assert 0 < proof.s <= curve.HALF_N


def test_sign_deterministic_bytes():
    secret = random_secret()
    a = sign_proof(secret, b"fixed-salt")
    b = sign_proof(secret, b"fixed-salt")
    assert a == b and a.signature_bytes() == b.signature_bytes()
    assert len(a.signature_bytes()) == 65


def test_sign_rejects_empty_salt():
    with pytest.raises(ValueError):
        sign_proof(random_secret(), b"")


def test_distinct_salts_same_key():
    secret = random_secret()
    a = sign_proof(secret, b"veh-A")
    b = sign_proof(secret, b"veh-B")
    assert (a.r, a.s) != (b.r, b.s)
    assert recover_public_key(a) == recover_public_key(b)


def test_signature_verifies_under_openssl():
    from cryptography.hazmat.primitives import hashes
    from cryptography.hazmat.primitives.asymmetric.utils import encode_dss_signature
    secret = random_secret()
    proof = sign_proof(secret, b"check-me")
    sk, _ = derive_keypair(secret)
    pub = ec.derive_private_key(sk, ec.SECP256K1()).public_key()
    pub.verify(encode_dss_signature(proof.r, proof.s), proof.salt,
               ec.ECDSA(hashes.SHA256()))  # raises on failure


def test_recover_rejects_out_of_range():
    good = sign_proof(random_secret(), b"m")
    for bad in (
        TrafficProof(good.v, 0, good.s, good.salt),
        TrafficProof(good.v, curve.N, good.s, good.salt),
        TrafficProof(good.v, good.r, 0, good.salt),
        TrafficProof(good.v, good.r, curve.N - good.s, good.salt),  # high-s twin
    ):
        with pytest.raises(RecoveryFailure):
            recover_public_key(bad)


def test_recover_flipped_v_never_yields_original():
    for _ in range(20):
        secret = random_secret()
        proof = sign_proof(secret, b"flip")
        original = recover_public_key(proof)
        flipped = TrafficProof(not proof.v, proof.r, proof.s, proof.salt)
        try:
            assert recover_public_key(flipped) != original
        except RecoveryFailure:
            pass


def test_recover_off_curve_r_fails():
    # x = 5 is not on the curve; craft r = 5
    with pytest.raises(RecoveryFailure):
        recover_public_key(TrafficProof(False, 5, 1, b"m"))


# --- corroboration --------------------------------------------------------------------

def test_corroboration_completeness():
    secret = random_secret()
    assert proofs_corroborate(sign_proof(secret, b"veh-A"), sign_proof(secret, b"veh-B"))


def test_corroboration_soundness_sample():
    for _ in range(100):
        a = sign_proof(random_secret(), b"sA")
        b = sign_proof(random_secret(), b"sB")
        assert not proofs_corroborate(a, b)


def test_self_corroboration_rejected():
    proof = sign_proof(random_secret(), b"same")
    assert not proofs_corroborate(proof, proof)


def test_corroboration_never_raises_on_garbage():
    good = sign_proof(random_secret(), b"ok")
    junk = TrafficProof(True, 5, 1, b"junk")
    assert not proofs_corroborate(good, junk)
    assert not proofs_corroborate(junk, good)


# --- zero-knowledge surface -----------------------------------------------------------

def test_public_types_expose_no_secret_material():
    """Recovered keys and proofs reveal equality only: no field or accessor
    of the public types carries the scalar or the secret serialization."""
    secret = random_secret()
    sk, point = derive_keypair(secret)
    proof = sign_proof(secret, b"zk")
    leaky_names = {"sk", "scalar", "secret", "serialization", "private"}

    for obj in (point, proof):
        fields = set(obj.__dataclass_fields__)
        assert not fields & leaky_names
        for name in fields:
            value = getattr(obj, name)
            assert value != sk
            if isinstance(value, (bytes, bytearray)):
                assert secret.serialize() not in value
                assert sk.to_bytes(32, "big") not in value
