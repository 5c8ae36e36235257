"""Conformance test vectors for the proof primitives.

One record per line, comma-separated hex fields:

    serialization, scalar, compressed_pubkey, salt, v||r||s

``gen`` derives everything from a seed; ``check`` re-derives each record and
reports the first mismatching record index, so two independent
implementations of the primitives can cross-validate byte-for-byte.
"""

from __future__ import annotations

import random
import string

from . import curve
from .proofs import DEFAULT_KDF, TrafficProof, recover_public_key, scalar_from_bytes
from .proofs import SharedSecret, derive_keypair, sign_proof

_PLATE_ALPHABET = string.ascii_uppercase + string.digits + "-"


def generate(count: int, seed: int):
    """Yield (serialization, scalar, pk_bytes, salt, sig65) tuples."""
    rnd = random.Random(seed)
    for _ in range(count):
        station_id = rnd.getrandbits(32)
        plate = "".join(rnd.choice(_PLATE_ALPHABET) for _ in range(rnd.randint(4, 12)))
        salt = bytes(rnd.getrandbits(8) for _ in range(rnd.randint(4, 16)))
        secret = SharedSecret.from_text(station_id, plate)
        scalar, point = derive_keypair(secret, DEFAULT_KDF)
        proof = sign_proof(secret, salt, DEFAULT_KDF)
        yield (secret.serialize(), scalar, point.data, salt, proof.signature_bytes())


def write_vectors(path, count: int, seed: int):
    with open(path, "w") as fh:
        for serialization, scalar, pk, salt, sig in generate(count, seed):
            fh.write(",".join([
                serialization.hex(),
                scalar.to_bytes(32, "big").hex(),
                pk.hex(),
                salt.hex(),
                sig.hex(),
            ]) + "\n")


def check_vectors(path):
    """Return (ok, first_bad_index, message)."""
    with open(path) as fh:
        for index, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                fields = [bytes.fromhex(f) for f in line.split(",")]
                if len(fields) != 5:
                    raise ValueError(f"expected 5 fields, got {len(fields)}")
                serialization, scalar_b, pk, salt, sig = fields
                if len(sig) != 65 or sig[0] not in (0, 1):
                    raise ValueError("signature field must be 65 bytes of v||r||s")
            except ValueError as exc:
                return False, index, f"record {index}: unparseable ({exc})"

            scalar = scalar_from_bytes(serialization, DEFAULT_KDF)
            if scalar != int.from_bytes(scalar_b, "big"):
                return False, index, f"record {index}: scalar mismatch"
            point = curve.mul_g(scalar)
            if curve.point_to_compressed(point) != pk:
                return False, index, f"record {index}: public key mismatch"
            v = bool(sig[0])
            r = int.from_bytes(sig[1:33], "big")
            s = int.from_bytes(sig[33:65], "big")
            expect = _sign_from_serialization(serialization, salt)
            if expect != (v, r, s):
                return False, index, f"record {index}: signature mismatch"
            try:
                recovered = recover_public_key(TrafficProof(v, r, s, salt))
            except Exception:
                return False, index, f"record {index}: recovery failed"
            if recovered.data != pk:
                return False, index, f"record {index}: recovered key mismatch"
    return True, -1, "ok"


def _sign_from_serialization(serialization: bytes, salt: bytes):
    from .proofs import _sign_scalar
    return _sign_scalar(scalar_from_bytes(serialization, DEFAULT_KDF), salt)
