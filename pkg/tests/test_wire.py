"""Wire contract: the 71-byte proof entry, message layout arithmetic,
round-trip identity, and decoder robustness under fuzzed input."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from zkpot import wire
from zkpot.wire import (CpmMessage, LengthError, MalformedMessage, PerceivedObject,
                        ProofEntry, cpm_size_bytes, decode_cpm, decode_proof_entry,
                        encode_cpm, encode_proof_entry)

RND = random.Random(0x71)


def random_entry(rnd=RND, object_id=None):
    return ProofEntry(
        object_id=rnd.getrandbits(16) if object_id is None else object_id,
        pid_prefix=rnd.getrandbits(32),
        v=bool(rnd.getrandbits(1)),
        r=rnd.getrandbits(256),
        s=rnd.getrandbits(256),
    )


def grid_value(rnd, quantum, lo, hi):
    return rnd.randint(lo, hi) * quantum


def random_cpm(rnd=RND, max_objects=5, max_proofs=None):
    n_obj = rnd.randint(0, max_objects)
    objects = tuple(
        PerceivedObject(
            oid,
            grid_value(rnd, wire.POSITION_QUANTUM, -32768, 32767),
            grid_value(rnd, wire.POSITION_QUANTUM, -32768, 32767),
            grid_value(rnd, wire.VELOCITY_QUANTUM, -32768, 32767),
            grid_value(rnd, wire.VELOCITY_QUANTUM, -32768, 32767),
        )
        for oid in rnd.sample(range(1 << 16), n_obj)
    )
    cap = min(len(objects), 8) if max_proofs is None else max_proofs
    proofs = tuple(random_entry(rnd, object_id=obj.object_id)
                   for obj in objects[:rnd.randint(0, cap)])
    return CpmMessage(rnd.getrandbits(32), rnd.getrandbits(64), objects, proofs)


# --- proof entry ----------------------------------------------------------------

def test_entry_is_exactly_71_bytes():
    for _ in range(100):
        assert len(encode_proof_entry(random_entry())) == 71


def test_entry_minimal_field_layout():
    entry = ProofEntry(object_id=0, pid_prefix=0, v=False, r=1, s=1)
    expect = (b"\x00\x00" + b"\x00\x00\x00\x00" + b"\x00"
              + b"\x00" * 31 + b"\x01" + b"\x00" * 31 + b"\x01")
    assert encode_proof_entry(entry) == expect


def test_entry_roundtrip_bulk():
    for _ in range(10_000):
        entry = random_entry()
        assert decode_proof_entry(encode_proof_entry(entry)) == entry


def test_entry_length_errors():
    with pytest.raises(LengthError):
        decode_proof_entry(b"\x00" * 70)
    with pytest.raises(LengthError):
        decode_proof_entry(b"\x00" * 72)


def test_entry_bad_recovery_flag():
    data = bytearray(encode_proof_entry(random_entry()))
    data[6] = 0x02
    with pytest.raises(ValueError):
        decode_proof_entry(bytes(data))


# --- message --------------------------------------------------------------------

def test_empty_cpm_is_15_bytes():
    msg = CpmMessage(1, 2)
    assert len(encode_cpm(msg)) == 15
    assert cpm_size_bytes(msg) == 15


def test_cpm_size_arithmetic():
    rnd = random.Random(187)
    objects = tuple(PerceivedObject(i, 0.0, 0.0, 0.0, 0.0) for i in range(3))
    proofs = tuple(random_entry(rnd, object_id=i) for i in range(2))
    msg = CpmMessage(9, 100, objects, proofs)
    assert len(encode_cpm(msg)) == 15 + 3 * 10 + 2 * 71 == 187


def test_one_proof_adds_exactly_71_bytes():
    obj = PerceivedObject(4, 1.0, 2.0, 3.0, 4.0)
    bare = CpmMessage(1, 1, (obj,))
    proved = CpmMessage(1, 1, (obj,), (random_entry(object_id=4),))
    assert len(encode_cpm(proved)) - len(encode_cpm(bare)) == 71


def test_cpm_roundtrip_bulk():
    for _ in range(1000):
        msg = random_cpm()
        assert decode_cpm(encode_cpm(msg)) == msg


def test_size_matches_encode_length():
    for _ in range(1000):
        msg = random_cpm()
        assert cpm_size_bytes(msg) == len(encode_cpm(msg))


def test_proof_count_limit():
    objects = tuple(PerceivedObject(i, 0.0, 0.0, 0.0, 0.0) for i in range(9))
    proofs = tuple(random_entry(object_id=i) for i in range(9))
    with pytest.raises(MalformedMessage):
        encode_cpm(CpmMessage(1, 1, objects, proofs))


def test_decode_rejects_proof_count_over_8():
    msg = random_cpm()
    data = bytearray(encode_cpm(msg))
    data[14] = 9
    with pytest.raises(MalformedMessage):
        decode_cpm(bytes(data))


def test_dangling_proof_object_id():
    obj = PerceivedObject(1, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(MalformedMessage):
        encode_cpm(CpmMessage(1, 1, (obj,), (random_entry(object_id=2),)))


def test_encode_rejects_out_of_range_position():
    obj = PerceivedObject(1, 5000.0, 0.0, 0.0, 0.0)  # beyond i16 at 0.05 m
    with pytest.raises(MalformedMessage):
        encode_cpm(CpmMessage(1, 1, (obj,)))


def test_truncation_raises_not_crashes():
    msg = random_cpm(max_objects=4)
    data = encode_cpm(msg)
    for cut in range(len(data)):
        with pytest.raises((MalformedMessage, LengthError)):
            decode_cpm(data[:cut])


@settings(max_examples=300, deadline=None)
@given(st.binary(min_size=0, max_size=400))
def test_fuzz_garbage_never_crashes(data):
    try:
        decode_cpm(data)
    except (MalformedMessage, LengthError, ValueError):
        pass


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_fuzz_bitflips_never_crash(data):
    msg = random_cpm(random.Random(data.draw(st.integers(0, 2**32))))
    raw = bytearray(encode_cpm(msg))
    if raw:
        pos = data.draw(st.integers(0, len(raw) - 1))
        raw[pos] ^= data.draw(st.integers(1, 255))
    try:
        out = decode_cpm(bytes(raw))
    except (MalformedMessage, LengthError, ValueError):
        return
    assert isinstance(out, CpmMessage)
