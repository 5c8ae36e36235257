"""Binary codecs for the extended perception message.

The proof entry layout is the wire contract this repo guarantees: exactly
71 bytes, big-endian, `object_id(2) | pid_prefix(4) | v(1) | r(32) | s(32)`.
The surrounding message layout is simulator-internal but fixed and documented
in FORMATS.md.  The salt of a proof never travels inside the entry; verifiers
rebuild it from the sender pseudonym in the message header.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .proofs import TrafficProof

PROOF_ENTRY_SIZE = 71
CPM_HEADER_SIZE = 15          # pseudonym(4) tick(8) object count(2) proof count(1)
OBJECT_RECORD_SIZE = 10       # object_id(2) x(2) y(2) vx(2) vy(2)
MAX_PROOFS_PER_CPM = 8

POSITION_QUANTUM = 0.05       # meters per LSB; i16 spans +-1638.35 m
VELOCITY_QUANTUM = 0.01       # m/s per LSB

_HEADER = struct.Struct(">IQHB")
_OBJECT = struct.Struct(">Hhhhh")


class LengthError(ValueError):
    """Input buffer has the wrong length for the fixed-size record."""


class MalformedMessage(ValueError):
    """Message bytes violate the layout (truncation, counts, references)."""


@dataclass(frozen=True)
class ProofEntry:
    """One 71-byte traffic-proof record inside a message."""

    object_id: int
    pid_prefix: int
    v: bool
    r: int
    s: int

    def attach_salt(self, salt: bytes) -> TrafficProof:
        return TrafficProof(self.v, self.r, self.s, salt)


@dataclass(frozen=True)
class PerceivedObject:
    object_id: int
    x: float
    y: float
    vx: float
    vy: float


@dataclass(frozen=True)
class CpmMessage:
    sender_pseudonym: int
    tick: int
    objects: tuple = ()
    proofs: tuple = ()


def encode_proof_entry(entry: ProofEntry) -> bytes:
    return (
        entry.object_id.to_bytes(2, "big")
        + entry.pid_prefix.to_bytes(4, "big")
        + (b"\x01" if entry.v else b"\x00")
        + entry.r.to_bytes(32, "big")
        + entry.s.to_bytes(32, "big")
    )


def decode_proof_entry(data: bytes) -> ProofEntry:
    """Inverse of encode_proof_entry; r/s range checks happen at recovery."""
    if len(data) != PROOF_ENTRY_SIZE:
        raise LengthError(f"proof entry must be {PROOF_ENTRY_SIZE} bytes, got {len(data)}")
    if data[6] not in (0, 1):
        raise ValueError(f"recovery flag byte must be 0 or 1, got {data[6]}")
    return ProofEntry(
        object_id=int.from_bytes(data[0:2], "big"),
        pid_prefix=int.from_bytes(data[2:6], "big"),
        v=bool(data[6]),
        r=int.from_bytes(data[7:39], "big"),
        s=int.from_bytes(data[39:71], "big"),
    )


def _quantize(value: float, quantum: float) -> int:
    q = int(round(value / quantum))
    if not -32768 <= q <= 32767:
        raise MalformedMessage(f"field value {value} outside encodable range")
    return q


def encode_cpm(msg: CpmMessage) -> bytes:
    if len(msg.proofs) > MAX_PROOFS_PER_CPM:
        raise MalformedMessage(f"at most {MAX_PROOFS_PER_CPM} proof entries allowed")
    known_ids = {o.object_id for o in msg.objects}
    out = [_HEADER.pack(msg.sender_pseudonym, msg.tick, len(msg.objects), len(msg.proofs))]
    for obj in msg.objects:
        out.append(_OBJECT.pack(
            obj.object_id,
            _quantize(obj.x, POSITION_QUANTUM),
            _quantize(obj.y, POSITION_QUANTUM),
            _quantize(obj.vx, VELOCITY_QUANTUM),
            _quantize(obj.vy, VELOCITY_QUANTUM),
        ))
    for entry in msg.proofs:
        if entry.object_id not in known_ids:
            raise MalformedMessage(f"proof references unknown object_id {entry.object_id}")
        out.append(encode_proof_entry(entry))
    return b"".join(out)


def decode_cpm(data: bytes) -> CpmMessage:
    if len(data) < CPM_HEADER_SIZE:
        raise MalformedMessage("truncated header")
    pseudonym, tick, n_objects, n_proofs = _HEADER.unpack_from(data)
    if n_proofs > MAX_PROOFS_PER_CPM:
        raise MalformedMessage(f"proof count {n_proofs} exceeds {MAX_PROOFS_PER_CPM}")
    expected = CPM_HEADER_SIZE + n_objects * OBJECT_RECORD_SIZE + n_proofs * PROOF_ENTRY_SIZE
    if len(data) != expected:
        raise MalformedMessage(f"length {len(data)} does not match declared counts ({expected})")
    offset = CPM_HEADER_SIZE
    objects = []
    for _ in range(n_objects):
        oid, qx, qy, qvx, qvy = _OBJECT.unpack_from(data, offset)
        objects.append(PerceivedObject(
            oid,
            qx * POSITION_QUANTUM,
            qy * POSITION_QUANTUM,
            qvx * VELOCITY_QUANTUM,
            qvy * VELOCITY_QUANTUM,
        ))
        offset += OBJECT_RECORD_SIZE
    known_ids = {o.object_id for o in objects}
    proofs = []
    for _ in range(n_proofs):
        try:
            entry = decode_proof_entry(data[offset:offset + PROOF_ENTRY_SIZE])
        except ValueError as exc:
            raise MalformedMessage(str(exc)) from exc
        if entry.object_id not in known_ids:
            raise MalformedMessage(f"proof references unknown object_id {entry.object_id}")
        proofs.append(entry)
        offset += PROOF_ENTRY_SIZE
    return CpmMessage(pseudonym, tick, tuple(objects), tuple(proofs))


def cpm_size_bytes(msg: CpmMessage) -> int:
    """Wire size without encoding; the bandwidth ledger calls this per send."""
    return (CPM_HEADER_SIZE
            + len(msg.objects) * OBJECT_RECORD_SIZE
            + len(msg.proofs) * PROOF_ENTRY_SIZE)
