"""On-board station stack: prover-side inclusion management and the
verifier database with stash-and-release semantics.

A station never sees simulator ground truth.  Its inputs are local camera
observations (plate text plus, when the target was also heard on the radio,
its pseudonym), received messages, and the clock.  Each observation and
received object may carry an opaque ``tag`` that the station stores and
returns untouched so the caller can do its own bookkeeping; station logic
never branches on tags.

Verification state is keyed by recovered public key.  A key becomes verified
when proofs from two distinct prover pseudonyms recover to it, or when one
remote proof arrives for a key the ego can derive itself (it saw and heard
the target).  Everything pending expires ``pending_ttl`` seconds after it
was first seen; expiry, not refresh, is what bounds memory and what the
per-prover spam counters are reconciled against.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .proofs import DEFAULT_KDF, KdfConfig, cached_keypair, cached_recover, cached_sign
from .wire import CpmMessage, PerceivedObject, ProofEntry, POSITION_QUANTUM, VELOCITY_QUANTUM

NEVER = -1 << 30


@dataclass(frozen=True)
class StationConfig:
    proof_repeat_interval: int = 3
    max_proofs_per_cpm: int = 8
    pending_ttl: int = 30
    spam_limit: int = 32
    kdf: KdfConfig = DEFAULT_KDF

    def __post_init__(self):
        if min(self.proof_repeat_interval, self.max_proofs_per_cpm,
               self.pending_ttl, self.spam_limit) <= 0:
            raise ValueError("all station parameters must be positive")
        if self.max_proofs_per_cpm > 8:
            raise ValueError("at most 8 proof entries fit in a message")


@dataclass
class PendingProof:
    prover_pseudonym: int
    pid_prefix: int
    first_seen: int
    v: bool
    r: int
    s: int


@dataclass
class _PendingBucket:
    provers: dict = field(default_factory=dict)   # prover pseudonym -> PendingProof
    stash: deque = field(default_factory=deque)   # (tick, PerceivedObject, tag)


@dataclass
class VerifiedRecord:
    match_tick: int
    provers: set


@dataclass
class VerificationEvent:
    """Emitted at the pending->verified transition of one recovered key."""

    key: bytes
    tick: int
    ttv: int
    released: list                 # stashed (tick, PerceivedObject, tag) now unblocked
    provers: list                  # contributing (pseudonym, v, r, s) tuples
    ego_assisted: bool = False


def _salt_bytes(pseudonym: int) -> bytes:
    return pseudonym.to_bytes(4, "big")


class Station:
    """One vehicle's CPS stack.  ``attach_proofs``/``verify_received`` pick
    between the conventional service and the proof-of-traffic extension."""

    def __init__(self, own_pseudonym: int, config: StationConfig,
                 attach_proofs: bool = True, verify_received: bool = True):
        self.cfg = config
        self.own_pseudonym = own_pseudonym
        self.attach_proofs = attach_proofs
        self.verify_received = verify_received

        # prover side
        self._object_ids = {}          # plate -> stable per-station object id
        self._next_object_id = 0
        self._last_proof = {}          # target pseudonym -> tick last included
        self._obs = []                 # this tick's observations
        self._last_linked = {}         # target pseudonym -> tick last seen+heard
        self._linked_exp = deque()
        self._pid_key = {}             # target pseudonym -> derived key bytes
        self._known_keys = {}          # key bytes -> target pseudonym (ego shortcut)

        # verifier side; (sender, object_id) pairs are packed into one int key
        self._last_heard = {}          # sender pseudonym -> tick
        self._pending = {}             # key bytes -> _PendingBucket
        self._verified = {}            # key bytes -> VerifiedRecord
        self._spam = {}                # prover pseudonym -> unmatched pending count
        self._assoc = {}               # sender<<16|object_id -> key bytes
        self._assoc_seen = {}          # sender<<16|object_id -> tick of last proof
        self._assoc_exp = deque()
        self._side = {}                # sender<<16|object_id -> deque of unproven objects
        self._side_exp = deque()
        self._pending_exp = deque()    # (first_seen, key, prover pseudonym)

        self.n_entries_processed = 0
        self.n_entries_recovery_failed = 0
        self.n_entries_spam_rejected = 0
        self.n_objects_received = 0
        self.n_objects_forwarded = 0
        self.n_objects_released = 0
        self.n_objects_expired = 0

    # -- prover ---------------------------------------------------------------

    def heard_recently(self, pseudonym: int, tick: int) -> bool:
        last = self._last_heard.get(pseudonym)
        return last is not None and tick - last <= self.cfg.pending_ttl

    def ingest_local_perception(self, observations, tick: int):
        """Take this tick's camera output.

        ``observations`` is a list of (pseudonym-or-None, plate, x, y, vx, vy,
        tag) tuples; pseudonym is present only when the plate/pseudonym link
        exists (target both seen and heard).  Returns verification events the
        new ego knowledge unblocks (a single pending remote proof becomes
        sufficient once the ego itself holds the shared secret).
        """
        self._obs = observations
        events = []
        if not self.verify_received:
            return events
        for obs in observations:
            pid = obs[0]
            if pid is None:
                continue
            self._last_linked[pid] = tick
            self._linked_exp.append((tick, pid))
            if pid not in self._pid_key:
                key = cached_keypair(pid, obs[1].encode("utf-8"), self.cfg.kdf)[1]
                self._pid_key[pid] = key
                self._known_keys[key] = pid
                bucket = self._pending.get(key)
                if bucket and bucket.provers:
                    events.append(self._verify(key, bucket, tick, None, ego=True))
        return events

    def build_cpm(self, tick: int) -> CpmMessage:
        """Assemble this second's message from the current observations.

        All perceived objects are included; proofs go to at most
        ``max_proofs_per_cpm`` linked targets whose last proof is at least
        ``proof_repeat_interval`` old, oldest-proved first, ties broken by
        ascending object id.
        """
        objects = []
        eligible = []
        for obs in self._obs:
            pid, plate = obs[0], obs[1]
            oid = self._object_ids.get(plate)
            if oid is None:
                oid = self._next_object_id
                self._object_ids[plate] = oid
                self._next_object_id = (self._next_object_id + 1) & 0xFFFF
            objects.append(PerceivedObject(
                oid,
                round(obs[2] / POSITION_QUANTUM) * POSITION_QUANTUM,
                round(obs[3] / POSITION_QUANTUM) * POSITION_QUANTUM,
                round(obs[4] / VELOCITY_QUANTUM) * VELOCITY_QUANTUM,
                round(obs[5] / VELOCITY_QUANTUM) * VELOCITY_QUANTUM,
            ))
            if self.attach_proofs and pid is not None:
                last = self._last_proof.get(pid, NEVER)
                if tick - last >= self.cfg.proof_repeat_interval:
                    eligible.append((last, oid, pid, plate))
        entries = []
        if eligible:
            eligible.sort(key=lambda e: (e[0], e[1]))
            salt = _salt_bytes(self.own_pseudonym)
            for last, oid, pid, plate in eligible[:self.cfg.max_proofs_per_cpm]:
                v, r, s = cached_sign(pid, plate.encode("utf-8"), salt, self.cfg.kdf)
                entries.append(ProofEntry(oid, pid, v, r, s))
                self._last_proof[pid] = tick
        return CpmMessage(self.own_pseudonym, tick, tuple(objects), tuple(entries))

    def change_pseudonym(self, new_pseudonym: int, tick: int):
        """Adopt a fresh identity; future proofs carry the new salt, so every
        target must be proved again even if recently included."""
        self.own_pseudonym = new_pseudonym
        self._last_proof.clear()

    # -- verifier ---------------------------------------------------------------

    def handle_cpm(self, msg: CpmMessage, tick: int, tags=None):
        """Process one received message.

        Returns (events, forwarded_tags): verification events triggered by the
        message's proof entries, plus the tags of objects that went straight
        to the planner because their target was already verified.  Without
        verification enabled everything forwards immediately.
        """
        sender = msg.sender_pseudonym
        self._last_heard[sender] = tick
        events = []
        forwarded = []
        if tags is None:
            tags = (None,) * len(msg.objects)

        if not self.verify_received:
            if msg.objects:
                n = len(msg.objects)
                self.n_objects_received += n
                self.n_objects_forwarded += n
                forwarded.extend(tags)
            return events, forwarded

        if msg.proofs:
            salt = _salt_bytes(sender)
            spam = self._spam
            limit = self.cfg.spam_limit
            sender_base = sender << 16
            self.n_entries_processed += len(msg.proofs)
            for entry in msg.proofs:
                # Disregard floods before paying for recovery (unmatched-proof cap).
                if spam.get(sender, 0) >= limit:
                    self.n_entries_spam_rejected += 1
                    continue
                key = cached_recover(entry.v, entry.r, entry.s, salt)
                if key is None:
                    self.n_entries_recovery_failed += 1
                    continue
                skey = sender_base | entry.object_id
                self._assoc[skey] = key
                if skey not in self._assoc_seen:
                    self._assoc_exp.append((tick, skey))
                self._assoc_seen[skey] = tick
                side = self._side.pop(skey, None)

                record = self._verified.get(key)
                if record is not None:
                    record.provers.add(sender)
                    if side:
                        self.n_objects_forwarded += len(side)
                        forwarded.extend(item[2] for item in side)
                    continue
                bucket = self._pending.get(key)
                if bucket is None:
                    bucket = self._pending[key] = _PendingBucket()
                if side:
                    bucket.stash.extend(side)
                if sender in bucket.provers:
                    continue  # duplicate from the same prover refreshes nothing
                if bucket.provers or key in self._known_keys:
                    events.append(self._verify(key, bucket, tick, (sender, entry)))
                else:
                    bucket.provers[sender] = PendingProof(
                        sender, entry.pid_prefix, tick, entry.v, entry.r, entry.s)
                    spam[sender] = spam.get(sender, 0) + 1
                    self._pending_exp.append((tick, key, sender))

        if msg.objects:
            self.n_objects_received += len(msg.objects)
            assoc = self._assoc
            pending = self._pending
            verified = self._verified
            sender_base = sender << 16
            for obj, tag in zip(msg.objects, tags):
                skey = sender_base | obj.object_id
                key = assoc.get(skey)
                if key is not None:
                    if key in verified:
                        self.n_objects_forwarded += 1
                        forwarded.append(tag)
                        continue
                    bucket = pending.get(key)
                    if bucket is not None:
                        bucket.stash.append((tick, obj, tag))
                        continue
                dq = self._side.get(skey)
                if dq is None:
                    dq = self._side[skey] = deque()
                dq.append((tick, obj, tag))
                self._side_exp.append((tick, skey))
        return events, forwarded

    def _verify(self, key, bucket, tick, trigger, ego=False):
        """Move a key from pending to verified and flush its stash."""
        provers = [(p.prover_pseudonym, p.v, p.r, p.s) for p in bucket.provers.values()]
        first = min(p.first_seen for p in bucket.provers.values()) if bucket.provers else tick
        if trigger is not None:
            sender, entry = trigger
            provers.append((sender, entry.v, entry.r, entry.s))
        spam = self._spam
        for p in bucket.provers.values():
            left = spam.get(p.prover_pseudonym, 0) - 1
            if left > 0:
                spam[p.prover_pseudonym] = left
            else:
                spam.pop(p.prover_pseudonym, None)
        released = list(bucket.stash)
        self.n_objects_released += len(released)
        del self._pending[key]
        self._verified[key] = VerifiedRecord(tick, {p[0] for p in provers})
        return VerificationEvent(
            key, tick, tick - first, released, provers,
            ego_assisted=ego or key in self._known_keys and len(bucket.provers) < 2,
        )

    def expire_state(self, tick: int):
        """Drop pending proofs, stashed/buffered objects, associations and
        plate links that aged past ``pending_ttl``; reconcile spam counters."""
        ttl = self.cfg.pending_ttl
        horizon = tick - ttl

        dq = self._pending_exp
        while dq and dq[0][0] < horizon:
            first_seen, key, pid = dq.popleft()
            bucket = self._pending.get(key)
            if bucket is None:
                continue
            entry = bucket.provers.get(pid)
            if entry is None or entry.first_seen != first_seen:
                continue  # re-inserted later; a fresher expiry record exists
            del bucket.provers[pid]
            left = self._spam.get(pid, 0) - 1
            if left > 0:
                self._spam[pid] = left
            else:
                self._spam.pop(pid, None)
            if not bucket.provers:
                self.n_objects_expired += len(bucket.stash)
                del self._pending[key]

        dq = self._side_exp
        while dq and dq[0][0] < horizon:
            _, skey = dq.popleft()
            buf = self._side.get(skey)
            if buf is None:
                continue
            while buf and buf[0][0] < horizon:
                buf.popleft()
                self.n_objects_expired += 1
            if not buf:
                del self._side[skey]

        dq = self._assoc_exp
        while dq and dq[0][0] < horizon:
            stamp, skey = dq.popleft()
            last = self._assoc_seen.get(skey)
            if last is None:
                continue
            if last < horizon:
                del self._assoc_seen[skey]
                self._assoc.pop(skey, None)
            elif last != stamp:
                self._assoc_exp.append((last, skey))

        dq = self._linked_exp
        while dq and dq[0][0] < horizon:
            stamp, pid = dq.popleft()
            last = self._last_linked.get(pid)
            if last is None:
                continue
            if last < horizon:
                del self._last_linked[pid]
                self._last_proof.pop(pid, None)
                key = self._pid_key.pop(pid, None)
                if key is not None and self._known_keys.get(key) == pid:
                    del self._known_keys[key]
            elif last != stamp:
                self._linked_exp.append((last, pid))

    # -- introspection (tests and diagnostics) ---------------------------------

    @property
    def diag(self):
        return {
            "entries_processed": self.n_entries_processed,
            "entries_recovery_failed": self.n_entries_recovery_failed,
            "entries_spam_rejected": self.n_entries_spam_rejected,
            "objects_received": self.n_objects_received,
            "objects_forwarded": self.n_objects_forwarded,
            "objects_released": self.n_objects_released,
            "objects_expired": self.n_objects_expired,
        }

    def pending_count(self, prover_pseudonym: int) -> int:
        return self._spam.get(prover_pseudonym, 0)

    def is_verified(self, key: bytes) -> bool:
        return key in self._verified

    def stash_sizes(self):
        stashed = sum(len(b.stash) for b in self._pending.values())
        buffered = sum(len(d) for d in self._side.values())
        return stashed, buffered
