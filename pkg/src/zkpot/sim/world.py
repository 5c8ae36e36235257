"""Discrete-time world: one tick is one simulated second.

Phase order inside a tick: mobility, perception, behavior (station
ingest/build or attacker emission), broadcast delivery, receive+expiry,
pseudonym changes, metrics snapshot.  All randomness comes from named
child streams of the scenario seed, in a fixed spawn order, so enabling an
attacker or switching protocol mode never perturbs mobility or channel
draws.

Ground truth stays on this side of the fence: stations receive pseudonyms,
plates, poses and opaque per-object tags; the ledger keys its accounting by
roster index (fabricated objects get negative tags).
"""

from __future__ import annotations

import numpy as np

from .. import curve, proofs
from ..station import Station
from ..wire import CpmMessage, PerceivedObject, ProofEntry, cpm_size_bytes
from ..wire import POSITION_QUANTUM, VELOCITY_QUANTUM
from .channel import Channel
from .manhattan import ManhattanMobility
from .metrics import MetricsLedger
from .perception import Perception
from .scenario import ConfigError, ManhattanGrid, Mode, ScenarioSpec, TraceFile
from .trace import TraceMobility, load_trace

KIND_UNCONNECTED = "unconnected"
KIND_CONNECTED = "connected"
KIND_POT = "pot"
KIND_SPAM = "spam_attacker"
KIND_REPLAY = "replay_attacker"
KIND_SILENCE = "silence_attacker"

ATTACKER_KINDS = (KIND_SPAM, KIND_REPLAY, KIND_SILENCE)

# Fixed spawn order of the named RNG streams.
_STREAMS = ("init", "mobility", "channel", "pseudonym", "attacker")


def rng_streams(seed: int):
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {name: np.random.default_rng(child)
            for name, child in zip(_STREAMS, children)}


def _fabricated_tag(attacker: int, object_id: int) -> int:
    return -(attacker * 65536 + object_id + 1)


class World:
    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.mode = spec.mode
        streams = rng_streams(spec.seed)
        self._rng_init = streams["init"]
        self._rng_pseudonym = streams["pseudonym"]
        self._rng_attacker = streams["attacker"]

        if isinstance(spec.mobility, ManhattanGrid):
            self.mobility = ManhattanMobility(spec.mobility, streams["mobility"])
        elif isinstance(spec.mobility, TraceFile):
            self.mobility = TraceMobility(load_trace(spec.mobility.path))
        else:
            raise ConfigError(f"unsupported mobility source {spec.mobility!r}")
        n = self.n = self.mobility.n
        self.duration = spec.duration_ticks

        self.kinds = self._assign_kinds()
        if self.mode.kind == Mode.LOCAL_ONLY and spec.attackers.total() > 0:
            raise ConfigError("local_only scenarios cannot contain attackers")

        self._used_pseudonyms = set()
        self.pseudonyms = [self._draw_pseudonym(self._rng_init) for _ in range(n)]
        self.plates = [f"GT-{i:06d}" for i in range(n)]

        cfg = spec.station_config()
        pot_mode = self.mode.kind == Mode.POT
        self.stations = [None] * n
        for i, kind in enumerate(self.kinds):
            if kind == KIND_CONNECTED:
                self.stations[i] = Station(self.pseudonyms[i], cfg,
                                           attach_proofs=False, verify_received=False)
            elif kind == KIND_POT:
                self.stations[i] = Station(self.pseudonyms[i], cfg,
                                           attach_proofs=True, verify_received=True)
            elif kind == KIND_SILENCE:
                self.stations[i] = Station(self.pseudonyms[i], cfg,
                                           attach_proofs=False, verify_received=pot_mode)

        self.perception = Perception(spec.perception)
        self.channel = Channel(spec.channel, streams["channel"])
        connected = np.array([k != KIND_UNCONNECTED for k in self.kinds])
        honest = np.array([k not in ATTACKER_KINDS for k in self.kinds])
        self.ledger = MetricsLedger(n, self.duration, connected, honest)
        # spam attackers receive nothing useful; skip their inbox entirely
        self._receivers = connected & np.array([k != KIND_SPAM for k in self.kinds])

        self._replay_heard = {i: [] for i, k in enumerate(self.kinds) if k == KIND_REPLAY}
        self._replay_flags = [k == KIND_REPLAY for k in self.kinds]
        self._spam_next_oid = {i: 0 for i, k in enumerate(self.kinds) if k == KIND_SPAM}
        self.replayed_proofs = set()     # (replayer pseudonym, r, s) oracle
        self.events = []                 # (receiver, VerificationEvent)
        self.current_seen = None

        proofs.clear_caches()

    # -- setup -------------------------------------------------------------------

    def _assign_kinds(self):
        mix = self.spec.attackers
        if self.mode.kind == Mode.LOCAL_ONLY:
            honest = KIND_UNCONNECTED
        elif self.mode.kind == Mode.CONVENTIONAL:
            honest = KIND_CONNECTED
        else:
            honest = KIND_POT
        kinds = [honest] * self.n
        if mix.total() > self.n:
            raise ConfigError("attacker counts exceed the vehicle count")
        slots = self._rng_init.permutation(self.n)[:mix.total()]
        roles = ([KIND_SPAM] * mix.spam + [KIND_REPLAY] * mix.replay
                 + [KIND_SILENCE] * mix.silence)
        for slot, role in zip(slots, roles):
            kinds[int(slot)] = role
        return kinds

    def _draw_pseudonym(self, rng) -> int:
        while True:
            pid = int(rng.integers(0, 1 << 32))
            if pid not in self._used_pseudonyms:
                self._used_pseudonyms.add(pid)
                return pid

    # -- main loop ----------------------------------------------------------------

    def run(self):
        for tick in range(self.duration):
            self.step(tick)
        return self.ledger

    def step(self, tick: int):
        mob = self.mobility
        mob.step(tick)
        x, y, active = mob.x, mob.y, mob.active
        seen = self.perception.seen_matrix(x, y, mob.heading_deg, active)
        self.current_seen = seen

        # --- behavior / send phase
        ledger = self.ledger
        kinds = self.kinds
        pids = self.pseudonyms
        outbox = [None] * self.n
        si, sj = np.nonzero(seen)
        seen_by = [[] for _ in range(self.n)]
        for k in range(si.size):
            seen_by[si[k]].append(int(sj[k]))

        for i in range(self.n):
            if not active[i]:
                continue
            kind = kinds[i]
            targets = seen_by[i]
            add_local = ledger.n_local[i].add
            add_avail = ledger.n_available[i].add
            for j in targets:
                add_local(j)
                add_avail(j)
            if kind == KIND_UNCONNECTED:
                continue
            if kind == KIND_SPAM:
                outbox[i] = self._spam_cpm(i, tick)
            elif kind == KIND_REPLAY:
                outbox[i] = self._replay_cpm(i, tick)
            else:
                st = self.stations[i]
                linked = st.verify_received or st.attach_proofs
                obs = []
                for j in targets:
                    pid = pids[j] if linked and st.heard_recently(pids[j], tick) else None
                    obs.append((pid, self.plates[j], float(x[j]), float(y[j]),
                                float(mob.vx[j]), float(mob.vy[j]), j))
                for ev in st.ingest_local_perception(obs, tick):
                    self._apply_event(i, ev, tick)
                if kind != KIND_SILENCE:
                    msg = st.build_cpm(tick)
                    outbox[i] = (msg, tuple(o[6] for o in obs))
            if outbox[i] is not None:
                ledger.record_tx(tick, i, cpm_size_bytes(outbox[i][0]))

        # --- delivery + receive phase
        senders = np.array([m is not None for m in outbox])
        if senders.any():
            delivered = self.channel.deliveries(x, y, senders, self._receivers)
            ds, dr = np.nonzero(delivered)
            stations = self.stations
            replay = self._replay_flags
            empty = [m is not None and not m[0].objects and not m[0].proofs
                     for m in outbox]
            for s, r in zip(ds.tolist(), dr.tolist()):
                msg, tags = outbox[s]
                if replay[r]:
                    self._replay_heard[r].append((msg, tags))
                    continue
                st = stations[r]
                if empty[s]:
                    st._last_heard[msg.sender_pseudonym] = tick
                    continue
                ledger.add_received(r, tags)
                events, forwarded = st.handle_cpm(msg, tick, tags)
                if forwarded:
                    ledger.add_available(r, forwarded)
                for ev in events:
                    self._apply_event(r, ev, tick)

        for st in self.stations:
            if st is not None:
                st.expire_state(tick)

        # --- pseudonym changes (all vehicles draw, keeping the stream stable)
        u = self._rng_pseudonym.random(self.n)
        for i in np.nonzero(u < self.spec.pseudonym_change_prob)[0]:
            i = int(i)
            pids[i] = self._draw_pseudonym(self._rng_pseudonym)
            if self.stations[i] is not None:
                self.stations[i].change_pseudonym(pids[i], tick)

        ledger.snapshot(tick)

    def _apply_event(self, receiver: int, event, tick: int):
        self.ledger.add_available(receiver, [item[2] for item in event.released])
        self.ledger.record_ttv(tick, event.ttv, receiver)
        self.events.append((receiver, event))

    # -- attacker behaviors ----------------------------------------------------------

    def _spam_cpm(self, i: int, tick: int):
        """Fabricate objects at random in-range positions with random proofs."""
        rng = self._rng_attacker
        mix = self.spec.attackers
        prange = self.spec.perception.range_m
        objs = []
        tags = []
        entries = []
        for _ in range(mix.spam_fabrication_count):
            oid = self._spam_next_oid[i]
            self._spam_next_oid[i] = (oid + 1) & 0xFFFF
            rad = prange * np.sqrt(rng.random())
            ang = 2.0 * np.pi * rng.random()
            px = self.mobility.x[i] + rad * np.cos(ang)
            py = self.mobility.y[i] + rad * np.sin(ang)
            spd = 15.0 * rng.random()
            vang = 2.0 * np.pi * rng.random()
            objs.append(PerceivedObject(
                oid,
                round(px / POSITION_QUANTUM) * POSITION_QUANTUM,
                round(py / POSITION_QUANTUM) * POSITION_QUANTUM,
                round(spd * np.cos(vang) / VELOCITY_QUANTUM) * VELOCITY_QUANTUM,
                round(spd * np.sin(vang) / VELOCITY_QUANTUM) * VELOCITY_QUANTUM,
            ))
            tags.append(_fabricated_tag(i, oid))
            entries.append(ProofEntry(
                oid,
                int(rng.integers(0, 1 << 32)),
                bool(rng.integers(0, 2)),
                self._random_scalar(rng),
                self._random_scalar(rng),
            ))
        msg = CpmMessage(self.pseudonyms[i], tick, tuple(objs), tuple(entries))
        return msg, tuple(tags)

    @staticmethod
    def _random_scalar(rng) -> int:
        return int.from_bytes(rng.bytes(32), "big") % (int(curve.N) - 1) + 1

    def _replay_cpm(self, i: int, tick: int):
        """Re-broadcast proof entries (and their objects) heard last tick,
        verbatim, under this attacker's own header."""
        heard = self._replay_heard[i]
        self._replay_heard[i] = []
        candidates = []
        for msg, tags in heard:
            by_oid = {obj.object_id: (obj, tag) for obj, tag in zip(msg.objects, tags)}
            for entry in msg.proofs:
                hit = by_oid.get(entry.object_id)
                if hit is not None:
                    candidates.append((entry, hit[0], hit[1]))
        if not candidates:
            return None
        order = self._rng_attacker.permutation(len(candidates))
        objs = []
        tags = []
        entries = []
        used_oids = set()
        own = self.pseudonyms[i]
        for idx in order:
            entry, obj, tag = candidates[int(idx)]
            if entry.object_id in used_oids:
                continue
            used_oids.add(entry.object_id)
            objs.append(obj)
            tags.append(tag)
            entries.append(entry)
            self.replayed_proofs.add((own, entry.r, entry.s))
            if len(entries) == 8:
                break
        msg = CpmMessage(own, tick, tuple(objs), tuple(entries))
        return msg, tuple(tags)

    # -- diagnostics ------------------------------------------------------------------

    def diagnostics(self):
        total = {}
        for st in self.stations:
            if st is None:
                continue
            for key, value in st.diag.items():
                total[key] = total.get(key, 0) + value
        return total
