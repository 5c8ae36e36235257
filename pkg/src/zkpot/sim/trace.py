"""Trace-file mobility: replay per-tick poses from a CSV.

Format (header required): ``tick,vehicle_id,x,y,heading_deg``.  Ticks must be
contiguous per vehicle; vehicles exist exactly for their trace span, so
spawn/despawn mid-run is allowed.  Velocities are finite differences of the
played-back positions.
"""

from __future__ import annotations

import csv

import numpy as np

HEADER = ["tick", "vehicle_id", "x", "y", "heading_deg"]


class ParseError(ValueError):
    pass


class GapError(ValueError):
    pass


class TraceData:
    """Parsed trace: per-vehicle pose arrays indexed by roster position."""

    def __init__(self, spans):
        # spans: {vehicle_id: (first_tick, x array, y array, heading array)}
        self.vehicle_ids = sorted(spans)
        self.n = len(self.vehicle_ids)
        self.spans = [spans[v] for v in self.vehicle_ids]
        self.duration = max(first + len(xs) for first, xs, _, _ in self.spans)


def load_trace(path) -> TraceData:
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}:1: empty trace file") from None
        if [h.strip() for h in header] != HEADER:
            raise ParseError(f"{path}:1: expected header {','.join(HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                tick = int(row[0])
                vid = int(row[1])
                x, y, hdg = float(row[2]), float(row[3]), float(row[4])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if tick < 0:
                raise ParseError(f"{path}:{lineno}: negative tick")
            rows.setdefault(vid, []).append((tick, x, y, hdg))

    if not rows:
        raise ParseError(f"{path}: trace contains no samples")
    spans = {}
    for vid, samples in rows.items():
        samples.sort(key=lambda s: s[0])
        first = samples[0][0]
        for offset, (tick, *_rest) in enumerate(samples):
            if tick != first + offset:
                raise GapError(
                    f"vehicle {vid}: missing tick {first + offset} (next sample at {tick})")
        spans[vid] = (
            first,
            np.array([s[1] for s in samples]),
            np.array([s[2] for s in samples]),
            np.array([s[3] for s in samples]),
        )
    return TraceData(spans)


def write_trace(path, samples):
    """Write (tick, vehicle_id, x, y, heading_deg) rows; floats via repr so a
    reload reproduces the exact doubles."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for tick, vid, x, y, hdg in samples:
            writer.writerow([tick, vid, repr(float(x)), repr(float(y)), repr(float(hdg))])


class TraceMobility:
    def __init__(self, data: TraceData):
        self.data = data
        self.n = data.n
        n = self.n
        self.x = np.zeros(n)
        self.y = np.zeros(n)
        self.heading_deg = np.zeros(n)
        self.vx = np.zeros(n)
        self.vy = np.zeros(n)
        self.active = np.zeros(n, dtype=np.bool_)
        self.duration = data.duration

    def step(self, tick: int):
        was_active = self.active.copy()
        px, py = self.x, self.y
        self.x = self.x.copy()
        self.y = self.y.copy()
        for i, (first, xs, ys, hs) in enumerate(self.data.spans):
            k = tick - first
            if 0 <= k < len(xs):
                self.active[i] = True
                self.x[i] = xs[k]
                self.y[i] = ys[k]
                self.heading_deg[i] = hs[k]
                if was_active[i]:
                    self.vx[i] = self.x[i] - px[i]
                    self.vy[i] = self.y[i] - py[i]
                else:
                    self.vx[i] = 0.0
                    self.vy[i] = 0.0
            else:
                self.active[i] = False
