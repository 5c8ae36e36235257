"""Ground-truth-keyed accounting.

The ledger tracks, per vehicle, the distinct identities that reached the
three pipeline stages: locally perceived (N_l), received over the radio
(N_r), and available to the planner (N_a).  Identities are opaque int tags:
real vehicles use their roster index, fabricated objects use negative tags.
Self-sightings are excluded (a vehicle trivially knows itself).

Verification-ratio, time-to-verify and bandwidth series are derived here and
written as CSV; formats are documented in FORMATS.md.
"""

from __future__ import annotations

import csv

import numpy as np

TTV_BUCKET_S = 1


class MetricsLedger:
    def __init__(self, n_vehicles: int, duration: int, connected, honest):
        self.n = n_vehicles
        self.duration = duration
        self.connected = np.asarray(connected, dtype=bool)
        self.honest = np.asarray(honest, dtype=bool)
        self.n_local = [set() for _ in range(n_vehicles)]
        self.n_received = [set() for _ in range(n_vehicles)]
        self.n_available = [set() for _ in range(n_vehicles)]
        self.ttv_samples = []  # (tick, ttv_seconds, receiver)
        self.tx_bytes = np.zeros((duration, n_vehicles), dtype=np.int64)
        self.coverage = np.zeros(duration)

    # -- accrual ---------------------------------------------------------------

    def add_local(self, vehicle: int, tag: int):
        if tag != vehicle:
            self.n_local[vehicle].add(tag)
            self.n_available[vehicle].add(tag)

    def add_received(self, vehicle: int, tags):
        seen = self.n_received[vehicle]
        seen.update(tags)
        seen.discard(vehicle)

    def add_available(self, vehicle: int, tags):
        avail = self.n_available[vehicle]
        avail.update(tags)
        avail.discard(vehicle)

    def record_ttv(self, tick: int, ttv: int, receiver: int):
        self.ttv_samples.append((tick, ttv, receiver))

    def record_tx(self, tick: int, vehicle: int, nbytes: int):
        self.tx_bytes[tick, vehicle] = nbytes

    def snapshot(self, tick: int):
        denom = max(self.n - 1, 1)
        total = sum(len(self.n_available[i]) for i in range(self.n) if self.honest[i])
        count = int(self.honest.sum())
        self.coverage[tick] = total / (denom * count) if count else 0.0

    # -- derived metrics ---------------------------------------------------------

    def verification_ratio(self, vehicle: int):
        """(|N_a| - |N_l|) / (|N_r| - |N_l|) over distinct identities;
        None when the vehicle never received anything beyond its own view."""
        local = self.n_local[vehicle]
        gained = len(self.n_available[vehicle] - local)
        receivable = len(self.n_received[vehicle] - local)
        if receivable == 0:
            return None
        return gained / receivable

    def mean_verification_ratio(self):
        ratios = [r for i in range(self.n) if self.honest[i]
                  for r in [self.verification_ratio(i)] if r is not None]
        return sum(ratios) / len(ratios) if ratios else None

    def ttv_histogram(self, bucket_s: int = TTV_BUCKET_S):
        """{hour: {bucket lower edge: fraction}}, each hour scaled to 1.0."""
        hours = {}
        for tick, ttv, _ in self.ttv_samples:
            hours.setdefault(tick // 3600, []).append(ttv)
        hist = {}
        for hour, values in sorted(hours.items()):
            counts = {}
            for v in values:
                b = (v // bucket_s) * bucket_s
                counts[b] = counts.get(b, 0) + 1
            total = len(values)
            hist[hour] = {b: c / total for b, c in sorted(counts.items())}
        return hist

    def ttv_fraction_within(self, limit_s: int, since_tick: int = 0):
        values = [ttv for tick, ttv, _ in self.ttv_samples if tick >= since_tick]
        if not values:
            return None
        return sum(1 for v in values if v <= limit_s) / len(values)

    def bandwidth_series(self):
        """Per-tick mean bits/s over radio-capable vehicles."""
        if not self.connected.any():
            return np.zeros(self.duration)
        return self.tx_bytes[:, self.connected].mean(axis=1) * 8.0

    def steady_state_bandwidth(self, since_tick=None):
        series = self.bandwidth_series()
        if since_tick is None:
            since_tick = self.duration // 2
        return float(series[since_tick:].mean()) if since_tick < self.duration else 0.0

    def ticks_to_coverage(self, fraction: float):
        hit = np.nonzero(self.coverage >= fraction)[0]
        return int(hit[0]) if hit.size else None

    # -- output -------------------------------------------------------------------

    def write_csvs(self, outdir, kinds):
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "verification_ratio.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vehicle", "kind", "n_local", "n_received", "n_available", "ratio"])
            for i in range(self.n):
                ratio = self.verification_ratio(i)
                w.writerow([i, kinds[i], len(self.n_local[i]), len(self.n_received[i]),
                            len(self.n_available[i]),
                            "" if ratio is None else repr(ratio)])
        with open(outdir / "ttv_hist.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["hour", "bucket_s", "fraction"])
            for hour, buckets in self.ttv_histogram().items():
                for bucket, frac in buckets.items():
                    w.writerow([hour, bucket, repr(frac)])
        with open(outdir / "bandwidth.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tick", "mean_bits_per_s"])
            for tick, value in enumerate(self.bandwidth_series()):
                w.writerow([tick, repr(float(value))])
        with open(outdir / "coverage.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tick", "mean_coverage"])
            for tick, value in enumerate(self.coverage):
                w.writerow([tick, repr(float(value))])
