"""Lossy broadcast channel.

Every message sent this tick is delivered to each other connected agent
within radio range with independent probability ``pdr``; the 1 ms nominal
latency is far below the 1 s tick, so delivery lands in the same tick.

One (N, N) uniform matrix is drawn per tick no matter who transmits, which
keeps the channel stream identical across attacker mixes and modes.
"""

from __future__ import annotations

import numpy as np


class Channel:
    def __init__(self, params, rng: np.random.Generator):
        self.range2 = params.range_m * params.range_m
        self.pdr = params.pdr
        self.rng = rng

    def deliveries(self, x, y, senders, receivers):
        """Boolean (sender, receiver) delivery matrix for this tick."""
        n = x.shape[0]
        u = self.rng.random((n, n))
        dx = x[:, None] - x[None, :]
        dy = y[:, None] - y[None, :]
        ok = (dx * dx + dy * dy) <= self.range2
        ok &= u < self.pdr
        ok &= senders[:, None] & receivers[None, :]
        np.fill_diagonal(ok, False)
        return ok
