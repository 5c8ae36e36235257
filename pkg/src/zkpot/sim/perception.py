"""Occlusion-aware perception built on the visibility kernels."""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .manhattan import RAD_PER_DEG


class Perception:
    def __init__(self, params):
        self.params = params
        self.cos_half_fov = math.cos(math.radians(params.fov_deg / 2.0))
        self.plate_half_w = params.plate_width_m / 2.0
        self.half_len = params.vehicle_length_m / 2.0
        self.half_wid = params.vehicle_width_m / 2.0

    def seen_matrix(self, x, y, heading_deg, active):
        """seen[i, j]: can i read j's rear plate this tick."""
        heading = heading_deg * RAD_PER_DEG
        hcos = np.cos(heading)
        hsin = np.sin(heading)
        return kernels.visible_pairs(
            x, y, hcos, hsin, active,
            self.params.range_m, self.cos_half_fov,
            self.plate_half_w, self.half_len, self.half_wid)


def compute_visibility(world, ego: int) -> dict:
    """Per-ego view of the current tick: {target index: seen?} over active
    agents.  Convenience wrapper over the all-pairs kernel."""
    row = world.current_seen[ego]
    return {j: bool(row[j]) for j in range(len(row))
            if j != ego and world.mobility.active[j]}
