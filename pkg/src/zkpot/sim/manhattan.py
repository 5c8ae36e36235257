"""Synthetic grid-city mobility.

``rows x cols`` blocks of ``block_m`` meters give an (rows+1) x (cols+1)
lattice of intersections.  Vehicles spawn on uniformly random directed edges
with a uniformly random destination intersection; at each intersection they
continue along a shortest path (staircase with uniformly random axis choice),
draw a fresh destination on arrival, and are never removed.

Headings are kept in degrees (0/90/180/270) as the canonical field so a
trace export and replay of the same run is bit-exact.
"""

from __future__ import annotations

import numpy as np

RAD_PER_DEG = np.pi / 180.0


class ManhattanMobility:
    def __init__(self, grid, rng: np.random.Generator):
        self.grid = grid
        self.rng = rng
        self.n = grid.n_vehicles
        self.nx = grid.cols + 1  # intersections per row
        self.ny = grid.rows + 1
        self.block = float(grid.block_m)

        n = self.n
        self.x = np.empty(n)
        self.y = np.empty(n)
        self.heading_deg = np.empty(n)
        self.vx = np.empty(n)
        self.vy = np.empty(n)
        self.active = np.ones(n, dtype=np.bool_)
        self.speed = rng.uniform(grid.speed_min, grid.speed_max, n)

        # per-vehicle edge state: node behind, node ahead, meters travelled
        self._a = np.empty((n, 2), dtype=np.int64)
        self._b = np.empty((n, 2), dtype=np.int64)
        self._s = np.empty(n)
        self._dest = np.empty((n, 2), dtype=np.int64)

        edges = self._directed_edges()
        picks = rng.integers(0, len(edges), n)
        offsets = rng.uniform(0.0, 1.0, n)
        for i in range(n):
            a, b = edges[picks[i]]
            self._a[i] = a
            self._b[i] = b
            self._s[i] = offsets[i] * self.block
            self._dest[i] = self._draw_destination(b)
        self._refresh_poses()

    def _directed_edges(self):
        edges = []
        for ix in range(self.nx):
            for iy in range(self.ny):
                if ix + 1 < self.nx:
                    edges.append(((ix, iy), (ix + 1, iy)))
                    edges.append(((ix + 1, iy), (ix, iy)))
                if iy + 1 < self.ny:
                    edges.append(((ix, iy), (ix, iy + 1)))
                    edges.append(((ix, iy + 1), (ix, iy)))
        return edges

    def _draw_destination(self, exclude):
        while True:
            ix = int(self.rng.integers(0, self.nx))
            iy = int(self.rng.integers(0, self.ny))
            if (ix, iy) != (exclude[0], exclude[1]):
                return ix, iy

    def _next_hop(self, node, dest):
        """One shortest-path step; ties between axes break uniformly."""
        dx = int(dest[0] - node[0])
        dy = int(dest[1] - node[1])
        go_x = dx != 0
        if go_x and dy != 0:
            go_x = bool(self.rng.integers(0, 2))
        if go_x:
            return node[0] + (1 if dx > 0 else -1), node[1]
        return node[0], node[1] + (1 if dy > 0 else -1)

    def step(self, tick: int):
        if tick == 0:  # initial placement is the tick-0 state
            return
        block = self.block
        s_new = self._s + self.speed
        movers = np.nonzero(s_new >= block)[0]
        for i in movers:
            left = self.speed[i]
            s = self._s[i]
            while s + left >= block:
                left -= block - s
                s = 0.0
                node = (int(self._b[i][0]), int(self._b[i][1]))
                if node == (int(self._dest[i][0]), int(self._dest[i][1])):
                    self._dest[i] = self._draw_destination(node)
                self._a[i] = node
                self._b[i] = self._next_hop(node, self._dest[i])
            s_new[i] = s + left
        self._s = s_new
        self._refresh_poses()

    def _refresh_poses(self):
        block = self.block
        offset = self.grid.lane_offset_m
        ux = self._b[:, 0] - self._a[:, 0]
        uy = self._b[:, 1] - self._a[:, 1]
        frac = self._s / block
        # right-hand lane: shift each vehicle to the right of its travel axis
        self.x = (self._a[:, 0] + ux * frac) * block + uy * offset
        self.y = (self._a[:, 1] + uy * frac) * block - ux * offset
        self.heading_deg = np.select(
            [ux == 1, uy == 1, ux == -1], [0.0, 90.0, 180.0], default=270.0)
        self.vx = self.speed * ux
        self.vy = self.speed * uy

    def bounding_box(self):
        return (self.grid.cols * self.block, self.grid.rows * self.block)
