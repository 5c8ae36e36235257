import math

import pytest

from zkpot.sim.trace import write_trace


def equilateral_triangle_poses(side=20.0):
    """Three poses at an equilateral triangle, each heading at the centroid,
    so every vehicle has every other within range, field of view, and clear
    line of sight."""
    a = (0.0, 0.0)
    b = (side, 0.0)
    c = (side / 2.0, side * math.sqrt(3.0) / 2.0)
    cx = (a[0] + b[0] + c[0]) / 3.0
    cy = (a[1] + b[1] + c[1]) / 3.0
    poses = []
    for x, y in (a, b, c):
        heading = math.degrees(math.atan2(cy - y, cx - x)) % 360.0
        poses.append((x, y, heading))
    return poses


@pytest.fixture
def triangle_trace(tmp_path):
    """Static three-vehicle trace: mutual visibility, no mobility."""
    def build(ticks=10, side=20.0):
        path = tmp_path / "triangle.csv"
        rows = []
        for tick in range(ticks):
            for vid, (x, y, hdg) in enumerate(equilateral_triangle_poses(side)):
                rows.append((tick, vid, x, y, hdg))
        write_trace(path, rows)
        return str(path)
    return build
