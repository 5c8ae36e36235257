"""Visibility kernels: who can read whose rear plate this tick.

The all-pairs occlusion test is the simulator's hot loop (O(N^2) pairs,
each with a segment-vs-rectangle sweep over potential blockers), so there
are two interchangeable implementations:

* a numba ``@njit`` kernel (default), and
* a vectorized pure-numpy fallback, selected with ``ZKPOT_PURE_NUMPY=1``
  or automatically when numba is unavailable.

Both evaluate the same IEEE double expressions in the same element order and
must produce bit-identical boolean matrices; the test suite and the
``benchmarks/bench_visibility.py`` script compare them directly.

A vehicle i sees vehicle j when (a) the rear-plate center of j is within
``range_m`` of i's camera (front-center), (b) the bearing to the plate lies
within half the field of view of i's heading, and (c) at least one of three
sample points across the plate segment has line-of-sight from the camera,
i.e. the connecting segment misses every other vehicle's oriented rectangle.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("ZKPOT_PURE_NUMPY", "") not in ("", "0")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None


def _segment_blocked(ax, ay, bx, by, i, j, x, y, hcos, hsin, active,
                     n, half_len, half_wid, guard):
    """True when segment (a, b) hits any active vehicle rectangle except i, j."""
    lox = min(ax, bx) - guard
    hix = max(ax, bx) + guard
    loy = min(ay, by) - guard
    hiy = max(ay, by) + guard
    for b in range(n):
        if b == i or b == j or not active[b]:
            continue
        cx = x[b]
        cy = y[b]
        if cx < lox or cx > hix or cy < loy or cy > hiy:
            continue
        cb = hcos[b]
        sb = hsin[b]
        # segment endpoints in the blocker's axis-aligned frame
        rx0 = ax - cx
        ry0 = ay - cy
        rx1 = bx - cx
        ry1 = by - cy
        lx0 = rx0 * cb + ry0 * sb
        ly0 = -rx0 * sb + ry0 * cb
        lx1 = rx1 * cb + ry1 * sb
        ly1 = -rx1 * sb + ry1 * cb
        dx = lx1 - lx0
        dy = ly1 - ly0
        # Liang-Barsky clip against |x| <= half_len, |y| <= half_wid
        t0 = 0.0
        t1 = 1.0
        hit = True
        for p, q in ((-dx, lx0 + half_len), (dx, half_len - lx0),
                     (-dy, ly0 + half_wid), (dy, half_wid - ly0)):
            if p == 0.0:
                if q < 0.0:
                    hit = False
                    break
            else:
                t = q / p
                if p < 0.0:
                    if t > t0:
                        t0 = t
                else:
                    if t < t1:
                        t1 = t
                if t0 > t1:
                    hit = False
                    break
        if hit:
            return True
    return False


def _visible_pairs_py(x, y, hcos, hsin, active, out,
                      range_m, cos_half_fov, plate_half_w, half_len, half_wid):
    n = x.shape[0]
    range2 = range_m * range_m
    guard = (half_len * half_len + half_wid * half_wid) ** 0.5
    for i in range(n):
        if not active[i]:
            continue
        camx = x[i] + half_len * hcos[i]
        camy = y[i] + half_len * hsin[i]
        for j in range(n):
            if j == i or not active[j]:
                continue
            px = x[j] - half_len * hcos[j]
            py = y[j] - half_len * hsin[j]
            dx = px - camx
            dy = py - camy
            d2 = dx * dx + dy * dy
            if d2 > range2:
                continue
            if hcos[i] * dx + hsin[i] * dy < cos_half_fov * np.sqrt(d2):
                continue
            ex = -hsin[j] * plate_half_w
            ey = hcos[j] * plate_half_w
            for k in range(3):
                t = k - 1.0
                sx = px + t * ex
                sy = py + t * ey
                if not _segment_blocked(camx, camy, sx, sy, i, j, x, y,
                                        hcos, hsin, active, n,
                                        half_len, half_wid, guard):
                    out[i, j] = True
                    break
    return out


if numba is not None:
    # Rebind the helper so the outer kernel resolves the jitted version at
    # compile time; cache=True persists the compilation across processes.
    _segment_blocked = numba.njit(cache=True)(_segment_blocked)
    _visible_pairs_numba = numba.njit(cache=True)(_visible_pairs_py)
else:  # pragma: no cover
    _visible_pairs_numba = None


def visible_pairs_numpy(x, y, hcos, hsin, active,
                        range_m, cos_half_fov, plate_half_w, half_len, half_wid):
    """Vectorized fallback; same math and boolean outcome as the jit kernel."""
    n = x.shape[0]
    out = np.zeros((n, n), dtype=np.bool_)
    camx = x + half_len * hcos
    camy = y + half_len * hsin
    px = x - half_len * hcos
    py = y - half_len * hsin
    dx = px[None, :] - camx[:, None]
    dy = py[None, :] - camy[:, None]
    d2 = dx * dx + dy * dy
    pair = (d2 <= range_m * range_m)
    pair &= active[:, None] & active[None, :]
    np.fill_diagonal(pair, False)
    pair &= hcos[:, None] * dx + hsin[:, None] * dy >= cos_half_fov * np.sqrt(d2)
    ii, jj = np.nonzero(pair)
    if ii.size == 0:
        return out
    guard = (half_len * half_len + half_wid * half_wid) ** 0.5
    ex = -hsin * plate_half_w
    ey = hcos * plate_half_w
    visible = np.zeros(ii.size, dtype=np.bool_)
    for k in range(3):
        t = k - 1.0
        sx = px[jj] + t * ex[jj]
        sy = py[jj] + t * ey[jj]
        blocked = _segments_blocked_numpy(
            camx[ii], camy[ii], sx, sy, ii, jj, x, y, hcos, hsin, active,
            half_len, half_wid, guard)
        visible |= ~blocked
    out[ii, jj] = visible
    return out


def _segments_blocked_numpy(ax, ay, bx, by, ii, jj, x, y, hcos, hsin, active,
                            half_len, half_wid, guard):
    m = ax.shape[0]
    n = x.shape[0]
    lox = np.minimum(ax, bx) - guard
    hix = np.maximum(ax, bx) + guard
    loy = np.minimum(ay, by) - guard
    hiy = np.maximum(ay, by) + guard
    cand = ((x[None, :] >= lox[:, None]) & (x[None, :] <= hix[:, None])
            & (y[None, :] >= loy[:, None]) & (y[None, :] <= hiy[:, None]))
    cand &= active[None, :]
    rows = np.arange(m)
    cand[rows, ii] = False
    cand[rows, jj] = False

    rx0 = ax[:, None] - x[None, :]
    ry0 = ay[:, None] - y[None, :]
    rx1 = bx[:, None] - x[None, :]
    ry1 = by[:, None] - y[None, :]
    cb = hcos[None, :]
    sb = hsin[None, :]
    lx0 = rx0 * cb + ry0 * sb
    ly0 = -rx0 * sb + ry0 * cb
    lx1 = rx1 * cb + ry1 * sb
    ly1 = -rx1 * sb + ry1 * cb
    dx = lx1 - lx0
    dy = ly1 - ly0

    t0 = np.zeros((m, n))
    t1 = np.ones((m, n))
    reject = np.zeros((m, n), dtype=np.bool_)
    for p, q in ((-dx, lx0 + half_len), (dx, half_len - lx0),
                 (-dy, ly0 + half_wid), (dy, half_wid - ly0)):
        zero = p == 0.0
        reject |= zero & (q < 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = q / p
        neg = p < 0.0
        pos = p > 0.0
        t0 = np.where(neg, np.maximum(t0, t), t0)
        t1 = np.where(pos, np.minimum(t1, t), t1)
    hit = cand & ~reject & (t0 <= t1)
    return hit.any(axis=1)


def use_numba() -> bool:
    return numba is not None and not _FORCE_NUMPY


def visible_pairs(x, y, hcos, hsin, active, range_m, cos_half_fov,
                  plate_half_w, half_len, half_wid):
    """Dispatch to the jit kernel or the numpy fallback (env-selected)."""
    if use_numba():
        out = np.zeros((x.shape[0], x.shape[0]), dtype=np.bool_)
        return _visible_pairs_numba(x, y, hcos, hsin, active, out,
                                    range_m, cos_half_fov, plate_half_w,
                                    half_len, half_wid)
    return visible_pairs_numpy(x, y, hcos, hsin, active, range_m,
                               cos_half_fov, plate_half_w, half_len, half_wid)
