"""Shared independent oracles for the test suite."""

import math

DT = 1.0 / 60.0


def crossing_oracle(target, config, policy_gain=40.0, scale=(1.0, 1.0, 1.0)):
    """Independent frame recurrence for the proportional user: returns the
    first frame time with position distance and size both inside tolerance,
    or None if the timeout elapses first."""
    x = y = s = 0.0
    n = 0
    while n < int(config.timeout_seconds / DT):
        pos_ok = math.hypot(target.x - x, target.y - y) <= config.tolerance
        size_ok = abs(target.z - s) <= config.tolerance
        if pos_ok and size_ok:
            return n * DT
        ux = max(-1.0, min(1.0, policy_gain * (target.x - x))) * scale[0]
        uy = max(-1.0, min(1.0, policy_gain * (target.y - y))) * scale[1]
        uz = max(-1.0, min(1.0, policy_gain * (target.z - s))) * scale[2]
        n += 1
        g_v, g_s = config.gain_v * DT, config.gain_s * DT
        x += g_v * (ux - x)
        y += g_v * (uy - y)
        s += g_s * (uz - s)
    return None


def brute_force_hull_vertices(pts):
    """O(n^3) hull oracle: (i, j) is a hull edge iff every other point lies
    strictly on one side; hull vertices are the endpoints of such edges."""
    import numpy as np

    arr = np.asarray(pts, dtype=float)
    n = len(arr)
    diff_a = arr[:, None, :] - arr[None, :, :]
    rel = arr[None, None, :, :] - arr[:, None, None, :]
    cross = diff_a[:, :, None, 0] * rel[:, :, :, 1] - diff_a[:, :, None, 1] * rel[:, :, :, 0]
    verts = set()
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            others = [cross[i, j, p] for p in range(n) if p != i and p != j]
            if all(c > 0 for c in others) or all(c < 0 for c in others):
                verts.add(tuple(arr[i]))
                verts.add(tuple(arr[j]))
    return verts
