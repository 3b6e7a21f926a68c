"""Numba-compiled kernel implementations (the default backend).

Scalar loops under ``@njit``; ``numpy_backend`` mirrors the arithmetic
expression for expression so the two backends return identical bits.
fastmath stays off: reassociation would break that equivalence.
"""

import numba
import numpy as np

_jit = numba.njit(cache=True, fastmath=False)


@_jit
def _clip01(x):
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


@_jit
def segment_blocked(px, py, pz, qx, qy, qz, t_lo, t_hi,
                    spheres, capsules, caps_owner, caps_joints, boxes,
                    owner, joint):
    """See numpy_backend.segment_blocked; same contract, scalar loops."""
    dx0 = qx - px
    dy0 = qy - py
    dz0 = qz - pz
    sx = px + t_lo * dx0
    sy = py + t_lo * dy0
    sz = pz + t_lo * dz0
    ex = px + t_hi * dx0
    ey = py + t_hi * dy0
    ez = pz + t_hi * dz0
    dx = ex - sx
    dy = ey - sy
    dz = ez - sz
    seg_len2 = dx * dx + dy * dy + dz * dz

    for i in range(spheres.shape[0]):
        cx = spheres[i, 0]
        cy = spheres[i, 1]
        cz = spheres[i, 2]
        r = spheres[i, 3]
        mx = cx - sx
        my = cy - sy
        mz = cz - sz
        t = _clip01((mx * dx + my * dy + mz * dz) / seg_len2)
        gx = sx + t * dx - cx
        gy = sy + t * dy - cy
        gz = sz + t * dz - cz
        if gx * gx + gy * gy + gz * gz < r * r:
            return True

    for i in range(capsules.shape[0]):
        # occluder capsules carry owner -1; only real human indices may match
        if caps_owner[i] >= 0 and caps_owner[i] == owner and (
            caps_joints[i, 0] == joint or caps_joints[i, 1] == joint
        ):
            continue
        ax = capsules[i, 0]
        ay = capsules[i, 1]
        az = capsules[i, 2]
        d2x = capsules[i, 3] - ax
        d2y = capsules[i, 4] - ay
        d2z = capsules[i, 5] - az
        radius = capsules[i, 6]
        rx = sx - ax
        ry = sy - ay
        rz = sz - az
        a = seg_len2
        e = d2x * d2x + d2y * d2y + d2z * d2z
        f = d2x * rx + d2y * ry + d2z * rz
        c = dx * rx + dy * ry + dz * rz
        if e > 0.0:
            b = dx * d2x + dy * d2y + dz * d2z
            denom = a * e - b * b
            if denom != 0.0:
                s = _clip01((b * f - c * e) / denom)
            else:
                s = 0.0
            t_raw = (b * s + f) / e
            if t_raw < 0.0:
                t = 0.0
                s = _clip01(-c / a)
            elif t_raw > 1.0:
                t = 1.0
                s = _clip01((b - c) / a)
            else:
                t = t_raw
        else:
            s = _clip01(-c / a)
            t = 0.0
        gx = (sx + s * dx) - (ax + t * d2x)
        gy = (sy + s * dy) - (ay + t * d2y)
        gz = (sz + s * dz) - (az + t * d2z)
        if gx * gx + gy * gy + gz * gz < radius * radius:
            return True

    for i in range(boxes.shape[0]):
        ox = sx - boxes[i, 0]
        oy = sy - boxes[i, 1]
        oz = sz - boxes[i, 2]
        lpx = boxes[i, 3] * ox + boxes[i, 4] * oy + boxes[i, 5] * oz
        lpy = boxes[i, 6] * ox + boxes[i, 7] * oy + boxes[i, 8] * oz
        lpz = boxes[i, 9] * ox + boxes[i, 10] * oy + boxes[i, 11] * oz
        ldx = boxes[i, 3] * dx + boxes[i, 4] * dy + boxes[i, 5] * dz
        ldy = boxes[i, 6] * dx + boxes[i, 7] * dy + boxes[i, 8] * dz
        ldz = boxes[i, 9] * dx + boxes[i, 10] * dy + boxes[i, 11] * dz
        t0 = 0.0
        t1 = 1.0
        dead = False
        for axis in range(3):
            if axis == 0:
                lp = lpx
                ld = ldx
                h = boxes[i, 12]
            elif axis == 1:
                lp = lpy
                ld = ldy
                h = boxes[i, 13]
            else:
                lp = lpz
                ld = ldz
                h = boxes[i, 14]
            if ld == 0.0:
                if abs(lp) >= h:
                    dead = True
                    break
            else:
                inv = 1.0 / ld
                ta = (-h - lp) * inv
                tb = (h - lp) * inv
                if ta < tb:
                    lo = ta
                    hi = tb
                else:
                    lo = tb
                    hi = ta
                if lo > t0:
                    t0 = lo
                if hi < t1:
                    t1 = hi
                if t0 >= t1:
                    dead = True
                    break
        if not dead and t0 < t1:
            return True

    return False


@_jit
def capsule_union_extents(caps_view, k, fx, fy, cx, cy, width, height):
    """See numpy_backend.capsule_union_extents; same contract."""
    m = caps_view.shape[0]
    has_any = False
    ulo = np.inf
    uhi = -np.inf
    vlo = np.inf
    vhi = -np.inf
    if m == 0:
        return False, 0.0, 0.0, 0.0, 0.0
    for i in range(m):
        ax = caps_view[i, 0]
        ay = caps_view[i, 1]
        az = caps_view[i, 2]
        bx = caps_view[i, 3]
        by = caps_view[i, 4]
        bz = caps_view[i, 5]
        r = caps_view[i, 6]
        for j in range(k):
            if k >= 2:
                tau = j / (k - 1.0)
            else:
                tau = 0.5
            X = ax + (bx - ax) * tau
            Y = ay + (by - ay) * tau
            Z = az + (bz - az) * tau
            if Z > r:
                denom = Z * Z - r * r
                su = np.sqrt(X * X + Z * Z - r * r)
                sv = np.sqrt(Y * Y + Z * Z - r * r)
                u1 = fx * (X * Z - r * su) / denom + cx
                u2 = fx * (X * Z + r * su) / denom + cx
                v1 = fy * (Y * Z - r * sv) / denom + cy
                v2 = fy * (Y * Z + r * sv) / denom + cy
                if u1 < ulo:
                    ulo = u1
                if u2 > uhi:
                    uhi = u2
                if v1 < vlo:
                    vlo = v1
                if v2 > vhi:
                    vhi = v2
                has_any = True
            elif Z > -r:
                if 0.0 < ulo:
                    ulo = 0.0
                if float(width) > uhi:
                    uhi = float(width)
                if 0.0 < vlo:
                    vlo = 0.0
                if float(height) > vhi:
                    vhi = float(height)
                has_any = True
    if not has_any:
        return False, 0.0, 0.0, 0.0, 0.0
    return True, ulo, uhi, vlo, vhi
