"""Pure-numpy kernel implementations.

Vectorized mirror of ``numba_backend``: every arithmetic expression matches
the scalar code operation for operation (same association order, division
written as multiplication by a reciprocal where the scalar code does so), so
both backends produce bit-identical results.  Branches become masked
selections whose selected lane computes exactly the scalar branch's formula.
"""

import numpy as np

# Primitive array layouts shared by both backends:
#   spheres:  (ns, 4)  cx, cy, cz, r
#   capsules: (nc, 7)  ax, ay, az, bx, by, bz, r
#   caps_owner: (nc,) int64, owning human index, -1 for scene occluders
#   caps_joints: (nc, 2) int64, capsule endpoint joints, -1 for occluders
#   boxes:    (nb, 15) cx, cy, cz, R00..R22 (world-to-local rows), hx, hy, hz


def _clip01(x):
    return np.minimum(np.maximum(x, 0.0), 1.0)


def segment_blocked(px, py, pz, qx, qy, qz, t_lo, t_hi,
                    spheres, capsules, caps_owner, caps_joints, boxes,
                    owner, joint):
    """True when the open sub-segment (t_lo, t_hi) of p->q passes through the
    strict interior of any primitive.

    Capsules belonging to ``owner`` and incident to ``joint`` are excluded
    (the keypoint sits on their axes).
    """
    # clamp to the sub-segment; interiors are open so testing the closed
    # sub-segment with strict comparisons is equivalent
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

    if spheres.shape[0]:
        cx = spheres[:, 0]
        cy = spheres[:, 1]
        cz = spheres[:, 2]
        r = spheres[:, 3]
        mx = cx - sx
        my = cy - sy
        mz = cz - sz
        t = _clip01((mx * dx + my * dy + mz * dz) / seg_len2)
        gx = sx + t * dx - cx
        gy = sy + t * dy - cy
        gz = sz + t * dz - cz
        if np.any(gx * gx + gy * gy + gz * gz < r * r):
            return True

    if capsules.shape[0]:
        ax = capsules[:, 0]
        ay = capsules[:, 1]
        az = capsules[:, 2]
        d2x = capsules[:, 3] - ax
        d2y = capsules[:, 4] - ay
        d2z = capsules[:, 5] - az
        radius = capsules[:, 6]
        rx = sx - ax
        ry = sy - ay
        rz = sz - az
        a = seg_len2
        e = d2x * d2x + d2y * d2y + d2z * d2z
        f = d2x * rx + d2y * ry + d2z * rz
        c = dx * rx + dy * ry + dz * rz
        b = dx * d2x + dy * d2y + dz * d2z
        denom = a * e - b * b
        with np.errstate(divide="ignore", invalid="ignore"):
            s_main = _clip01((b * f - c * e) / np.where(denom != 0.0, denom, 1.0))
            s_main = np.where(denom != 0.0, s_main, 0.0)
            t_raw = (b * s_main + f) / np.where(e > 0.0, e, 1.0)
            s_neg = _clip01(-c / a)
            s_pos = _clip01((b - c) / a)
        s = np.where(t_raw < 0.0, s_neg, np.where(t_raw > 1.0, s_pos, s_main))
        t = _clip01(t_raw)
        # degenerate axis (a == b): closest point on S1 to the single point
        s = np.where(e > 0.0, s, s_neg)
        t = np.where(e > 0.0, t, 0.0)
        gx = (sx + s * dx) - (ax + t * d2x)
        gy = (sy + s * dy) - (ay + t * d2y)
        gz = (sz + s * dz) - (az + t * d2z)
        hit = gx * gx + gy * gy + gz * gz < radius * radius
        # occluder capsules carry owner -1; only real human indices may match
        skip = (caps_owner >= 0) & (caps_owner == owner) & (
            (caps_joints[:, 0] == joint) | (caps_joints[:, 1] == joint)
        )
        if np.any(hit & ~skip):
            return True

    if boxes.shape[0]:
        ox = sx - boxes[:, 0]
        oy = sy - boxes[:, 1]
        oz = sz - boxes[:, 2]
        rot = boxes[:, 3:12]
        hx = boxes[:, 12]
        hy = boxes[:, 13]
        hz = boxes[:, 14]
        lpx = rot[:, 0] * ox + rot[:, 1] * oy + rot[:, 2] * oz
        lpy = rot[:, 3] * ox + rot[:, 4] * oy + rot[:, 5] * oz
        lpz = rot[:, 6] * ox + rot[:, 7] * oy + rot[:, 8] * oz
        ldx = rot[:, 0] * dx + rot[:, 1] * dy + rot[:, 2] * dz
        ldy = rot[:, 3] * dx + rot[:, 4] * dy + rot[:, 5] * dz
        ldz = rot[:, 6] * dx + rot[:, 7] * dy + rot[:, 8] * dz
        t0 = np.zeros(boxes.shape[0])
        t1 = np.ones(boxes.shape[0])
        dead = np.zeros(boxes.shape[0], dtype=bool)
        for lp, ld, h in ((lpx, ldx, hx), (lpy, ldy, hy), (lpz, ldz, hz)):
            parallel = ld == 0.0
            dead |= parallel & (np.abs(lp) >= h)
            with np.errstate(divide="ignore"):
                inv = 1.0 / np.where(parallel, 1.0, ld)
            ta = (-h - lp) * inv
            tb = (h - lp) * inv
            lo = np.minimum(ta, tb)
            hi = np.maximum(ta, tb)
            t0 = np.where(parallel, t0, np.maximum(t0, lo))
            t1 = np.where(parallel, t1, np.minimum(t1, hi))
        if np.any((t0 < t1) & ~dead):
            return True

    return False


def capsule_union_extents(caps_view, k, fx, fy, cx, cy, width, height):
    """Pixel extents of the union of K spheres sampled along each capsule.

    ``caps_view`` is (m, 7) in view coordinates where +z is the positive view
    depth.  Per sphere (center X, Y, Z, radius r):

    * ``Z <= -r``: entirely behind the camera, contributes nothing;
    * ``-r < Z <= r``: straddles the camera plane, contributes the full
      image extent on both axes;
    * ``Z > r``: exact silhouette extents from the tangent-line formula
      ``fx * (X Z -+ r sqrt(X^2 + Z^2 - r^2)) / (Z^2 - r^2) + cx`` and the
      analogous expression in Y for the v axis.

    Returns ``(has_any, ulo, uhi, vlo, vhi)`` with unclipped extents;
    ``has_any`` is False when every sphere is entirely behind the camera.
    """
    m = caps_view.shape[0]
    if m == 0:
        return False, 0.0, 0.0, 0.0, 0.0
    if k >= 2:
        tau = np.arange(k, dtype=np.float64) / (k - 1.0)
    else:
        tau = np.array([0.5])
    ax = caps_view[:, 0:1]
    ay = caps_view[:, 1:2]
    az = caps_view[:, 2:3]
    X = (ax + (caps_view[:, 3:4] - ax) * tau).ravel()
    Y = (ay + (caps_view[:, 4:5] - ay) * tau).ravel()
    Z = (az + (caps_view[:, 5:6] - az) * tau).ravel()
    r = np.repeat(caps_view[:, 6], tau.shape[0])

    front = Z > r
    straddle = ~front & (Z > -r)
    if not np.any(front) and not np.any(straddle):
        return False, 0.0, 0.0, 0.0, 0.0

    ulo = np.inf
    uhi = -np.inf
    vlo = np.inf
    vhi = -np.inf
    if np.any(front):
        Xf = X[front]
        Yf = Y[front]
        Zf = Z[front]
        rf = r[front]
        denom = Zf * Zf - rf * rf
        su = np.sqrt(Xf * Xf + Zf * Zf - rf * rf)
        sv = np.sqrt(Yf * Yf + Zf * Zf - rf * rf)
        ulo = np.min(fx * (Xf * Zf - rf * su) / denom + cx)
        uhi = np.max(fx * (Xf * Zf + rf * su) / denom + cx)
        vlo = np.min(fy * (Yf * Zf - rf * sv) / denom + cy)
        vhi = np.max(fy * (Yf * Zf + rf * sv) / denom + cy)
    if np.any(straddle):
        ulo = min(ulo, 0.0)
        uhi = max(uhi, float(width))
        vlo = min(vlo, 0.0)
        vhi = max(vhi, float(height))
    return True, float(ulo), float(uhi), float(vlo), float(vhi)
